//! Command-line experiment runner.

use clap::{Args, Parser, Subcommand, ValueEnum};
use phi_pbil::engine::{EngineConfig, OperatorKind};
use phi_pbil::harness::{
    self, compare_to_reference, parameter_sweep, reference, run_batch, validate::validate_oracles,
    BatchStats, ExperimentSpec, SweepParam, Tolerances,
};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phi-pbil", version, about = "Clustered order-2 EDA with information-guided recombination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded replications on one problem.
    Run(RunArgs),
    /// Sweep one probability parameter over a grid of values.
    Sweep(SweepArgs),
    /// Run the brute-force oracle suite.
    Validate(ValidateArgs),
    /// Run a batch and score it against a bundled reference row.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OperatorArg {
    Cg,
    PvUniform,
    None,
}

impl From<OperatorArg> for OperatorKind {
    fn from(value: OperatorArg) -> Self {
        match value {
            OperatorArg::Cg => OperatorKind::Cg,
            OperatorArg::PvUniform => OperatorKind::PvUniform,
            OperatorArg::None => OperatorKind::None,
        }
    }
}

/// Experiment flags; unset values fall back to the `--config` file, then to
/// the defaults.
#[derive(Args, Clone)]
struct ExperimentArgs {
    /// Problem name (see `--list-problems`).
    #[arg(long)]
    problem: Option<String>,
    /// Genome length for the sized problems (twomax, trapfive, overfive,
    /// hiff, shuff-hiff).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    nw: Option<usize>,
    /// Probability of interbreeding.
    #[arg(long)]
    pc: Option<f64>,
    /// Probability of breeding from the old hypothesis.
    #[arg(long)]
    pold: Option<f64>,
    /// Probability of the Wilson estimator.
    #[arg(long)]
    pw: Option<f64>,
    #[arg(long, value_enum)]
    operator: Option<OperatorArg>,
    /// Replications; replication i runs with seed `seed + i`.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_evals: Option<u64>,
    /// Directory for runs.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace file prefix (one JSONL file per replication).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON file with the same fields; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// List the available problem names and exit.
    #[arg(long)]
    list_problems: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Which probability to sweep: p_c, p_old or p_w.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated values in [0, 1].
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Also enumerate the 28-node graph instances (a few seconds).
    #[arg(long)]
    deep: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Reference row id (defaults to the problem name).
    #[arg(long)]
    reference: Option<String>,
    /// Relative tolerance on mean evaluations.
    #[arg(long, default_value_t = 0.30)]
    evals_tolerance: f64,
    /// List the bundled reference rows and exit.
    #[arg(long)]
    list: bool,
}

/// The `--config` file: every field optional, mirroring the flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    size: Option<usize>,
    k: Option<usize>,
    n0: Option<usize>,
    nw: Option<usize>,
    pc: Option<f64>,
    pold: Option<f64>,
    pw: Option<f64>,
    operator: Option<OperatorKind>,
    reps: Option<usize>,
    seed: Option<u64>,
    max_evals: Option<u64>,
    out: Option<PathBuf>,
}

fn resolve_spec(args: &ExperimentArgs) -> Result<ExperimentSpec, String> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let problem = args
        .problem
        .clone()
        .or(file.problem)
        .ok_or("missing --problem")?;
    let n0 = args.n0.or(file.n0).ok_or("missing --n0")?;
    let nw = args.nw.or(file.nw).ok_or("missing --nw")?;
    let k = args.k.or(file.k).ok_or("missing --k")?;
    let mut config = EngineConfig::new(n0, nw, k);
    if let Some(v) = args.pc.or(file.pc) {
        config.p_c = v;
    }
    if let Some(v) = args.pold.or(file.pold) {
        config.p_old = v;
    }
    if let Some(v) = args.pw.or(file.pw) {
        config.p_w = v;
    }
    if let Some(v) = args.max_evals.or(file.max_evals) {
        config.max_evals = v;
    }
    config.seed = args.seed.or(file.seed).unwrap_or(1);
    config.operator = args
        .operator
        .map(OperatorKind::from)
        .or(file.operator)
        .unwrap_or(OperatorKind::Cg);
    for warning in config.validate().map_err(|e| e.to_string())? {
        eprintln!("warning: {warning}");
    }
    Ok(ExperimentSpec {
        problem,
        size: args.size.or(file.size),
        config,
        replications: args.reps.or(file.reps).unwrap_or(10),
        out_dir: args.out.clone().or(file.out),
        trace: args.trace.clone(),
    })
}

fn print_stats(stats: &BatchStats) {
    let fmt_sd = |sd: &Option<f64>| sd.map_or("-".to_string(), |v| format!("{v:.1}"));
    println!(
        "{}: {} runs | success {:.0}% | evals {:.1} ± {} | optima {:.2} ± {}",
        stats.problem,
        stats.replications,
        100.0 * stats.success_fraction,
        stats.mean_evals,
        fmt_sd(&stats.sd_evals),
        stats.mean_optima,
        fmt_sd(&stats.sd_optima),
    );
}

fn cmd_run(args: &RunArgs) -> Result<bool, String> {
    if args.experiment.list_problems {
        for name in phi_pbil::problems::problem_names() {
            println!("{name}");
        }
        return Ok(true);
    }
    let spec = resolve_spec(&args.experiment)?;
    let stats = run_batch(&spec).map_err(|e| e.to_string())?;
    print_stats(&stats);
    if let Some(dir) = &spec.out_dir {
        println!("wrote {}", dir.join("runs.csv").display());
        println!("wrote {}", dir.join("summary.json").display());
    }
    Ok(true)
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool, String> {
    let spec = resolve_spec(&args.experiment)?;
    if args.values.is_empty() {
        return Err("missing --values".into());
    }
    let report = parameter_sweep(&spec, args.param, &args.values).map_err(|e| e.to_string())?;
    println!("{}", report.to_csv().trim_end());
    if let Some(dir) = &spec.out_dir {
        println!("wrote {}", dir.join("sweep.csv").display());
    }
    Ok(true)
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool, String> {
    let report = validate_oracles(args.deep);
    for check in &report.checks {
        println!(
            "{} {}: {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    Ok(report.all_pass())
}

fn cmd_compare(args: &CompareArgs) -> Result<bool, String> {
    if args.list {
        for row in reference::reference_rows() {
            println!("{} ({} on {})", row.id, row.algorithm, row.problem);
        }
        return Ok(true);
    }
    let spec = resolve_spec(&args.experiment)?;
    let id = args.reference.clone().unwrap_or_else(|| spec.problem.clone());
    let row = reference::find_reference(&id)
        .ok_or_else(|| harness::HarnessError::MissingReference(id.clone()).to_string())?;
    let stats = run_batch(&spec).map_err(|e| e.to_string())?;
    print_stats(&stats);
    let tolerances = Tolerances {
        mean_evals_rel: args.evals_tolerance,
        ..Tolerances::default()
    };
    let verdict = compare_to_reference(&stats, row, &tolerances).map_err(|e| e.to_string())?;
    for metric in &verdict.metrics {
        let rel = metric
            .relative_error
            .map_or(String::new(), |r| format!(" (rel {:.1}%)", 100.0 * r));
        println!(
            "{} {}: {:.2} vs reference {:.2}{}",
            if metric.pass { "PASS" } else { "FAIL" },
            metric.metric,
            metric.ours,
            metric.reference,
            rel
        );
    }
    Ok(verdict.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
