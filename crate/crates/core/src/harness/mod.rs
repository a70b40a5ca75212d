//! Experiment runner: replication batches, parameter sweeps, comparison
//! against the bundled reference results and the brute-force oracle suite.

pub mod reference;
pub mod validate;

use crate::engine::{self, EngineConfig, RunResult, TraceWriter};
use crate::problems::{self, ProblemError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use reference::ReferenceRow;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("experiment needs at least one replication")]
    NoReplications,
    #[error("batch has no runs to compare")]
    EmptyBatch,
    #[error("no reference row named {0:?}; see `phi-pbil compare --list`")]
    MissingReference(String),
    #[error("sweep values must lie in [0, 1], got {0}")]
    BadSweepValue(f64),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One experiment: a problem binding, an engine configuration, and how many
/// seeded replications to run. Replication i uses seed `config.seed + i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: String,
    #[serde(default)]
    pub size: Option<usize>,
    pub config: EngineConfig,
    pub replications: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Trace file prefix; replication i writes `<prefix>.rep<i>.jsonl`.
    #[serde(default)]
    pub trace: Option<PathBuf>,
}

/// One CSV row of a batch.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunRow {
    pub problem: String,
    pub seed: u64,
    pub evals: u64,
    pub optima: usize,
    pub success: bool,
    pub wall_ms: u128,
}

/// Aggregates over a batch of runs. Standard deviations use the sample
/// (n - 1) form and are absent for single-replication batches.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchStats {
    pub problem: String,
    pub replications: usize,
    pub success_fraction: f64,
    pub mean_evals: f64,
    pub sd_evals: Option<f64>,
    pub mean_optima: f64,
    pub sd_optima: Option<f64>,
    #[serde(skip)]
    pub rows: Vec<RunRow>,
    #[serde(skip)]
    pub results: Vec<RunResult>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64], mean: f64) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Some(var.sqrt())
}

impl BatchStats {
    fn from_runs(problem: &str, rows: Vec<RunRow>, results: Vec<RunResult>) -> Self {
        let evals: Vec<f64> = rows.iter().map(|r| r.evals as f64).collect();
        let optima: Vec<f64> = rows.iter().map(|r| r.optima as f64).collect();
        let successes = rows.iter().filter(|r| r.success).count();
        let mean_evals = mean(&evals);
        let mean_optima = mean(&optima);
        BatchStats {
            problem: problem.to_string(),
            replications: rows.len(),
            success_fraction: successes as f64 / rows.len() as f64,
            mean_evals,
            sd_evals: sample_sd(&evals, mean_evals),
            mean_optima,
            sd_optima: sample_sd(&optima, mean_optima),
            rows,
            results,
        }
    }
}

/// Runs one seeded replication: the problem (including any shuffle
/// permutation) is instantiated from the replication's RNG before the
/// engine starts, so a seed fully determines the run.
pub fn run_replication(
    problem: &str,
    size: Option<usize>,
    config: &EngineConfig,
    seed: u64,
    trace: Option<&mut TraceWriter>,
) -> Result<RunResult, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = problems::instantiate(problem, size, &mut rng)?;
    let mut cfg = config.clone();
    cfg.seed = seed;
    Ok(engine::run_with_trace(&cfg, &instance, &mut rng, trace)?)
}

/// Executes the spec's replications (in parallel; outputs are ordered by
/// replication index) and writes `runs.csv` plus `summary.json` when an
/// output directory is set.
pub fn run_batch(spec: &ExperimentSpec) -> Result<BatchStats, HarnessError> {
    if spec.replications == 0 {
        return Err(HarnessError::NoReplications);
    }
    spec.config.validate().map_err(engine::EngineError::from)?;
    let outcomes: Vec<Result<(RunRow, RunResult), HarnessError>> = (0..spec.replications)
        .into_par_iter()
        .map(|i| {
            let seed = spec.config.seed.wrapping_add(i as u64);
            let mut trace = match &spec.trace {
                Some(prefix) => {
                    let path = trace_path(prefix, i);
                    Some(TraceWriter::to_file(&path).map_err(io_err(&path))?)
                }
                None => None,
            };
            let start = Instant::now();
            let result =
                run_replication(&spec.problem, spec.size, &spec.config, seed, trace.as_mut())?;
            if let Some(t) = trace.as_mut() {
                t.flush().map_err(|e| HarnessError::Io {
                    path: spec.trace.clone().unwrap_or_default(),
                    source: e,
                })?;
            }
            let row = RunRow {
                problem: spec.problem.clone(),
                seed,
                evals: result.evals_to_convergence,
                optima: result.distinct_global_optima_found,
                success: result.success,
                wall_ms: start.elapsed().as_millis(),
            };
            Ok((row, result))
        })
        .collect();

    let mut rows = Vec::with_capacity(spec.replications);
    let mut results = Vec::with_capacity(spec.replications);
    for outcome in outcomes {
        let (row, result) = outcome?;
        rows.push(row);
        results.push(result);
    }
    let stats = BatchStats::from_runs(&spec.problem, rows, results);
    if let Some(dir) = &spec.out_dir {
        write_batch_outputs(dir, &stats)?;
    }
    Ok(stats)
}

fn trace_path(prefix: &Path, replication: usize) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".rep{replication}.jsonl"));
    prefix.with_file_name(name)
}

pub fn runs_csv(stats: &BatchStats) -> String {
    let mut csv = String::from("problem,seed,evals,optima,success,wall_ms\n");
    for r in &stats.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.problem, r.seed, r.evals, r.optima, r.success, r.wall_ms
        ));
    }
    csv
}

fn write_batch_outputs(dir: &Path, stats: &BatchStats) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("runs.csv");
    std::fs::write(&csv_path, runs_csv(stats)).map_err(io_err(&csv_path))?;
    let json_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(stats).expect("stats serialize");
    std::fs::write(&json_path, json).map_err(io_err(&json_path))?;
    Ok(())
}

/// Which engine probability a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    PC,
    POld,
    PW,
}

impl SweepParam {
    pub fn apply(&self, config: &mut EngineConfig, value: f64) {
        match self {
            SweepParam::PC => config.p_c = value,
            SweepParam::POld => config.p_old = value,
            SweepParam::PW => config.p_w = value,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "p_c" | "pc" => Ok(SweepParam::PC),
            "p_old" | "pold" => Ok(SweepParam::POld),
            "p_w" | "pw" => Ok(SweepParam::PW),
            _ => Err(format!("unknown sweep parameter {s:?} (p_c, p_old, p_w)")),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepParam::PC => write!(f, "p_c"),
            SweepParam::POld => write!(f, "p_old"),
            SweepParam::PW => write!(f, "p_w"),
        }
    }
}

#[derive(Debug)]
pub struct SweepReport {
    pub param: SweepParam,
    pub points: Vec<(f64, BatchStats)>,
}

impl SweepReport {
    /// Plot-ready CSV: value, mean optima, mean evals.
    pub fn to_csv(&self) -> String {
        let mut csv = format!("{},mean_optima,mean_evals\n", self.param);
        for (value, stats) in &self.points {
            csv.push_str(&format!(
                "{},{},{}\n",
                value, stats.mean_optima, stats.mean_evals
            ));
        }
        csv
    }
}

/// Runs one batch per swept value (everything else fixed at the base
/// config) and writes a plottable `sweep.csv` when an output directory is
/// set.
pub fn parameter_sweep(
    spec: &ExperimentSpec,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepReport, HarnessError> {
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(HarnessError::BadSweepValue(v));
        }
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut sub = spec.clone();
        sub.out_dir = None;
        sub.trace = None;
        param.apply(&mut sub.config, value);
        points.push((value, run_batch(&sub)?));
    }
    let report = SweepReport { param, points };
    if let Some(dir) = &spec.out_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("sweep.csv");
        std::fs::write(&path, report.to_csv()).map_err(io_err(&path))?;
    }
    Ok(report)
}

/// Comparison tolerances. Defaults: mean evaluations within 30% relative
/// error; optima means exact when the reference reports zero deviation and
/// within `optima_sd_slack` reference deviations otherwise; success
/// fraction within one failing run.
#[derive(Clone, Debug)]
pub struct Tolerances {
    pub mean_evals_rel: f64,
    pub optima_sd_slack: f64,
    pub success_slack_runs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mean_evals_rel: 0.30,
            optima_sd_slack: 2.0,
            success_slack_runs: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricVerdict {
    pub metric: String,
    pub ours: f64,
    pub reference: f64,
    pub relative_error: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub reference_id: String,
    pub metrics: Vec<MetricVerdict>,
    pub pass: bool,
}

/// Scores a batch against one reference row. Only the metrics the row
/// reports are checked; the stats are never mutated.
pub fn compare_to_reference(
    stats: &BatchStats,
    row: &ReferenceRow,
    tolerances: &Tolerances,
) -> Result<VerdictReport, HarnessError> {
    if stats.replications == 0 || stats.rows.is_empty() {
        return Err(HarnessError::EmptyBatch);
    }
    let mut metrics = Vec::new();
    if let Some(reference) = row.mean_evals {
        let rel = (stats.mean_evals - reference).abs() / reference;
        metrics.push(MetricVerdict {
            metric: "mean_evals".into(),
            ours: stats.mean_evals,
            reference,
            relative_error: Some(rel),
            pass: rel <= tolerances.mean_evals_rel,
        });
    }
    if let Some(reference) = row.mean_optima {
        let sd = row.sd_optima.unwrap_or(0.0);
        let pass = if sd == 0.0 {
            stats.mean_optima == reference
        } else {
            (stats.mean_optima - reference).abs() <= tolerances.optima_sd_slack * sd
        };
        metrics.push(MetricVerdict {
            metric: "mean_optima".into(),
            ours: stats.mean_optima,
            reference,
            relative_error: if reference != 0.0 {
                Some((stats.mean_optima - reference).abs() / reference)
            } else {
                None
            },
            pass,
        });
    }
    if let Some(reference) = row.success_fraction {
        let slack = tolerances.success_slack_runs / stats.replications as f64;
        metrics.push(MetricVerdict {
            metric: "success_fraction".into(),
            ours: stats.success_fraction,
            reference,
            relative_error: None,
            pass: stats.success_fraction >= reference - slack,
        });
    }
    let pass = metrics.iter().all(|m| m.pass);
    Ok(VerdictReport {
        reference_id: row.id.clone(),
        metrics,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::OperatorKind;

    fn small_spec() -> ExperimentSpec {
        let mut config = EngineConfig::new(200, 40, 3);
        config.seed = 100;
        ExperimentSpec {
            problem: "twomax".into(),
            size: Some(20),
            config,
            replications: 4,
            out_dir: None,
            trace: None,
        }
    }

    #[test]
    fn batch_aggregates_and_is_deterministic() {
        let spec = small_spec();
        let a = run_batch(&spec).unwrap();
        let b = run_batch(&spec).unwrap();
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.success_fraction, 1.0);
        // identical stats modulo wall time
        assert_eq!(a.mean_evals, b.mean_evals);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!((x.seed, x.evals, x.optima, x.success), (y.seed, y.evals, y.optima, y.success));
        }
        // seeds are spec.seed + index
        let seeds: Vec<u64> = a.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102, 103]);
    }

    #[test]
    fn single_replication_has_no_sd() {
        let mut spec = small_spec();
        spec.replications = 1;
        let stats = run_batch(&spec).unwrap();
        assert!(stats.sd_evals.is_none());
        assert!(stats.sd_optima.is_none());
    }

    #[test]
    fn zero_replications_rejected() {
        let mut spec = small_spec();
        spec.replications = 0;
        assert!(matches!(run_batch(&spec), Err(HarnessError::NoReplications)));
    }

    #[test]
    fn csv_has_expected_shape() {
        let stats = run_batch(&small_spec()).unwrap();
        let csv = runs_csv(&stats);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("problem,seed,evals,optima,success,wall_ms"));
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn sweep_single_value_equals_batch() {
        let spec = small_spec();
        let report = parameter_sweep(&spec, SweepParam::PC, &[0.5]).unwrap();
        let direct = run_batch(&spec).unwrap();
        assert_eq!(report.points.len(), 1);
        assert_eq!(report.points[0].1.mean_evals, direct.mean_evals);
        assert_eq!(report.points[0].1.mean_optima, direct.mean_optima);
    }

    #[test]
    fn sweep_rejects_out_of_range_values() {
        let spec = small_spec();
        assert!(matches!(
            parameter_sweep(&spec, SweepParam::PW, &[0.5, 1.5]),
            Err(HarnessError::BadSweepValue(_))
        ));
    }

    #[test]
    fn compare_passes_within_tolerance() {
        let rows = vec![RunRow {
            problem: "Pgrid16".into(),
            seed: 0,
            evals: 10_500,
            optima: 2,
            success: true,
        wall_ms: 1,
        }];
        let results = Vec::new();
        let stats = BatchStats::from_runs("Pgrid16", rows, results);
        let reference = reference::find_reference("Pgrid16").unwrap();
        let verdict = compare_to_reference(&stats, reference, &Tolerances::default()).unwrap();
        assert!(verdict.pass, "{verdict:?}");
        let evals = verdict
            .metrics
            .iter()
            .find(|m| m.metric == "mean_evals")
            .unwrap();
        assert!(evals.relative_error.unwrap() < 0.30);
        let optima = verdict
            .metrics
            .iter()
            .find(|m| m.metric == "mean_optima")
            .unwrap();
        assert!(optima.pass);
    }

    #[test]
    fn compare_zero_sd_optima_must_match_exactly() {
        let rows = vec![RunRow {
            problem: "Pgrid16".into(),
            seed: 0,
            evals: 10_126,
            optima: 1,
            success: true,
            wall_ms: 1,
        }];
        let stats = BatchStats::from_runs("Pgrid16", rows, Vec::new());
        let reference = reference::find_reference("Pgrid16").unwrap();
        let verdict = compare_to_reference(&stats, reference, &Tolerances::default()).unwrap();
        assert!(!verdict.pass);
    }

    #[test]
    fn compare_empty_batch_errors() {
        let stats = BatchStats {
            problem: "Pgrid16".into(),
            replications: 0,
            success_fraction: 0.0,
            mean_evals: 0.0,
            sd_evals: None,
            mean_optima: 0.0,
            sd_optima: None,
            rows: Vec::new(),
            results: Vec::new(),
        };
        let reference = reference::find_reference("Pgrid16").unwrap();
        assert!(matches!(
            compare_to_reference(&stats, reference, &Tolerances::default()),
            Err(HarnessError::EmptyBatch)
        ));
    }

    #[test]
    fn presets_cover_the_acceptance_experiments() {
        for id in [
            "table2-trapfive-100",
            "table2-overfive-60",
            "table2-twomax-100",
            "table2-shuff-hiff-128",
            "table3-Pgrid16",
            "table3-Pcat28",
            "table3-Pcatring28",
            "table3-Pcatring42",
            "sweep-Ptrapfive50",
            "sweep-Pshuff64",
            "illustration-trapfive-15",
        ] {
            assert!(reference::find_preset(id).is_some(), "missing preset {id}");
        }
        let illustration = reference::find_preset("illustration-trapfive-15").unwrap();
        let cfg = illustration.config(1, OperatorKind::Cg);
        // the ablation setup allows nw == n0 with a warning
        assert_eq!(cfg.validate().unwrap().len(), 1);
    }
}
