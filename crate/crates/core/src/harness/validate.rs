//! Brute-force cross-checks: every closed form or incremental structure in
//! the library is validated against an independent oracle that recomputes
//! the same quantity from its definition.

use crate::clustering::{initial_clustering, Member};
use crate::combine::cg_combine;
use crate::engine::{self, EngineConfig};
use crate::genome::Genome;
use crate::model::{
    gene_entropy, sample_genome, wilson_proportion, CountTable, Estimator, InfoMatrix,
    ProportionMatrix,
};
use crate::problems::{
    self, count_trap5_local_optima, enumerate_global_optima, hiff_fitness,
    overlapping_trap5_fitness, repair_bisection, trap5_fitness, ProblemInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: &str, outcome: Result<String, String>) -> CheckResult {
    match outcome {
        Ok(detail) => CheckResult {
            name: name.into(),
            pass: true,
            detail,
        },
        Err(detail) => CheckResult {
            name: name.into(),
            pass: false,
            detail,
        },
    }
}

/// Runs the full oracle suite. `deep` adds the balanced-string enumerations
/// of the 28-node graph instances (a few seconds of work).
pub fn validate_oracles(deep: bool) -> ValidationReport {
    let mut checks = vec![
        check("hiff-recursive-oracle", hiff_matches_recursive_oracle()),
        check("hiff-closed-form", hiff_closed_form()),
        check("hiff-16-exhaustive", hiff_16_exhaustive()),
        check("trap5-15-exhaustive", trap5_15_exhaustive()),
        check("trap5-local-optima-basins", trap5_local_optima_basins()),
        check("overfive-block-oracle", overfive_matches_block_oracle()),
        check("twomax-8-enumeration", twomax_8_enumeration()),
        check("wilson-bounds", wilson_bounds_exhaustive(10_000)),
        check("repair-balances", repair_always_balances()),
        check(
            "incremental-counts-vs-batch",
            incremental_matrices_match_batch(10_000),
        ),
        check(
            "clustered-population-recount",
            clustered_population_recount(),
        ),
        check("cg-combine-naive", cg_combine_matches_naive(1_000)),
        check("sampling-consistency", sampling_matches_pv()),
        check("pgrid16-peaks", graph_peaks("Pgrid16")),
        check("run-determinism", run_determinism()),
    ];
    if deep {
        checks.push(check("pcat28-peaks", graph_peaks("Pcat28")));
        checks.push(check("pcatring28-peaks", graph_peaks("Pcatring28")));
    }
    ValidationReport { checks }
}

/// Literal recursion over bit slices, independent of the level-wise
/// implementation.
pub fn hiff_oracle(bits: &[u8]) -> f64 {
    if bits.len() == 1 {
        return 1.0;
    }
    let (left, right) = bits.split_at(bits.len() / 2);
    let children = hiff_oracle(left) + hiff_oracle(right);
    let uniform = bits.iter().all(|&b| b == 0) || bits.iter().all(|&b| b == 1);
    if uniform {
        bits.len() as f64 + children
    } else {
        children
    }
}

/// Sums the 5-bit trap over explicitly materialized circular block index
/// sets, independent of the modular-arithmetic evaluator.
pub fn overfive_oracle(g: &Genome, block_count: usize) -> f64 {
    let m = g.len();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for b in 0..block_count {
        let start = 3 * b;
        blocks.push((0..5).map(|o| (start + o) % m).collect());
    }
    let mut total = 0.0;
    for block in blocks {
        let u: u32 = block.iter().map(|&j| g.get(j) as u32).sum();
        total += if u == 5 { 5.0 } else { (4 - u) as f64 };
    }
    total
}

fn genome_bits(g: &Genome) -> Vec<u8> {
    g.iter().map(|b| b as u8).collect()
}

fn hiff_matches_recursive_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for m in [1usize, 2, 4, 8, 16, 32, 64, 128] {
        for _ in 0..200 {
            let g = Genome::random(m, &mut rng);
            let fast = hiff_fitness(&g, None);
            let slow = hiff_oracle(&genome_bits(&g));
            if fast != slow {
                return Err(format!(
                    "m={m} genome={} implementation {fast} oracle {slow}",
                    g.to_bit_string()
                ));
            }
        }
    }
    Ok("1600 random genomes across m = 1..128".into())
}

fn hiff_closed_form() -> Result<String, String> {
    for p in 0..=8u32 {
        let m = 1usize << p;
        let expected = (p as f64 + 1.0) * m as f64;
        for g in [Genome::ones(m), Genome::zeros(m)] {
            let recursive = hiff_oracle(&genome_bits(&g));
            let fast = hiff_fitness(&g, None);
            if recursive != expected || fast != expected {
                return Err(format!(
                    "p={p}: closed form {expected}, recursion {recursive}, implementation {fast}"
                ));
            }
        }
    }
    Ok("(p+1)*2^p matches recursion and implementation for p <= 8".into())
}

fn hiff_16_exhaustive() -> Result<String, String> {
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for mask in 0u32..(1 << 16) {
        let bits: Vec<u8> = (0..16).map(|j| ((mask >> j) & 1) as u8).collect();
        let f = hiff_oracle(&bits);
        if f > best {
            best = f;
            argmax = vec![mask];
        } else if f == best {
            argmax.push(mask);
        }
    }
    if best != 80.0 {
        return Err(format!("max over 2^16 strings is {best}, expected 80"));
    }
    if argmax != vec![0, 0xFFFF] {
        return Err(format!("argmax set {argmax:?}, expected all-zeros and all-ones"));
    }
    Ok("2^16 scan: max 80 exactly at the two uniform strings".into())
}

fn trap5_15_exhaustive() -> Result<String, String> {
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for mask in 0u32..(1 << 15) {
        let g = mask_genome(mask as u64, 15);
        let f = trap5_fitness(&g);
        if f > best {
            best = f;
            argmax = vec![mask];
        } else if f == best {
            argmax.push(mask);
        }
    }
    if best != 15.0 || argmax != vec![(1 << 15) - 1] {
        return Err(format!("best {best} at {argmax:?}"));
    }
    Ok("2^15 scan: unique optimum all-ones with fitness 15".into())
}

fn trap5_local_optima_basins() -> Result<String, String> {
    // single-flip local optima that are not the global optimum
    let m = 15;
    let global = (1u32 << m) - 1;
    let mut count = 0u64;
    for mask in 0u32..(1 << m) {
        if mask == global {
            continue;
        }
        let g = mask_genome(mask as u64, m);
        let f = trap5_fitness(&g);
        let mut improvable = false;
        for j in 0..m {
            let mut h = g.clone();
            h.flip(j);
            if trap5_fitness(&h) > f {
                improvable = true;
                break;
            }
        }
        if !improvable {
            count += 1;
        }
    }
    let expected = count_trap5_local_optima(m);
    if count != expected {
        return Err(format!("enumerated {count} local optima, closed form {expected}"));
    }
    Ok(format!("m=15: {count} suboptimal single-flip optima = 2^3 - 1"))
}

fn overfive_matches_block_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for (m, blocks) in [(6usize, 2usize), (30, 10), (60, 20)] {
        for _ in 0..500 {
            let g = Genome::random(m, &mut rng);
            let fast = overlapping_trap5_fitness(&g, blocks);
            let slow = overfive_oracle(&g, blocks);
            if fast != slow {
                return Err(format!("m={m} genome={}", g.to_bit_string()));
            }
        }
        let ones = overlapping_trap5_fitness(&Genome::ones(m), blocks);
        if ones != 5.0 * blocks as f64 {
            return Err(format!("all-ones at m={m} scored {ones}"));
        }
    }
    Ok("block-enumeration oracle agrees on 1500 genomes; all-ones scores 5 per block".into())
}

fn twomax_8_enumeration() -> Result<String, String> {
    let p = ProblemInstance::twomax(8).map_err(|e| e.to_string())?;
    let optima = enumerate_global_optima(&p).map_err(|e| e.to_string())?;
    if optima != vec![Genome::zeros(8), Genome::ones(8)] {
        return Err(format!("{optima:?}"));
    }
    Ok("two maxima: all-zeros and all-ones".into())
}

fn wilson_bounds_exhaustive(n_max: usize) -> Result<String, String> {
    for n in 0..=n_max {
        for s in 0..=n as u32 {
            let p = wilson_proportion(s, n);
            if p <= 0.0 || p >= 1.0 {
                return Err(format!("wilson({s}, {n}) = {p} leaves (0, 1)"));
            }
            let lo = 2.0 / (n as f64 + 4.0);
            let hi = (n as f64 + 2.0) / (n as f64 + 4.0);
            if p < lo || p > hi {
                return Err(format!("wilson({s}, {n}) = {p} outside [{lo}, {hi}]"));
            }
        }
    }
    Ok(format!("strict (0,1) bounds for all s <= n <= {n_max}"))
}

fn repair_always_balances() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..5_000 {
        let m = 2 * rng.random_range(1..32usize);
        let mut g = Genome::random(m, &mut rng);
        let before = g.clone();
        repair_bisection(&mut g, &mut rng);
        if g.count_ones() * 2 != m {
            return Err(format!("unbalanced repair of {}", before.to_bit_string()));
        }
        // repaired genomes only move majority genes toward minority
        let ones_before = before.count_ones();
        if ones_before * 2 == m && g != before {
            return Err(format!("feasible input mutated: {}", before.to_bit_string()));
        }
    }
    Ok("5000 random repairs all balanced; feasible inputs untouched".into())
}

/// Batch recomputation of the proportion and information matrices straight
/// from raw (genome, cluster) pairs, bypassing `CountTable`.
pub fn batch_matrices(
    members: &[(Genome, usize)],
    k: usize,
    m: usize,
    estimator: Estimator,
) -> (ProportionMatrix, InfoMatrix) {
    let mut sizes = vec![0usize; k];
    let mut ones = vec![0u32; k * m];
    let mut totals = vec![0u32; m];
    for (g, c) in members {
        sizes[*c] += 1;
        for j in 0..m {
            if g.get(j) {
                ones[c * m + j] += 1;
                totals[j] += 1;
            }
        }
    }
    let n: usize = sizes.iter().sum();
    let mut pi_rows = Vec::with_capacity(k);
    let mut w_rows = Vec::with_capacity(k);
    for i in 0..k {
        let mut pi_row = Vec::with_capacity(m);
        let mut w_row = Vec::with_capacity(m);
        for j in 0..m {
            let s = ones[i * m + j];
            pi_row.push(match estimator {
                Estimator::Mle => s as f64 / sizes[i] as f64,
                Estimator::Wilson => (s as f64 + 2.0) / (sizes[i] as f64 + 4.0),
            });
            if k == 1 {
                w_row.push(0.0);
            } else {
                let h_pop = gene_entropy(totals[j] as f64 / n as f64);
                let rest = (totals[j] - s) as f64 / (n - sizes[i]) as f64;
                w_row.push(h_pop - gene_entropy(rest));
            }
        }
        pi_rows.push(pi_row);
        w_rows.push(w_row);
    }
    (
        ProportionMatrix::from_rows(pi_rows, estimator),
        InfoMatrix::from_rows(w_rows),
    )
}

fn matrices_close(a: &ProportionMatrix, b: &ProportionMatrix, tol: f64) -> bool {
    (0..a.k()).all(|i| {
        (0..a.m()).all(|j| (a.get(i, j) - b.get(i, j)).abs() <= tol)
    })
}

fn info_close(a: &InfoMatrix, b: &InfoMatrix, tol: f64) -> bool {
    (0..a.k()).all(|i| {
        (0..a.m()).all(|j| (a.get(i, j) - b.get(i, j)).abs() <= tol)
    })
}

/// Randomized insert/remove sequences against a mirror list; after every
/// operation the incremental table must match a from-scratch recount and
/// its matrices must match the raw-member recomputation within 1e-9.
pub fn incremental_matrices_match_batch(operations: usize) -> Result<String, String> {
    let k = 4;
    let m = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut table = CountTable::new(k, m);
    let mut mirror: Vec<(Genome, usize)> = Vec::new();
    // seed every cluster so matrices stay defined
    for c in 0..k {
        let g = Genome::random(m, &mut rng);
        table.insert(&g, c);
        mirror.push((g, c));
    }
    for step in 0..operations {
        let sizes: Vec<usize> = (0..k).map(|i| table.size(i)).collect();
        let removable: Vec<usize> = (0..mirror.len())
            .filter(|&i| sizes[mirror[i].1] > 1)
            .collect();
        if !removable.is_empty() && rng.random_bool(0.45) {
            let pick = removable[rng.random_range(0..removable.len())];
            let (g, c) = mirror.swap_remove(pick);
            table.remove(&g, c);
        } else {
            let g = Genome::random(m, &mut rng);
            let c = rng.random_range(0..k);
            table.insert(&g, c);
            mirror.push((g, c));
        }
        for estimator in [Estimator::Mle, Estimator::Wilson] {
            let (pi_inc, w_inc) = table
                .rebuild_matrices(estimator)
                .map_err(|e| format!("step {step}: {e}"))?;
            let (pi_batch, w_batch) = batch_matrices(&mirror, k, m, estimator);
            if !matrices_close(&pi_inc, &pi_batch, 1e-9) {
                return Err(format!("step {step}: proportion matrices diverged"));
            }
            if !info_close(&w_inc, &w_batch, 1e-9) {
                return Err(format!("step {step}: information matrices diverged"));
            }
        }
    }
    Ok(format!(
        "{operations} randomized operations, matrices within 1e-9 under both estimators"
    ))
}

fn clustered_population_recount() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let members: Vec<Member> = (0..50)
        .map(|_| Member {
            genome: Genome::random(12, &mut rng),
            fitness: rng.random_range(0..60) as f64,
        })
        .collect();
    let mut pop = initial_clustering(members, 5, &mut rng).map_err(|e| e.to_string())?;
    for step in 0..3_000 {
        if pop.len() > 10 && rng.random_bool(0.5) {
            let idx = rng.random_range(0..pop.len());
            pop.remove(idx);
        } else {
            pop.insert(Member {
                genome: Genome::random(12, &mut rng),
                fitness: rng.random_range(0..60) as f64,
            });
        }
        if step % 100 == 0 {
            pop.verify_consistency().map_err(|e| format!("step {step}: {e}"))?;
        }
    }
    pop.verify_consistency()?;
    Ok("3000 clustered inserts/removes, aggregates equal batch recount".into())
}

fn cg_combine_matches_naive(cases: usize) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for case in 0..cases {
        let m = rng.random_range(1..24usize);
        let mut pi_a = Vec::with_capacity(m);
        let mut pi_b = Vec::with_capacity(m);
        let mut w_a = Vec::with_capacity(m);
        let mut w_b = Vec::with_capacity(m);
        for _ in 0..m {
            pi_a.push(rng.random_range(0.0..1.0));
            pi_b.push(rng.random_range(0.0..1.0));
            let wa: f64 = rng.random_range(-1.0..1.0);
            w_a.push(wa);
            // inject exact ties now and then
            w_b.push(if rng.random_bool(0.2) {
                wa
            } else {
                rng.random_range(-1.0..1.0)
            });
        }
        let pi = ProportionMatrix::from_rows(vec![pi_a.clone(), pi_b.clone()], Estimator::Mle);
        let w = InfoMatrix::from_rows(vec![w_a.clone(), w_b.clone()]);
        let got = cg_combine(&pi, &w, 0, 1);
        // the definition, reapplied gene by gene
        let expected: Vec<f64> = (0..m)
            .map(|j| if w_a[j] > w_b[j] { pi_a[j] } else { pi_b[j] })
            .collect();
        if got.values != expected {
            return Err(format!("case {case}: {:?} vs {expected:?}", got.values));
        }
    }
    Ok(format!("{cases} random matrices, including exact ties"))
}

fn sampling_matches_pv() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let pv = [0.0, 1.0, 0.25, 0.75, 0.5];
    let trials = 40_000;
    let mut ones = [0usize; 5];
    for _ in 0..trials {
        let g = sample_genome(&pv, &mut rng);
        for j in 0..5 {
            ones[j] += g.get(j) as usize;
        }
    }
    for (j, &target) in pv.iter().enumerate() {
        let freq = ones[j] as f64 / trials as f64;
        if (freq - target).abs() > 0.02 {
            return Err(format!("gene {j}: frequency {freq} vs pv {target}"));
        }
    }
    Ok("empirical gene frequencies within 0.02 of the PV".into())
}

fn graph_peaks(name: &str) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let p = problems::instantiate(name, None, &mut rng).map_err(|e| e.to_string())?;
    let optima = enumerate_global_optima(&p).map_err(|e| e.to_string())?;
    if optima.len() != p.known_peak_count() {
        return Err(format!(
            "{name}: enumerated {} optimal genomes, metadata says {}",
            optima.len(),
            p.known_peak_count()
        ));
    }
    let enumerated_best = p.evaluate(&optima[0]);
    if enumerated_best != p.optimum_fitness() {
        return Err(format!(
            "{name}: enumerated optimum {enumerated_best} vs metadata {}",
            p.optimum_fitness()
        ));
    }
    Ok(format!(
        "{name}: {} peaks at fitness {}",
        optima.len(),
        p.optimum_fitness()
    ))
}

fn run_determinism() -> Result<String, String> {
    let cfg = EngineConfig::new(300, 60, 4);
    let run = |seed: u64| -> Result<_, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = problems::instantiate("twomax", Some(24), &mut rng)
            .map_err(|e| e.to_string())?;
        engine::run(&cfg, &problem, &mut rng).map_err(|e| e.to_string())
    };
    let a = run(9)?;
    let b = run(9)?;
    if a != b {
        return Err("identical seeds produced different results".into());
    }
    let c = run(10)?;
    if a == c {
        return Err("different seeds produced identical results".into());
    }
    Ok("identical seeds reproduce the RunResult field for field".into())
}

fn mask_genome(mask: u64, m: usize) -> Genome {
    let mut g = Genome::zeros(m);
    for j in 0..m {
        if (mask >> j) & 1 == 1 {
            g.set(j, true);
        }
    }
    g
}
