//! Parent-cluster selection and the two interbreeding operators:
//! information-guided combination (cg) and the PV-wise uniform crossover
//! baseline.

use crate::genome::Genome;
use crate::model::{sample_genome, CountTable, Estimator, InfoMatrix, ProportionMatrix};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CombineError {
    #[error("interbreeding needs at least 2 clusters, got {0}")]
    InterbreedingUnavailable(usize),
}

/// Which interbreeding operator builds the temporary PV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOperator {
    Cg,
    PvUniform,
}

/// Which parent a temporary-PV position was taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParentLabel {
    A,
    B,
}

/// A per-gene mixture of two parent PVs: each position holds exactly one
/// parent's proportion, with the provenance recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporaryPv {
    pub values: Vec<f64>,
    pub provenance: Vec<ParentLabel>,
}

impl TemporaryPv {
    pub fn provenance_string(&self) -> String {
        self.provenance
            .iter()
            .map(|p| match p {
                ParentLabel::A => 'A',
                ParentLabel::B => 'B',
            })
            .collect()
    }
}

/// Draws one cluster index with probability proportional to its mean
/// fitness; a uniform draw if every weight is zero. Weights must be
/// non-negative.
pub fn select_cluster_weighted<R: Rng + ?Sized>(mean_fitness: &[f64], rng: &mut R) -> usize {
    assert!(!mean_fitness.is_empty());
    assert!(
        mean_fitness.iter().all(|&w| w >= 0.0),
        "cluster mean fitness must be non-negative"
    );
    let total: f64 = mean_fitness.iter().sum();
    if total <= 0.0 {
        return rng.random_range(0..mean_fitness.len());
    }
    let x = rng.random_range(0.0..total);
    let mut cumulative = 0.0;
    for (i, &w) in mean_fitness.iter().enumerate() {
        cumulative += w;
        if x < cumulative {
            return i;
        }
    }
    // float round-off at the very top of the range
    mean_fitness
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(mean_fitness.len() - 1)
}

/// Selects the two parent clusters A and B, each proportionally to mean
/// fitness. With `distinct` (the default breeding behaviour) B is drawn
/// from the remaining clusters.
pub fn select_parent_clusters<R: Rng + ?Sized>(
    mean_fitness: &[f64],
    rng: &mut R,
    distinct: bool,
) -> Result<(usize, usize), CombineError> {
    let k = mean_fitness.len();
    if k < 2 {
        return Err(CombineError::InterbreedingUnavailable(k));
    }
    let a = select_cluster_weighted(mean_fitness, rng);
    if !distinct {
        let b = select_cluster_weighted(mean_fitness, rng);
        return Ok((a, b));
    }
    let mut rest: Vec<f64> = mean_fitness.to_vec();
    rest.remove(a);
    let b_rest = select_cluster_weighted(&rest, rng);
    let b = if b_rest >= a { b_rest + 1 } else { b_rest };
    Ok((a, b))
}

/// Builds the temporary PV gene by gene from the more informative parent:
/// position j takes parent A's proportion when A's information measure is
/// strictly greater, otherwise B's. Deterministic given the matrices.
pub fn cg_combine(
    proportions: &ProportionMatrix,
    info: &InfoMatrix,
    a: usize,
    b: usize,
) -> TemporaryPv {
    assert_ne!(a, b, "parents must be distinct clusters");
    let m = proportions.m();
    let mut values = Vec::with_capacity(m);
    let mut provenance = Vec::with_capacity(m);
    for j in 0..m {
        if info.get(a, j) > info.get(b, j) {
            values.push(proportions.get(a, j));
            provenance.push(ParentLabel::A);
        } else {
            values.push(proportions.get(b, j));
            provenance.push(ParentLabel::B);
        }
    }
    TemporaryPv { values, provenance }
}

/// The baseline operator: each position takes either parent's proportion
/// with probability one half, independently.
pub fn pv_uniform_crossover<R: Rng + ?Sized>(
    proportions: &ProportionMatrix,
    a: usize,
    b: usize,
    rng: &mut R,
) -> TemporaryPv {
    assert_ne!(a, b, "parents must be distinct clusters");
    let m = proportions.m();
    let mut values = Vec::with_capacity(m);
    let mut provenance = Vec::with_capacity(m);
    for j in 0..m {
        if rng.random_bool(0.5) {
            values.push(proportions.get(a, j));
            provenance.push(ParentLabel::A);
        } else {
            values.push(proportions.get(b, j));
            provenance.push(ParentLabel::B);
        }
    }
    TemporaryPv { values, provenance }
}

/// One clustering hypothesis as seen by breeding: counts plus the
/// per-cluster mean fitness frozen or computed at the same moment.
pub struct HypothesisView<'a> {
    pub counts: &'a CountTable,
    pub mean_fitness: &'a [f64],
}

/// The complete interbreeding step: select two distinct parents
/// proportionally to mean fitness, build the temporary PV with the chosen
/// operator, and sample one genome from it.
pub fn interbreed<R: Rng + ?Sized>(
    view: &HypothesisView<'_>,
    estimator: Estimator,
    operator: CombineOperator,
    rng: &mut R,
) -> Result<(Genome, (usize, usize), TemporaryPv), CombineError> {
    let (a, b) = select_parent_clusters(view.mean_fitness, rng, true)?;
    let rows = vec![
        view.counts.proportion_row(a, estimator),
        view.counts.proportion_row(b, estimator),
    ];
    let pi = ProportionMatrix::from_rows(rows, estimator);
    let pv = match operator {
        CombineOperator::Cg => {
            let entropies = view.counts.population_entropies();
            let info = InfoMatrix::from_rows(vec![
                view.counts.information_row_with(a, &entropies),
                view.counts.information_row_with(b, &entropies),
            ]);
            cg_combine(&pi, &info, 0, 1)
        }
        CombineOperator::PvUniform => pv_uniform_crossover(&pi, 0, 1, rng),
    };
    let genome = sample_genome(&pv.values, rng);
    Ok((genome, (a, b), pv))
}
