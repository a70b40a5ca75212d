//! Per-cluster binomial proportion models and the information measure that
//! scores how much observing a cluster tells us about each gene.
//!
//! All matrices are pure functions of a [`CountTable`]; counts are updated
//! incrementally as individuals enter and leave clusters, and proportion or
//! information entries are recomputed from the counts on read. Incremental
//! maintenance therefore equals batch recomputation by construction.

use crate::genome::Genome;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cluster {0} is empty; proportions are undefined")]
    EmptyCluster(usize),
}

/// Which binomial proportion estimator to use when building a PV.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    Mle,
    Wilson,
}

/// Maximum likelihood estimate of a binomial proportion: s / n.
#[inline]
pub fn mle_proportion(ones: u32, n: usize) -> f64 {
    assert!(n >= 1, "MLE proportion is undefined for an empty cluster");
    ones as f64 / n as f64
}

/// Shrunken estimate (s + 2) / (n + 4), strictly inside (0, 1), so that
/// both alleles always stay sampleable.
#[inline]
pub fn wilson_proportion(ones: u32, n: usize) -> f64 {
    (ones as f64 + 2.0) / (n as f64 + 4.0)
}

/// Binary entropy in bits of a {0,1} distribution with P(1) = p1, using the
/// convention 0 * log2(0) = 0.
#[inline]
pub fn gene_entropy(p1: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p1));
    let mut h = 0.0;
    for p in [p1, 1.0 - p1] {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Per-cluster sizes and one-counts plus the population totals. The source
/// of truth for every proportion, centroid and information measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    k: usize,
    m: usize,
    n: usize,
    sizes: Vec<usize>,
    ones: Vec<u32>,   // k * m, row-major
    totals: Vec<u32>, // per gene
}

impl CountTable {
    pub fn new(k: usize, m: usize) -> Self {
        CountTable {
            k,
            m,
            n: 0,
            sizes: vec![0; k],
            ones: vec![0; k * m],
            totals: vec![0; m],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of counted individuals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self, cluster: usize) -> usize {
        self.sizes[cluster]
    }

    pub fn ones(&self, cluster: usize, gene: usize) -> u32 {
        self.ones[cluster * self.m + gene]
    }

    pub fn total(&self, gene: usize) -> u32 {
        self.totals[gene]
    }

    pub fn insert(&mut self, g: &Genome, cluster: usize) {
        debug_assert_eq!(g.len(), self.m);
        self.sizes[cluster] += 1;
        self.n += 1;
        let row = cluster * self.m;
        for j in 0..self.m {
            if g.get(j) {
                self.ones[row + j] += 1;
                self.totals[j] += 1;
            }
        }
    }

    pub fn remove(&mut self, g: &Genome, cluster: usize) {
        debug_assert_eq!(g.len(), self.m);
        assert!(self.sizes[cluster] > 0, "removing from empty cluster {cluster}");
        self.sizes[cluster] -= 1;
        self.n -= 1;
        let row = cluster * self.m;
        for j in 0..self.m {
            if g.get(j) {
                self.ones[row + j] -= 1;
                self.totals[j] -= 1;
            }
        }
    }

    /// Proportion of ones at `gene` in `cluster` under the given estimator.
    pub fn proportion(&self, cluster: usize, gene: usize, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::Mle => mle_proportion(self.ones(cluster, gene), self.sizes[cluster]),
            Estimator::Wilson => wilson_proportion(self.ones(cluster, gene), self.sizes[cluster]),
        }
    }

    pub fn proportion_row(&self, cluster: usize, estimator: Estimator) -> Vec<f64> {
        (0..self.m)
            .map(|j| self.proportion(cluster, j, estimator))
            .collect()
    }

    /// P(x_j = 1) over the whole counted population.
    pub fn population_proportion(&self, gene: usize) -> f64 {
        assert!(self.n >= 1);
        self.totals[gene] as f64 / self.n as f64
    }

    /// P(x_j = 1 | c(x) != cluster): the proportion with the cluster's
    /// members left out.
    pub fn leave_cluster_out_proportion(&self, cluster: usize, gene: usize) -> f64 {
        let rest = self.n - self.sizes[cluster];
        assert!(rest >= 1, "all individuals are in cluster {cluster}");
        (self.totals[gene] - self.ones(cluster, gene)) as f64 / rest as f64
    }

    /// The drop in the entropy of gene `gene`'s distribution when the
    /// cluster is removed from the population: h(gene) - h'(cluster, gene).
    /// Zero for k = 1, where no leave-one-out exists.
    pub fn information_measure(&self, cluster: usize, gene: usize) -> f64 {
        if self.k == 1 {
            return 0.0;
        }
        gene_entropy(self.population_proportion(gene))
            - gene_entropy(self.leave_cluster_out_proportion(cluster, gene))
    }

    /// Population gene entropies h_j, shared by every cluster's information
    /// row.
    pub fn population_entropies(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| gene_entropy(self.population_proportion(j)))
            .collect()
    }

    /// One cluster's information row, given precomputed population
    /// entropies.
    pub fn information_row_with(&self, cluster: usize, population_entropies: &[f64]) -> Vec<f64> {
        if self.k == 1 {
            return vec![0.0; self.m];
        }
        (0..self.m)
            .map(|j| {
                population_entropies[j]
                    - gene_entropy(self.leave_cluster_out_proportion(cluster, j))
            })
            .collect()
    }

    /// Builds the full proportion and information matrices. Errors if any
    /// cluster is empty.
    pub fn rebuild_matrices(
        &self,
        estimator: Estimator,
    ) -> Result<(ProportionMatrix, InfoMatrix), ModelError> {
        if let Some(empty) = self.sizes.iter().position(|&s| s == 0) {
            return Err(ModelError::EmptyCluster(empty));
        }
        let mut proportions = Vec::with_capacity(self.k * self.m);
        for i in 0..self.k {
            proportions.extend(self.proportion_row(i, estimator));
        }
        let pop_entropies = self.population_entropies();
        let mut info = Vec::with_capacity(self.k * self.m);
        for i in 0..self.k {
            info.extend(self.information_row_with(i, &pop_entropies));
        }
        Ok((
            ProportionMatrix {
                k: self.k,
                m: self.m,
                estimator,
                values: proportions,
            },
            InfoMatrix {
                k: self.k,
                m: self.m,
                values: info,
            },
        ))
    }
}

/// k x m matrix of per-cluster binomial proportions.
#[derive(Clone, Debug, PartialEq)]
pub struct ProportionMatrix {
    k: usize,
    m: usize,
    estimator: Estimator,
    values: Vec<f64>,
}

impl ProportionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, estimator: Estimator) -> Self {
        let k = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m));
        ProportionMatrix {
            k,
            m,
            estimator,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn get(&self, cluster: usize, gene: usize) -> f64 {
        self.values[cluster * self.m + gene]
    }

    pub fn row(&self, cluster: usize) -> &[f64] {
        &self.values[cluster * self.m..(cluster + 1) * self.m]
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(self.k, self.m, &self.values)
    }
}

/// k x m matrix of information measures, in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoMatrix {
    k: usize,
    m: usize,
    values: Vec<f64>,
}

impl InfoMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let k = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m));
        InfoMatrix {
            k,
            m,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, cluster: usize, gene: usize) -> f64 {
        self.values[cluster * self.m + gene]
    }

    pub fn row(&self, cluster: usize) -> &[f64] {
        &self.values[cluster * self.m..(cluster + 1) * self.m]
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(self.k, self.m, &self.values)
    }
}

fn matrix_csv(k: usize, m: usize, values: &[f64]) -> String {
    let mut out = String::new();
    for i in 0..k {
        let row: Vec<String> = (0..m).map(|j| format!("{}", values[i * m + j])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Samples a genome: gene j is 1 independently with probability pv[j].
pub fn sample_genome<R: Rng + ?Sized>(pv: &[f64], rng: &mut R) -> Genome {
    let mut g = Genome::zeros(pv.len());
    for (j, &p) in pv.iter().enumerate() {
        debug_assert!((0.0..=1.0).contains(&p));
        if rng.random_bool(p) {
            g.set(j, true);
        }
    }
    g
}
