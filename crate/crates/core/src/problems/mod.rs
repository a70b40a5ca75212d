//! Benchmark fitness functions, graph instance generators, the bisection
//! repair operator and global-optimum bookkeeping.
//!
//! All evaluators are pure and return non-negative fitness; problem objects
//! are immutable after construction and safe to share across runs.

mod graphs;
mod registry;

pub use graphs::{make_caterpillar_graph, make_grid_graph, make_rect_grid_graph, GraphInstance};
pub use registry::{instantiate, problem_names};

use crate::genome::Genome;
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem configuration error: {0}")]
    Config(String),
    #[error("unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("problem {0:?} requires a size argument")]
    MissingSize(String),
    #[error("exhaustive enumeration refused for m = {0} (limit 28)")]
    TooLargeToEnumerate(usize),
}

/// A permutation of gene indices used by the shuffled HIFF variant:
/// gene `j` of the genome is read at position `perm[j]` of the evaluated
/// string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShufflePermutation {
    perm: Vec<usize>,
}

impl ShufflePermutation {
    pub fn identity(m: usize) -> Self {
        ShufflePermutation {
            perm: (0..m).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(rng);
        ShufflePermutation { perm }
    }

    pub fn from_vec(perm: Vec<usize>) -> Result<Self, ProblemError> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(ProblemError::Config("not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(ShufflePermutation { perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Rearranges `g`: output position `perm[j]` holds gene `j`.
    pub fn apply(&self, g: &Genome) -> Genome {
        assert_eq!(g.len(), self.perm.len());
        let mut out = Genome::zeros(g.len());
        for j in 0..g.len() {
            if g.get(j) {
                out.set(self.perm[j], true);
            }
        }
        out
    }
}

/// |n/2 - sum of bits|; maximal (n/2) at the all-zeros and all-ones strings.
pub fn twomax_fitness(g: &Genome) -> f64 {
    (g.len() as f64 / 2.0 - g.count_ones() as f64).abs()
}

#[inline]
fn trap5(u: u32) -> f64 {
    if u == 5 {
        5.0
    } else {
        (4 - u) as f64
    }
}

/// Sum of the 5-bit trap over contiguous disjoint groups.
pub fn trap5_fitness(g: &Genome) -> f64 {
    assert_eq!(g.len() % 5, 0, "trap-5 genome length must be divisible by 5");
    let mut total = 0.0;
    for block in 0..g.len() / 5 {
        let mut u = 0u32;
        for j in 0..5 {
            u += g.get(block * 5 + j) as u32;
        }
        total += trap5(u);
    }
    total
}

/// Circularly overlapping trap-5: block `b` covers genes
/// `{3b, .., 3b+4} mod m`, so consecutive blocks share two genes on each
/// side and block 0 is a neighbour of the last block.
pub fn overlapping_trap5_fitness(g: &Genome, block_count: usize) -> f64 {
    let m = g.len();
    assert_eq!(m, 3 * block_count, "overlapping trap-5 needs m = 3 * block_count");
    let mut total = 0.0;
    for b in 0..block_count {
        let mut u = 0u32;
        for j in 0..5 {
            u += g.get((3 * b + j) % m) as u32;
        }
        total += trap5(u);
    }
    total
}

/// Hierarchical if-and-only-if. Blocks of size 1 score 1; a block whose bits
/// are all equal scores its size plus both halves; a mixed block scores the
/// halves only. With a shuffle permutation, gene `j` is read at position
/// `perm[j]`.
pub fn hiff_fitness(g: &Genome, shuffle: Option<&ShufflePermutation>) -> f64 {
    let m = g.len();
    assert!(m.is_power_of_two(), "HIFF genome length must be a power of two");
    let rearranged;
    let bits: &Genome = match shuffle {
        Some(p) => {
            rearranged = p.apply(g);
            &rearranged
        }
        None => g,
    };
    // level-wise: state holds Some(bit) for uniform blocks, None for mixed
    let mut state: Vec<Option<bool>> = (0..m).map(|j| Some(bits.get(j))).collect();
    let mut total = m as f64;
    let mut block = 2usize;
    while block <= m {
        let mut next = Vec::with_capacity(state.len() / 2);
        for pair in state.chunks_exact(2) {
            let merged = match (pair[0], pair[1]) {
                (Some(a), Some(b)) if a == b => Some(a),
                _ => None,
            };
            if merged.is_some() {
                total += block as f64;
            }
            next.push(merged);
        }
        state = next;
        block *= 2;
    }
    total
}

/// Number of nodes minus the number of edges crossing the two sets.
/// Callers must pass a feasible (balanced) genome; the engine repairs first.
pub fn bisection_fitness(g: &Genome, graph: &GraphInstance) -> f64 {
    assert_eq!(g.len(), graph.node_count());
    assert_eq!(
        g.count_ones() * 2,
        g.len(),
        "bisection fitness requires a balanced genome"
    );
    let mut cut = 0usize;
    for &(u, v) in graph.edges() {
        if g.get(u as usize) != g.get(v as usize) {
            cut += 1;
        }
    }
    (graph.node_count() - cut) as f64
}

/// Repeatedly inverts a uniformly random gene holding the majority value
/// until the genome has exactly m/2 ones. Feasible inputs are unchanged.
pub fn repair_bisection<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) {
    let m = g.len();
    debug_assert_eq!(m % 2, 0);
    let target = m / 2;
    let mut ones = g.count_ones();
    while ones != target {
        let majority = ones > target;
        // rejection sampling stays uniform over the majority positions
        loop {
            let j = rng.random_range(0..m);
            if g.get(j) == majority {
                g.set(j, !majority);
                break;
            }
        }
        if majority {
            ones -= 1;
        } else {
            ones += 1;
        }
    }
}

/// Count of strictly suboptimal single-flip local optima of the
/// concatenated trap-5: 2^(m/5) - 1.
pub fn count_trap5_local_optima(m: usize) -> u64 {
    assert_eq!(m % 5, 0, "trap-5 length must be divisible by 5");
    let groups = m / 5;
    assert!(groups < 64, "count overflows u64");
    (1u64 << groups) - 1
}

#[derive(Clone, Debug)]
enum ProblemKind {
    Twomax,
    TrapFive,
    OverFive { block_count: usize },
    Hiff { shuffle: Option<ShufflePermutation> },
    Bisection { graph: Arc<GraphInstance> },
}

/// A named, immutable benchmark instance: evaluator, genome length,
/// optional repair operator and the known global-optimum metadata.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    name: String,
    m: usize,
    kind: ProblemKind,
    optimum_fitness: f64,
    known_peak_count: usize,
}

impl ProblemInstance {
    pub fn twomax(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::Config("twomax needs n >= 1".into()));
        }
        Ok(ProblemInstance {
            name: format!("twomax({n})"),
            m: n,
            kind: ProblemKind::Twomax,
            optimum_fitness: n as f64 / 2.0,
            known_peak_count: 2,
        })
    }

    pub fn trap_five(m: usize) -> Result<Self, ProblemError> {
        if m == 0 || m % 5 != 0 {
            return Err(ProblemError::Config(format!(
                "trap-5 length {m} must be a positive multiple of 5"
            )));
        }
        Ok(ProblemInstance {
            name: format!("trapfive({m})"),
            m,
            kind: ProblemKind::TrapFive,
            optimum_fitness: m as f64,
            known_peak_count: 1,
        })
    }

    pub fn over_five(m: usize) -> Result<Self, ProblemError> {
        if m < 6 || m % 3 != 0 {
            return Err(ProblemError::Config(format!(
                "overlapping trap-5 length {m} must be a multiple of 3, at least 6"
            )));
        }
        let block_count = m / 3;
        Ok(ProblemInstance {
            name: format!("overfive({m})"),
            m,
            kind: ProblemKind::OverFive { block_count },
            optimum_fitness: 5.0 * block_count as f64,
            known_peak_count: 1,
        })
    }

    pub fn hiff(m: usize, shuffle: Option<ShufflePermutation>) -> Result<Self, ProblemError> {
        if !m.is_power_of_two() {
            return Err(ProblemError::Config(format!(
                "HIFF length {m} must be a power of two"
            )));
        }
        if let Some(p) = &shuffle {
            if p.len() != m {
                return Err(ProblemError::Config("shuffle length mismatch".into()));
            }
        }
        let levels = m.trailing_zeros() as f64;
        let name = if shuffle.is_some() {
            format!("shuff-hiff({m})")
        } else {
            format!("hiff({m})")
        };
        Ok(ProblemInstance {
            name,
            m,
            kind: ProblemKind::Hiff { shuffle },
            optimum_fitness: (levels + 1.0) * m as f64,
            known_peak_count: 2,
        })
    }

    pub fn bisection(
        name: impl Into<String>,
        graph: Arc<GraphInstance>,
        optimum_fitness: f64,
        known_peak_count: usize,
    ) -> Self {
        ProblemInstance {
            name: name.into(),
            m: graph.node_count(),
            kind: ProblemKind::Bisection { graph },
            optimum_fitness,
            known_peak_count,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn genome_len(&self) -> usize {
        self.m
    }

    pub fn optimum_fitness(&self) -> f64 {
        self.optimum_fitness
    }

    pub fn known_peak_count(&self) -> usize {
        self.known_peak_count
    }

    pub fn graph(&self) -> Option<&GraphInstance> {
        match &self.kind {
            ProblemKind::Bisection { graph } => Some(graph),
            _ => None,
        }
    }

    pub fn shuffle(&self) -> Option<&ShufflePermutation> {
        match &self.kind {
            ProblemKind::Hiff { shuffle } => shuffle.as_ref(),
            _ => None,
        }
    }

    pub fn evaluate(&self, g: &Genome) -> f64 {
        match &self.kind {
            ProblemKind::Twomax => twomax_fitness(g),
            ProblemKind::TrapFive => trap5_fitness(g),
            ProblemKind::OverFive { block_count } => overlapping_trap5_fitness(g, *block_count),
            ProblemKind::Hiff { shuffle } => hiff_fitness(g, shuffle.as_ref()),
            ProblemKind::Bisection { graph } => bisection_fitness(g, graph),
        }
    }

    pub fn needs_repair(&self) -> bool {
        matches!(self.kind, ProblemKind::Bisection { .. })
    }

    pub fn repair<R: Rng + ?Sized>(&self, g: &mut Genome, rng: &mut R) {
        if self.needs_repair() {
            repair_bisection(g, rng);
        }
    }

    pub fn is_feasible(&self, g: &Genome) -> bool {
        match &self.kind {
            ProblemKind::Bisection { .. } => g.count_ones() * 2 == g.len(),
            _ => true,
        }
    }

    pub fn is_global_optimum(&self, g: &Genome, fitness: f64) -> bool {
        fitness == self.optimum_fitness && self.is_feasible(g)
    }
}

fn genome_from_mask(mask: u64, m: usize) -> Genome {
    let mut g = Genome::zeros(m);
    for j in 0..m {
        if (mask >> j) & 1 == 1 {
            g.set(j, true);
        }
    }
    g
}

/// Exhaustively enumerates every feasible genome attaining the maximum
/// fitness. Bisection instances scan only balanced strings; everything else
/// scans all 2^m strings. Refuses m > 28.
pub fn enumerate_global_optima(
    instance: &ProblemInstance,
) -> Result<Vec<Genome>, ProblemError> {
    let m = instance.m;
    if m > 28 {
        return Err(ProblemError::TooLargeToEnumerate(m));
    }
    let mut best = f64::NEG_INFINITY;
    let mut optima: Vec<u64> = Vec::new();
    let mut consider = |mask: u64, instance: &ProblemInstance| {
        let g = genome_from_mask(mask, m);
        let f = instance.evaluate(&g);
        if f > best {
            best = f;
            optima.clear();
            optima.push(mask);
        } else if f == best {
            optima.push(mask);
        }
    };
    if instance.needs_repair() {
        // Gosper's hack over balanced bitmasks
        let mut x: u64 = (1u64 << (m / 2)) - 1;
        let limit: u64 = 1u64 << m;
        while x < limit {
            consider(x, instance);
            let c = x & x.wrapping_neg();
            let r = x + c;
            x = (((r ^ x) >> 2) / c) | r;
        }
    } else {
        for mask in 0..(1u64 << m) {
            consider(mask, instance);
        }
    }
    let mut genomes: Vec<Genome> = optima.iter().map(|&x| genome_from_mask(x, m)).collect();
    genomes.sort();
    genomes.dedup();
    Ok(genomes)
}
