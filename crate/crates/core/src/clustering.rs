//! A fixed-k partition of the working population by genotype similarity,
//! maintained incrementally: inserting an individual assigns it to the
//! nearest centroid and runs one local reassignment sweep over that
//! cluster, instead of relearning the clustering each iteration.
//!
//! Centroids are derived exactly from the integer one-counts in the
//! [`CountTable`] (centroid entry = ones / size), so incremental updates can
//! never drift from a batch recount.

use crate::genome::Genome;
use crate::model::CountTable;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("population of {0} cannot form {1} clusters")]
    TooFewIndividuals(usize, usize),
    #[error("cluster count must be at least 1")]
    ZeroClusters,
}

/// One working-population individual.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub genome: Genome,
    pub fitness: f64,
}

/// Working population plus cluster assignments, centroids (via counts) and
/// per-cluster fitness sums.
#[derive(Clone, Debug)]
pub struct ClusteredPopulation {
    members: Vec<Member>,
    labels: Vec<usize>,
    counts: CountTable,
    fitness_sums: Vec<f64>,
    centroids: Vec<f64>, // k * m cache of ones/size
}

fn squared_distance(g: &Genome, centroid: &[f64]) -> f64 {
    let mut d = 0.0;
    for (j, &c) in centroid.iter().enumerate() {
        let x = g.get(j) as u8 as f64;
        let diff = x - c;
        d += diff * diff;
    }
    d
}

/// Full k-means on the genotypes: Lloyd iterations to an assignment
/// fixpoint (at most 100), seeded with k distinct individuals drawn
/// uniformly. Empty clusters are repaired each round by donating the member
/// farthest from its centroid in the largest cluster.
pub fn initial_clustering<R: Rng + ?Sized>(
    members: Vec<Member>,
    k: usize,
    rng: &mut R,
) -> Result<ClusteredPopulation, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let n = members.len();
    if n < k {
        return Err(ClusterError::TooFewIndividuals(n, k));
    }
    let m = members[0].genome.len();
    debug_assert!(members.iter().all(|mb| mb.genome.len() == m));

    let seed_indices = rand::seq::index::sample(rng, n, k).into_vec();
    let mut centroids = vec![0.0f64; k * m];
    for (label, &idx) in seed_indices.iter().enumerate() {
        for j in 0..m {
            centroids[label * m + j] = members[idx].genome.get(j) as u8 as f64;
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..100 {
        // assignment, ties to the lowest label
        let mut next = Vec::with_capacity(n);
        for mb in &members {
            let mut best = 0usize;
            let mut best_d = squared_distance(&mb.genome, &centroids[0..m]);
            for i in 1..k {
                let d = squared_distance(&mb.genome, &centroids[i * m..(i + 1) * m]);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            next.push(best);
        }
        repair_empty_assignment(&members, &mut next, k, &centroids, m);
        let stable = next == labels;
        labels = next;
        // recompute centroids exactly from the assignment
        let mut sums = vec![0u32; k * m];
        let mut sizes = vec![0usize; k];
        for (mb, &l) in members.iter().zip(&labels) {
            sizes[l] += 1;
            for j in 0..m {
                if mb.genome.get(j) {
                    sums[l * m + j] += 1;
                }
            }
        }
        for i in 0..k {
            for j in 0..m {
                centroids[i * m + j] = if sizes[i] > 0 {
                    sums[i * m + j] as f64 / sizes[i] as f64
                } else {
                    0.0
                };
            }
        }
        if stable {
            break;
        }
    }

    let mut pop = ClusteredPopulation {
        members,
        labels,
        counts: CountTable::new(k, m),
        fitness_sums: vec![0.0; k],
        centroids: vec![0.0; k * m],
    };
    for i in 0..pop.members.len() {
        let label = pop.labels[i];
        pop.counts.insert(&pop.members[i].genome, label);
        pop.fitness_sums[label] += pop.members[i].fitness;
    }
    for i in 0..k {
        pop.refresh_centroid(i);
    }
    Ok(pop)
}

fn repair_empty_assignment(
    members: &[Member],
    labels: &mut [usize],
    k: usize,
    centroids: &[f64],
    m: usize,
) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let Some(donor) = largest_cluster_with_two(&sizes) else {
            return;
        };
        let row = &centroids[donor * m..(donor + 1) * m];
        let mut far_idx = None;
        let mut far_d = -1.0;
        for (idx, mb) in members.iter().enumerate() {
            if labels[idx] == donor {
                let d = squared_distance(&mb.genome, row);
                if d > far_d {
                    far_d = d;
                    far_idx = Some(idx);
                }
            }
        }
        labels[far_idx.expect("donor cluster is non-empty")] = empty;
    }
}

fn largest_cluster_with_two(sizes: &[usize]) -> Option<usize> {
    let mut best = None;
    let mut best_size = 1usize;
    for (i, &s) in sizes.iter().enumerate() {
        if s > best_size {
            best_size = s;
            best = Some(i);
        }
    }
    best
}

impl ClusteredPopulation {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn k(&self) -> usize {
        self.counts.k()
    }

    pub fn genome_len(&self) -> usize {
        self.counts.m()
    }

    pub fn member(&self, index: usize) -> &Member {
        &self.members[index]
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    pub fn cluster_size(&self, cluster: usize) -> usize {
        self.counts.size(cluster)
    }

    /// Mean fitness per cluster.
    pub fn mean_fitness(&self) -> Vec<f64> {
        (0..self.k())
            .map(|i| {
                let s = self.counts.size(i);
                if s == 0 {
                    0.0
                } else {
                    self.fitness_sums[i] / s as f64
                }
            })
            .collect()
    }

    pub fn centroid(&self, cluster: usize) -> &[f64] {
        let m = self.genome_len();
        &self.centroids[cluster * m..(cluster + 1) * m]
    }

    /// Index of the worst individual; ties resolve to the lowest index.
    pub fn worst_index(&self) -> usize {
        let mut best = 0usize;
        for i in 1..self.members.len() {
            if self.members[i].fitness < self.members[best].fitness {
                best = i;
            }
        }
        best
    }

    pub fn best_fitness(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.fitness)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Label of the non-empty cluster whose centroid is nearest to `g`
    /// under squared Euclidean distance; ties resolve to the lowest label.
    pub fn nearest_centroid(&self, g: &Genome) -> usize {
        let m = self.genome_len();
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for i in 0..self.k() {
            if self.counts.size(i) == 0 {
                continue;
            }
            let d = squared_distance(g, &self.centroids[i * m..(i + 1) * m]);
            if d < best_d {
                best_d = d;
                best = Some(i);
            }
        }
        best.expect("population has at least one non-empty cluster")
    }

    /// Inserts a new individual: assign to the nearest centroid, update that
    /// centroid and the counts, then run one reassignment sweep over the
    /// affected cluster's members. Returns the label the individual ended
    /// up in.
    pub fn insert(&mut self, member: Member) -> usize {
        debug_assert_eq!(member.genome.len(), self.genome_len());
        let target = match (0..self.k()).find(|&i| self.counts.size(i) == 0) {
            // an unrepaired empty cluster (only possible when n < k+1)
            // takes the new individual directly
            Some(empty) => empty,
            None => self.nearest_centroid(&member.genome),
        };
        let idx = self.members.len();
        self.counts.insert(&member.genome, target);
        self.fitness_sums[target] += member.fitness;
        self.members.push(member);
        self.labels.push(target);
        self.refresh_centroid(target);

        // single k-means step: one local sweep over the modified cluster
        let snapshot: Vec<usize> = (0..=idx).filter(|&i| self.labels[i] == target).collect();
        for i in snapshot {
            if self.labels[i] != target {
                continue;
            }
            let best = self.nearest_centroid(&self.members[i].genome);
            if best != target {
                self.move_member(i, target, best);
            }
        }
        self.repair_empty_clusters();
        self.labels[idx]
    }

    /// Removes the individual at `index` (positions after it shift via
    /// swap-remove). The cluster's counts and centroid are updated by
    /// subtraction; an emptied cluster is repaired when a donor exists.
    pub fn remove(&mut self, index: usize) -> Member {
        let label = self.labels[index];
        let member = self.members.swap_remove(index);
        self.labels.swap_remove(index);
        self.counts.remove(&member.genome, label);
        self.fitness_sums[label] -= member.fitness;
        self.refresh_centroid(label);
        if self.counts.size(label) == 0 {
            self.repair_empty_clusters();
        }
        member
    }

    fn move_member(&mut self, index: usize, from: usize, to: usize) {
        debug_assert_eq!(self.labels[index], from);
        let genome = self.members[index].genome.clone();
        let fitness = self.members[index].fitness;
        self.counts.remove(&genome, from);
        self.counts.insert(&genome, to);
        self.fitness_sums[from] -= fitness;
        self.fitness_sums[to] += fitness;
        self.labels[index] = to;
        self.refresh_centroid(from);
        self.refresh_centroid(to);
    }

    /// Moves the member farthest from its centroid in the largest cluster
    /// into each empty cluster. Keeps k fixed so every PV stays defined.
    fn repair_empty_clusters(&mut self) {
        loop {
            let Some(empty) = (0..self.k()).find(|&i| self.counts.size(i) == 0) else {
                return;
            };
            let sizes: Vec<usize> = (0..self.k()).map(|i| self.counts.size(i)).collect();
            let Some(donor) = largest_cluster_with_two(&sizes) else {
                return;
            };
            let m = self.genome_len();
            let row = self.centroids[donor * m..(donor + 1) * m].to_vec();
            let mut far_idx = None;
            let mut far_d = -1.0;
            for i in 0..self.members.len() {
                if self.labels[i] == donor {
                    let d = squared_distance(&self.members[i].genome, &row);
                    if d > far_d {
                        far_d = d;
                        far_idx = Some(i);
                    }
                }
            }
            self.move_member(far_idx.expect("donor is non-empty"), donor, empty);
        }
    }

    fn refresh_centroid(&mut self, cluster: usize) {
        let m = self.genome_len();
        let size = self.counts.size(cluster);
        for j in 0..m {
            self.centroids[cluster * m + j] = if size > 0 {
                self.counts.ones(cluster, j) as f64 / size as f64
            } else {
                0.0
            };
        }
    }

    /// Checks every maintained aggregate against a batch recount from the
    /// raw membership. Used by the oracle suite.
    pub fn verify_consistency(&self) -> Result<(), String> {
        let k = self.k();
        let m = self.genome_len();
        let mut counts = CountTable::new(k, m);
        let mut sums = vec![0.0f64; k];
        for (mb, &l) in self.members.iter().zip(&self.labels) {
            if l >= k {
                return Err(format!("label {l} out of range"));
            }
            counts.insert(&mb.genome, l);
            sums[l] += mb.fitness;
        }
        if counts != self.counts {
            return Err("incremental counts differ from batch recount".into());
        }
        for i in 0..k {
            if (sums[i] - self.fitness_sums[i]).abs() > 1e-9 {
                return Err(format!(
                    "fitness sum drift in cluster {i}: {} vs {}",
                    self.fitness_sums[i], sums[i]
                ));
            }
            let size = counts.size(i);
            for j in 0..m {
                let expect = if size > 0 {
                    counts.ones(i, j) as f64 / size as f64
                } else {
                    0.0
                };
                if (self.centroids[i * m + j] - expect).abs() > 1e-9 {
                    return Err(format!("centroid drift at ({i}, {j})"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn member(bits: &str, fitness: f64) -> Member {
        Member {
            genome: Genome::from_bit_str(bits),
            fitness,
        }
    }

    #[test]
    fn identical_genome_groups_get_their_own_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut members = Vec::new();
        for bits in ["0000", "1111", "0011"] {
            for _ in 0..3 {
                members.push(member(bits, 1.0));
            }
        }
        let pop = initial_clustering(members, 3, &mut rng).unwrap();
        // each genome group ends up uniform in its own cluster
        for group in 0..3 {
            let labels: Vec<usize> = (0..3).map(|i| pop.label(group * 3 + i)).collect();
            assert!(labels.iter().all(|&l| l == labels[0]), "group {group} split");
        }
        let mut label_set: Vec<usize> = (0..9).map(|i| pop.label(i)).collect();
        label_set.sort_unstable();
        label_set.dedup();
        assert_eq!(label_set.len(), 3);
    }

    #[test]
    fn k_equal_to_population_gives_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let members = vec![
            member("000000", 1.0),
            member("111111", 2.0),
            member("000111", 3.0),
            member("110000", 4.0),
        ];
        let pop = initial_clustering(members, 4, &mut rng).unwrap();
        for i in 0..4 {
            assert_eq!(pop.cluster_size(i), 1);
        }
        pop.verify_consistency().unwrap();
    }

    #[test]
    fn separated_hamming_balls_are_split() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut members = Vec::new();
            for _ in 0..20 {
                // ball around all-zeros: at most one 1 in the low half
                let mut g = Genome::zeros(16);
                if rng.random_bool(0.5) {
                    g.set(rng.random_range(0..8), true);
                }
                members.push(Member { genome: g, fitness: 1.0 });
                // ball around all-ones
                let mut h = Genome::ones(16);
                if rng.random_bool(0.5) {
                    h.set(rng.random_range(0..8), false);
                }
                members.push(Member { genome: h, fitness: 1.0 });
            }
            let pop = initial_clustering(members, 2, &mut rng).unwrap();
            for i in 0..pop.len() {
                let expected = pop.member(i).genome.count_ones() > 8;
                let ones_label = pop.label(i);
                // all members of the same ball share a label
                for j in 0..pop.len() {
                    if (pop.member(j).genome.count_ones() > 8) == expected {
                        assert_eq!(pop.label(j), ones_label, "seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn too_few_individuals_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let members = vec![member("01", 1.0)];
        assert!(matches!(
            initial_clustering(members, 2, &mut rng),
            Err(ClusterError::TooFewIndividuals(1, 2))
        ));
    }

    #[test]
    fn nearest_centroid_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let members: Vec<Member> = (0..30)
            .map(|_| Member {
                genome: Genome::random(12, &mut rng),
                fitness: 1.0,
            })
            .collect();
        let pop = initial_clustering(members, 4, &mut rng).unwrap();
        for _ in 0..200 {
            let g = Genome::random(12, &mut rng);
            let fast = pop.nearest_centroid(&g);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for i in 0..4 {
                let d = squared_distance(&g, pop.centroid(i));
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            assert_eq!(fast, best);
        }
    }

    #[test]
    fn nearest_centroid_tie_takes_lowest_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // two singleton clusters at 00 and 11; 01 is equidistant
        let members = vec![member("00", 1.0), member("11", 1.0)];
        let pop = initial_clustering(members, 2, &mut rng).unwrap();
        let probe = Genome::from_bit_str("01");
        assert_eq!(pop.nearest_centroid(&probe), 0);
    }

    #[test]
    fn insert_then_remove_restores_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let members: Vec<Member> = (0..20)
            .map(|_| Member {
                genome: Genome::random(10, &mut rng),
                fitness: rng.random_range(0..50) as f64,
            })
            .collect();
        let mut pop = initial_clustering(members, 3, &mut rng).unwrap();
        let before = pop.counts().clone();
        let g = Genome::random(10, &mut rng);
        pop.insert(Member { genome: g, fitness: 7.0 });
        pop.remove(pop.len() - 1);
        // the sweep may shuffle labels, so compare by batch consistency and
        // population totals rather than exact table equality
        pop.verify_consistency().unwrap();
        assert_eq!(pop.counts().n(), before.n());
        for j in 0..10 {
            assert_eq!(pop.counts().total(j), before.total(j));
        }
    }

    #[test]
    fn insert_into_tight_cluster_changes_one_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut members = Vec::new();
        for _ in 0..5 {
            members.push(member("00000000", 1.0));
            members.push(member("11111111", 2.0));
        }
        let mut pop = initial_clustering(members, 2, &mut rng).unwrap();
        let sizes_before: Vec<usize> = (0..2).map(|i| pop.cluster_size(i)).collect();
        let label = pop.insert(member("00000000", 1.0));
        let zero_label = pop.label(0);
        assert_eq!(label, zero_label);
        assert_eq!(pop.cluster_size(zero_label), sizes_before[zero_label] + 1);
        assert_eq!(pop.cluster_size(1 - zero_label), sizes_before[1 - zero_label]);
        pop.verify_consistency().unwrap();
    }

    #[test]
    fn sweep_only_touches_the_affected_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut members = Vec::new();
        for _ in 0..8 {
            members.push(member("000000000000", 1.0));
            members.push(member("111111111111", 1.0));
            members.push(member("111111000000", 1.0));
        }
        let mut pop = initial_clustering(members, 3, &mut rng).unwrap();
        let labels_before = pop.labels().to_vec();
        let target = pop.nearest_centroid(&Genome::from_bit_str("000000000001"));
        pop.insert(member("000000000001", 1.0));
        for i in 0..labels_before.len() {
            if labels_before[i] != target {
                assert_eq!(pop.label(i), labels_before[i]);
            }
        }
    }

    #[test]
    fn removing_last_member_donates_farthest_from_largest() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // cluster of one distinct genome plus a large homogeneous cluster
        // with a single outlier
        let mut members = vec![member("1111111100", 1.0)];
        for _ in 0..6 {
            members.push(member("0000000000", 1.0));
        }
        members.push(member("0000000111", 1.0)); // outlier of the big cluster
        let mut pop = initial_clustering(members, 2, &mut rng).unwrap();
        pop.verify_consistency().unwrap();
        let lone_label = pop.label(0);
        assert_eq!(pop.cluster_size(lone_label), 1);
        pop.remove(0);
        // k stays fixed and no cluster is empty: the outlier moved over
        assert_eq!(pop.k(), 2);
        for i in 0..2 {
            assert!(pop.cluster_size(i) > 0);
        }
        let donated = (0..pop.len())
            .find(|&i| pop.label(i) == lone_label)
            .expect("repair refilled the cluster");
        assert_eq!(pop.member(donated).genome, Genome::from_bit_str("0000000111"));
        pop.verify_consistency().unwrap();
    }

    #[test]
    fn randomized_operations_match_batch_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let members: Vec<Member> = (0..40)
            .map(|_| Member {
                genome: Genome::random(16, &mut rng),
                fitness: rng.random_range(0..100) as f64,
            })
            .collect();
        let mut pop = initial_clustering(members, 4, &mut rng).unwrap();
        for step in 0..2000 {
            if pop.len() > 8 && rng.random_bool(0.5) {
                let idx = rng.random_range(0..pop.len());
                pop.remove(idx);
            } else {
                pop.insert(Member {
                    genome: Genome::random(16, &mut rng),
                    fitness: rng.random_range(0..100) as f64,
                });
            }
            if step % 50 == 0 {
                pop.verify_consistency().unwrap();
            }
        }
        pop.verify_consistency().unwrap();
    }

    #[test]
    fn identical_seeds_give_identical_clusterings() {
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let members: Vec<Member> = (0..30)
                .map(|_| Member {
                    genome: Genome::random(12, &mut rng),
                    fitness: rng.random_range(0..40) as f64,
                })
                .collect();
            let mut pop = initial_clustering(members, 3, &mut rng).unwrap();
            for _ in 0..100 {
                pop.insert(Member {
                    genome: Genome::random(12, &mut rng),
                    fitness: rng.random_range(0..40) as f64,
                });
                pop.remove(rng.random_range(0..pop.len()));
            }
            pop
        };
        let a = build();
        let b = build();
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.counts(), b.counts());
    }
}
