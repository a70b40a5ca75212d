//! A linkage-learning estimation-of-distribution optimizer built from
//! order-2 statistics: the working population is clustered by genotype,
//! each cluster carries a probability vector of binomial proportions, and
//! recombination assembles temporary PVs gene by gene from the cluster
//! whose removal most reduces that gene's population entropy.
//!
//! The crate ships the optimizer ([`engine`]), the benchmark problems it is
//! evaluated on ([`problems`]), and an experiment harness with replication
//! batches, parameter sweeps and brute-force oracle validation
//! ([`harness`]).

pub mod clustering;
pub mod combine;
pub mod engine;
pub mod genome;
pub mod model;
pub mod problems;
pub mod harness;

pub use engine::{EngineConfig, OperatorKind, RunResult};
pub use genome::Genome;
pub use problems::ProblemInstance;
