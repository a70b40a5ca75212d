//! Problem registry keyed by instance names.
//!
//! Function problems (`twomax`, `trapfive`, `overfive`, `shuff-hiff`,
//! `hiff`) take a size; the graph bisection instances are fixed. The
//! shuffled HIFF permutation is drawn once per instantiation from the
//! caller's RNG so that runs are exactly reproducible from their seed.

use super::{
    make_caterpillar_graph, make_rect_grid_graph, GraphInstance, ProblemError, ProblemInstance,
    ShufflePermutation,
};
use rand::Rng;
use std::sync::Arc;

const NAMES: &[&str] = &[
    "twomax",
    "trapfive",
    "overfive",
    "shuff-hiff",
    "hiff",
    "Pgrid16",
    "Pgrid36",
    "Pgrid64",
    "Pcat28",
    "Pcat42",
    "Pcat56",
    "Pcatring28",
    "Pcatring42",
    "Pcatring56",
    "Pcatring84",
];

pub fn problem_names() -> &'static [&'static str] {
    NAMES
}

struct GraphSpec {
    name: &'static str,
    build: fn() -> Result<GraphInstance, ProblemError>,
    // optimum = node count minus the minimum balanced cut; peak counts are
    // the distinct optimal genomes, verified by enumeration where m <= 28
    optimum_fitness: f64,
    known_peak_count: usize,
}

// Grid instances are rectangles with a single balanced minimum cut (the
// straight middle cut), giving exactly two optimal genomes each. Ring
// caterpillars use group sizes that yield the published peak counts.
const GRAPHS: &[GraphSpec] = &[
    GraphSpec {
        name: "Pgrid16",
        build: || make_rect_grid_graph(8, 2),
        optimum_fitness: 14.0,
        known_peak_count: 2,
    },
    GraphSpec {
        name: "Pgrid36",
        build: || make_rect_grid_graph(12, 3),
        optimum_fitness: 33.0,
        known_peak_count: 2,
    },
    GraphSpec {
        name: "Pgrid64",
        build: || make_rect_grid_graph(16, 4),
        optimum_fitness: 60.0,
        known_peak_count: 2,
    },
    GraphSpec {
        name: "Pcat28",
        build: || make_caterpillar_graph(4, 7, false),
        optimum_fitness: 27.0,
        known_peak_count: 2,
    },
    GraphSpec {
        name: "Pcat42",
        build: || make_caterpillar_graph(6, 7, false),
        optimum_fitness: 41.0,
        known_peak_count: 2,
    },
    GraphSpec {
        name: "Pcat56",
        build: || make_caterpillar_graph(8, 7, false),
        optimum_fitness: 55.0,
        known_peak_count: 2,
    },
    GraphSpec {
        name: "Pcatring28",
        build: || make_caterpillar_graph(4, 7, true),
        optimum_fitness: 26.0,
        known_peak_count: 4,
    },
    GraphSpec {
        name: "Pcatring42",
        build: || make_caterpillar_graph(6, 7, true),
        optimum_fitness: 40.0,
        known_peak_count: 6,
    },
    GraphSpec {
        name: "Pcatring56",
        build: || make_caterpillar_graph(4, 14, true),
        optimum_fitness: 54.0,
        known_peak_count: 4,
    },
    GraphSpec {
        name: "Pcatring84",
        build: || make_caterpillar_graph(6, 14, true),
        optimum_fitness: 82.0,
        known_peak_count: 6,
    },
];

/// Builds the named problem. `size` is required for the function problems
/// and rejected for the fixed graph instances.
pub fn instantiate<R: Rng + ?Sized>(
    name: &str,
    size: Option<usize>,
    rng: &mut R,
) -> Result<ProblemInstance, ProblemError> {
    let need_size = |size: Option<usize>| {
        size.ok_or_else(|| ProblemError::MissingSize(name.to_string()))
    };
    match name {
        "twomax" => ProblemInstance::twomax(need_size(size)?),
        "trapfive" => ProblemInstance::trap_five(need_size(size)?),
        "overfive" => ProblemInstance::over_five(need_size(size)?),
        "hiff" => ProblemInstance::hiff(need_size(size)?, None),
        "shuff-hiff" => {
            let m = need_size(size)?;
            if !m.is_power_of_two() {
                return Err(ProblemError::Config(format!(
                    "HIFF length {m} must be a power of two"
                )));
            }
            ProblemInstance::hiff(m, Some(ShufflePermutation::random(m, rng)))
        }
        _ => {
            let spec = GRAPHS
                .iter()
                .find(|s| s.name == name)
                .ok_or_else(|| ProblemError::UnknownProblem(name.to_string()))?;
            if let Some(s) = size {
                let g = (spec.build)()?;
                if s != g.node_count() {
                    return Err(ProblemError::Config(format!(
                        "{name} has a fixed size of {}, got --size {s}",
                        g.node_count()
                    )));
                }
                return Ok(ProblemInstance::bisection(
                    spec.name,
                    Arc::new(g),
                    spec.optimum_fitness,
                    spec.known_peak_count,
                ));
            }
            Ok(ProblemInstance::bisection(
                spec.name,
                Arc::new((spec.build)()?),
                spec.optimum_fitness,
                spec.known_peak_count,
            ))
        }
    }
}
