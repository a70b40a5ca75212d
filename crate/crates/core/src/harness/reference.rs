//! Bundled reference results and experiment presets, loaded from the data
//! file shipped with the crate. Comparisons always read from here; nothing
//! in the logic hard-codes a published number.

use crate::engine::{EngineConfig, OperatorKind};
use serde::Deserialize;
use std::sync::LazyLock;

const REFERENCE_JSON: &str = include_str!("../../data/reference_tables.json");

#[derive(Clone, Debug, Deserialize)]
pub struct ReferenceRow {
    pub id: String,
    pub problem: String,
    #[serde(default)]
    pub size: Option<usize>,
    pub algorithm: String,
    #[serde(default)]
    pub operator: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub peaks: Option<usize>,
    #[serde(default)]
    pub success_fraction: Option<f64>,
    #[serde(default)]
    pub mean_optima: Option<f64>,
    #[serde(default)]
    pub sd_optima: Option<f64>,
    #[serde(default)]
    pub mean_evals: Option<f64>,
    #[serde(default)]
    pub sd_evals: Option<f64>,
}

/// A named experiment configuration: problem binding plus engine sizing.
#[derive(Clone, Debug, Deserialize)]
pub struct Preset {
    pub id: String,
    pub problem: String,
    #[serde(default)]
    pub size: Option<usize>,
    pub n0: usize,
    pub nw: usize,
    pub k: usize,
    pub p_c: f64,
    pub p_old: f64,
    pub p_w: f64,
    pub max_evals: u64,
}

impl Preset {
    /// Expands the preset into an engine configuration with the given seed
    /// and operator.
    pub fn config(&self, seed: u64, operator: OperatorKind) -> EngineConfig {
        EngineConfig {
            n0: self.n0,
            nw: self.nw,
            k: self.k,
            p_c: self.p_c,
            p_old: self.p_old,
            p_w: self.p_w,
            max_evals: self.max_evals,
            seed,
            operator,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ReferenceFile {
    #[allow(dead_code)]
    description: String,
    rows: Vec<ReferenceRow>,
    presets: Vec<Preset>,
}

static TABLE: LazyLock<ReferenceFile> = LazyLock::new(|| {
    serde_json::from_str(REFERENCE_JSON).expect("bundled reference table parses")
});

pub fn reference_rows() -> &'static [ReferenceRow] {
    &TABLE.rows
}

pub fn find_reference(id: &str) -> Option<&'static ReferenceRow> {
    TABLE.rows.iter().find(|r| r.id == id)
}

pub fn presets() -> &'static [Preset] {
    &TABLE.presets
}

pub fn find_preset(id: &str) -> Option<&'static Preset> {
    TABLE.presets.iter().find(|p| p.id == id)
}
