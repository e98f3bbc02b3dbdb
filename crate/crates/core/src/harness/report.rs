use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reweight::Backend;

pub const SCHEMA_VERSION: u32 = 1;

/// A metric group that is either measured or explicitly skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Metric<T> {
    Measured { value: T },
    Skipped { reason: String },
}

impl<T> Metric<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Metric::Skipped { reason: reason.into() }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Metric::Measured { value } => Some(value),
            Metric::Skipped { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Observe,
    Corrupt,
    Reweight,
    Solve,
    Evaluate,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Observe => "observe",
            Stage::Corrupt => "corrupt",
            Stage::Reweight => "reweight",
            Stage::Solve => "solve",
            Stage::Evaluate => "evaluate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub mu: f64,
    pub kappa: f64,
    pub observed: usize,
    pub random: usize,
    pub adversarial: usize,
    /// Whether the random observations alone form a connected bipartite graph.
    pub random_connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReweightMetrics {
    pub beta: f64,
    pub eps: f64,
    pub backend: Backend,
    pub iterations: usize,
    pub iteration_cap: usize,
    pub u_final: f64,
    pub l_final: f64,
    /// λ_min and λ_max of the normalized operator.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub deviation_norm: f64,
    pub normalized_deviation: f64,
    pub max_row_sum: f64,
    pub max_col_sum: f64,
    /// Share of total weight on adversarial entries; diagnostic only.
    pub adversarial_weight_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMetrics {
    pub rank: usize,
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub grad_tol: f64,
    pub converged: bool,
    pub perturbations: usize,
    /// ‖UVᵀ − M*‖²_F / ‖M*‖²_F
    pub recovery_error: f64,
    pub initial_error: f64,
}

/// One numeric check. `margin` is signed slack: nonnegative when the check passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl LemmaCheck {
    pub fn from_margin(name: &str, margin: f64, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed: margin >= 0.0, margin, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaSection {
    pub checks: Vec<LemmaCheck>,
    /// Checks that could not run for this artifact set, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl LemmaSection {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config_hash: String,
    pub failure: Option<StageFailure>,
    pub timings: Vec<StageTiming>,
    pub instance: Metric<InstanceMetrics>,
    pub reweight: Metric<ReweightMetrics>,
    pub solver: Metric<SolverMetrics>,
    pub lemma_checks: Metric<LemmaSection>,
}

impl Report {
    pub fn new(config_hash: String) -> Self {
        let pending = || "stage not reached".to_string();
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash,
            failure: None,
            timings: Vec::new(),
            instance: Metric::Skipped { reason: pending() },
            reweight: Metric::Skipped { reason: pending() },
            solver: Metric::Skipped { reason: pending() },
            lemma_checks: Metric::Skipped { reason: pending() },
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for t in &mut r.timings {
            t.seconds = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
