use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::completion::PgdHyper;
use crate::error::{Error, Result};
use crate::reweight::{Backend, ReweightConfig};
use crate::semirandom::{AdversaryStrategy, CoherenceProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GroundTruthSource {
    Generate { n1: usize, n2: usize, rank: usize, spectrum: Vec<f64>, profile: CoherenceProfile, seed: u64 },
    /// `<stem>_u.csv`, `<stem>_v.csv`, `<stem>.json` in `dir`.
    File { dir: PathBuf, stem: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ObservationModel {
    /// Uniform sampling at rate p followed by the adversary.
    Uniform { p: f64, seed: u64, adversary: AdversaryStrategy },
    /// Reveal probabilities p·W for the rank-1 counter-example weights W (square grids only).
    Rank1Pattern { p: f64, beta: f64, seed: u64 },
    /// Previously saved observation CSV. `p` is the base rate used for unweighted solves.
    File { path: PathBuf, p: f64 },
}

impl ObservationModel {
    pub fn base_rate(&self) -> f64 {
        match self {
            ObservationModel::Uniform { p, .. }
            | ObservationModel::Rank1Pattern { p, .. }
            | ObservationModel::File { p, .. } => *p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub ground_truth: GroundTruthSource,
    pub observations: ObservationModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoBeta {
    Auto,
}

/// A fixed β, or `"auto"` for the doubling search over `[beta_min, beta_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaChoice {
    Fixed(f64),
    Auto(AutoBeta),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReweightStage {
    pub enabled: bool,
    pub beta: BetaChoice,
    pub eps: f64,
    pub backend: Backend,
    pub seed: u64,
    pub sdp_iters: usize,
    pub max_iters: Option<usize>,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for ReweightStage {
    fn default() -> Self {
        Self {
            enabled: true,
            beta: BetaChoice::Fixed(0.1),
            eps: 0.1,
            backend: Backend::Exact,
            seed: 0,
            sdp_iters: 200,
            max_iters: None,
            beta_min: 0.0125,
            beta_max: 0.1,
        }
    }
}

impl ReweightStage {
    /// Reweight config for a given β.
    pub fn to_config(&self, beta: f64) -> Result<ReweightConfig> {
        let mut cfg = ReweightConfig::new(beta, self.eps)?.with_backend(self.backend).with_seed(self.seed);
        cfg.sdp_iters = self.sdp_iters;
        cfg.max_iters = self.max_iters;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitConfig {
    /// Top-r SVD of the weighted observed matrix.
    Svd,
    /// Entries scale·N(0,1).
    Random { scale: f64, seed: u64 },
    /// U = V = u of the rank-1 counter-example with the given β.
    Rank1BadPoint { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverStage {
    /// Factor rank; the ground-truth rank when unset.
    pub rank: Option<usize>,
    /// Regularizer constant C; no regularizer when unset.
    pub c: Option<f64>,
    pub init: InitConfig,
    pub hyper: PgdHyper,
}

impl Default for SolverStage {
    fn default() -> Self {
        Self { rank: None, c: None, init: InitConfig::Svd, hyper: PgdHyper::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub reweight: ReweightStage,
    #[serde(default)]
    pub solver: SolverStage,
    /// Root for run directories. Falls back to `$SRMC_OUTPUT_ROOT`, then `./srmc-runs`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

pub const OUTPUT_ROOT_ENV: &str = "SRMC_OUTPUT_ROOT";

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("pipeline config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::arg(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("srmc-runs"))
    }

    /// Checks that do not need any computation: referenced files exist, rates and ranks
    /// are in range.
    pub fn validate(&self) -> Result<()> {
        match &self.instance.ground_truth {
            GroundTruthSource::Generate { n1, n2, rank, spectrum, .. } => {
                if *rank == 0 || *rank > (*n1).min(*n2) || spectrum.len() != *rank {
                    return Err(Error::arg("ground truth rank and spectrum disagree with the shape"));
                }
            }
            GroundTruthSource::File { dir, stem } => {
                for suffix in ["_u.csv", "_v.csv", ".json"] {
                    let f = dir.join(format!("{stem}{suffix}"));
                    if !f.is_file() {
                        return Err(Error::arg(format!("ground-truth file {} does not exist", f.display())));
                    }
                }
            }
        }
        let p = self.instance.observations.base_rate();
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::arg(format!("observation rate {p} outside (0,1]")));
        }
        if let ObservationModel::File { path, .. } = &self.instance.observations {
            if !path.is_file() {
                return Err(Error::arg(format!("observation file {} does not exist", path.display())));
            }
        }
        if self.reweight.enabled {
            let beta = match self.reweight.beta {
                BetaChoice::Fixed(b) => b,
                BetaChoice::Auto(_) => {
                    let (lo, hi) = (self.reweight.beta_min, self.reweight.beta_max);
                    if !(lo > 0.0 && lo <= hi && hi <= 0.1) {
                        return Err(Error::arg(format!("beta range [{lo}, {hi}] must lie in (0, 0.1]")));
                    }
                    hi
                }
            };
            self.reweight.to_config(beta)?;
        }
        if let Some(c) = self.solver.c {
            if !(c > 0.0) {
                return Err(Error::arg("regularizer constant must be positive"));
            }
        }
        if let InitConfig::Random { scale, .. } = self.solver.init {
            if !(scale > 0.0) {
                return Err(Error::arg("random init scale must be positive"));
            }
        }
        Ok(())
    }

    /// Hash of the experiment, excluding where its output goes.
    pub fn content_hash(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    /// Same experiment with every seed shifted by `k`.
    pub fn with_seed_offset(&self, k: u64) -> Self {
        let mut c = self.clone();
        if let GroundTruthSource::Generate { seed, .. } = &mut c.instance.ground_truth {
            *seed += k;
        }
        match &mut c.instance.observations {
            ObservationModel::Uniform { seed, adversary, .. } => {
                *seed += k;
                adversary.seed += k;
            }
            ObservationModel::Rank1Pattern { seed, .. } => *seed += k,
            ObservationModel::File { .. } => {}
        }
        c.reweight.seed += k;
        c.solver.hyper.seed += k;
        if let InitConfig::Random { seed, .. } = &mut c.solver.init {
            *seed += k;
        }
        c
    }

    /// Applies `path=value` overrides, where `path` is a dotted path to an existing field
    /// and `value` is JSON (bare words are taken as strings).
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            let (path, raw) =
                o.split_once('=').ok_or_else(|| Error::arg(format!("override {o:?} is not path=value")))?;
            set_leaf(&mut v, path, raw)?;
        }
        serde_json::from_value(v).map_err(|e| Error::arg(format!("overrides produce an invalid config: {e}")))
    }
}

fn set_leaf(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get_mut(key),
            Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::arg(format!("no config field {path:?}")))?;
    }
    *cur = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}
