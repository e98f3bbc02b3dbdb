use log::{debug, info, warn};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::config::{Backend, ReweightConfig};
use super::exact::ExactSnapshot;
use super::fast::FastSnapshot;
use super::problem::BarrierProblem;
use super::sdp::{solve_packing_sdp, SdpSolution};
use crate::error::{Error, Result};
use crate::spectral::EdgeList;

/// Relative slack allowed on the potential between accepted steps.
pub const POTENTIAL_SLACK: f64 = 1e-9;

/// Starting barriers.
pub const INITIAL_U: f64 = 0.25;
pub const INITIAL_L: f64 = -0.25;

/// Quantities a backend provides at fixed (w, u, ℓ).
pub(crate) trait Snapshot {
    /// ρ, at the low end of the backend's uncertainty interval.
    fn rho(&self) -> Result<f64>;
    fn scores(&self) -> Result<(Vec<f64>, Vec<f64>)>;
    /// (tr C₊, tr C₋)
    fn traces(&self) -> Result<(f64, f64)>;
    fn potential(&self) -> Result<f64>;
}

impl Snapshot for ExactSnapshot {
    fn rho(&self) -> Result<f64> {
        Ok(ExactSnapshot::rho(self))
    }

    fn scores(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(ExactSnapshot::scores(self))
    }

    fn traces(&self) -> Result<(f64, f64)> {
        Ok(ExactSnapshot::traces(self))
    }

    fn potential(&self) -> Result<f64> {
        Ok(ExactSnapshot::potential(self))
    }
}

pub(crate) fn snapshot<'a>(
    problem: &'a BarrierProblem,
    w: &[f64],
    u: f64,
    l: f64,
    cfg: &ReweightConfig,
) -> Result<Box<dyn Snapshot + 'a>> {
    Ok(match cfg.backend {
        Backend::Exact => Box::new(ExactSnapshot::new(problem, w, u, l)?),
        Backend::Fast => Box::new(FastSnapshot::new(problem, w, u, l, cfg)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierState {
    pub weights: Vec<f64>,
    pub u: f64,
    pub l: f64,
    pub iteration: usize,
    /// ρ used by the step being prepared.
    pub rho: Option<f64>,
    pub delta_u: f64,
    pub delta_l: f64,
    pub phi: f64,
}

impl BarrierState {
    /// A = 0, u = 1/4, ℓ = −1/4.
    pub fn initial(problem: &BarrierProblem, cfg: &ReweightConfig) -> Result<Self> {
        let weights = vec![0.0; problem.edges().len()];
        let phi = snapshot(problem, &weights, INITIAL_U, INITIAL_L, cfg)?.potential()?;
        Ok(Self { weights, u: INITIAL_U, l: INITIAL_L, iteration: 0, rho: None, delta_u: 0.0, delta_l: 0.0, phi })
    }
}

pub fn compute_rho(problem: &BarrierProblem, state: &BarrierState, cfg: &ReweightConfig) -> Result<f64> {
    snapshot(problem, &state.weights, state.u, state.l, cfg)?.rho()
}

pub fn edge_scores(problem: &BarrierProblem, state: &BarrierState, cfg: &ReweightConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    snapshot(problem, &state.weights, state.u, state.l, cfg)?.scores()
}

/// Adds `x` to the weights and advances the barriers by (δ_u, δ_ℓ) computed from
/// `state.rho`. Rejects the step if the potential grows by more than the slack.
pub fn barrier_step(problem: &BarrierProblem, state: &BarrierState, x: &[f64], cfg: &ReweightConfig) -> Result<BarrierState> {
    let rho = state.rho.ok_or_else(|| Error::State("ρ not computed for this step".into()))?;
    if x.len() != state.weights.len() || x.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::arg("increment must be nonnegative with one entry per edge"));
    }
    let (du, dl) = cfg.barrier_steps(rho);
    let weights: Vec<f64> = state.weights.iter().zip(x).map(|(w, d)| w + d).collect();
    let (u, l) = (state.u + du, state.l + dl);
    let phi = snapshot(problem, &weights, u, l, cfg)?.potential()?;
    if phi > state.phi * (1.0 + POTENTIAL_SLACK) {
        return Err(Error::State(format!(
            "potential increased from {:e} to {phi:e} at iteration {}",
            state.phi, state.iteration
        )));
    }
    Ok(BarrierState { weights, u, l, iteration: state.iteration + 1, rho: None, delta_u: du, delta_l: dl, phi })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub u: f64,
    pub l: f64,
    pub rho: f64,
    /// Potential after the step.
    pub phi: f64,
    pub delta_u: f64,
    pub delta_l: f64,
    pub sdp_objective: f64,
    pub sdp_target: f64,
    pub sdp_iterations: usize,
    /// Set when the step was retried with ρ halved.
    pub retried: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: ReweightConfig,
    pub n1: usize,
    pub n2: usize,
    pub edges: usize,
    pub iteration_cap: usize,
    pub initial_phi: f64,
    pub records: Vec<IterationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReweightOutcome {
    /// Final weights divided by u_final.
    pub weights: Vec<f64>,
    pub u_final: f64,
    pub l_final: f64,
    pub iterations: usize,
    pub log: RunLog,
}

impl ReweightOutcome {
    /// Guaranteed lower end of the normalized spectrum.
    pub fn lower_ratio(&self) -> f64 {
        self.l_final / self.u_final
    }
}

fn solve_step(problem: &BarrierProblem, state: &BarrierState, rho: f64, cfg: &ReweightConfig) -> Result<(BarrierState, SdpSolution)> {
    let snap = snapshot(problem, &state.weights, state.u, state.l, cfg)?;
    let (cp, cm) = snap.scores()?;
    let (trp, trm) = snap.traces()?;
    let (b, e) = (cfg.beta, cfg.eps);
    let cap = e * rho;
    let target = cap / 2.0 * ((1.0 - b - e) * trp - (1.0 + b + e) * trm);
    let sol = solve_packing_sdp(problem, &cp, &cm, cap, target, cfg)?;
    let mut prepared = state.clone();
    prepared.rho = Some(rho);
    let next = barrier_step(problem, &prepared, &sol.x, cfg)?;
    Ok((next, sol))
}

/// One iteration: ρ, scores, packing SDP, barrier update. A rejected step is retried once
/// with the packing cap halved.
pub fn advance(problem: &BarrierProblem, state: &BarrierState, cfg: &ReweightConfig) -> Result<(BarrierState, IterationRecord)> {
    let rho = compute_rho(problem, state, cfg)?;
    let (next, sol, retried) = match solve_step(problem, state, rho, cfg) {
        Ok((n, s)) => (n, s, false),
        Err(Error::State(msg)) if msg.starts_with("potential") => {
            warn!("{msg}; retrying with half the packing cap");
            let (n, s) = solve_step(problem, state, rho / 2.0, cfg)?;
            (n, s, true)
        }
        Err(e) => return Err(e),
    };
    debug!(
        "iteration {}: u={:.6} l={:.6} rho={:.3e} phi={:.6e} obj={:.3e}",
        state.iteration, next.u, next.l, rho, next.phi, sol.objective
    );
    let record = IterationRecord {
        iteration: state.iteration,
        u: next.u,
        l: next.l,
        rho: if retried { rho / 2.0 } else { rho },
        phi: next.phi,
        delta_u: next.delta_u,
        delta_l: next.delta_l,
        sdp_objective: sol.objective,
        sdp_target: sol.target,
        sdp_iterations: sol.iterations,
        retried,
    };
    Ok((next, record))
}

/// Barrier-method reweighting. Runs while u − ℓ ≤ 1 and returns weights / u_final.
pub fn reweight(edges: &EdgeList, cfg: &ReweightConfig) -> Result<ReweightOutcome> {
    cfg.validate()?;
    let problem = BarrierProblem::new(edges.clone())?;
    reweight_problem(&problem, cfg)
}

pub fn reweight_problem(problem: &BarrierProblem, cfg: &ReweightConfig) -> Result<ReweightOutcome> {
    let cap = cfg.iteration_cap(problem.n_vertices());
    let mut state = BarrierState::initial(problem, cfg)?;
    let mut log = RunLog {
        config: cfg.clone(),
        n1: problem.edges().n1(),
        n2: problem.edges().n2(),
        edges: problem.edges().len(),
        iteration_cap: cap,
        initial_phi: state.phi,
        records: Vec::new(),
    };
    while state.u - state.l <= 1.0 {
        if state.iteration >= cap {
            return Err(Error::IterationCap { iterations: state.iteration, u: state.u, l: state.l });
        }
        let (next, record) = advance(problem, &state, cfg)?;
        log.records.push(record);
        state = next;
    }
    info!("reweighting finished after {} iterations (u={}, l={})", state.iteration, state.u, state.l);
    let weights = state.weights.iter().map(|w| w / state.u).collect();
    Ok(ReweightOutcome { weights, u_final: state.u, l_final: state.l, iterations: state.iteration, log })
}

/// (λ_min, λ_max) of L_G^{+/2} L̃ L_G^{+/2} on range(L_G), by dense eigendecomposition.
pub fn normalized_spectrum(problem: &BarrierProblem, w: &[f64]) -> (f64, f64) {
    let eig = SymmetricEigen::new(problem.operator(w));
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Smallest β on the geometric grid β_min·2^k (capped at β_max) for which reweighting
/// succeeds, with that run's outcome.
pub fn estimate_beta(edges: &EdgeList, eps: f64, cfg: &ReweightConfig, beta_min: f64, beta_max: f64) -> Result<(f64, ReweightOutcome)> {
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max <= 0.1) {
        return Err(Error::arg(format!("grid [{beta_min}, {beta_max}] must lie in (0, 0.1]")));
    }
    let problem = BarrierProblem::new(edges.clone())?;
    let mut tried = Vec::new();
    let mut beta = beta_min;
    loop {
        let mut c = cfg.clone();
        c.beta = beta;
        c.eps = eps;
        c.validate()?;
        match reweight_problem(&problem, &c) {
            Ok(out) => return Ok((beta, out)),
            Err(e) if !e.is_argument() => {
                info!("beta = {beta}: {e}");
                tried.push(beta);
            }
            Err(e) => return Err(e),
        }
        if beta >= beta_max {
            break;
        }
        beta = (beta * 2.0).min(beta_max);
    }
    Err(Error::Failure(format!("reweighting failed for every beta in {tried:?}")))
}
