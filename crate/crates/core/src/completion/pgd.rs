use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::objective::{AsymmetricObjective, Factorization, SmoothObjective, WeightedEntries};
use super::regularizer::RegularizerParams;
use crate::error::{Error, Result};
use crate::spectral::spectral_norm;

/// Hyperparameters of perturbed gradient descent. `None` fields are derived from σ̂₁, the
/// top singular value of the weighted observed matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgdHyper {
    /// Default 1/(8σ̂₁). Halved whenever a step would increase the objective.
    pub step: Option<f64>,
    pub max_iters: usize,
    /// Default 1e-7·σ̂₁^{3/2}.
    pub grad_tol: Option<f64>,
    /// Default 10·grad_tol·step.
    pub perturb_radius: Option<f64>,
    /// Steps to run after a perturbation before judging whether it escaped.
    pub escape_steps: usize,
    /// Objective decrease that counts as an escape. Default 10·(tol·r + r²/step).
    pub escape_decrease: Option<f64>,
    pub seed: u64,
    pub trace_every: usize,
}

impl Default for PgdHyper {
    fn default() -> Self {
        Self {
            step: None,
            max_iters: 100_000,
            grad_tol: None,
            perturb_radius: None,
            escape_steps: 1000,
            escape_decrease: None,
            seed: 0,
            trace_every: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub max_row_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgdOutcome {
    #[serde(skip)]
    pub z: DMatrix<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub grad_tol: f64,
    /// Gradient below tolerance and the last perturbation did not escape.
    pub converged: bool,
    pub perturbations: usize,
    pub final_step: f64,
    pub trace: Vec<TraceRow>,
}

/// ‖W∗M‖₂ of the observed data.
pub fn estimate_sigma1(data: &WeightedEntries) -> f64 {
    spectral_norm(&data.weighted_dense())
}

fn max_row_norm(z: &DMatrix<f64>) -> f64 {
    (0..z.nrows()).map(|i| z.row(i).norm()).fold(0.0, f64::max)
}

fn ball_sample(shape: (usize, usize), radius: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut d = DMatrix::from_fn(shape.0, shape.1, |_, _| StandardNormal.sample(rng));
    let dim = (shape.0 * shape.1) as f64;
    let u: f64 = Uniform::new(0.0, 1.0).expect("valid range").sample(rng);
    let n = d.norm();
    if n > 0.0 {
        d *= radius * u.powf(1.0 / dim) / n;
    }
    d
}

/// Perturbed gradient descent. When the gradient falls below tolerance the iterate is
/// saved and perturbed; if the following `escape_steps` iterations do not lower the
/// objective by `escape_decrease`, the saved point is returned as a local minimum.
pub fn pgd(obj: &dyn SmoothObjective, z0: &DMatrix<f64>, hyper: &PgdHyper, sigma1: f64) -> Result<PgdOutcome> {
    if z0.shape() != obj.shape() {
        return Err(Error::arg(format!("initial point has shape {:?}, expected {:?}", z0.shape(), obj.shape())));
    }
    if !(sigma1 > 0.0) {
        return Err(Error::arg("σ̂₁ must be positive"));
    }
    let mut step = hyper.step.unwrap_or(1.0 / (8.0 * sigma1));
    let tol = hyper.grad_tol.unwrap_or(1e-7 * sigma1.powf(1.5));
    let radius = hyper.perturb_radius.unwrap_or(10.0 * tol * step);
    let escape = hyper.escape_decrease.unwrap_or(10.0 * (tol * radius + radius * radius / step));
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);

    let mut z = z0.clone();
    let mut f = obj.value(&z);
    let mut g = obj.gradient(&z);
    let f_ref = 10.0 * (f.abs() + escape);
    let mut trace = Vec::new();
    let mut perturbations = 0;
    // (saved point, its value, its gradient norm, iteration of perturbation)
    let mut saved: Option<(DMatrix<f64>, f64, f64, usize)> = None;
    let every = hyper.trace_every.max(1);

    let mut it = 0;
    while it < hyper.max_iters {
        let gn = g.norm();
        if it % every == 0 {
            trace.push(TraceRow { iteration: it, objective: f, grad_norm: gn, max_row_norm: max_row_norm(&z) });
        }
        if let Some((zs, fs, gs, at)) = &saved {
            if it - at >= hyper.escape_steps {
                if fs - f < escape {
                    let outcome = PgdOutcome {
                        z: zs.clone(),
                        iterations: it,
                        objective: *fs,
                        grad_norm: *gs,
                        grad_tol: tol,
                        converged: true,
                        perturbations,
                        final_step: step,
                        trace,
                    };
                    return Ok(outcome);
                }
                saved = None;
            }
        }
        if gn <= tol && saved.is_none() {
            saved = Some((z.clone(), f, gn, it));
            perturbations += 1;
            z += ball_sample(z.shape(), radius, &mut rng);
            f = obj.value(&z);
            g = obj.gradient(&z);
        }
        // gradient step, halving on increase
        loop {
            let cand = &z - &g * step;
            let fc = obj.value(&cand);
            if !fc.is_finite() {
                return Err(Error::Failure(format!("objective became non-finite at iteration {it}")));
            }
            if fc <= f + 1e-14 * f.abs().max(1e-300) {
                z = cand;
                f = fc;
                break;
            }
            step *= 0.5;
            if step < 1e-14 / sigma1 {
                return Err(Error::Failure(format!("step size collapsed at iteration {it} (objective {f:e})")));
            }
        }
        if f > f_ref {
            return Err(Error::Failure(format!(
                "diverged at iteration {it}: objective {f:e} above 10x reference {:e}",
                f_ref / 10.0
            )));
        }
        g = obj.gradient(&z);
        it += 1;
    }
    let gn = g.norm();
    trace.push(TraceRow { iteration: it, objective: f, grad_norm: gn, max_row_norm: max_row_norm(&z) });
    // a pending perturbation that never resolved: fall back to the saved point if better
    if let Some((zs, fs, gs, _)) = saved {
        if fs <= f {
            return Ok(PgdOutcome {
                z: zs,
                iterations: it,
                objective: fs,
                grad_norm: gs,
                grad_tol: tol,
                converged: true,
                perturbations,
                final_step: step,
                trace,
            });
        }
    }
    Ok(PgdOutcome {
        z,
        iterations: it,
        objective: f,
        grad_norm: gn,
        grad_tol: tol,
        converged: gn <= tol,
        perturbations,
        final_step: step,
        trace,
    })
}

/// PGD on the asymmetric objective from `init`.
pub fn solve_pgd(
    init: &Factorization,
    data: &WeightedEntries,
    params: Option<&RegularizerParams>,
    hyper: &PgdHyper,
) -> Result<(Factorization, PgdOutcome)> {
    if init.u.nrows() != data.n1 || init.v.nrows() != data.n2 {
        return Err(Error::arg("initial factors disagree with the observation grid"));
    }
    let obj = AsymmetricObjective::new(data.clone(), init.rank(), params.copied());
    let sigma1 = estimate_sigma1(data);
    let out = pgd(&obj, &init.stacked(), hyper, sigma1)?;
    Ok((Factorization::from_stacked(&out.z, data.n1), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::objective::SymmetricObjective;
    use crate::semirandom::counterexample_rank1;

    fn full(m: &DMatrix<f64>) -> WeightedEntries {
        WeightedEntries::from_dense(m, &DMatrix::from_element(m.nrows(), m.ncols(), 1.0)).unwrap()
    }

    #[test]
    fn ground_truth_is_stationary() {
        let u = DMatrix::from_fn(6, 2, |i, k| ((i + 1) * (k + 2)) as f64 / 10.0 - 0.3 * k as f64);
        let v = DMatrix::from_fn(5, 2, |i, k| ((i + 2) * (k + 1)) as f64 / 10.0 - 0.2);
        let m = &u * v.transpose();
        // balance the factors so the regularizer-free objective vanishes
        let init = crate::completion::svd_initialize(&full(&m), 2).unwrap();
        let hyper = PgdHyper { escape_steps: 50, ..PgdHyper::default() };
        let (f, out) = solve_pgd(&init, &full(&m), None, &hyper).unwrap();
        assert!(out.converged);
        assert!(out.objective < 1e-16);
        assert!((f.product() - m).norm() < 1e-6);
    }

    #[test]
    fn random_start_recovers_full_observation() {
        let x = DMatrix::from_fn(8, 2, |i, k| ((i * 3 + k * 5) % 7) as f64 / 7.0 - 0.4);
        let m = &x * x.transpose();
        let data = full(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z0 = DMatrix::from_fn(16, 2, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            0.3 * g
        });
        let init = Factorization::from_stacked(&z0, 8);
        let (f, out) = solve_pgd(&init, &data, None, &PgdHyper { escape_steps: 200, ..PgdHyper::default() }).unwrap();
        assert!(out.converged, "{out:?}");
        assert!((f.product() - &m).norm() / m.norm() < 1e-3);
    }

    #[test]
    fn spurious_minimum_traps_descent() {
        let c = counterexample_rank1(8, 0.9).unwrap();
        let data = WeightedEntries::from_dense(&c.gt.m_star(), &c.w).unwrap();
        let obj = SymmetricObjective::new(data.clone(), 1, None).unwrap();
        let hyper = PgdHyper { escape_steps: 200, ..PgdHyper::default() };
        let out = pgd(&obj, &c.u, &hyper, estimate_sigma1(&data)).unwrap();
        assert!(out.converged);
        assert!((&out.z - &c.u).norm() < 1e-6);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let data = full(&DMatrix::from_element(2, 2, 1.0));
        let obj = SymmetricObjective::new(data, 1, None).unwrap();
        assert!(pgd(&obj, &DMatrix::zeros(3, 1), &PgdHyper::default(), 1.0).unwrap_err().is_argument());
    }
}
