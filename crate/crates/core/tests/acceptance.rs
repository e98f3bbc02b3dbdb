//! Acceptance criteria 1–10. Prints one line per criterion and exits nonzero if any fails.
//!
//! `cargo test --release -p srmc-core --test acceptance -- 3 5` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use srmc_core::completion::*;
use srmc_core::harness::*;
use srmc_core::reweight::*;
use srmc_core::semirandom::*;
use srmc_core::spectral::{principal_angles, top_svd, EdgeList};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

// ---------------------------------------------------------------------------------------
// 1, 2: counter-example certificates

fn criterion_1() -> Outcome {
    let ce = counterexample_rank1(40, 0.9).map_err(|e| e.to_string())?;
    if (ce.gamma - 1.81 / 0.19).abs() > 1e-12 {
        return Err(format!("gamma = {}", ce.gamma));
    }
    let data = WeightedEntries::from_dense(&ce.gt.m_star(), &ce.w).unwrap();
    let obj = SymmetricObjective::new(data, 1, None).unwrap();
    let g = obj.gradient(&ce.u).norm();
    let g_bound = 1e-8 * (1.0 + ce.u.norm());
    let eig = SymmetricEigen::new(obj.hessian_matrix(&ce.u)).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    // required margin: relative to the largest curvature
    let margin = 1e-6 * hi;
    check(
        g <= g_bound && lo >= margin,
        format!("|grad f(u)| = {g:.3e} (bound {g_bound:.3e}), hessian eigenvalues in [{lo:.4}, {hi:.4}], margin {margin:.3e}"),
    )
}

fn criterion_2() -> Outcome {
    let ce = counterexample_rank2(16).unwrap();
    let wm = ce.weighted();
    let rep = block_representative(&wm, 4).map_err(|e| e.to_string())?;
    #[rustfmt::skip]
    let expected = DMatrix::from_row_slice(4, 4, &[
        10.0, 5.0, 6.0, 3.0,
        5.0, 10.0, 3.0, 6.0,
        6.0, 3.0, 10.0, 5.0,
        3.0, 6.0, 5.0, 10.0,
    ]);
    if rep != expected {
        return Err(format!("block representative {rep}"));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(rep).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let eig_err = eig.iter().zip([24.0, 8.0, 6.0, 2.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (top, _, _) = top_svd(&wm, 2).unwrap();
    let angles = principal_angles(&top, &ce.gt.u).unwrap();
    let largest = angles.last().unwrap().to_degrees();
    check(
        eig_err <= 1e-10 && (largest - 90.0).abs() <= 1e-8,
        format!("eigenvalues {eig:?} (max error {eig_err:.1e}), largest principal angle {largest:.10} deg"),
    )
}

// ---------------------------------------------------------------------------------------
// 3, 4, 6: one reweighting run on the planted dense-block instance

/// ℓ_final/u_final ≥ 1 − c·(β+ε).
const LOWER_RATIO_CONSTANT: f64 = 10.0;

fn planted_edges(n: usize, block: usize, p: f64, seed: u64) -> EdgeList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // rows below `block` are fully revealed by the adversary
            if i < block || rng.random::<f64>() < p {
                e.push((i, j));
            }
        }
    }
    EdgeList::new(n, n, e).unwrap()
}

struct PlantedRun {
    edges: EdgeList,
    problem: BarrierProblem,
    cfg: ReweightConfig,
    out: ReweightOutcome,
    seconds: f64,
}

fn planted_run() -> Result<PlantedRun, String> {
    let edges = planted_edges(50, 10, 0.5, 7);
    let problem = BarrierProblem::new(edges.clone()).unwrap();
    let cfg = ReweightConfig::new(0.05, 0.05).unwrap();
    let t = Instant::now();
    let out = reweight_problem(&problem, &cfg).map_err(|e| format!("reweighting failed: {e}"))?;
    Ok(PlantedRun { edges, problem, cfg, out, seconds: t.elapsed().as_secs_f64() })
}

fn criterion_3(run: &PlantedRun) -> Outcome {
    let (lo, hi) = normalized_spectrum(&run.problem, &run.out.weights);
    let ratio = run.out.lower_ratio();
    let floor = 1.0 - LOWER_RATIO_CONSTANT * (run.cfg.beta + run.cfg.eps);
    check(
        hi <= 1.0 + 1e-9 && lo >= ratio - 1e-9 && ratio >= floor && run.seconds < 180.0,
        format!(
            "{} edges, spectrum [{lo:.6}, {hi:.12}], l/u = {ratio:.6} (floor {floor:.2} with c = {LOWER_RATIO_CONSTANT}), {} iterations in {:.1} s",
            run.edges.len(),
            run.out.iterations,
            run.seconds
        ),
    )
}

fn criterion_4(run: &PlantedRun) -> Outcome {
    let log = &run.out.log;
    let mut prev = log.initial_phi;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for r in &log.records {
        if r.phi > prev * (1.0 + 1e-9) {
            violations += 1;
        }
        worst = worst.max(r.phi / prev - 1.0);
        prev = r.phi;
    }
    let n = run.problem.n_vertices() as f64;
    let bound = (64.0 * n.ln().powi(2) / (run.cfg.eps * run.cfg.eps)).ceil() as usize;
    check(
        violations == 0 && run.out.iterations <= bound,
        format!(
            "{violations} increases over {} iterations (largest relative change {worst:.3e}), iteration bound {bound}",
            log.records.len()
        ),
    )
}

fn criterion_6(run: &PlantedRun) -> Outcome {
    let (_, rep) = weights_to_w(&run.edges, &run.out.weights).map_err(|e| e.to_string())?;
    let (n1, n2) = (run.edges.n1() as f64, run.edges.n2() as f64);
    let bound = WEIGHT_DEVIATION_CONSTANT * (run.cfg.beta + run.cfg.eps);
    check(
        rep.max_row_sum <= n2 && rep.max_col_sum <= n1 && rep.normalized_deviation <= bound,
        format!(
            "max row sum {:.4} <= {n2}, max column sum {:.4} <= {n1}, |W-J|/sqrt(n1 n2) = {:.4} <= {bound:.4} (c_W = {WEIGHT_DEVIATION_CONSTANT})",
            rep.max_row_sum, rep.max_col_sum, rep.normalized_deviation
        ),
    )
}

// ---------------------------------------------------------------------------------------
// 5: backend equivalence

fn criterion_5() -> Outcome {
    let eps = 0.05;
    let mut worst_rho = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst_score = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..5u64 {
        let edges = planted_edges(30, 6, 0.5, seed);
        let problem = BarrierProblem::new(edges).unwrap();
        let cfg = ReweightConfig::new(0.1, eps).unwrap();
        let fast = cfg.clone().with_backend(Backend::Fast).with_seed(seed);
        let mut state = BarrierState::initial(&problem, &cfg).unwrap();
        for steps in [0usize, 10, 10] {
            for _ in 0..steps {
                state = advance(&problem, &state, &cfg).map_err(|e| e.to_string())?.0;
            }
            let re = compute_rho(&problem, &state, &cfg).unwrap();
            let rf = compute_rho(&problem, &state, &fast).map_err(|e| e.to_string())?;
            let ratio = rf / re;
            worst_rho = (worst_rho.0.min(ratio), worst_rho.1.max(ratio));
            let (ep, em) = edge_scores(&problem, &state, &cfg).unwrap();
            let (fp, fm) = edge_scores(&problem, &state, &fast).map_err(|e| e.to_string())?;
            let dev = ep.iter().chain(&em).zip(fp.iter().chain(&fm)).map(|(e, f)| (f / e - 1.0).abs()).fold(0.0, f64::max);
            worst_score = worst_score.max(dev);
            if !(ratio >= 1.0 - eps && ratio <= 1.0) || dev > eps / 2.0 {
                failures.push(format!("seed {seed} iteration {}", state.iteration));
            }
        }
    }
    check(
        failures.is_empty(),
        format!(
            "rho_fast/rho_exact in [{:.5}, {:.5}], largest score deviation {worst_score:.2e} (limit {}) {failures:?}",
            worst_rho.0,
            worst_rho.1,
            eps / 2.0
        ),
    )
}

// ---------------------------------------------------------------------------------------
// 7: weighted-norm preservation

fn random_weights(n1: usize, n2: usize, kind: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match kind {
        0 => DMatrix::from_fn(n1, n2, |_, _| rng.random_range(0.0..2.0)),
        1 => {
            let p = rng.random_range(0.2..0.9);
            DMatrix::from_fn(n1, n2, |_, _| if rng.random::<f64>() < p { 1.0 / p } else { 0.0 })
        }
        2 => {
            let g = rng.random_range(1.0..10.0);
            let (h1, h2) = (n1 / 2, n2 / 2);
            DMatrix::from_fn(n1, n2, |i, j| if (i < h1) == (j < h2) { g } else { 1.0 })
        }
        _ => DMatrix::from_fn(n1, n2, |_, _| 1.0 + rng.random_range(-0.1..0.1)),
    }
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut worst_route = 0.0f64;
    let mut tightest = f64::INFINITY;
    for trial in 0..1000 {
        let n1 = rng.random_range(2..=50);
        let n2 = rng.random_range(2..=50);
        let r = rng.random_range(1..=5);
        let mut x = gaussian(n1, r, &mut rng);
        let y = gaussian(n2, r, &mut rng);
        if trial % 3 == 0 {
            // one heavy row
            let k = rng.random_range(0..n1);
            x.row_mut(k).scale_mut(10.0);
        }
        let w = random_weights(n1, n2, trial % 4, &mut rng);
        let c = check_norm_preservation(&x, &y, &w).unwrap();
        if !c.holds() {
            violations += 1;
        }
        worst_route = worst_route.max(c.route_gap());
        tightest = tightest.min(c.rhs / c.lhs.max(1e-300));
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        violations == 0 && worst_route <= 1e-10 && secs < 30.0,
        format!("{violations} violations in 1000 trials, smallest rhs/lhs {tightest:.3}, route disagreement {worst_route:.2e}, {secs:.1} s"),
    )
}

// ---------------------------------------------------------------------------------------
// 8: end-to-end recovery with and without reweighting

const E2E_N: usize = 100;
const E2E_P: f64 = 0.1;
const E2E_PATTERN_BETA: f64 = 0.9;

fn criterion_8() -> Outcome {
    let t = Instant::now();
    // reweighting ON: r = 3, κ = 4 haar instance revealed through the rank-1 pattern
    let gt = make_ground_truth(E2E_N, E2E_N, 3, &[4.0, 2.0, 1.0], &CoherenceProfile::Haar, 11).unwrap();
    let ce = counterexample_rank1(E2E_N, E2E_PATTERN_BETA).unwrap();
    let obs = weighted_to_semirandom(&ce.w, E2E_P, &gt, 3).unwrap();
    let random_part = obs.filter(Provenance::Random);
    if !random_part.edge_list().is_connected() {
        return Err("random observations are not connected".into());
    }
    let edges = obs.edge_list();
    let cfg = ReweightConfig::new(0.1, 0.1).unwrap();
    let out = reweight(&edges, &cfg).map_err(|e| format!("reweighting failed: {e}"))?;
    let (wm, _) = weights_to_w(&edges, &out.weights).map_err(|e| e.to_string())?;
    let data = WeightedEntries::new(&obs, &wm).unwrap();
    let mut on_errors = Vec::new();
    for seed in 0..5u64 {
        let init = initial_factors(&InitConfig::Random { scale: 0.1, seed }, &data, 3).unwrap();
        let hyper = PgdHyper { seed, ..PgdHyper::default() };
        let (f, _) = solve_pgd(&init, &data, None, &hyper).map_err(|e| e.to_string())?;
        on_errors.push(recovery_error(&f, &gt).unwrap());
    }

    // reweighting OFF: the converted rank-1 instance, PGD started at its bad point
    let root = tempfile::tempdir().unwrap();
    let mut off = Vec::new();
    for seed in 0..5u64 {
        let cfg = PipelineConfig {
            instance: InstanceConfig {
                ground_truth: GroundTruthSource::Generate {
                    n1: E2E_N,
                    n2: E2E_N,
                    rank: 1,
                    spectrum: vec![E2E_N as f64],
                    profile: CoherenceProfile::Flat,
                    seed: 0,
                },
                observations: ObservationModel::Rank1Pattern { p: E2E_P, beta: E2E_PATTERN_BETA, seed },
            },
            reweight: ReweightStage { enabled: false, ..ReweightStage::default() },
            solver: SolverStage { init: InitConfig::Rank1BadPoint { beta: E2E_PATTERN_BETA }, ..SolverStage::default() },
            output_dir: Some(root.path().to_path_buf()),
        };
        let run = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        if let Some(f) = &run.report.failure {
            return Err(format!("OFF run failed in {:?}: {}", f.stage, f.message));
        }
        let inst = run.report.instance.value().unwrap();
        let s = run.report.solver.value().unwrap().clone();
        off.push((s.recovery_error, s.grad_norm, s.grad_tol, inst.random_connected));
    }
    let on_ok = on_errors.iter().all(|e| *e <= 0.1);
    let off_ok = off.iter().all(|&(err, g, tol, conn)| err >= 0.5 && g <= tol && conn);
    let secs = t.elapsed().as_secs_f64();
    check(
        on_ok && off_ok && secs < 600.0,
        format!(
            "ON ({} obs, {} random, {} reweighting iterations): errors {:?}; OFF (error, |grad|, tol, connected): {:?}; {secs:.0} s",
            obs.len(),
            random_part.len(),
            out.iterations,
            on_errors.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>(),
            off.iter().map(|(e, g, t, c)| format!("({e:.3}, {g:.1e}, {t:.1e}, {c})")).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------------------------
// 9: derivative numerics

fn random_data(n1: usize, n2: usize, symmetric: bool, rng: &mut ChaCha8Rng) -> WeightedEntries {
    let r = 2;
    let x = gaussian(n1, r, rng);
    let m = if symmetric { &x * x.transpose() } else { &x * gaussian(n2, r, rng).transpose() };
    let mut w = DMatrix::from_fn(n1, n2, |_, _| if rng.random::<f64>() < 0.6 { rng.random_range(0.5..3.0) } else { 0.0 });
    if symmetric {
        w = (&w + w.transpose()) * 0.5;
    }
    WeightedEntries::from_dense(&m, &w).unwrap()
}

/// (gradient relative error, Hessian form relative error) at a random point and direction.
fn probe(obj: &dyn SmoothObjective, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (n, r) = obj.shape();
    let z = gaussian(n, r, rng) * 0.7;
    let g = obj.gradient(&z);
    let h = 1e-5;
    let mut fd = DMatrix::zeros(n, r);
    for i in 0..n {
        for k in 0..r {
            let mut e = DMatrix::zeros(n, r);
            e[(i, k)] = h;
            fd[(i, k)] = (obj.value(&(&z + &e)) - obj.value(&(&z - &e))) / (2.0 * h);
        }
    }
    let grad_err = (&fd - &g).norm() / g.norm().max(1e-300);
    let d = gaussian(n, r, rng);
    let h2 = 1e-3;
    let fd2 = (obj.value(&(&z + &d * h2)) - 2.0 * obj.value(&z) + obj.value(&(&z - &d * h2))) / (h2 * h2);
    let hf = obj.hessian_form(&z, &d);
    // |dᵀHd| ≤ ‖Hd‖‖d‖ is the natural scale of the form
    let scale = obj.hessian_vec(&z, &d).norm() * d.norm();
    (grad_err, (fd2 - hf).abs() / scale.max(1e-300))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut lines = Vec::new();
    let mut ok = true;
    for variant in ["asymmetric", "asymmetric+Q", "symmetric", "symmetric+Q"] {
        let (mut ge, mut he) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let n1 = rng.random_range(3..=10);
            let r = rng.random_range(1..=3);
            let reg = variant.ends_with("+Q").then(|| RegularizerParams {
                alpha1: rng.random_range(0.2..0.8),
                alpha2: rng.random_range(0.2..0.8),
                lambda1: rng.random_range(0.5..5.0),
                lambda2: rng.random_range(0.5..5.0),
                c: 1.0,
            });
            let (g, h) = if variant.starts_with("asym") {
                let n2 = rng.random_range(3..=10);
                let obj = AsymmetricObjective::new(random_data(n1, n2, false, &mut rng), r, reg);
                probe(&obj, &mut rng)
            } else {
                let obj = SymmetricObjective::new(random_data(n1, n1, true, &mut rng), r, reg).unwrap();
                probe(&obj, &mut rng)
            };
            ge = ge.max(g);
            he = he.max(h);
        }
        ok &= ge <= 1e-5 && he <= 1e-4;
        lines.push(format!("{variant}: grad {ge:.1e}, hess {he:.1e}"));
    }
    check(ok, format!("worst of 100 probes each; {}", lines.join("; ")))
}

// ---------------------------------------------------------------------------------------
// 10: distance relations and the regularizer bound at converged iterates (C = 10)

fn regularizer_bound(q: f64, sigma_r: f64, delta_sq: f64) -> (bool, f64) {
    let rhs = 0.1 * sigma_r * delta_sq;
    (q <= rhs + 1e-12 * (1.0 + rhs.abs()), rhs - q)
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut relation_violations = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=30);
        let r = rng.random_range(1..=4.min(n));
        let u_star = gaussian(n, r, &mut rng);
        let u = if rng.random::<bool>() { &u_star + gaussian(n, r, &mut rng) * 0.1 } else { gaussian(n, r, &mut rng) };
        let c = distance_relations(&u, &u_star).unwrap();
        if !(c.outer_holds() && c.delta_holds()) {
            relation_violations += 1;
        }
    }

    let c = RegularizerParams::DEFAULT_C;
    let mut q_violations = 0;
    let mut runs = 0;
    let mut worst = f64::INFINITY;
    let mut unconverged = 0;
    let profiles = [CoherenceProfile::Haar, CoherenceProfile::Spiky { spikes: 2, strength: 0.6 }];
    for (k, profile) in profiles.iter().cycle().take(6).enumerate() {
        let seed = k as u64;
        // asymmetric
        let gt = make_ground_truth(40, 30, 2, &[3.0, 1.0], profile, seed).unwrap();
        let obs = sample_uniform_observations(&gt, 0.6, seed + 100).unwrap();
        let data = WeightedEntries::unweighted(&obs, 0.6).unwrap();
        let params = RegularizerParams::for_ground_truth(&gt, c).unwrap();
        let init = initial_factors(&InitConfig::Random { scale: 0.3, seed }, &data, 2).unwrap();
        let (f, out) = solve_pgd(&init, &data, Some(&params), &PgdHyper { seed, ..PgdHyper::default() }).unwrap();
        unconverged += usize::from(!out.converged);
        let z_star = Factorization::new(gt.u.clone(), gt.v.clone()).unwrap().stacked();
        let z = f.stacked();
        let a = optimal_rotation(&z, &z_star).unwrap();
        let (du, dv) = (a.delta.rows(0, 40).into_owned(), a.delta.rows(40, 30).into_owned());
        let q = regularizer_curvature(&f.u, &du, params.alpha1, params.lambda1)
            + regularizer_curvature(&f.v, &dv, params.alpha2, params.lambda2);
        let (ok, slack) = regularizer_bound(q, gt.sigma_min(), a.delta_norm.powi(2));
        let rel = distance_relations(&z, &z_star).unwrap();
        q_violations += usize::from(!ok) + usize::from(!(rel.outer_holds() && rel.delta_holds()));
        worst = worst.min(slack);
        runs += 1;

        // symmetric: M* = X Σ Xᵀ with balanced factor U* = X Σ^{1/2}
        let sym = make_ground_truth(30, 30, 2, &[3.0, 1.0], profile, seed + 50).unwrap();
        let gs = GroundTruth::from_svd(&(&sym.u * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2, sym.sigma.iter().map(|s| 1.0 / s.sqrt())))), &(&sym.u * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2, sym.sigma.iter().map(|s| 1.0 / s.sqrt())))), &sym.sigma).unwrap();
        let m = gs.m_star();
        let mask = DMatrix::from_fn(30, 30, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            // symmetric Bernoulli(0.6) mask from a hash of the pair
            let mut h = ChaCha8Rng::seed_from_u64(seed * 1_000_003 + (a * 31 + b) as u64);
            if h.random::<f64>() < 0.6 { 1.0 / 0.6 } else { 0.0 }
        });
        let data = WeightedEntries::from_dense(&m, &mask).unwrap();
        let p = RegularizerParams::symmetric(30, 2, gs.mu, gs.sigma_max(), gs.kappa, c).unwrap();
        let obj = SymmetricObjective::new(data.clone(), 2, Some(p)).unwrap();
        let z0 = gaussian(30, 2, &mut rng) * 0.3;
        let out = pgd(&obj, &z0, &PgdHyper { seed, ..PgdHyper::default() }, estimate_sigma1(&data)).unwrap();
        unconverged += usize::from(!out.converged);
        let a = optimal_rotation(&out.z, &gs.u).unwrap();
        let q = regularizer_curvature(&out.z, &a.delta, p.alpha1, p.lambda1);
        let (ok, slack) = regularizer_bound(q, gs.sigma_min(), a.delta_norm.powi(2));
        let rel = distance_relations(&out.z, &gs.u).unwrap();
        q_violations += usize::from(!ok) + usize::from(!(rel.outer_holds() && rel.delta_holds()));
        worst = worst.min(slack);
        runs += 1;
    }
    check(
        relation_violations == 0 && q_violations == 0 && unconverged == 0,
        format!(
            "{relation_violations} violations in 500 random pairs; {q_violations} violations at {runs} converged iterates ({unconverged} unconverged), smallest regularizer slack {worst:.3e}"
        ),
    )
}

// ---------------------------------------------------------------------------------------

fn run(id: usize, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = t.elapsed().as_secs_f64();
    match result {
        Ok(msg) => {
            println!("criterion {id:>2}: PASS  {msg}  [{secs:.1} s]");
            true
        }
        Err(msg) => {
            println!("criterion {id:>2}: FAIL  {msg}  [{secs:.1} s]");
            false
        }
    }
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let on = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let mut ok = true;
    if on(1) {
        ok &= run(1, criterion_1);
    }
    if on(2) {
        ok &= run(2, criterion_2);
    }
    if on(3) || on(4) || on(6) {
        match planted_run() {
            Ok(r) => {
                for (k, f) in [(3, criterion_3 as fn(&PlantedRun) -> Outcome), (4, criterion_4), (6, criterion_6)] {
                    if on(k) {
                        ok &= run(k, || f(&r));
                    }
                }
            }
            Err(msg) => {
                for k in [3, 4, 6].into_iter().filter(|&k| on(k)) {
                    ok &= run(k, || Err(msg.clone()));
                }
            }
        }
    }
    if on(5) {
        ok &= run(5, criterion_5);
    }
    if on(7) {
        ok &= run(7, criterion_7);
    }
    if on(8) {
        ok &= run(8, criterion_8);
    }
    if on(9) {
        ok &= run(9, criterion_9);
    }
    if on(10) {
        ok &= run(10, criterion_10);
    }
    if !ok {
        std::process::exit(1);
    }
}
