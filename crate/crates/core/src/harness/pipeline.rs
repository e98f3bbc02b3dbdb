use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::artifacts::{self, create_run_dir, factor_files, write_new};
use super::config::{BetaChoice, GroundTruthSource, InitConfig, ObservationModel, PipelineConfig};
use super::report::{InstanceMetrics, Metric, Report, ReweightMetrics, SolverMetrics, Stage, StageFailure, StageTiming};
use super::verify::verify_lemmas;
use crate::completion::{recovery_error, solve_pgd, svd_initialize, Factorization, RegularizerParams, WeightedEntries};
use crate::error::{Error, Result};
use crate::reweight::{estimate_beta, normalized_spectrum, reweight_problem, weights_to_w, BarrierProblem, WeightMatrix};
use crate::semirandom::{
    adversary_add, counterexample_rank1, make_ground_truth, sample_uniform_observations, weighted_to_semirandom,
    GroundTruth, ObservationSet, Provenance,
};
use crate::spectral::io::format_dense_csv;

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: Report,
    pub dir: PathBuf,
}

/// Inputs read from disk before any output exists.
struct Preloaded {
    gt: Option<GroundTruth>,
    obs: Option<ObservationSet>,
}

fn preload(cfg: &PipelineConfig) -> Result<Preloaded> {
    let as_arg = |what: &str, e: Error| Error::arg(format!("cannot load {what}: {e}"));
    let gt = match &cfg.instance.ground_truth {
        GroundTruthSource::File { dir, stem } => Some(GroundTruth::load(dir, stem).map_err(|e| as_arg("ground truth", e))?),
        GroundTruthSource::Generate { .. } => None,
    };
    let obs = match &cfg.instance.observations {
        ObservationModel::File { path, .. } => Some(ObservationSet::load(path).map_err(|e| as_arg("observations", e))?),
        _ => None,
    };
    Ok(Preloaded { gt, obs })
}

/// Runs generate → observe → corrupt → reweight → solve → evaluate in a fresh run directory.
/// Invalid configs fail before anything is written. Stage failures are recorded in the report,
/// which is always written.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let pre = preload(cfg)?;
    let hash = cfg.content_hash()?;
    let dir = create_run_dir(&cfg.output_root(), &hash)?;
    info!("run directory {}", dir.display());
    write_new(&dir.join(artifacts::CONFIG), &cfg.to_json()?)?;
    let mut report = Report::new(hash);
    let stages = Stages { cfg, dir: &dir, report: &mut report };
    if let Err((stage, e)) = stages.run(pre) {
        report.failure = Some(StageFailure { stage, message: e.to_string() });
    }
    write_new(&dir.join(artifacts::REPORT), &report.to_json()?)?;
    Ok(PipelineRun { report, dir })
}

type StageResult<T> = std::result::Result<T, (Stage, Error)>;

struct Stages<'a> {
    cfg: &'a PipelineConfig,
    dir: &'a Path,
    report: &'a mut Report,
}

impl Stages<'_> {
    fn timed<T>(&mut self, stage: Stage, f: impl FnOnce(&mut Self) -> Result<T>) -> StageResult<T> {
        let t = Instant::now();
        let out = f(self);
        self.report.timings.push(StageTiming { stage, seconds: t.elapsed().as_secs_f64() });
        out.map_err(|e| (stage, e))
    }

    fn put(&self, name: &str, contents: &str) -> Result<()> {
        write_new(&self.dir.join(name), contents)
    }

    fn run(mut self, pre: Preloaded) -> StageResult<()> {
        let cfg = self.cfg;
        let p = cfg.instance.observations.base_rate();

        let gt = self.timed(Stage::Generate, |s| {
            let gt = match (&cfg.instance.ground_truth, pre.gt) {
                (_, Some(gt)) => gt,
                (GroundTruthSource::Generate { n1, n2, rank, spectrum, profile, seed }, None) => {
                    make_ground_truth(*n1, *n2, *rank, spectrum, profile, *seed)?
                }
                (GroundTruthSource::File { .. }, None) => return Err(Error::Internal("ground truth not preloaded".into())),
            };
            gt.save(s.dir, artifacts::GROUND_TRUTH)?;
            Ok(gt)
        })?;

        let base = self.timed(Stage::Observe, |s| {
            let obs = match (&cfg.instance.observations, pre.obs) {
                (_, Some(o)) => o,
                (ObservationModel::Uniform { p, seed, .. }, None) => sample_uniform_observations(&gt, *p, *seed)?,
                (ObservationModel::Rank1Pattern { p, beta, seed }, None) => {
                    if gt.n1() != gt.n2() {
                        return Err(Error::arg("the rank-1 pattern needs a square grid"));
                    }
                    let ce = counterexample_rank1(gt.n1(), *beta)?;
                    weighted_to_semirandom(&ce.w, *p, &gt, *seed)?
                }
                (ObservationModel::File { .. }, None) => return Err(Error::Internal("observations not preloaded".into())),
            };
            if obs.n1() != gt.n1() || obs.n2() != gt.n2() {
                return Err(Error::arg("observations and ground truth differ in shape"));
            }
            s.put(artifacts::OBSERVATIONS_BASE, &obs.to_csv())?;
            Ok(obs)
        })?;

        let obs = self.timed(Stage::Corrupt, |s| {
            let obs = match &cfg.instance.observations {
                ObservationModel::Uniform { adversary, .. } => adversary_add(&base, &gt, adversary)?,
                _ => base,
            };
            s.put(artifacts::OBSERVATIONS, &obs.to_csv())?;
            let random = obs.filter(Provenance::Random);
            s.report.instance = Metric::Measured {
                value: InstanceMetrics {
                    n1: gt.n1(),
                    n2: gt.n2(),
                    rank: gt.rank(),
                    mu: gt.mu,
                    kappa: gt.kappa,
                    observed: obs.len(),
                    random: random.len(),
                    adversarial: obs.count(Provenance::Adversarial),
                    random_connected: !random.is_empty() && random.edge_list().is_connected(),
                },
            };
            Ok(obs)
        })?;

        let wm = self.timed(Stage::Reweight, |s| s.reweight(&obs, p))?;

        self.timed(Stage::Solve, |s| s.solve(&obs, &wm, &gt))?;

        self.timed(Stage::Evaluate, |s| {
            s.report.lemma_checks = Metric::Measured { value: verify_lemmas(s.dir)? };
            Ok(())
        })
    }

    fn reweight(&mut self, obs: &ObservationSet, p: f64) -> Result<WeightMatrix> {
        let stage = &self.cfg.reweight;
        let edges = obs.edge_list();
        if !stage.enabled {
            self.report.reweight = Metric::skipped("reweighting disabled");
            let wm = WeightMatrix::uniform(&edges, 1.0 / p)?;
            self.put(artifacts::WEIGHTS, &wm.to_csv())?;
            return Ok(wm);
        }
        let problem = BarrierProblem::new(edges.clone())?;
        let (beta, out) = match stage.beta {
            BetaChoice::Fixed(b) => (b, reweight_problem(&problem, &stage.to_config(b)?)?),
            BetaChoice::Auto(_) => {
                let base = stage.to_config(stage.beta_max)?;
                estimate_beta(&edges, stage.eps, &base, stage.beta_min, stage.beta_max)?
            }
        };
        self.put(artifacts::REWEIGHT_LOG, &serde_json::to_string_pretty(&out)?)?;
        self.put(artifacts::POTENTIAL_CURVE, &artifacts::potential_curve(&out.log).to_csv())?;
        let (wm, wr) = weights_to_w(&edges, &out.weights)?;
        self.put(artifacts::WEIGHTS, &wm.to_csv())?;
        let (lambda_min, lambda_max) = normalized_spectrum(&problem, &out.weights);
        let total: f64 = out.weights.iter().sum();
        let adversarial: f64 = edges
            .edges()
            .iter()
            .zip(&out.weights)
            .filter(|((i, j), _)| obs.find(*i, *j).is_some_and(|o| o.provenance == Provenance::Adversarial))
            .map(|(_, w)| w)
            .sum();
        self.report.reweight = Metric::Measured {
            value: ReweightMetrics {
                beta,
                eps: stage.eps,
                backend: stage.backend,
                iterations: out.iterations,
                iteration_cap: out.log.iteration_cap,
                u_final: out.u_final,
                l_final: out.l_final,
                lambda_min,
                lambda_max,
                deviation_norm: wr.deviation_norm,
                normalized_deviation: wr.normalized_deviation,
                max_row_sum: wr.max_row_sum,
                max_col_sum: wr.max_col_sum,
                adversarial_weight_share: if total > 0.0 { adversarial / total } else { 0.0 },
            },
        };
        Ok(wm)
    }

    fn solve(&mut self, obs: &ObservationSet, wm: &WeightMatrix, gt: &GroundTruth) -> Result<Factorization> {
        let stage = &self.cfg.solver;
        let data = WeightedEntries::new(obs, wm)?;
        let r = stage.rank.unwrap_or(gt.rank());
        let init = initial_factors(&stage.init, &data, r)?;
        let params = stage.c.map(|c| RegularizerParams::for_ground_truth(gt, c)).transpose()?;
        let (f, out) = solve_pgd(&init, &data, params.as_ref(), &stage.hyper)?;
        let [fu, fv] = factor_files(artifacts::FACTORS);
        self.put(&fu, &format_dense_csv(&f.u))?;
        self.put(&fv, &format_dense_csv(&f.v))?;
        self.put(artifacts::SOLVER_TRACE, &serde_json::to_string_pretty(&out)?)?;
        self.put(artifacts::ERROR_CURVE, &artifacts::error_curve(&out.trace).to_csv())?;
        let (initial_error, recovery) = if r == gt.rank() {
            (recovery_error(&init, gt)?, recovery_error(&f, gt)?)
        } else {
            let rel = |x: &Factorization| (x.product() - gt.m_star()).norm_squared() / gt.m_star().norm_squared();
            (rel(&init), rel(&f))
        };
        self.report.solver = Metric::Measured {
            value: SolverMetrics {
                rank: r,
                iterations: out.iterations,
                objective: out.objective,
                grad_norm: out.grad_norm,
                grad_tol: out.grad_tol,
                converged: out.converged,
                perturbations: out.perturbations,
                recovery_error: recovery,
                initial_error,
            },
        };
        Ok(f)
    }
}

pub fn initial_factors(init: &InitConfig, data: &WeightedEntries, r: usize) -> Result<Factorization> {
    match init {
        InitConfig::Svd => svd_initialize(data, r),
        InitConfig::Random { scale, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let z = DMatrix::from_fn(data.n1 + data.n2, r, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                scale * g
            });
            Ok(Factorization::from_stacked(&z, data.n1))
        }
        InitConfig::Rank1BadPoint { beta } => {
            if data.n1 != data.n2 || r != 1 {
                return Err(Error::arg("the rank-1 bad point needs a square grid and rank 1"));
            }
            let ce = counterexample_rank1(data.n1, *beta)?;
            Factorization::new(ce.u.clone(), ce.u)
        }
    }
}
