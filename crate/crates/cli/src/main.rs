//! `srmc`: command-line front end.
//!
//! Exit codes: 0 success, 2 argument error, 3 stage failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use srmc_core::completion::{recovery_error, solve_pgd, PgdHyper, RegularizerParams, WeightedEntries};
use srmc_core::harness::artifacts::{self, write_new};
use srmc_core::harness::{initial_factors, run_pipeline, verify_lemmas, InitConfig, PipelineConfig, OUTPUT_ROOT_ENV};
use srmc_core::reweight::{estimate_beta, reweight, weights_to_w, Backend, ReweightConfig, WeightMatrix};
use srmc_core::semirandom::{
    adversary_add, counterexample_rank1, make_ground_truth, sample_uniform_observations, weighted_to_semirandom,
    AdversaryKind, AdversaryStrategy, CoherenceProfile, GroundTruth, ObservationSet,
};
use srmc_core::spectral::io::format_dense_csv;
use srmc_core::spectral::EdgeList;
use srmc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "srmc", version, about = "Semi-random matrix completion: reweighting and non-convex recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground truth and uniformly sampled observations.
    Generate(GenerateArgs),
    /// Add adversarial observations to an observation file.
    Corrupt(CorruptArgs),
    /// Reweight an observation pattern.
    Reweight(ReweightArgs),
    /// Run perturbed gradient descent on (weighted) observations.
    Solve(SolveArgs),
    /// Run the numeric checks against a pipeline run directory.
    Verify(VerifyArgs),
    /// Run the full pipeline from a JSON config.
    Pipeline(PipelineArgs),
    /// Run the pipeline for several seed offsets.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Haar,
    Spiky,
    Flat,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    /// Comma-separated singular values, non-increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    spectrum: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Profile::Haar)]
    profile: Profile,
    /// Spiky profile: number of spiked rows.
    #[arg(long, default_value_t = 1)]
    spikes: usize,
    /// Spiky profile: spike strength.
    #[arg(long, default_value_t = 0.5)]
    strength: f64,
    /// Observation probability.
    #[arg(long)]
    p: f64,
    #[arg(long)]
    seed: u64,
    /// Seed for the observation mask; defaults to --seed + 1.
    #[arg(long)]
    obs_seed: Option<u64>,
    /// Output directory (created); receives ground_truth_* and observations.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    obs: PathBuf,
    /// Directory holding the ground truth files.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = artifacts::GROUND_TRUTH)]
    gt_stem: String,
    /// Adversary strategy as JSON (see AdversaryStrategy).
    #[arg(long, conflicts_with_all = ["dense_rows", "rank1_pattern"])]
    strategy: Option<PathBuf>,
    /// Reveal these rows completely.
    #[arg(long, value_delimiter = ',')]
    dense_rows: Option<Vec<usize>>,
    /// Replace the observations by the rank-1 counter-example pattern with this β, revealed
    /// at rate --p.
    #[arg(long, requires = "p")]
    rank1_pattern: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReweightArgs {
    /// Edge list or observation CSV.
    #[arg(long)]
    edges: PathBuf,
    /// A value in (0, 0.1], or "auto".
    #[arg(long)]
    beta: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "exact")]
    backend: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Run log destination; stdout when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Svd,
    Random,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    obs: PathBuf,
    /// Weight CSV; observations get weight 1/p when omitted.
    #[arg(long, required_unless_present = "p")]
    weights: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    rank: usize,
    /// Regularizer constant; needs --gt for μ, σ₁ and κ.
    #[arg(long = "C", requires = "gt")]
    c: Option<f64>,
    /// Ground truth directory, used for the regularizer and the recovery error.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value = artifacts::GROUND_TRUTH)]
    gt_stem: String,
    #[arg(long, value_enum, default_value_t = Init::Svd)]
    init: Init,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Output directory (created) for factors_u.csv, factors_v.csv and solver_trace.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Leaf override, e.g. `--set reweight.eps=0.05`. Repeatable.
    #[arg(long = "set")]
    overrides: Vec<String>,
    /// Root for run directories.
    #[arg(long, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: PipelineArgs,
    /// Number of seed offsets 0..trials.
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Corrupt(a) => corrupt(a),
        Command::Reweight(a) => run_reweight(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_argument() { 2 } else { 3 })
        }
    }
}

fn fresh_dir(dir: &Path) -> Result<()> {
    if dir.exists() && std::fs::read_dir(dir)?.next().is_some() {
        return Err(Error::Argument(format!("{} exists and is not empty", dir.display())));
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn load_obs(path: &Path) -> Result<ObservationSet> {
    ObservationSet::load(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn load_gt(dir: &Path, stem: &str) -> Result<GroundTruth> {
    GroundTruth::load(dir, stem).map_err(|e| Error::Argument(format!("cannot read ground truth in {}: {e}", dir.display())))
}

fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let profile = match a.profile {
        Profile::Haar => CoherenceProfile::Haar,
        Profile::Spiky => CoherenceProfile::Spiky { spikes: a.spikes, strength: a.strength },
        Profile::Flat => CoherenceProfile::Flat,
    };
    let gt = make_ground_truth(a.n1, a.n2, a.rank, &a.spectrum, &profile, a.seed)?;
    let obs = sample_uniform_observations(&gt, a.p, a.obs_seed.unwrap_or(a.seed + 1))?;
    fresh_dir(&a.out)?;
    gt.save(&a.out, artifacts::GROUND_TRUTH)?;
    write_new(&a.out.join(artifacts::OBSERVATIONS), &obs.to_csv())?;
    println!("{}", serde_json::to_string_pretty(&gt.meta())?);
    Ok(ExitCode::SUCCESS)
}

fn corrupt(a: CorruptArgs) -> Result<ExitCode> {
    let gt = load_gt(&a.gt, &a.gt_stem)?;
    let obs = load_obs(&a.obs)?;
    let out = if let Some(beta) = a.rank1_pattern {
        if gt.n1() != gt.n2() {
            return Err(Error::Argument("the rank-1 pattern needs a square ground truth".into()));
        }
        let ce = counterexample_rank1(gt.n1(), beta)?;
        weighted_to_semirandom(&ce.w, a.p.unwrap_or(1.0), &gt, a.seed)?
    } else {
        let strategy = match (&a.strategy, a.dense_rows) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Argument(format!("bad strategy: {e}")))?
            }
            (None, Some(rows)) => AdversaryStrategy { kind: AdversaryKind::DenseRows { rows }, seed: a.seed },
            (None, None) => AdversaryStrategy::none(),
        };
        adversary_add(&obs, &gt, &strategy)?
    };
    write_new(&a.out, &out.to_csv())?;
    println!("{} observations ({} added)", out.len(), out.len().saturating_sub(obs.len()));
    Ok(ExitCode::SUCCESS)
}

fn run_reweight(a: ReweightArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.edges)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", a.edges.display())))?;
    let edges = EdgeList::from_csv(&text)?;
    let backend: Backend = a.backend.parse()?;
    let (beta, out) = if a.beta == "auto" {
        let cfg = ReweightConfig::new(0.1, a.eps)?.with_backend(backend).with_seed(a.seed);
        estimate_beta(&edges, a.eps, &cfg, 0.0125, 0.1)?
    } else {
        let beta: f64 = a.beta.parse().map_err(|_| Error::Argument(format!("bad beta {:?}", a.beta)))?;
        let cfg = ReweightConfig::new(beta, a.eps)?.with_backend(backend).with_seed(a.seed);
        (beta, reweight(&edges, &cfg)?)
    };
    let (wm, wr) = weights_to_w(&edges, &out.weights)?;
    write_new(&a.out, &wm.to_csv())?;
    info!("beta {beta}: {wr:?}");
    let log = serde_json::to_string_pretty(&out.log)?;
    match a.log {
        Some(path) => write_new(&path, &log)?,
        None => println!("{log}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(a: SolveArgs) -> Result<ExitCode> {
    let obs = load_obs(&a.obs)?;
    let data = match (&a.weights, a.p) {
        (Some(path), _) => {
            let wm = WeightMatrix::load(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
            WeightedEntries::new(&obs, &wm)?
        }
        (None, Some(p)) => WeightedEntries::unweighted(&obs, p)?,
        (None, None) => unreachable!("clap requires --weights or --p"),
    };
    let gt = a.gt.as_ref().map(|d| load_gt(d, &a.gt_stem)).transpose()?;
    let params = match (a.c, &gt) {
        (Some(c), Some(gt)) => Some(RegularizerParams::for_ground_truth(gt, c)?),
        _ => None,
    };
    let init = match a.init {
        Init::Svd => InitConfig::Svd,
        Init::Random => InitConfig::Random { scale: a.init_scale, seed: a.seed },
    };
    let init = initial_factors(&init, &data, a.rank)?;
    let hyper = PgdHyper { seed: a.seed, max_iters: a.max_iters, ..PgdHyper::default() };
    let (f, out) = solve_pgd(&init, &data, params.as_ref(), &hyper)?;
    fresh_dir(&a.out)?;
    let [fu, fv] = artifacts::factor_files(artifacts::FACTORS);
    write_new(&a.out.join(fu), &format_dense_csv(&f.u))?;
    write_new(&a.out.join(fv), &format_dense_csv(&f.v))?;
    write_new(&a.out.join(artifacts::SOLVER_TRACE), &serde_json::to_string_pretty(&out)?)?;
    let err = match &gt {
        Some(gt) if gt.rank() == a.rank => Some(recovery_error(&f, gt)?),
        _ => None,
    };
    println!(
        "{}",
        serde_json::json!({
            "iterations": out.iterations,
            "objective": out.objective,
            "grad_norm": out.grad_norm,
            "converged": out.converged,
            "recovery_error": err,
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let section = verify_lemmas(&a.dir)?;
    println!("{}", serde_json::to_string_pretty(&section)?);
    Ok(if section.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn load_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&a.config)?.with_overrides(&a.overrides)?;
    if let Some(root) = &a.output_root {
        cfg.output_dir = Some(root.clone());
    }
    Ok(cfg)
}

fn pipeline(a: PipelineArgs) -> Result<ExitCode> {
    let run = run_pipeline(&load_config(&a)?)?;
    println!("{}", run.dir.display());
    println!("{}", run.report.to_json()?);
    Ok(if run.report.succeeded() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let base = load_config(&a.base)?;
    base.validate()?;
    let configs: Vec<PipelineConfig> = (0..a.trials).map(|k| base.with_seed_offset(k)).collect();
    let jobs = a.jobs.max(1);
    let mut results = Vec::with_capacity(configs.len());
    for chunk in configs.chunks(jobs) {
        let batch: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|c| s.spawn(move || run_pipeline(c))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        });
        results.extend(batch);
    }
    println!("trial,dir,succeeded,recovery_error,checks_passed");
    let mut ok = true;
    for (k, r) in results.into_iter().enumerate() {
        let run = r?;
        let err = run.report.solver.value().map(|s| s.recovery_error);
        let checks = run.report.lemma_checks.value().map(|l| l.all_passed());
        ok &= run.report.succeeded();
        println!(
            "{k},{},{},{},{}",
            run.dir.display(),
            run.report.succeeded(),
            err.map_or("skipped".into(), |e| format!("{e:e}")),
            checks.map_or("skipped".into(), |c| c.to_string())
        );
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
}
