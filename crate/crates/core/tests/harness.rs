use std::path::Path;

use srmc_core::harness::artifacts::{self, Curve};
use srmc_core::harness::*;
use srmc_core::reweight::{ReweightOutcome, WeightMatrix};
use srmc_core::semirandom::{AdversaryStrategy, CoherenceProfile, GroundTruth, ObservationSet};
use srmc_core::Error;

fn tiny(root: &Path) -> PipelineConfig {
    PipelineConfig {
        instance: InstanceConfig {
            ground_truth: GroundTruthSource::Generate {
                n1: 8,
                n2: 7,
                rank: 2,
                spectrum: vec![3.0, 1.0],
                profile: CoherenceProfile::Haar,
                seed: 5,
            },
            observations: ObservationModel::Uniform { p: 1.0, seed: 1, adversary: AdversaryStrategy::none() },
        },
        reweight: ReweightStage::default(),
        solver: SolverStage::default(),
        output_dir: Some(root.to_path_buf()),
    }
}

#[test]
fn full_observation_recovers_exactly() {
    let root = tempfile::tempdir().unwrap();
    let run = run_pipeline(&tiny(root.path())).unwrap();
    assert!(run.report.succeeded(), "{:?}", run.report.failure);
    let solver = run.report.solver.value().unwrap();
    assert!(solver.recovery_error <= 1e-6, "{solver:?}");
    let rw = run.report.reweight.value().unwrap();
    assert!(rw.lambda_max <= 1.0 + 1e-9);
    let checks = run.report.lemma_checks.value().unwrap();
    assert!(checks.all_passed(), "{checks:#?}");
    assert_eq!(run.report.timings.len(), 6);
    let on_disk = Report::load(&run.dir.join(artifacts::REPORT)).unwrap();
    assert_eq!(on_disk, run.report);
}

#[test]
fn identical_configs_give_identical_reports() {
    let root = tempfile::tempdir().unwrap();
    let cfg = tiny(root.path());
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_ne!(a.dir, b.dir);
    assert_eq!(a.report.without_timings(), b.report.without_timings());
    // everything but the report is byte-identical
    for name in [artifacts::WEIGHTS, artifacts::OBSERVATIONS, artifacts::REWEIGHT_LOG, "factors_u.csv"] {
        let x = std::fs::read(a.dir.join(name)).unwrap();
        let y = std::fs::read(b.dir.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn artifacts_round_trip() {
    let root = tempfile::tempdir().unwrap();
    let run = run_pipeline(&tiny(root.path())).unwrap();
    let d = &run.dir;
    let read = |n: &str| std::fs::read_to_string(d.join(n)).unwrap();

    let cfg = PipelineConfig::from_json(&read(artifacts::CONFIG)).unwrap();
    assert_eq!(cfg.to_json().unwrap(), read(artifacts::CONFIG));
    let obs = ObservationSet::from_csv(&read(artifacts::OBSERVATIONS)).unwrap();
    assert_eq!(obs.to_csv(), read(artifacts::OBSERVATIONS));
    let w = WeightMatrix::from_csv(&read(artifacts::WEIGHTS)).unwrap();
    assert_eq!(w.to_csv(), read(artifacts::WEIGHTS));
    let out: ReweightOutcome = serde_json::from_str(&read(artifacts::REWEIGHT_LOG)).unwrap();
    assert_eq!(serde_json::to_string_pretty(&out).unwrap(), read(artifacts::REWEIGHT_LOG));
    for name in [artifacts::POTENTIAL_CURVE, artifacts::ERROR_CURVE] {
        let c = Curve::from_csv(&read(name)).unwrap();
        assert_eq!(c.to_csv(), read(name));
    }
    let gt = GroundTruth::load(d, artifacts::GROUND_TRUTH).unwrap();
    let other = tempfile::tempdir().unwrap();
    gt.save(other.path(), "g").unwrap();
    assert_eq!(GroundTruth::load(other.path(), "g").unwrap(), gt);
    assert_eq!(Report::load(&d.join(artifacts::REPORT)).unwrap(), run.report);
}

#[test]
fn missing_input_file_leaves_no_output() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("runs");
    let mut cfg = tiny(&out);
    cfg.instance.observations = ObservationModel::File { path: root.path().join("nope.csv"), p: 0.5 };
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(err.is_argument(), "{err}");
    assert!(!out.exists());
}

#[test]
fn stage_failure_is_recorded() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = tiny(root.path());
    // rank-1 bad point on a rank-2, non-square instance
    cfg.solver.init = InitConfig::Rank1BadPoint { beta: 0.9 };
    let run = run_pipeline(&cfg).unwrap();
    let failure = run.report.failure.clone().unwrap();
    assert_eq!(failure.stage, Stage::Solve);
    assert!(run.report.reweight.value().is_some());
    assert!(matches!(run.report.solver, Metric::Skipped { .. }));
    assert!(run.dir.join(artifacts::REPORT).is_file());
}

#[test]
fn files_feed_a_second_run() {
    let root = tempfile::tempdir().unwrap();
    let first = run_pipeline(&tiny(root.path())).unwrap();
    let mut cfg = tiny(root.path());
    cfg.instance.ground_truth = GroundTruthSource::File { dir: first.dir.clone(), stem: artifacts::GROUND_TRUTH.into() };
    cfg.instance.observations = ObservationModel::File { path: first.dir.join(artifacts::OBSERVATIONS), p: 1.0 };
    cfg.reweight.enabled = false;
    let second = run_pipeline(&cfg).unwrap();
    assert!(second.report.succeeded(), "{:?}", second.report.failure);
    assert!(matches!(second.report.reweight, Metric::Skipped { .. }));
    assert!(second.report.solver.value().unwrap().recovery_error <= 1e-6);
}

#[test]
fn verify_fresh_run_passes() {
    let root = tempfile::tempdir().unwrap();
    let run = run_pipeline(&tiny(root.path())).unwrap();
    let section = verify_lemmas(&run.dir).unwrap();
    assert!(section.all_passed(), "{section:#?}");
    for name in ["potential_monotone", "weight_deviation", "spectral_sandwich", "first_order_bounds", "norm_preservation", "factor_relations"] {
        assert!(section.get(name).is_some(), "{name}");
    }
}

#[test]
fn corrupted_weights_fail_the_deviation_check() {
    let root = tempfile::tempdir().unwrap();
    let run = run_pipeline(&tiny(root.path())).unwrap();
    let path = run.dir.join(artifacts::WEIGHTS);
    let w = WeightMatrix::load(&path).unwrap();
    let bad: Vec<_> = w.entries().iter().map(|&(i, j, x)| (i, j, if i == 0 { 20.0 * x } else { x })).collect();
    std::fs::write(&path, WeightMatrix::new(w.n1(), w.n2(), bad).unwrap().to_csv()).unwrap();
    let section = verify_lemmas(&run.dir).unwrap();
    let c = section.get("weight_deviation").unwrap();
    assert!(!c.passed);
    assert!(c.margin < 0.0);
}

#[test]
fn empty_directory_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    match verify_lemmas(dir.path()) {
        Err(Error::MissingArtifacts(names)) => {
            assert!(names.contains(&artifacts::CONFIG.to_string()));
            assert!(names.contains(&artifacts::WEIGHTS.to_string()));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn sweep_offsets_change_every_seed() {
    let root = tempfile::tempdir().unwrap();
    let cfg = tiny(root.path());
    let shifted = cfg.with_seed_offset(3);
    match (&shifted.instance.ground_truth, &shifted.instance.observations) {
        (GroundTruthSource::Generate { seed, .. }, ObservationModel::Uniform { seed: s2, .. }) => {
            assert_eq!((*seed, *s2), (8, 4));
        }
        _ => unreachable!(),
    }
    assert_eq!(shifted.solver.hyper.seed, 3);
}
