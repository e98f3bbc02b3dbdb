//! Configured end-to-end runs: stages, artifact directories, reports and the numeric
//! checks run against stored artifacts.

pub mod artifacts;
mod config;
mod pipeline;
mod report;
mod verify;

pub use config::{
    AutoBeta, BetaChoice, GroundTruthSource, InitConfig, InstanceConfig, ObservationModel, PipelineConfig,
    ReweightStage, SolverStage, OUTPUT_ROOT_ENV,
};
pub use pipeline::{initial_factors, run_pipeline, PipelineRun};
pub use report::{
    InstanceMetrics, LemmaCheck, LemmaSection, Metric, Report, ReweightMetrics, SolverMetrics, Stage, StageFailure,
    StageTiming, SCHEMA_VERSION,
};
pub use verify::{verify_lemmas, POTENTIAL_TOLERANCE, SPECTRUM_TOLERANCE, WEIGHT_DEVIATION_CONSTANT};
