use std::path::PathBuf;

use thiserror::Error;

use crate::network::ValidationReport;
use crate::powerflow::LadderTrace;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("non-positive base quantity at `{0}`")]
    ZeroBase(String),
    #[error("network model failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("island without a slack bus: {}", .0.join(", "))]
    IslandWithoutSlack(Vec<String>),
    #[error("network has no buses")]
    Empty,
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error("power flow did not converge: {0}")]
    NonConvergence(LadderTrace),
    #[error("bus `{0}` is islanded from the slack bus")]
    IslandedBus(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("reserve shortfall of {0:.3} MW after all corrective stages")]
    ReserveShortfall(f64),
    #[error("voltage at `{bus}` unresolved, {residual:+.4} pu outside its band")]
    UnresolvedVoltage { bus: String, residual: f64 },
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no profile value for `{device}` at step {step}")]
    MissingProfile { device: String, step: usize },
    #[error("step {step} failed at sub-step {sub_step}: {trace}")]
    StepFailure {
        step: usize,
        sub_step: usize,
        trace: String,
    },
    #[error("initialization failed: {0}")]
    InitializationFailure(String),
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum EssError {
    #[error("zone `{zone}` period {period}: {found} samples, need at least 2")]
    InsufficientSamples {
        zone: String,
        period: u8,
        found: usize,
    },
    #[error("invalid period map: {0}")]
    PeriodMap(String),
}

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("segment ranges overlap at step {0}")]
    OverlapDetected(usize),
    #[error("segment {index} failed: {source}")]
    SegmentFailure {
        index: usize,
        #[source]
        source: EngineError,
    },
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{path}: gap detected before row {row} (step {step})")]
    GapDetected { path: PathBuf, row: usize, step: usize },
    #[error("{path}: column `{id}` does not match any device in the model")]
    UnknownDevice { path: PathBuf, id: String },
    #[error("{path}: non-uniform spacing at row {row}")]
    NonUniformSpacing { path: PathBuf, row: usize },
    #[error("{path}: spacing of {found} min does not match declared resolution {expected} min")]
    ResolutionMismatch {
        path: PathBuf,
        found: i64,
        expected: u32,
    },
    #[error("{path}: row {row}: {message}")]
    Malformed {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: referenced file does not exist")]
    MissingFile { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Ess(#[from] EssError),
}
