use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("subject {id}: nonpositive time {time}")]
    NonpositiveTime { id: String, time: f64 },

    #[error("subject {id}: event code out of range ({event} > {causes})")]
    EventOutOfRange { id: String, event: u32, causes: u32 },

    #[error("subject {id}: ragged covariates (expected {expected}, found {found})")]
    RaggedCovariates {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate subject id {0}")]
    DuplicateId(String),

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("no prediction for subject {0}")]
    MissingPrediction(String),

    #[error("subject {0}: censoring survival is zero just before its event time")]
    ZeroCensoringSurvival(String),

    #[error("no usable events")]
    NoUsableEvents,

    #[error("degenerate outcome: all weighted working values equal")]
    DegenerateOutcome,

    #[error("all regression weights are zero")]
    ZeroWeights,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("no censoring support at t = {0}")]
    NoCensoringSupport(f64),

    #[error("no comparable pairs")]
    NoComparablePairs,

    #[error("no cases or no controls at t = {0}")]
    NoCasesOrControls(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bracket expansion failed: {0}")]
    BracketFailure(String),

    #[error("censoring rate {target} unattainable: achievable range [{min}, {max}], closest {closest}")]
    UnattainableCensoring {
        target: f64,
        min: f64,
        max: f64,
        closest: f64,
    },

    #[error("too many failed bootstrap resamples: {failed} of {total}")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
