use thiserror::Error;

pub type Result<T, E = PspError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PspError {
    #[error("need at least two classes, got K={0}")]
    TooFewClasses(usize),
    #[error("label {label} appears in more than one group")]
    OverlappingGroups { label: u32 },
    #[error("label {label} is not covered by any group")]
    UncoveredLabel { label: u32 },
    #[error("group {group} is empty")]
    EmptyGroup { group: usize },
    #[error("target level {alpha} for group {group} is outside (0, 1)")]
    AlphaOutOfRange { group: usize, alpha: f64 },
    #[error("expected {expected} target levels, got {actual}")]
    AlphaCountMismatch { expected: usize, actual: usize },
    #[error("label {label} is outside 1..={k}")]
    LabelOutOfRange { label: i64, k: usize },
    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("score matrix has no columns")]
    EmptyScores,
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteScore { row: usize, col: usize },
    #[error("subject index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("training data has no samples of class {label}")]
    MissingClass { label: u32 },
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("no Monte-Carlo draw was pre-classified into the group")]
    NoGroupMembers,
    #[error("no grid threshold satisfies the ratio bound at level {alpha}")]
    NoFeasibleThreshold { alpha: f64 },
    #[error("set size bound L={l} must lie in 1..={max}")]
    InvalidL { l: usize, max: usize },
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("the hold-out set is empty")]
    ZeroCalibration,
    #[error("decisions of group {group} differ from pre-labels although theta_hat={theta_hat} <= alpha={alpha}")]
    NonDegradationViolated {
        group: usize,
        theta_hat: f64,
        alpha: f64,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<PspError>,
    },
}
