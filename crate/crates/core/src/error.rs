use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("search space must contain at least one point")]
    EmptySearchSpace,
    #[error("value set Y must be non-empty")]
    EmptyValueSet,
    #[error("value set Y must be finite and strictly increasing (offending position {position})")]
    InvalidValueSet { position: usize },
    #[error("enumeration of {count} functions exceeds the cap of {cap}")]
    EnumerationTooLarge { count: String, cap: u64 },
    #[error("function rank {rank} out of range (space holds {count} functions)")]
    RankOutOfRange { rank: u64, count: u64 },
    #[error("objective table invalid: {0}")]
    InvalidTable(String),
    #[error("performance measure needs a non-empty trace")]
    EmptyTrace,
    #[error("best_at_step({k}) requested on a trace of length {m}")]
    StepBeyondTrace { k: usize, m: usize },
    #[error("cannot draw {m} off-data-set samples from a space of {x_size} points")]
    SampleCountOutOfRange { m: usize, x_size: usize },
    #[error("algorithm {algorithm} proposed x={x}, which is visited or out of range")]
    ContractViolation { algorithm: String, x: usize },
    #[error("point {x} already present in trace")]
    DuplicatePoint { x: usize },
    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange { what: &'static str, index: usize, size: usize },
    #[error("cannot parse `{input}`: {reason}")]
    Syntax { input: String, reason: String },
    #[error("unknown {kind} `{name}`")]
    UnknownSpec { kind: &'static str, name: String },
    #[error("`{spec}` is missing required argument `{arg}`")]
    MissingArgument { spec: String, arg: String },
    #[error("`{spec}`: invalid argument `{arg}`: {reason}")]
    InvalidArgument { spec: String, arg: String, reason: String },
    #[error("invalid fold count {folds} for {m} training pairs (need 2 <= folds <= m)")]
    InvalidFolds { folds: usize, m: usize },
    #[error("meta-learner needs at least one candidate")]
    EmptyCandidates,
    #[error("training set covers all of X; off-training-set cost is undefined")]
    TrainingCoversSpace,
    #[error("row {row} is not a probability vector: {reason}")]
    NotStochastic { row: usize, reason: String },
    #[error("prior assigns zero mass to every function consistent with the data")]
    ZeroPosterior,
    #[error("prior is not a point on the simplex: {0}")]
    InvalidPrior(String),
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("every point has been visited")]
    NoUnvisitedPoints,
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("temperature candidates must be non-empty, positive and distinct")]
    InvalidSchedule,
    #[error("{0}")]
    Invalid(String),
}
