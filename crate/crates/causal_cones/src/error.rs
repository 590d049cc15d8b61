use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("systems appear in both operands: {0}")]
    LabelCollision(String),
    #[error("unknown system {0}")]
    UnknownSystem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator spaces do not match: {0}")]
    SpaceMismatch(String),
    #[error("operator is not normalized: trace {trace}, expected {expected}")]
    NotNormalized { trace: f64, expected: f64 },
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("invalid system label: {0}")]
    InvalidLabel(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("expected {expected} parties, found {found}")]
    WrongPartyCount { expected: usize, found: usize },
    #[error("no restricted cone matches the scenario: {0}")]
    NoMatchingScenario(String),
    #[error("recursion depth exceeded: {0} parties (cap {1})")]
    RecursionDepth(usize, usize),
    #[error("{0} parties give too many permutations (cap {1})")]
    FactorialBlowup(usize, usize),
    #[error("causal order blocks overlap on party {0}")]
    OverlappingBlocks(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("dual solution does not certify: {0}")]
    NonCertifying(String),
    #[error("not a valid process matrix: {0}")]
    InvalidProcess(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("cone selection: {0}")]
    ConeSelection(String),
    #[error("schema violation in {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
