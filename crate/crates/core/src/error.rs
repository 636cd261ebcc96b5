use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("DimensionMismatch: task {task} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        task: usize,
        expected: usize,
        found: usize,
    },
    #[error("EmptyTask: task {task} has no samples")]
    EmptyTask { task: usize },
    #[error("BadLabel: task {task} sample {index} has label {value}, hinge loss needs -1 or +1")]
    BadLabel { task: usize, index: usize, value: f64 },
    #[error("BadLambda: regularization must be positive, got {0}")]
    BadLambda(f64),
    #[error("NoTasks: a problem needs at least one task")]
    NoTasks,
    #[error("BadConfig: {0}")]
    BadConfig(String),

    #[error("NonPositiveCurvature: q={q}, rho*sigma_ii={scale}")]
    NonPositiveCurvature { q: f64, scale: f64 },
    #[error("ConjugateDomainViolation: task {task} sample {index} dual value {alpha} outside the conjugate domain")]
    ConjugateDomainViolation { task: usize, index: usize, alpha: f64 },
    #[error("NotComputable: {0}")]
    NotComputable(&'static str),
    #[error("ZeroWeights: all weight singular values are below the floor")]
    ZeroWeights,
    #[error("DegenerateDiagonal: sigma[{task}][{task}] = {value} is not positive")]
    DegenerateDiagonal { task: usize, value: f64 },
    #[error("MissingDelta: no update from task {task} this round")]
    MissingDelta { task: usize },
    #[error("RoundMismatch: expected round {expected}, message carries {found}")]
    RoundMismatch { expected: u32, found: u32 },

    #[error("BadTag: unknown message tag {0}")]
    BadTag(u8),
    #[error("TruncatedFrame: need {needed} bytes, got {got}")]
    TruncatedFrame { needed: usize, got: usize },
    #[error("TrailingBytes: frame has {extra} unexpected trailing bytes")]
    TrailingBytes { extra: usize },

    #[error("ParseError: {path}:{line}: {reason}")]
    ParseError {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("ManifestError: {0}")]
    ManifestError(String),
    #[error("IoError: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
