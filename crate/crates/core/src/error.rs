use std::path::PathBuf;

/// Every failure the library can report. Each variant maps to a stable
/// machine-readable code (see [`Error::code`]) that the HTTP layer and the
/// CLI surface verbatim.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("schema violation in {file} at `{field}`: {message}")]
    SchemaViolation {
        file: String,
        field: String,
        message: String,
    },

    #[error("dangling reference: {owner} refers to unknown `{reference}`")]
    DanglingReference { owner: String, reference: String },

    #[error("monster pool has {found} entries, expected {expected}")]
    PoolSizeMismatch { found: usize, expected: usize },

    #[error("character level {0} is not in the XP threshold table")]
    UnsupportedLevel(u8),

    #[error("encounter has no enemies")]
    EmptyEncounter,

    #[error("invalid encounter: {0}")]
    InvalidEncounter(String),

    #[error("invalid party: {0}")]
    InvalidParty(String),

    #[error("unknown character class `{0}`")]
    UnknownClass(String),

    #[error("invalid dice expression `{0}`")]
    DiceParse(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("checkpoint version mismatch: {0}")]
    VersionMismatch(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingFile { .. } => "MISSING_FILE",
            Error::SchemaViolation { .. } => "SCHEMA_VIOLATION",
            Error::DanglingReference { .. } => "DANGLING_REFERENCE",
            Error::PoolSizeMismatch { .. } => "POOL_SIZE_MISMATCH",
            Error::UnsupportedLevel(_) => "UNSUPPORTED_LEVEL",
            Error::EmptyEncounter => "EMPTY_ENCOUNTER",
            Error::InvalidEncounter(_) => "INVALID_ENCOUNTER",
            Error::InvalidParty(_) => "INVALID_PARTY",
            Error::UnknownClass(_) => "UNKNOWN_CLASS",
            Error::DiceParse(_) => "DICE_PARSE",
            Error::ShapeMismatch(_) => "SHAPE_MISMATCH",
            Error::TraceMismatch(_) => "TRACE_MISMATCH",
            Error::VersionMismatch(_) => "VERSION_MISMATCH",
            Error::CorruptCheckpoint(_) => "CORRUPT_CHECKPOINT",
            Error::NonFiniteGradient { .. } => "NON_FINITE_GRADIENT",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::Io { .. } => "IO",
            Error::Json(_) => "JSON",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
