use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no sources")]
    NoSources,

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("invalid intensity range: min {min}, max {max}")]
    InvalidRange { min: f64, max: f64 },

    #[error("dose rate must be positive, got {0}")]
    NonPositiveIntensity(f64),

    #[error("value {value} outside [0, 1] for {what}")]
    OutOfUnitRange { what: &'static str, value: f64 },

    #[error("degenerate normal")]
    DegenerateNormal,

    #[error("unknown encoding kind `{0}`")]
    UnknownEncoding(String),

    #[error("invalid encoding spec: {0}")]
    InvalidEncoding(String),

    #[error("invalid lookup table: {0}")]
    InvalidLut(String),

    #[error("empty mesh")]
    EmptyMesh,

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("empty after cleaning")]
    EmptyAfterCleaning,

    #[error("no crossing of the partition line")]
    NoCrossing,

    #[error("invalid statistical input: {0}")]
    InvalidData(String),

    #[error("scene `{name}` failed validation: {}", .problems.join("; "))]
    InvalidScene { name: String, problems: Vec<String> },

    #[error("unknown scene `{0}`")]
    UnknownScene(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("agent blocked: target not reached within {0} s")]
    Blocked(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
