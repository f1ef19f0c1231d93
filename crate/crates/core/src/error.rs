use thiserror::Error;

/// Errors produced anywhere in the localization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every support point scored zero likelihood (or zero prior mass).
    #[error("observation has zero likelihood at every grid point")]
    AllZeroLikelihood,

    #[error("distance {distance} m is below the model floor of {floor} m")]
    SingularDistance { distance: f64, floor: f64 },

    #[error("unknown transmitter `{0}`")]
    UnknownTransmitter(String),

    #[error("location ({x}, {y}) is not a survey location")]
    UnknownLocation { x: f64, y: f64 },

    #[error("observation shares no transmitter with the fingerprint database")]
    NoCommonTransmitters,

    #[error("observation vector has no readings")]
    EmptyObservation,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),

    #[error("curves are defined on different distance grids")]
    GridMismatch,

    #[error("curves are not incomparable; no witness costs exist")]
    NotIncomparable,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
