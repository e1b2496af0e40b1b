use std::path::PathBuf;

use crate::fitting::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or inconsistent input data.
    Data,
    /// A numeric procedure could not produce a finite answer.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid has zero width or height")]
    ZeroDimension,
    #[error("grid payload has {found} values, expected {expected}")]
    BadPayloadLength { expected: usize, found: usize },
    #[error("grid value at index {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("map is constant; standardization is undefined")]
    ConstantMap,
    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("linear combination needs at least one term")]
    EmptyCombination,
    #[error("fixation ({x}, {y}) lies outside the {width}x{height} grid")]
    OutOfBoundsFixation {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("malformed raster header: {0}")]
    MalformedHeader(String),
    #[error("raster payload truncated: expected {expected} values, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("scanpath csv is missing column `{0}`")]
    MissingColumn(String),
    #[error("scanpath csv: {0}")]
    Csv(String),
    #[error("fixation indices for image `{image_id}`, subject `{subject_id}` are not contiguous from 1")]
    NonContiguousIndices { image_id: String, subject_id: String },
    #[error("fixation ({x}, {y}) of image `{image_id}` is outside its {width}x{height} bounds")]
    OutOfBounds {
        image_id: String,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("n-step context needs target index > {needed}, got {target}")]
    InsufficientHistory { target: usize, needed: usize },
    #[error("dataset has no eligible fixations")]
    EmptyDataset,
    #[error("cannot decode parameter vector: {0}")]
    DecodeError(String),
    #[error("objective is not finite at the evaluated point")]
    NonFiniteObjective,
    #[error("line search failed to decrease the objective (best objective {})", .best.final_objective())]
    LineSearchFailure { best: Box<FitResult> },
    #[error("reports are not comparable: {0}")]
    MismatchedConfig(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ConstantMap
            | Error::DecodeError(_)
            | Error::NonFiniteObjective
            | Error::LineSearchFailure { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
