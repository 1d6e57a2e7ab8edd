use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by origin: data/shape validation, file formats, and
/// numeric failures. The CLI maps `is_validation` errors to exit code 1 and
/// everything else to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("labels must contain both classes ({0})")]
    SingleClass(String),

    #[error("missing value in feature '{feature}' (imputation is upstream of model evaluation)")]
    MissingValue { feature: String },

    #[error("unknown feature '{0}'")]
    UnknownFeature(String),

    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("video file error: {0}")]
    VideoFile(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input (files, configs, arguments)
    /// rather than runtime/numeric failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ShapeMismatch(_)
                | Error::InvalidArgument(_)
                | Error::EmptyInput(_)
                | Error::SingleClass(_)
                | Error::MissingValue { .. }
                | Error::UnknownFeature(_)
                | Error::Csv { .. }
                | Error::Config(_)
                | Error::ModelFile(_)
                | Error::VideoFile(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
