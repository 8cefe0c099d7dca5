use thiserror::Error;

/// Errors produced by curvkit operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} ({left_w}x{left_h} vs {right_w}x{right_h})")]
    DimensionMismatch {
        context: &'static str,
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("invalid map data: {0}")]
    InvalidMap(String),

    #[error("degenerate resample target {width}x{height}")]
    DegenerateTarget { width: usize, height: usize },

    #[error("source map {width}x{height} is smaller than the 4x4 bicubic support")]
    SourceTooSmall { width: usize, height: usize },

    #[error("{op} needs at least {needed} valid pixels, found {found}")]
    TooFewValidPixels {
        op: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("invalid scene spec: {0}")]
    InvalidScene(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss for task {task} at {scale} scale")]
    NonFiniteLoss { task: &'static str, scale: &'static str },

    #[error("malformed {format} file {path}: {reason}")]
    MalformedFile {
        format: &'static str,
        path: String,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
