use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of domain: {reason}")]
    ParameterDomain { name: &'static str, reason: String },

    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    #[error("invalid ellipse geometry: {0}")]
    Geometry(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("alignment failed at frame {frame}: {reason}")]
    Alignment { frame: usize, reason: String },

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("pod basis: {0}")]
    Basis(String),

    #[error("config: {0}")]
    Config(String),

    #[error("format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Error {
    Error::ParameterDomain {
        name,
        reason: reason.into(),
    }
}
