use thiserror::Error;

/// Errors raised by the CSDF pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the grid; nearest valid point is {clamped:?}")]
    OutOfDomain { point: [f64; 3], clamped: [f64; 3] },

    #[error("invalid grid dimensions {0:?}")]
    InvalidDims([usize; 3]),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("mesh is not watertight: {odd_fraction:.4} of probe rays have odd parity")]
    NotWatertight { odd_fraction: f64 },

    #[error("empty geometry: {0}")]
    EmptyGeometry(&'static str),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("output too large: {len} voxels along axis exceeds maximum {max}")]
    TooLarge { len: usize, max: usize },

    #[error("tiled copy too thin: {voxels:.3} voxels per copy, need at least 2")]
    TooThin { voxels: f64 },

    #[error("invalid zone field `{field}`: {reason}")]
    InvalidZone { field: &'static str, reason: String },

    #[error("degenerate normal: zero distance gradient")]
    DegenerateNormal,

    #[error("image codec error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::InvalidDims(_) => "invalid_dims",
            Error::Format { .. } => "format",
            Error::NotWatertight { .. } => "not_watertight",
            Error::EmptyGeometry(_) => "empty_geometry",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::FrameMismatch(_) => "frame_mismatch",
            Error::TooLarge { .. } => "too_large",
            Error::TooThin { .. } => "too_thin",
            Error::InvalidZone { .. } => "invalid_zone",
            Error::DegenerateNormal => "degenerate_normal",
            Error::Image(_) => "image",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
