use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("quadrature order too low: {0} < 16")]
    QuadratureOrder(usize),

    #[error("detector spacing {spacing} exceeds the half-wavelength limit {limit}")]
    Nyquist { spacing: f64, limit: f64 },

    #[error("rim-clipped frequency: |{which}| = {norm} >= gamma * k0 = {limit}")]
    RimClipped {
        which: &'static str,
        norm: f64,
        limit: f64,
    },

    #[error("observation inside scatterer unsupported")]
    InsideScatterer,

    #[error("Green's function singularity at x = 0")]
    Singular,

    #[error("ratio undefined outside Sigma_2")]
    RatioUndefined,

    #[error("nonphysical contrast: 1 + f/k0^2 = {0} is a negative real")]
    NonphysicalContrast(f64),

    #[error("grid resolution {0} out of range ({1})")]
    Resolution(usize, &'static str),

    /// Naive backpropagation needs `Sigma_1`, which is empty for this geometry.
    #[error("Sigma_1 is empty: the measurements carry no directly readable coefficients")]
    EmptySigma1,

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("{0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
