use thiserror::Error;

use crate::ComplexPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0} lies outside domain `{1}`")]
    PointOutsideDomain(ComplexPoint, String),

    #[error("unsupported domain `{domain}` for {operation}")]
    UnsupportedDomain { domain: String, operation: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("solver did not converge after {iterations} iterations (scaled residual {residual:e})")]
    DidNotConverge { iterations: usize, residual: f64 },

    #[error("puncture extraction unstable: {0}")]
    ExtractionUnstable(String),

    #[error("candidate comes within {distance:e} of the target value on the boundary")]
    BoundaryTooClose { distance: f64 },

    #[error("winding number {0} is not close to an integer")]
    NonIntegerWinding(f64),

    #[error("map is not conformal at {0}")]
    NonConformalMap(ComplexPoint),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("no grid path joins the query points")]
    Disconnected,

    #[error("certified lower bound {lower:e} exceeds upper bound {upper:e} beyond their error bars")]
    InconsistentBounds { lower: f64, upper: f64 },

    #[error("test map is not admissible: {0}")]
    InadmissibleTestMap(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
