use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("point is {distance:e} m from the loop plane (limit {limit:e} m)")]
    OffPlane { distance: f64, limit: f64 },
    #[error("query point within {distance:e} m of the conductor")]
    Singularity { distance: f64 },
    #[error("field magnitude {magnitude:e} too small to define a direction")]
    DegenerateDirection { magnitude: f64 },
    #[error("trajectory never crosses the loop plane")]
    NoInsertion,
    #[error("curves are {distance:e} m apart, linking number is ill-conditioned")]
    IllConditioned { distance: f64 },
    #[error("rope overstretched: bound points {distance:.6} m apart, rope between them is {length:.6} m")]
    Overstretch { distance: f64, length: f64 },
    #[error("rope has no crossing in projection")]
    NoLoop,
    #[error("action failed: {0}")]
    Action(String),
    #[error("malformed behavior tree: {0}")]
    Structure(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep its rendered form.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
