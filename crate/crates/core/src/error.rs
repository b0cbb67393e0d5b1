use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{kind} point {index} at ({x:.6}, {y:.6}) lies on crack arc {arc} (distance {distance:.3e})")]
    PointOnCrack {
        kind: &'static str,
        index: usize,
        x: f64,
        y: f64,
        arc: usize,
        distance: f64,
    },

    #[error("kernel evaluated at coincident points (r = {r:.3e})")]
    SingularEvaluation { r: f64 },

    #[error("crack system is singular at frequency eta = {eta:.6} (condition estimate {cond:.3e})")]
    SingularSystem { eta: f64, cond: f64 },

    #[error("crack system solve residual {residual:.3e} exceeds tolerance at frequency eta = {eta:.6}")]
    InaccurateSolve { eta: f64, residual: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid indicator map: {0}")]
    InvalidMap(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
}
