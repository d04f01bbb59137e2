use nalgebra::Vector2;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level set gradient is undefined at ({}, {})", .0.x, .0.y)]
    SingularGradient(Vector2<f64>),

    #[error(
        "boundary projection failed for point ({}, {}): residual {residual:.3e} after {iterations} iterations",
        .point.x,
        .point.y
    )]
    ProjectionFailed {
        point: Vector2<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("mesh too coarse for domain: no background triangle lies inside")]
    MeshTooCoarse,

    #[error("triangle {0} has non-positive signed area")]
    DegenerateTriangle(usize),

    #[error("edge ({0}, {1}) has more than two incident triangles")]
    NonManifoldEdge(usize, usize),

    #[error("boundary edges do not form closed loops (stuck at vertex {0})")]
    OpenBoundary(usize),

    #[error("unsupported quadrature request: {0}")]
    UnsupportedQuadrature(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factorization failed: {0}")]
    SingularMatrix(String),

    #[error("relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("problem with {0} unknowns is too large for a dense computation (limit {1})")]
    TooLargeForDense(usize, usize),

    #[error("level n = {n}: {source}")]
    Level {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
