use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("node count must be odd and at least 3, got {0}")]
    InvalidNodeCount(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lambda = {lambda} is within {distance:e} of the essential spectrum")]
    TooCloseToEssentialSpectrum { lambda: Complex64, distance: f64 },

    #[error("potential matrix is singular")]
    SingularM,

    #[error("quadrature grid does not match the pulse nodes")]
    GridMismatch,

    #[error("pulse has no decay fit")]
    MissingDecayFit,

    #[error("function vanishes on the contour at {lambda}")]
    ZeroOnContour { lambda: Complex64 },

    #[error("winding number did not stabilize with {nodes} contour nodes")]
    NonConvergent { nodes: usize },

    #[error("Newton derivative vanished at {lambda}")]
    Stagnation { lambda: Complex64 },

    #[error("Newton did not converge in {iters} iterations (last iterate {lambda})")]
    MaxIters { iters: usize, lambda: Complex64 },

    #[error("evolution not stationary at t = {t}: residual {residual:e}")]
    NonConvergence { t: f64, residual: f64 },

    #[error("evolution blew up at t = {t}: max |psi| = {max_abs:e}")]
    Blowup { t: f64, max_abs: f64 },

    #[error("evolution decayed to the zero state by t = {t}: max |psi| = {max_abs:e}")]
    Decayed { t: f64, max_abs: f64 },

    #[error("determinant overflow at {lambda}")]
    Overflow { lambda: Complex64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
