use thiserror::Error;

use crate::field::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("point ({x}, {y}) is outside the admissible region: {reason}", x = .point.x, y = .point.y)]
    OutOfBounds { point: Point, reason: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("assembly produced a non-positive diagonal at node ({i}, {j})")]
    Assembly { i: usize, j: usize },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("active set cycled for {iterations} iterations")]
    Cycling { iterations: usize },

    #[error("no free boundary: {0}")]
    NoFreeBoundary(String),

    #[error("radius error: {0}")]
    Radius(String),

    #[error("radius {r} is below the resolvable scale {min}")]
    Underresolved { r: f64, min: f64 },

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("no profile fits the blow-up (polynomial residual {poly:e}, half-space residual {half:e})")]
    NoFit { poly: f64, half: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
