//! Numerical laboratory for the classical obstacle problem with
//! Sobolev-regular coefficient matrices.
//!
//! The crate solves the discrete complementarity problem for
//! `u = w - psi`, extracts the coincidence set and free boundary, and
//! measures the Weiss and Monneau energies in the frame normalized at a
//! free-boundary point. Measured quasi-monotonicity constants, growth
//! constants and blow-up fits feed a regular/singular classification.
//!
//! Module map:
//!
//! * [`field`]: uniform grids, nodal fields, interpolation, evaluators.
//! * [`problem`]: problem data, coefficient families, hypothesis checks,
//!   moduli of continuity and Dini integrals.
//! * [`solve`]: assembly and complementarity solvers (PSOR, active set).
//! * [`geometry`]: coincidence set, free boundary, growth constants.
//! * [`normalize`]: affine normalization at a free-boundary point.
//! * [`monotone`]: quadrature, Weiss/Monneau energies, verdicts, freezing.
//! * [`blowup`]: rescalings, profile fits, classification.

pub mod blowup;
pub mod error;
pub mod field;
pub mod geometry;
pub mod monotone;
pub mod normalize;
pub mod problem;
pub mod quad;
pub mod solve;

pub use error::{Error, Result};
pub use field::{Grid, Jet, MatrixField, Point, ScalarField};

/// Formats a float with nine significant digits, the precision used by
/// every CSV and summary writer in the workspace.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.8e}")
}
