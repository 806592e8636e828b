//! Self-contained numerical kernels used by every other module: special
//! functions, periodic quadrature, an adaptive embedded Runge-Kutta
//! integrator, Newton root finding, and complex eigenvalues of small and
//! medium dense real matrices.
//!
//! All operations are pure functions of their inputs and are safe to call
//! concurrently from parallel sweep workers.

mod eigen;
mod matrix;
mod ode;
mod quadrature;
mod root;
mod special;

pub use eigen::{eigenvalues_dense, eigenvalues_small};
pub use matrix::DenseMatrix;
pub use ode::{integrate_ode, integrate_ode_with, IntegratorConfig, OdeSample, OdeTrace, Termination};
pub use quadrature::quadrature_periodic;
pub use root::{newton_root, solve_linear, NewtonResult};
pub use special::{bessel_i0, bessel_j0, gamma_fn};

use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum NumericsError {
    /// Argument outside the supported range of an operation.
    #[error("{what}: argument {value} outside supported range")]
    OutOfRange { what: &'static str, value: f64 },
    /// Pole of the gamma function (non-positive integer argument).
    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),
    /// A non-finite value was produced or supplied where a finite one is required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    /// Invalid integrator configuration.
    #[error("invalid integrator configuration: {0}")]
    BadConfig(&'static str),
    /// The adaptive step fell below the hard floor; the problem is too stiff
    /// for the explicit pair.
    #[error("step size underflow at l = {l} (required step {step:e} < 1e-14)")]
    StepUnderflow { l: f64, step: f64 },
    /// Newton iteration did not reach the requested tolerance.
    #[error("Newton iteration did not converge within {iterations} iterations (residual {residual:e})")]
    NewtonNoConvergence { iterations: usize, residual: f64 },
    /// The linear system solved inside Newton (or elsewhere) is singular.
    #[error("singular linear system (pivot magnitude {0:e})")]
    SingularMatrix(f64),
    /// The QR iteration failed to deflate an eigenvalue.
    #[error("QR eigensolver failed to converge after {0} iterations")]
    QrNoConvergence(usize),
    /// Matrix dimension outside the supported range of the chosen solver.
    #[error("matrix dimension {dim} not supported by {what}")]
    BadDimension { dim: usize, what: &'static str },
    /// Empty input where at least one element is required.
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
}

pub type Result<T> = std::result::Result<T, NumericsError>;
