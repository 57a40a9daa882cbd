//! Shared numerical machinery: adaptive quadrature, special functions,
//! root finding, log-linear tail fits, and an adaptive Runge–Kutta stepper.

pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod tail_fit;

pub use ode::{integrate_scalar_ode, OdeOptions};
pub use quadrature::{integrate_1d, integrate_complex, panel_nodes, QuadratureResult, QuadratureSpec};
pub use roots::solve_monotone_root;
pub use special::{chi, chi_inverse};
pub use tail_fit::{fit_exponential_tail, TailFit};

use thiserror::Error;

/// Failures surfaced by the numerics layer.
#[derive(Debug, Clone, Error)]
pub enum NumericsError {
    /// The subdivision budget ran out before the tolerance was met. The best
    /// available estimate and its error bound are carried along so callers can
    /// decide whether to widen tolerances or abort.
    #[error("quadrature did not converge: estimate {value:e} with error {error:e} above target {target:e}")]
    NonConvergence { value: f64, error: f64, target: f64 },
    /// Root bracketing failed: same sign at both ends.
    #[error("no sign change on [{a}, {b}]: f(a) = {fa:e}, f(b) = {fb:e}")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    /// Fewer samples in the fit window than the fit requires.
    #[error("tail fit needs at least {needed} samples in the window, found {got}")]
    InsufficientData { needed: usize, got: usize },
    /// Log-linear fitting needs strictly positive ordinates.
    #[error("tail fit sample at x = {x} has non-positive value {value:e}")]
    NonPositiveSample { x: f64, value: f64 },
    /// All abscissae in the fit window coincide; the slope is undefined.
    #[error("tail fit window degenerate: all abscissae equal {x}")]
    DegenerateFitWindow { x: f64 },
    /// Adaptive ODE step size collapsed below the resolution floor.
    #[error("ODE step size underflow at x = {x} (h = {h:e})")]
    StepFailure { x: f64, h: f64 },
}
