//! Numerical toolkit for ultrabroadband squeezed light generated by
//! ultrashort drive pulses in a thin χ⁽²⁾ crystal.
//!
//! The crate is organised around the stages of the physics:
//!
//! * [`drive`] — drive pulse shapes (CW, half-cycle, single-cycle, tabulated)
//!   in time and frequency domain, plus crystal parameters and the derived
//!   coupling constants;
//! * [`kernel`] — the two-mode squeezing kernel on a signed frequency grid and
//!   the truncated-series Bogoliubov map it generates;
//! * [`spectra`] — closed-form and quadrature-based spectral photon densities,
//!   CW flux (including finite-window mode sums), pair expectations, and the
//!   perturbative regime check;
//! * [`variance`] — first- and second-order field variance traces;
//! * [`geodesics`] — effective world lines of probe modes riding the
//!   refractive-index perturbation, both in implicit closed form and by direct
//!   ODE integration, plus ray-density histograms;
//! * [`analysis`] — exponential tail fits, effective temperatures, and the
//!   acceleration temperature profile;
//! * [`numerics`] — the adaptive quadrature, root finding, special functions,
//!   ODE stepping and least-squares helpers the rest of the crate is built on.
//!
//! [`validate`] bundles the end-to-end consistency checks used by the
//! `squeezelab validate` subcommand and the acceptance test suite.

pub mod analysis;
pub mod constants;
pub mod drive;
pub mod geodesics;
pub mod kernel;
pub mod numerics;
pub mod spectra;
pub mod validate;
pub mod variance;

pub use drive::{CrystalParams, DrivePulse};
