//! Thermal reading of the emitted spectra.
//!
//! The exponential tail of a pulsed photon density mimics a Boltzmann factor:
//! ρ(ω)/ω ∝ e^{−λω} defines an effective temperature T = ħ/(k_B λ). Two
//! reference temperatures frame it: the acceleration temperature
//! T_a = ħa/(2πk_B c₀) of an indefinitely accelerated observer, and the
//! finite-lifetime ("diamond") temperature T_𝒯 = 2ħ/(πk_B 𝒯) of an observer
//! confined to a causal window of duration 𝒯. For an accelerated observer
//! confined to such a window the instantaneous temperature interpolates
//! between the two,
//!
//!   T(t̃) = T_a ε / [√(1+ε²) − √(1+ε²t̃²)],   ε = 2 T_a / T_𝒯,
//!
//! with t̃ the fraction of the window elapsed. All temperatures are in kelvin
//! and frequencies in rad/s; the SI constants live in [`crate::constants`].

use thiserror::Error;

use crate::constants::{C0, HBAR, KB};
use crate::numerics::{fit_exponential_tail, NumericsError, TailFit};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error("observation duration must be positive, got {value}")]
    NonPositiveDuration { value: f64 },
    #[error("temperatures must be positive, got {value}")]
    NonPositiveTemperature { value: f64 },
    #[error("fractional window time must satisfy |t| < 1, got {value}")]
    FractionalTimeOutOfRange { value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Temperature read by an observer at constant proper acceleration a:
/// ħa/(2πk_B c₀).
pub fn unruh_temperature(acceleration: f64) -> f64 {
    HBAR * acceleration / (2.0 * PI * KB * C0)
}

/// Temperature set purely by a finite observation window of duration 𝒯:
/// 2ħ/(πk_B 𝒯).
pub fn diamond_temperature(duration: f64) -> Result<f64, AnalysisError> {
    if !(duration > 0.0) {
        return Err(AnalysisError::NonPositiveDuration { value: duration });
    }
    Ok(2.0 * HBAR / (PI * KB * duration))
}

/// Instantaneous temperature for an accelerated observer confined to a
/// causal window, as a function of the elapsed window fraction t̃ ∈ (−1, 1).
///
/// Limits: ε = 2T_a/T_𝒯 → ∞ recovers the acceleration value T_a at the
/// window centre; ε → 0 recovers the window value T_𝒯. T is even in t̃ and
/// grows monotonically toward the window edges.
pub fn temperature_profile(
    t_acceleration: f64,
    t_window: f64,
    t_tilde: f64,
) -> Result<f64, AnalysisError> {
    if !(t_acceleration > 0.0) {
        return Err(AnalysisError::NonPositiveTemperature { value: t_acceleration });
    }
    if !(t_window > 0.0) {
        return Err(AnalysisError::NonPositiveTemperature { value: t_window });
    }
    if !(t_tilde.abs() < 1.0) {
        return Err(AnalysisError::FractionalTimeOutOfRange { value: t_tilde });
    }
    let eps = 2.0 * t_acceleration / t_window;
    let denom = (1.0 + eps * eps).sqrt() - (1.0 + (eps * t_tilde).powi(2)).sqrt();
    Ok(t_acceleration * eps / denom)
}

#[derive(Debug, Clone)]
pub struct EffectiveTemperature {
    pub kelvin: f64,
    /// Fitted decay constant λ of ρ(ω)/ω ∝ e^{−λω}, in seconds.
    pub decay_time: f64,
    pub fit: TailFit,
}

/// Effective temperature of a sampled photon spectrum.
///
/// The kinematic ω prefactor is divided out first — fitting the raw density
/// biases the decay constant by the logarithmic derivative of ω across the
/// window. The fit uses the deep-tail band ω/Γ ∈ [5, 12], where closed-form
/// pulse spectra are single exponentials to better than 1e-10.
pub fn effective_temperature_from_spectrum(
    samples: &[(f64, f64)],
    gamma: f64,
) -> Result<EffectiveTemperature, AnalysisError> {
    let weighted: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(omega, _)| omega > 0.0)
        .map(|&(omega, rho)| (omega, rho / omega))
        .collect();
    let fit = fit_exponential_tail(&weighted, (5.0 * gamma, 12.0 * gamma))?;
    let decay_time = fit.decay_rate;
    Ok(EffectiveTemperature { kelvin: HBAR / (KB * decay_time), decay_time, fit })
}

/// Spectral photon density of a thermal state: ω · n̄(ω) with the Bose
/// occupation n̄ = 1/(e^{ħω/k_B T} − 1). Useful as a synthetic input for the
/// thermometry pipeline.
pub fn planck_weighted_occupation(omega: f64, temperature: f64) -> f64 {
    omega / ((HBAR * omega / (KB * temperature)).exp_m1())
}
