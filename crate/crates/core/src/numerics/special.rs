//! Special functions: the hyperbolic cosine integral Chi and its inverse.

use crate::constants::EULER_GAMMA;

use super::quadrature::{integrate_1d, QuadratureSpec};
use super::roots::solve_monotone_root;
use super::NumericsError;

/// Hyperbolic cosine integral Chi(x) = γ + ln x + ∫₀ˣ (cosh t − 1)/t dt,
/// for x > 0.
///
/// Below x = 4 the power series Σ x^{2k} / (2k (2k)!) is used (all terms
/// positive, fast convergence); above, the defining integral is evaluated by
/// quadrature. Monotone increasing on (0, ∞), ranging from −∞ to +∞ with the
/// single zero near x ≈ 0.5238.
pub fn chi(x: f64) -> f64 {
    assert!(x > 0.0, "chi requires a positive argument, got {x}");
    if x < 4.0 {
        let x2 = x * x;
        let mut term = 0.5 * x2; // x^2 / 2!
        let mut acc = 0.0;
        let mut k = 1u32;
        loop {
            let contribution = term / (2.0 * k as f64);
            acc += contribution;
            if contribution < 1e-17 * (1.0 + acc.abs()) {
                break;
            }
            k += 1;
            term *= x2 / ((2.0 * k as f64 - 1.0) * (2.0 * k as f64));
        }
        EULER_GAMMA + x.ln() + acc
    } else {
        let spec = QuadratureSpec::default()
            .with_tolerances(1e-13, 0.0)
            .with_budget(2048);
        let integral = integrate_1d(
            |t| {
                if t == 0.0 {
                    0.0
                } else {
                    (t.cosh() - 1.0) / t
                }
            },
            (0.0, x),
            &spec,
        )
        .expect("cosh integrand is smooth")
        .value;
        EULER_GAMMA + x.ln() + integral
    }
}

/// Inverse of [`chi`]: the unique x > 0 with Chi(x) = y.
pub fn chi_inverse(y: f64) -> Result<f64, NumericsError> {
    // Initial bracket from the asymptotics: Chi(x) ≈ γ + ln x for small x,
    // and Chi grows like e^x / (2x) for large x.
    let mut lo;
    let mut hi;
    if y < chi(1.0) {
        let guess = (y - EULER_GAMMA).exp();
        lo = (0.25 * guess).max(f64::MIN_POSITIVE);
        hi = 1.0;
        while chi(lo) > y {
            lo *= 0.25;
            if lo < 1e-300 {
                break;
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while chi(hi) < y {
            hi *= 2.0;
            assert!(hi < 720.0, "chi_inverse argument {y} out of f64 range");
        }
    }
    solve_monotone_root(|x| chi(x) - y, lo, hi, 1e-14)
}
