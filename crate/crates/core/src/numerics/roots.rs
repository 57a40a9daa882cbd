//! Safeguarded scalar root finding.

use super::NumericsError;

/// Find the root of a monotone `f` on `[a, b]` by a bisection/secant hybrid.
///
/// Requires a sign change on the bracket; each step tries the secant estimate
/// and falls back to bisection whenever the estimate leaves the current
/// bracket or fails to shrink it fast enough, so convergence is guaranteed.
/// `tol` is an absolute tolerance on the abscissa.
pub fn solve_monotone_root<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericsError::NoSignChange { a: lo, b: hi, fa: flo, fb: fhi });
    }

    for _ in 0..200 {
        let width = hi - lo;
        if width <= tol || width <= f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        // Secant candidate, safeguarded to the interior of the bracket.
        let secant = lo - flo * width / (fhi - flo);
        let margin = 0.01 * width;
        let x = if secant > lo + margin && secant < hi - margin {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}
