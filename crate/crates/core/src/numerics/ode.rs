//! Adaptive Dormand–Prince 5(4) stepping for scalar first-order ODEs.

use super::NumericsError;

/// Tolerances and limits for the adaptive integration.
#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; `None` picks a fraction of the span.
    pub h_init: Option<f64>,
    /// Relative step floor: the run aborts when |h| falls below
    /// `h_min_frac · span`.
    pub h_min_frac: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_min_frac: 1e-13,
            max_steps: 200_000,
        }
    }
}

/// One Dormand–Prince 5(4) step from `(x, y)` with width `h`.
/// Returns the fifth-order solution and the embedded error estimate.
pub fn dp45_step<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = f(x, y);
    let k2 = f(x + h / 5.0, y + h * (k1 / 5.0));
    let k3 = f(x + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = f(
        x + 4.0 * h / 5.0,
        y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
    );
    let k5 = f(
        x + 8.0 * h / 9.0,
        y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
            - 212.0 / 729.0 * k4),
    );
    let k6 = f(
        x + h,
        y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3
            + 49.0 / 176.0 * k4
            - 5103.0 / 18656.0 * k5),
    );
    let y5 = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
        - 2187.0 / 6784.0 * k5
        + 11.0 / 84.0 * k6);
    let k7 = f(x + h, y5);
    let y4 = y + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4
        - 92097.0 / 339200.0 * k5
        + 187.0 / 2100.0 * k6
        + k7 / 40.0);
    (y5, y5 - y4)
}

/// Integrate dy/dx = f(x, y) from `x0` to `x_end`, recording every accepted
/// step. The final entry lands exactly on `x_end`.
pub fn integrate_scalar_ode<F: Fn(f64, f64) -> f64>(
    f: F,
    x0: f64,
    y0: f64,
    x_end: f64,
    opts: &OdeOptions,
) -> Result<Vec<(f64, f64)>, NumericsError> {
    let span = x_end - x0;
    if span == 0.0 {
        return Ok(vec![(x0, y0)]);
    }
    let direction = span.signum();
    let mut h = opts.h_init.unwrap_or(span.abs() / 100.0) * direction;
    let h_min = opts.h_min_frac * span.abs();

    let mut x = x0;
    let mut y = y0;
    let mut out = vec![(x, y)];

    for _ in 0..opts.max_steps {
        if (x_end - x) * direction <= 0.0 {
            break;
        }
        if (x + h - x_end) * direction > 0.0 {
            h = x_end - x;
        }
        let (y_new, err) = dp45_step(&f, x, y, h);
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if ratio <= 1.0 {
            x += h;
            y = y_new;
            out.push((x, y));
        }
        let factor = if ratio > 0.0 {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h.abs() < h_min {
            return Err(NumericsError::StepFailure { x, h });
        }
    }

    if (x_end - x) * direction > 0.0 {
        return Err(NumericsError::StepFailure { x, h });
    }
    Ok(out)
}
