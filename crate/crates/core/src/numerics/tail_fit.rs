//! Log-linear least squares for exponential tails.

use super::NumericsError;

/// Result of fitting y ≈ amplitude · exp(−decay_rate · x) on a window.
#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    pub amplitude: f64,
    pub decay_rate: f64,
    /// RMS residual of the straight-line fit in log space.
    pub residual_rms: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
}

/// Minimum number of in-window samples for a meaningful fit.
pub const MIN_TAIL_SAMPLES: usize = 8;

/// Least-squares straight line through (x, ln y) for the samples inside the
/// closed window. All in-window ordinates must be strictly positive.
pub fn fit_exponential_tail(
    samples: &[(f64, f64)],
    window: (f64, f64),
) -> Result<TailFit, NumericsError> {
    let mut xs = Vec::new();
    let mut logs = Vec::new();
    for &(x, y) in samples {
        if x < window.0 || x > window.1 {
            continue;
        }
        if y <= 0.0 {
            return Err(NumericsError::NonPositiveSample { x, value: y });
        }
        xs.push(x);
        logs.push(y.ln());
    }
    let n = xs.len();
    if n < MIN_TAIL_SAMPLES {
        return Err(NumericsError::InsufficientData { needed: MIN_TAIL_SAMPLES, got: n });
    }

    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let l_mean = logs.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxl = 0.0;
    for i in 0..n {
        let dx = xs[i] - x_mean;
        sxx += dx * dx;
        sxl += dx * (logs[i] - l_mean);
    }
    if sxx == 0.0 {
        return Err(NumericsError::DegenerateFitWindow { x: x_mean });
    }
    let slope = sxl / sxx;
    let intercept = l_mean - slope * x_mean;

    let mut ss = 0.0;
    for i in 0..n {
        let r = logs[i] - (intercept + slope * xs[i]);
        ss += r * r;
    }

    Ok(TailFit {
        amplitude: intercept.exp(),
        decay_rate: -slope,
        residual_rms: (ss / nf).sqrt(),
        window,
        n_samples: n,
    })
}
