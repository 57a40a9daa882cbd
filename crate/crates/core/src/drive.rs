//! Drive pulses and crystal parameters.
//!
//! Frequency-domain fields follow the convention
//! E(ω) = (1/2π) ∫ E(τ) e^{iωτ} dτ,  E(τ) = ∫ E(ω) e^{−iωτ} dω,
//! under which the half-cycle pulse E₀ sech(Γτ) transforms to
//! (E₀/2Γ) sech(πω/2Γ) and the single-cycle pulse −E₀ Γτ sech(Γτ) to
//! (πE₀/4iΓ) sech(πω/2Γ) tanh(πω/2Γ). Real time-domain fields satisfy
//! E(−ω) = E*(ω).

use num_complex::Complex64;
use thiserror::Error;

use crate::constants;
use crate::numerics::{integrate_complex, QuadratureSpec};

#[derive(Debug, Clone, Error)]
pub enum DriveError {
    /// The CW spectrum is a pair of delta distributions; it has no pointwise
    /// values. Use [`DrivePulse::cw_components`] instead.
    #[error("CW drive has a delta-pair spectrum; query cw_components() for the weights")]
    CwSpectrumRequested,
    #[error("tabulated pulse parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("tabulated pulse samples must be strictly increasing in tau (violation at index {index})")]
    NonMonotonicSamples { index: usize },
    #[error("tabulated pulse needs at least 4 samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("numeric transform of tabulated pulse failed: {0}")]
    Transform(#[from] crate::numerics::NumericsError),
}

/// Cubic spline through dimensionless pulse samples (x = Γτ, y = E/E₀),
/// clamped to zero slope at the ends and identically zero outside the
/// sampled range.
#[derive(Debug, Clone)]
pub struct PulseTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    y2: Vec<f64>,
}

impl PulseTable {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self, DriveError> {
        if samples.len() < 4 {
            return Err(DriveError::TooFewSamples { got: samples.len() });
        }
        for i in 1..samples.len() {
            if samples[i].0 <= samples[i - 1].0 {
                return Err(DriveError::NonMonotonicSamples { index: i });
            }
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let y2 = clamped_spline_second_derivatives(&xs, &ys);
        Ok(PulseTable { xs, ys, y2 })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Spline value at dimensionless time x; zero outside the sampled range.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if x < lo || x > hi {
            return 0.0;
        }
        let k = match self.xs.binary_search_by(|probe| probe.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let h = self.xs[k + 1] - self.xs[k];
        let a = (self.xs[k + 1] - x) / h;
        let b = (x - self.xs[k]) / h;
        a * self.ys[k]
            + b * self.ys[k + 1]
            + ((a * a * a - a) * self.y2[k] + (b * b * b - b) * self.y2[k + 1]) * h * h / 6.0
    }
}

/// Second derivatives for a cubic spline with zero endpoint slopes.
fn clamped_spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut y2 = vec![0.0; n];
    let mut u = vec![0.0; n - 1];

    // Clamped boundary: first derivative zero at both ends.
    y2[0] = -0.5;
    u[0] = (3.0 / (xs[1] - xs[0])) * ((ys[1] - ys[0]) / (xs[1] - xs[0]));

    for i in 1..n - 1 {
        let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
        let p = sig * y2[i - 1] + 2.0;
        y2[i] = (sig - 1.0) / p;
        let slope_r = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        let slope_l = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
        u[i] = (6.0 * (slope_r - slope_l) / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
    }

    let qn = 0.5;
    let un = (3.0 / (xs[n - 1] - xs[n - 2])) * (-(ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]));
    y2[n - 1] = (un - qn * u[n - 2]) / (qn * y2[n - 2] + 1.0);
    for k in (0..n - 1).rev() {
        y2[k] = y2[k] * y2[k + 1] + u[k];
    }
    y2
}

/// A drive field in the thin crystal.
///
/// For the CW variant the characteristic rate Γ is the carrier ω₀ and the
/// amplitude may be complex; the pulsed variants carry a real amplitude E₀
/// and an inverse duration Γ.
#[derive(Debug, Clone)]
pub enum DrivePulse {
    Cw { e0: Complex64, omega0: f64 },
    Hcp { e0: f64, gamma: f64 },
    Scp { e0: f64, gamma: f64 },
    Tabulated { e0: f64, gamma: f64, table: PulseTable },
}

impl DrivePulse {
    /// Characteristic rate: Γ for pulses, ω₀ for CW.
    pub fn gamma(&self) -> f64 {
        match self {
            DrivePulse::Cw { omega0, .. } => *omega0,
            DrivePulse::Hcp { gamma, .. }
            | DrivePulse::Scp { gamma, .. }
            | DrivePulse::Tabulated { gamma, .. } => *gamma,
        }
    }

    /// Amplitude magnitude |E₀|.
    pub fn amplitude(&self) -> f64 {
        match self {
            DrivePulse::Cw { e0, .. } => e0.norm(),
            DrivePulse::Hcp { e0, .. }
            | DrivePulse::Scp { e0, .. }
            | DrivePulse::Tabulated { e0, .. } => e0.abs(),
        }
    }

    pub fn is_cw(&self) -> bool {
        matches!(self, DrivePulse::Cw { .. })
    }

    /// Real time-domain field.
    pub fn field_time(&self, tau: f64) -> f64 {
        match self {
            DrivePulse::Cw { e0, omega0 } => 2.0 * (e0 * Complex64::cis(-omega0 * tau)).re,
            DrivePulse::Hcp { e0, gamma } => e0 / (gamma * tau).cosh(),
            DrivePulse::Scp { e0, gamma } => {
                let x = gamma * tau;
                -e0 * x / x.cosh()
            }
            DrivePulse::Tabulated { e0, gamma, table } => e0 * table.eval(gamma * tau),
        }
    }

    /// Frequency-domain field E(ω). Errors for CW drives, whose spectrum is a
    /// delta pair (see [`DrivePulse::cw_components`]).
    pub fn field_freq(&self, omega: f64) -> Result<Complex64, DriveError> {
        match self {
            DrivePulse::Cw { .. } => Err(DriveError::CwSpectrumRequested),
            DrivePulse::Hcp { e0, gamma } => {
                let s = 1.0 / (0.5 * std::f64::consts::PI * omega / gamma).cosh();
                Ok(Complex64::new(e0 / (2.0 * gamma) * s, 0.0))
            }
            DrivePulse::Scp { e0, gamma } => {
                let arg = 0.5 * std::f64::consts::PI * omega / gamma;
                let magnitude = std::f64::consts::PI * e0 / (4.0 * gamma) / arg.cosh() * arg.tanh();
                // Division by i rotates the real closed form onto -i.
                Ok(Complex64::new(0.0, -magnitude))
            }
            DrivePulse::Tabulated { e0, gamma, table } => {
                let (lo, hi) = table.range();
                let w = omega / gamma;
                let spec = QuadratureSpec::default()
                    .with_tolerances(1e-9, 1e-13)
                    .with_budget(12000);
                let (integral, _) =
                    integrate_complex(|x| Complex64::cis(w * x) * table.eval(x), (lo, hi), &spec)?;
                Ok(integral * e0 / (2.0 * std::f64::consts::PI * gamma))
            }
        }
    }

    /// Delta-pair decomposition of the CW spectrum: weights at ±ω₀.
    pub fn cw_components(&self) -> Option<[(f64, Complex64); 2]> {
        match self {
            DrivePulse::Cw { e0, omega0 } => Some([(*omega0, *e0), (-*omega0, e0.conj())]),
            _ => None,
        }
    }

    /// Envelope bound |E(ω)| ≤ k·exp(−rate·|ω|) for pulsed drives.
    fn spectral_envelope(&self) -> Option<(f64, f64)> {
        match self {
            DrivePulse::Hcp { e0, gamma } => {
                Some((e0.abs() / gamma, 0.5 * std::f64::consts::PI / gamma))
            }
            DrivePulse::Scp { e0, gamma } => Some((
                0.5 * std::f64::consts::PI * e0.abs() / gamma,
                0.5 * std::f64::consts::PI / gamma,
            )),
            _ => None,
        }
    }

    /// Frequency beyond which |E(ω)| is guaranteed below `eps` (same units as
    /// E(ω) itself). Used to place quadrature truncation cutoffs.
    pub fn spectral_cutoff(&self, eps: f64) -> f64 {
        match self {
            DrivePulse::Cw { omega0, .. } => *omega0,
            DrivePulse::Tabulated { e0, gamma, .. } => {
                // Scan the numeric transform outward until it stays small.
                let scale = e0.abs() / gamma;
                let mut consecutive = 0;
                let mut omega = *gamma;
                while omega < 200.0 * gamma {
                    let val = self.field_freq(omega).map(|v| v.norm()).unwrap_or(f64::MAX);
                    if val < eps * scale.max(1e-300) {
                        consecutive += 1;
                        if consecutive >= 4 {
                            return omega;
                        }
                    } else {
                        consecutive = 0;
                    }
                    omega += 0.5 * gamma;
                }
                200.0 * gamma
            }
            _ => {
                let (k, rate) = self.spectral_envelope().unwrap();
                if eps >= k {
                    return 0.0;
                }
                // One extra e-fold of margin: the sech envelope bound is tight,
                // so the bare crossing point sits exactly on eps.
                ((k / eps).ln() + 1.0) / rate
            }
        }
    }

    /// Check E(−ω) = E*(ω) on the probe grid (always true for CW drives,
    /// whose delta pair is conjugate-symmetric by construction).
    pub fn reality_check(&self, probe: &[f64]) -> bool {
        if self.is_cw() {
            return true;
        }
        let scale = self.amplitude() / self.gamma();
        spectrum_respects_reality(
            |omega| self.field_freq(omega).expect("pulsed drives have pointwise spectra"),
            probe,
            1e-10 * scale.max(1e-300),
        )
    }

    /// Load a tabulated pulse from two-column CSV (`tau,field`, τ in units of
    /// 1/Γ and the field in units of E₀).
    pub fn tabulated_from_csv(text: &str, e0: f64, gamma: f64) -> Result<Self, DriveError> {
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(DriveError::Parse {
                    line: idx + 1,
                    message: format!("expected 2 comma-separated columns, got {}", fields.len()),
                });
            }
            if samples.is_empty() && fields[0].eq_ignore_ascii_case("tau") {
                if !fields[1].eq_ignore_ascii_case("field") {
                    return Err(DriveError::Parse {
                        line: idx + 1,
                        message: format!("expected header 'tau,field', got '{line}'"),
                    });
                }
                continue;
            }
            let tau: f64 = fields[0].parse().map_err(|e| DriveError::Parse {
                line: idx + 1,
                message: format!("bad tau value '{}': {e}", fields[0]),
            })?;
            let field: f64 = fields[1].parse().map_err(|e| DriveError::Parse {
                line: idx + 1,
                message: format!("bad field value '{}': {e}", fields[1]),
            })?;
            samples.push((tau, field));
        }
        Ok(DrivePulse::Tabulated { e0, gamma, table: PulseTable::new(&samples)? })
    }
}

/// Does a spectrum represent a real time-domain field? Probes E(−ω) = E*(ω)
/// pointwise within `tol`.
pub fn spectrum_respects_reality<F: Fn(f64) -> Complex64>(
    spectrum: F,
    probe: &[f64],
    tol: f64,
) -> bool {
    probe.iter().all(|&omega| {
        let diff = spectrum(-omega) - spectrum(omega).conj();
        diff.norm() <= tol
    })
}

/// Crystal and field constants, plus the derived coupling quantities.
///
/// `C = dL/(n c₀)` sets the strength of the two-mode squeezing kernel;
/// `α = dE₀` and `ζ = ΓL/c₀` are the dimensionless perturbation amplitude and
/// crystal thickness entering the world-line picture, and `r = |α|ζ/n =
/// |C E₀| Γ` is the overall squeezing strength.
#[derive(Debug, Clone)]
pub struct CrystalParams {
    /// Effective second-order coefficient (m/V in SI mode).
    pub d: f64,
    /// Refractive index (dispersionless model).
    pub n: f64,
    /// Crystal length (m in SI mode).
    pub l: f64,
    /// Effective beam cross-section (m² in SI mode).
    pub a: f64,
    pub c0: f64,
    pub hbar: f64,
    pub eps0: f64,
}

impl CrystalParams {
    /// SI parameters with physical constants.
    pub fn new(d: f64, n: f64, l: f64, a: f64) -> Self {
        CrystalParams {
            d,
            n,
            l,
            a,
            c0: constants::C0,
            hbar: constants::HBAR,
            eps0: constants::EPS0,
        }
    }

    /// Natural-unit parameters realising a given coupling constant C: all
    /// scales (L, c₀, ħ, ε₀, A) set to one, d chosen so that C = dL/(nc₀).
    pub fn dimensionless(coupling: f64, n: f64) -> Self {
        CrystalParams { d: coupling * n, n, l: 1.0, a: 1.0, c0: 1.0, hbar: 1.0, eps0: 1.0 }
    }

    /// Kernel coupling constant C = dL/(n c₀).
    pub fn coupling(&self) -> f64 {
        self.d * self.l / (self.n * self.c0)
    }

    /// Perturbation amplitude α = d E₀.
    pub fn alpha(&self, e0: f64) -> f64 {
        self.d * e0
    }

    /// Dimensionless thickness ζ = Γ L / c₀.
    pub fn zeta(&self, gamma: f64) -> f64 {
        gamma * self.l / self.c0
    }

    /// Squeezing strength r = |α| ζ / n = |C E₀| Γ.
    pub fn squeeze_r(&self, e0: f64, gamma: f64) -> f64 {
        (self.alpha(e0) * self.zeta(gamma)).abs() / self.n
    }

    /// Vacuum variance scale V₀ = ħΓ²/(24π ε₀ c₀ n A).
    pub fn vacuum_variance(&self, gamma: f64) -> f64 {
        self.hbar * gamma * gamma
            / (24.0 * std::f64::consts::PI * self.eps0 * self.c0 * self.n * self.a)
    }
}
