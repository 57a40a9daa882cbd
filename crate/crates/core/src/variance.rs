//! Normally ordered variance of the emitted field, V(τ) = V⁽¹⁾(τ) + V⁽²⁾(τ).
//!
//! The first-order part is a local statement about the drive,
//!
//!   V⁽¹⁾(τ) = ħC/(24π ε₀ c₀ n A) · E‴(τ),
//!
//! so it inherits the drive's symmetry exactly (odd for the even half-cycle
//! shape). The second-order part is a sum of three triple-frequency
//! integrals,
//!
//!   V⁽²⁾ = ħC²/(2π ε₀ c₀ n A) · (V₁ + V₂ + V₃),
//!   V₁ =   ∫₀^∞∫₀^∞ dωdω′ ωω′ ∫₀^∞ dω″ ω″ ℜ[E*(ω+ω″)E(ω″+ω′) e^{ i(ω−ω′)τ}],
//!   V₂ = ½ ∫₀^∞∫₀^∞ dωdω′ ωω′ ∫_ℝ  dω″ ω″ ℜ[E(ω+ω″)E*(ω″−ω′) e^{−i(ω+ω′)τ}],
//!   V₃ = − ∫₀^∞∫₀^∞ dωdω′ ωω′ ∫₀^∞ dω″ ω″ ℜ[E(ω−ω″)E(ω″+ω′) e^{−i(ω+ω′)τ}],
//!
//! whose inner integrals are τ-independent. [`V2Cache`] precomputes them as
//! matrices over a fixed frequency grid; each τ then costs three quadratic
//! forms. For a CW drive the delta-pair spectrum collapses everything to
//! closed expressions.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::drive::{CrystalParams, DriveError, DrivePulse, PulseTable};
use crate::numerics::{panel_nodes, NumericsError};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Error)]
pub enum VarianceError {
    #[error("tabulated pulse does not decay at its edges (edge/peak = {edge_ratio:.3e}); spectral differentiation is undefined")]
    NotDifferentiable { edge_ratio: f64 },
    #[error("CW variance has closed form; the cache applies to pulsed drives only")]
    CwDrive,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Drive(#[from] DriveError),
}

/// ħC/(24π ε₀ c₀ n A) — the scale multiplying E‴ in V⁽¹⁾.
pub fn v1_prefactor(params: &CrystalParams) -> f64 {
    params.hbar * params.coupling()
        / (24.0 * PI * params.eps0 * params.c0 * params.n * params.a)
}

fn v2_prefactor(params: &CrystalParams) -> f64 {
    params.hbar * params.coupling().powi(2)
        / (2.0 * PI * params.eps0 * params.c0 * params.n * params.a)
}

/// Third time derivative of the drive field.
///
/// Closed shapes differentiate analytically; tabulated pulses go through the
/// spectral identity E‴(τ) = −2 ∫₀^∞ ds s³ Im[E(s) e^{−isτ}], which needs the
/// table to decay at its edges.
pub fn field_third_derivative(pulse: &DrivePulse, tau: f64) -> Result<f64, VarianceError> {
    match pulse {
        DrivePulse::Cw { e0, omega0 } => {
            let rotated = Complex64::new(0.0, 1.0) * e0 * Complex64::cis(-omega0 * tau);
            Ok(2.0 * omega0.powi(3) * rotated.re)
        }
        DrivePulse::Hcp { e0, gamma } => {
            let x = gamma * tau;
            let s = x.cosh().recip();
            let t = x.tanh();
            Ok(e0 * gamma.powi(3) * s * t * (5.0 * s * s - t * t))
        }
        DrivePulse::Scp { e0, gamma } => {
            let x = gamma * tau;
            let s = x.cosh().recip();
            let t = x.tanh();
            Ok(-e0
                * gamma.powi(3)
                * (3.0 * s * (t * t - s * s) + x * s * t * (5.0 * s * s - t * t)))
        }
        DrivePulse::Tabulated { .. } => {
            let nodes = spectral_derivative_nodes(pulse)?;
            Ok(third_derivative_from_nodes(&nodes, tau))
        }
    }
}

/// First-order variance V⁽¹⁾(τ).
pub fn v1_closed(
    pulse: &DrivePulse,
    params: &CrystalParams,
    tau: f64,
) -> Result<f64, VarianceError> {
    Ok(v1_prefactor(params) * field_third_derivative(pulse, tau)?)
}

/// Weighted spectrum samples (s, weight, E(s)) for the s³-moment that gives
/// E‴ of a tabulated pulse.
fn spectral_derivative_nodes(
    pulse: &DrivePulse,
) -> Result<Vec<(f64, f64, Complex64)>, VarianceError> {
    let DrivePulse::Tabulated { gamma, table, .. } = pulse else {
        unreachable!("spectral differentiation is only routed for tabulated pulses")
    };
    let (lo, hi) = table.range();
    let mut peak = 0.0f64;
    for i in 0..=1024 {
        let x = lo + (hi - lo) * i as f64 / 1024.0;
        peak = peak.max(table.eval(x).abs());
    }
    if peak == 0.0 {
        return Ok(Vec::new());
    }
    let edge_ratio = table.eval(lo).abs().max(table.eval(hi).abs()) / peak;
    if edge_ratio > 1e-3 {
        return Err(VarianceError::NotDifferentiable { edge_ratio });
    }
    // The s³ weight amplifies the spectral tail, but contributions beyond the
    // point where |E| drops under ~1e-7 of E₀/Γ are below the interpolation
    // noise floor of any reasonable table.
    let scale = pulse.amplitude() / gamma;
    let w = pulse.spectral_cutoff(1e-7 * scale.max(1e-300));
    let nodes = panel_nodes(0.0, w, 0.45 * gamma);
    nodes
        .into_par_iter()
        .map(|(s, y)| Ok((s, y, pulse.field_freq(s)?)))
        .collect()
}

fn third_derivative_from_nodes(nodes: &[(f64, f64, Complex64)], tau: f64) -> f64 {
    let sum: f64 = nodes
        .iter()
        .map(|&(s, y, e)| y * s.powi(3) * (e * Complex64::cis(-s * tau)).im)
        .sum();
    -2.0 * sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V2Terms {
    pub part1: f64,
    pub part2: f64,
    pub part3: f64,
}

impl V2Terms {
    pub fn total(&self) -> f64 {
        self.part1 + self.part2 + self.part3
    }

    const ZERO: V2Terms = V2Terms { part1: 0.0, part2: 0.0, part3: 0.0 };
}

#[derive(Debug, Clone)]
pub struct V2Options {
    /// Spectral truncation level relative to E₀/Γ.
    pub truncation_eps: f64,
    /// Quadrature panel width in units of Γ.
    pub panel_width: f64,
}

impl Default for V2Options {
    fn default() -> Self {
        V2Options { truncation_eps: 1e-10, panel_width: 0.9 }
    }
}

/// τ-independent part of the V⁽²⁾ integrals for a pulsed drive.
#[derive(Debug, Clone)]
pub struct V2Cache {
    omegas: Vec<f64>,
    /// Quadrature weight times the |ω| factor at each grid frequency.
    coeffs: Vec<f64>,
    g1: Vec<Complex64>,
    g2: Vec<Complex64>,
    g3: Vec<Complex64>,
    prefactor: f64,
}

impl V2Cache {
    pub fn build(pulse: &DrivePulse, params: &CrystalParams) -> Result<Self, VarianceError> {
        Self::build_with_options(pulse, params, &V2Options::default())
    }

    pub fn build_with_options(
        pulse: &DrivePulse,
        params: &CrystalParams,
        opts: &V2Options,
    ) -> Result<Self, VarianceError> {
        if pulse.is_cw() {
            return Err(VarianceError::CwDrive);
        }
        let gamma = pulse.gamma();
        let scale = pulse.amplitude() / gamma;
        let w = pulse.spectral_cutoff(opts.truncation_eps * scale.max(1e-300));
        let prefactor = v2_prefactor(params);
        let width = opts.panel_width * gamma;
        let outer = panel_nodes(0.0, w, width);
        if outer.is_empty() {
            return Ok(V2Cache {
                omegas: Vec::new(),
                coeffs: Vec::new(),
                g1: Vec::new(),
                g2: Vec::new(),
                g3: Vec::new(),
                prefactor,
            });
        }

        // Tabulated spectra cost an adaptive transform per point; spline them
        // once on the full argument range instead of re-integrating inside
        // the O(M²·M_t) chain sums.
        let splined = if matches!(pulse, DrivePulse::Tabulated { .. }) {
            let n = 4096;
            let samples: Vec<(f64, Complex64)> = (0..=n)
                .into_par_iter()
                .map(|i| {
                    let nu = -2.0 * w + 4.0 * w * i as f64 / n as f64;
                    Ok((nu, pulse.field_freq(nu)?))
                })
                .collect::<Result<_, VarianceError>>()?;
            let re: Vec<(f64, f64)> = samples.iter().map(|&(x, v)| (x, v.re)).collect();
            let im: Vec<(f64, f64)> = samples.iter().map(|&(x, v)| (x, v.im)).collect();
            Some((PulseTable::new(&re)?, PulseTable::new(&im)?))
        } else {
            None
        };
        let field = |nu: f64| -> Complex64 {
            match &splined {
                Some((re, im)) => Complex64::new(re.eval(nu), im.eval(nu)),
                None => pulse.field_freq(nu).expect("closed pulsed spectra are pointwise"),
            }
        };

        let m = outer.len();
        let omegas: Vec<f64> = outer.iter().map(|&(x, _)| x).collect();
        let coeffs: Vec<f64> = outer.iter().map(|&(x, y)| y * x).collect();
        // Inner axes: ω″ > 0 reuses the outer nodes; the signed axis spans
        // (−W, W) with a panel boundary pinned at zero.
        let dk: Vec<f64> = coeffs.clone();
        let s_axis: Vec<(f64, f64)> = panel_nodes(-w, 0.0, width)
            .into_iter()
            .chain(panel_nodes(0.0, w, width))
            .collect();
        let es: Vec<f64> = s_axis.iter().map(|&(s, y)| y * s).collect();
        let kt = m;
        let st = s_axis.len();

        let mut a = vec![Complex64::default(); m * kt];
        a.par_chunks_mut(kt).enumerate().for_each(|(i, row)| {
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = field(omegas[i] + omegas[k]);
            }
        });
        let mut p = vec![Complex64::default(); m * kt];
        p.par_chunks_mut(kt).enumerate().for_each(|(i, row)| {
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = field(omegas[i] - omegas[k]);
            }
        });
        let mut b = vec![Complex64::default(); m * st];
        b.par_chunks_mut(st).enumerate().for_each(|(i, row)| {
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = field(omegas[i] + s_axis[k].0);
            }
        });
        let mut cx = vec![Complex64::default(); m * st];
        cx.par_chunks_mut(st).enumerate().for_each(|(j, row)| {
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = field(s_axis[k].0 - omegas[j]);
            }
        });

        let mut g1 = vec![Complex64::default(); m * m];
        g1.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let ai = &a[i * kt..(i + 1) * kt];
            for (j, slot) in row.iter_mut().enumerate() {
                let aj = &a[j * kt..(j + 1) * kt];
                let mut acc = Complex64::default();
                for k in 0..kt {
                    acc += dk[k] * ai[k].conj() * aj[k];
                }
                *slot = acc;
            }
        });
        let mut g2 = vec![Complex64::default(); m * m];
        g2.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let bi = &b[i * st..(i + 1) * st];
            for (j, slot) in row.iter_mut().enumerate() {
                let cj = &cx[j * st..(j + 1) * st];
                let mut acc = Complex64::default();
                for k in 0..st {
                    acc += es[k] * bi[k] * cj[k].conj();
                }
                *slot = acc;
            }
        });
        let mut g3 = vec![Complex64::default(); m * m];
        g3.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let pi = &p[i * kt..(i + 1) * kt];
            for (j, slot) in row.iter_mut().enumerate() {
                let aj = &a[j * kt..(j + 1) * kt];
                let mut acc = Complex64::default();
                for k in 0..kt {
                    acc += dk[k] * pi[k] * aj[k];
                }
                *slot = acc;
            }
        });

        Ok(V2Cache { omegas, coeffs, g1, g2, g3, prefactor })
    }

    /// Number of grid frequencies behind the quadratic forms.
    pub fn grid_len(&self) -> usize {
        self.omegas.len()
    }

    /// V⁽²⁾ terms at one detection time.
    pub fn eval(&self, tau: f64) -> V2Terms {
        let m = self.omegas.len();
        if m == 0 {
            return V2Terms::ZERO;
        }
        let u: Vec<Complex64> = (0..m)
            .map(|i| {
                let theta = self.omegas[i] * tau;
                self.coeffs[i] * Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        let mut t1 = Complex64::default();
        let mut t2 = Complex64::default();
        let mut t3 = Complex64::default();
        for i in 0..m {
            let r1 = &self.g1[i * m..(i + 1) * m];
            let r2 = &self.g2[i * m..(i + 1) * m];
            let r3 = &self.g3[i * m..(i + 1) * m];
            let mut acc1 = Complex64::default();
            let mut acc2 = Complex64::default();
            let mut acc3 = Complex64::default();
            for j in 0..m {
                let vj = u[j].conj();
                acc1 += vj * r1[j];
                acc2 += vj * r2[j];
                acc3 += vj * r3[j];
            }
            t1 += u[i] * acc1;
            let vi = u[i].conj();
            t2 += vi * acc2;
            t3 += vi * acc3;
        }
        V2Terms {
            part1: self.prefactor * t1.re,
            part2: 0.5 * self.prefactor * t2.re,
            part3: -self.prefactor * t3.re,
        }
    }
}

/// Delta-pair reduction of the V⁽²⁾ integrals for a CW drive: the first term
/// is the constant |E₀|²ω₀⁴/12, the signed middle term vanishes by parity,
/// and the third oscillates at twice the carrier.
fn v2_cw(params: &CrystalParams, e0: Complex64, omega0: f64, tau: f64) -> V2Terms {
    let pref = v2_prefactor(params);
    let w4 = omega0.powi(4);
    V2Terms {
        part1: pref * e0.norm_sqr() * w4 / 12.0,
        part2: 0.0,
        part3: -pref * 0.25 * w4 * (e0 * e0 * Complex64::cis(-2.0 * omega0 * tau)).re,
    }
}

/// Second-order variance terms at one time. Pulsed drives build a fresh
/// [`V2Cache`] per call — batch through the cache or [`variance_trace`] when
/// evaluating many times.
pub fn v2_terms(
    pulse: &DrivePulse,
    params: &CrystalParams,
    tau: f64,
) -> Result<V2Terms, VarianceError> {
    match pulse {
        DrivePulse::Cw { e0, omega0 } => Ok(v2_cw(params, *e0, *omega0, tau)),
        _ => Ok(V2Cache::build(pulse, params)?.eval(tau)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VarianceSample {
    pub tau: f64,
    pub v1: f64,
    pub v2: f64,
}

impl VarianceSample {
    pub fn total(&self) -> f64 {
        self.v1 + self.v2
    }
}

#[derive(Debug, Clone)]
pub struct VarianceTrace {
    /// Characteristic rate of the drive (Γ, or ω₀ for CW).
    pub gamma: f64,
    /// Squeezing strength r = |C E₀| Γ of the run.
    pub r: f64,
    /// Vacuum scale V₀ = ħΓ²/(24π ε₀ c₀ n A) for normalized output.
    pub v0: f64,
    pub samples: Vec<VarianceSample>,
}

/// V⁽¹⁾ and V⁽²⁾ over a grid of detection times, with the τ-independent work
/// done once.
pub fn variance_trace(
    pulse: &DrivePulse,
    params: &CrystalParams,
    taus: &[f64],
) -> Result<VarianceTrace, VarianceError> {
    let gamma = pulse.gamma();
    let r = params.squeeze_r(pulse.amplitude(), gamma);
    let v0 = params.vacuum_variance(gamma);
    let pref1 = v1_prefactor(params);

    let samples = match pulse {
        DrivePulse::Cw { e0, omega0 } => taus
            .iter()
            .map(|&tau| {
                let rotated = Complex64::new(0.0, 1.0) * e0 * Complex64::cis(-omega0 * tau);
                VarianceSample {
                    tau,
                    v1: pref1 * 2.0 * omega0.powi(3) * rotated.re,
                    v2: v2_cw(params, *e0, *omega0, tau).total(),
                }
            })
            .collect(),
        DrivePulse::Tabulated { .. } => {
            let nodes = spectral_derivative_nodes(pulse)?;
            let cache = V2Cache::build(pulse, params)?;
            taus.iter()
                .map(|&tau| VarianceSample {
                    tau,
                    v1: pref1 * third_derivative_from_nodes(&nodes, tau),
                    v2: cache.eval(tau).total(),
                })
                .collect()
        }
        _ => {
            let cache = V2Cache::build(pulse, params)?;
            taus.iter()
                .map(|&tau| {
                    Ok(VarianceSample {
                        tau,
                        v1: v1_closed(pulse, params, tau)?,
                        v2: cache.eval(tau).total(),
                    })
                })
                .collect::<Result<_, VarianceError>>()?
        }
    };

    Ok(VarianceTrace { gamma, r, v0, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_1d, QuadratureSpec};
    use approx::assert_relative_eq;

    fn dimensionless(c: f64) -> CrystalParams {
        CrystalParams::dimensionless(c, 3.0)
    }

    /// Five-point third-derivative stencil, Richardson-extrapolated to O(h⁴).
    fn third_derivative_fd(pulse: &DrivePulse, tau: f64, h: f64) -> f64 {
        let stencil = |h: f64| {
            (pulse.field_time(tau + 2.0 * h) - 2.0 * pulse.field_time(tau + h)
                + 2.0 * pulse.field_time(tau - h)
                - pulse.field_time(tau - 2.0 * h))
                / (2.0 * h * h * h)
        };
        (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0
    }

    #[test]
    fn closed_third_derivatives_match_finite_differences() {
        let params = dimensionless(0.3);
        for pulse in [
            DrivePulse::Hcp { e0: 1.3, gamma: 1.0 },
            DrivePulse::Scp { e0: 0.7, gamma: 1.0 },
            DrivePulse::Cw { e0: Complex64::new(0.8, 0.4), omega0: 1.0 },
        ] {
            let scale = 2.0 * pulse.amplitude() * pulse.gamma().powi(3);
            for i in 0..20 {
                let tau = -3.0 + 6.0 * i as f64 / 19.0;
                let closed = v1_closed(&pulse, &params, tau).unwrap();
                let fd = v1_prefactor(&params) * third_derivative_fd(&pulse, tau, 1e-2);
                assert!(
                    (closed - fd).abs() <= 1e-6 * v1_prefactor(&params) * scale,
                    "tau = {tau}: {closed} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn printed_double_integral_matches_the_derivative_form() {
        // Independent check of V⁽¹⁾ against the double-frequency-integral
        // representation: the bare integral J obeys E‴ = −12 J.
        let params = dimensionless(0.4);
        for pulse in
            [DrivePulse::Hcp { e0: 1.0, gamma: 1.0 }, DrivePulse::Scp { e0: 1.0, gamma: 1.0 }]
        {
            let w = pulse.spectral_cutoff(1e-12 * pulse.amplitude() / pulse.gamma());
            for tau in [-1.0, 0.3, 2.0] {
                let spec = QuadratureSpec::default()
                    .with_tolerances(1e-10, 1e-15)
                    .with_budget(4_000);
                let j = integrate_1d(
                    |omega| {
                        let inner = integrate_1d(
                            |omega_p| {
                                let s = omega + omega_p;
                                let e = pulse.field_freq(s).unwrap();
                                omega * omega_p * (e * Complex64::cis(-s * tau)).im
                            },
                            (0.0, w - omega),
                            &spec,
                        )
                        .unwrap();
                        inner.value
                    },
                    (0.0, w),
                    &spec,
                )
                .unwrap()
                .value;
                let from_integral = v1_prefactor(&params) * (-12.0 * j);
                let closed = v1_closed(&pulse, &params, tau).unwrap();
                assert_relative_eq!(closed, from_integral, max_relative = 1e-6);
            }
        }
    }

    /// Direct nested-quadrature evaluation of one V⁽²⁾ term, scaled by the
    /// physical prefactor. Slow; used only to pin the cache.
    fn v2_part_direct(
        pulse: &DrivePulse,
        params: &CrystalParams,
        part: usize,
        tau: f64,
    ) -> f64 {
        let w = pulse.spectral_cutoff(1e-12 * pulse.amplitude() / pulse.gamma());
        let outer = QuadratureSpec::default().with_tolerances(1e-8, 1e-14).with_budget(2_000);
        let inner = QuadratureSpec::default().with_tolerances(1e-9, 1e-15).with_budget(2_000);
        let f = |nu: f64| pulse.field_freq(nu).unwrap();
        let value = integrate_1d(
            |omega| {
                omega
                    * integrate_1d(
                        |omega_p| {
                            let phase = match part {
                                1 => Complex64::cis((omega - omega_p) * tau),
                                _ => Complex64::cis(-(omega + omega_p) * tau),
                            };
                            let kernel = integrate_1d(
                                |wpp| match part {
                                    1 => {
                                        wpp * (f(omega + wpp).conj() * f(wpp + omega_p) * phase)
                                            .re
                                    }
                                    2 => {
                                        wpp * (f(omega + wpp) * f(wpp - omega_p).conj() * phase)
                                            .re
                                    }
                                    _ => {
                                        wpp * (f(omega - wpp) * f(wpp + omega_p) * phase).re
                                    }
                                },
                                if part == 2 {
                                    (omega_p - w, w - omega)
                                } else {
                                    (0.0, w)
                                },
                                &inner,
                            )
                            .unwrap();
                            omega_p * kernel.value
                        },
                        (0.0, w),
                        &outer,
                    )
                    .unwrap()
                    .value
            },
            (0.0, w),
            &outer,
        )
        .unwrap()
        .value;
        let sign = match part {
            1 => 1.0,
            2 => 0.5,
            _ => -1.0,
        };
        sign * v2_prefactor(params) * value
    }

    #[test]
    fn cache_matches_direct_triple_quadrature() {
        let params = dimensionless(0.2);
        // Zero floor for parts whose exact value vanishes by symmetry (the
        // signed middle term dies for the even half-cycle spectrum).
        let floor = 1e-9 * v2_prefactor(&params);
        let hcp = DrivePulse::Hcp { e0: 1.0, gamma: 1.0 };
        let cache = V2Cache::build(&hcp, &params).unwrap();
        for tau in [0.0, 0.7] {
            let terms = cache.eval(tau);
            for (part, got) in [(1, terms.part1), (2, terms.part2), (3, terms.part3)] {
                let want = v2_part_direct(&hcp, &params, part, tau);
                assert_relative_eq!(got, want, max_relative = 1e-5, epsilon = floor);
            }
        }
        let scp = DrivePulse::Scp { e0: 1.0, gamma: 1.0 };
        let terms = V2Cache::build(&scp, &params).unwrap().eval(0.0);
        for (part, got) in [(1, terms.part1), (2, terms.part2), (3, terms.part3)] {
            let want = v2_part_direct(&scp, &params, part, 0.0);
            assert_relative_eq!(got, want, max_relative = 1e-5, epsilon = floor);
        }
    }

    #[test]
    fn cache_is_converged_in_panel_resolution() {
        let params = dimensionless(0.2);
        let pulse = DrivePulse::Scp { e0: 1.0, gamma: 1.0 };
        let coarse = V2Cache::build(&pulse, &params).unwrap();
        let fine = V2Cache::build_with_options(
            &pulse,
            &params,
            &V2Options { panel_width: 0.45, ..Default::default() },
        )
        .unwrap();
        for tau in [0.0, 1.3] {
            let a = coarse.eval(tau);
            let b = fine.eval(tau);
            assert_relative_eq!(a.part1, b.part1, max_relative = 1e-9);
            assert_relative_eq!(a.part2, b.part2, max_relative = 1e-9);
            assert_relative_eq!(a.part3, b.part3, max_relative = 1e-9);
        }
    }

    #[test]
    fn second_order_terms_scale_with_amplitude_squared() {
        let params = dimensionless(0.2);
        let opts = V2Options { truncation_eps: 1e-8, panel_width: 1.0 };
        let base = V2Cache::build_with_options(
            &DrivePulse::Scp { e0: 1.0, gamma: 1.0 },
            &params,
            &opts,
        )
        .unwrap()
        .eval(0.4);
        let doubled = V2Cache::build_with_options(
            &DrivePulse::Scp { e0: 2.0, gamma: 1.0 },
            &params,
            &opts,
        )
        .unwrap()
        .eval(0.4);
        assert_relative_eq!(4.0 * base.part1, doubled.part1, max_relative = 1e-12);
        assert_relative_eq!(4.0 * base.part2, doubled.part2, max_relative = 1e-12);
        assert_relative_eq!(4.0 * base.part3, doubled.part3, max_relative = 1e-12);
    }

    #[test]
    fn half_cycle_variance_has_definite_parity() {
        let params = dimensionless(0.21);
        let pulse = DrivePulse::Hcp { e0: 1.0, gamma: 1.0 };
        let cache = V2Cache::build(&pulse, &params).unwrap();
        for i in 1..=10 {
            let tau = 0.37 * i as f64;
            let v1p = v1_closed(&pulse, &params, tau).unwrap();
            let v1m = v1_closed(&pulse, &params, -tau).unwrap();
            assert_eq!(v1p, -v1m, "V1 must be odd for the even drive");
            let fp = cache.eval(tau);
            let fm = cache.eval(-tau);
            assert_eq!(fp.part1, fm.part1, "V2 term 1 must be even");
            assert_eq!(fp.part2, fm.part2, "V2 term 2 must be even");
            assert_eq!(fp.part3, fm.part3, "V2 term 3 must be even");
        }
    }

    #[test]
    fn variance_dips_negative_at_reference_squeezing_strengths() {
        // Full traces at the reference parameters: the total variance must show
        // sub-vacuum windows for both pulse shapes.
        for (r, pulse) in [
            (0.21, DrivePulse::Hcp { e0: 1.0, gamma: 1.0 }),
            (1.54, DrivePulse::Scp { e0: 1.0, gamma: 1.0 }),
        ] {
            let params = dimensionless(r);
            assert_relative_eq!(params.squeeze_r(1.0, 1.0), r, max_relative = 1e-14);
            let taus: Vec<f64> = (0..=320).map(|i| -8.0 + 16.0 * i as f64 / 320.0).collect();
            let trace = variance_trace(&pulse, &params, &taus).unwrap();
            let min = trace
                .samples
                .iter()
                .map(|s| s.total())
                .fold(f64::INFINITY, f64::min);
            assert!(min < 0.0, "r = {r}: min variance {min} is not sub-vacuum");
        }
    }

    #[test]
    fn trace_decays_at_the_window_edges() {
        let params = dimensionless(0.21);
        let pulse = DrivePulse::Hcp { e0: 1.0, gamma: 1.0 };
        let taus: Vec<f64> = (0..=400).map(|i| -10.0 + 20.0 * i as f64 / 400.0).collect();
        let trace = variance_trace(&pulse, &params, &taus).unwrap();
        let peak = trace
            .samples
            .iter()
            .map(|s| s.total().abs())
            .fold(0.0f64, f64::max);
        let edge = trace.samples.first().unwrap().total().abs().max(
            trace.samples.last().unwrap().total().abs(),
        );
        assert!(edge < 0.01 * peak, "edge {edge} vs peak {peak}");
    }

    #[test]
    fn cw_trace_is_periodic_and_matches_the_closed_curve() {
        let params = dimensionless(0.5);
        let omega0 = 1.0;
        // r = |C E₀| ω₀ = 0.07, the reference CW strength.
        let e0 = 0.14;
        let pulse = DrivePulse::Cw { e0: Complex64::new(e0, 0.0), omega0 };
        let taus: Vec<f64> = (0..=200).map(|i| -PI + 2.0 * PI * i as f64 / 200.0).collect();
        let trace = variance_trace(&pulse, &params, &taus).unwrap();
        assert_relative_eq!(trace.r, 0.07, max_relative = 1e-12);

        let r = trace.r;
        let mut peak = 0.0f64;
        for s in &trace.samples {
            let theta = omega0 * s.tau;
            let normalized = s.total() / trace.v0;
            let closed = 2.0 * r * theta.sin() + r * r * (1.0 - 3.0 * (2.0 * theta).cos());
            assert_relative_eq!(normalized, closed, max_relative = 1e-10, epsilon = 1e-12);
            peak = peak.max(s.total().abs());
        }
        assert!(trace.samples.iter().map(|s| s.total()).fold(f64::INFINITY, f64::min) < 0.0);

        let period = 2.0 * PI / omega0;
        for &tau in taus.iter().take(50) {
            let a = v2_terms(&pulse, &params, tau).unwrap();
            let b = v2_terms(&pulse, &params, tau + period).unwrap();
            assert!((a.total() - b.total()).abs() <= 1e-8 * peak.max(1e-300));
            assert_eq!(a.part2, 0.0);
        }
        // The constant term really is constant.
        let a = v2_terms(&pulse, &params, 0.3).unwrap();
        let b = v2_terms(&pulse, &params, 1.9).unwrap();
        assert_eq!(a.part1, b.part1);
    }

    #[test]
    fn tabulated_pulse_uses_the_spectral_derivative() {
        let gamma = 1.0;
        let n = 1025;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = -16.0 + 32.0 * i as f64 / (n - 1) as f64;
                (x, 1.0 / x.cosh())
            })
            .collect();
        let mut csv = String::from("tau,field\n");
        for (x, y) in &samples {
            csv.push_str(&format!("{x:.12e},{y:.12e}\n"));
        }
        let tab = DrivePulse::tabulated_from_csv(&csv, 1.0, gamma).unwrap();
        let reference = DrivePulse::Hcp { e0: 1.0, gamma };
        let params = dimensionless(0.3);
        let scale = v1_prefactor(&params) * gamma.powi(3);
        for tau in [0.5, 1.5] {
            let got = v1_closed(&tab, &params, tau).unwrap();
            let want = v1_closed(&reference, &params, tau).unwrap();
            assert!(
                (got - want).abs() <= 2e-3 * scale,
                "tau = {tau}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn non_decaying_table_is_rejected() {
        let samples: Vec<(f64, f64)> = (0..41).map(|i| (-4.0 + 0.2 * i as f64, 1.0)).collect();
        let table = PulseTable::new(&samples).unwrap();
        let pulse = DrivePulse::Tabulated { e0: 1.0, gamma: 1.0, table };
        let params = dimensionless(0.3);
        assert!(matches!(
            v1_closed(&pulse, &params, 0.0),
            Err(VarianceError::NotDifferentiable { .. })
        ));
    }

    #[test]
    fn dark_drive_has_zero_variance() {
        let params = dimensionless(0.3);
        let pulse = DrivePulse::Hcp { e0: 0.0, gamma: 1.0 };
        assert_eq!(v1_closed(&pulse, &params, 0.4).unwrap(), 0.0);
        let terms = v2_terms(&pulse, &params, 0.4).unwrap();
        assert_eq!(terms, V2Terms::ZERO);
    }

    #[test]
    fn cache_rejects_cw_drives() {
        let params = dimensionless(0.3);
        let cw = DrivePulse::Cw { e0: Complex64::new(1.0, 0.0), omega0: 1.0 };
        assert!(matches!(
            V2Cache::build(&cw, &params),
            Err(VarianceError::CwDrive)
        ));
    }
}
