//! Self-validation suite: end-to-end checks of every operation family, each
//! with an explicit numeric tolerance and a wall-clock budget.
//!
//! The checks are deliberately redundant with nothing else in the crate —
//! closed forms against independent quadratures, direct integrations against
//! first integrals, discretized maps against continuum limits — so a pass
//! certifies the numbers, not the plumbing. [`run_all`] executes the eight
//! families plus an aggregate entry and is what the command-line `validate`
//! subcommand reports.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::analysis;
use crate::constants::{HBAR, KB};
use crate::drive::{CrystalParams, DrivePulse};
use crate::geodesics::{self, RayParams, RayShape};
use crate::kernel::{expand_bogoliubov, SignedFrequencyGrid, SqueezeKernel};
use crate::numerics::fit_exponential_tail;
use crate::spectra;
use crate::variance::{self, V2Cache};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub duration: Duration,
}

fn run(
    name: &'static str,
    budget_secs: f64,
    body: impl FnOnce() -> Result<String, String>,
) -> CriterionResult {
    let start = Instant::now();
    let outcome = body();
    let duration = start.elapsed();
    let elapsed = duration.as_secs_f64();
    match outcome {
        Ok(details) if elapsed <= budget_secs => CriterionResult {
            name,
            passed: true,
            details: format!("{details}; {elapsed:.2}s of {budget_secs:.0}s budget"),
            duration,
        },
        Ok(details) => CriterionResult {
            name,
            passed: false,
            details: format!("{details}; exceeded {budget_secs:.0}s budget ({elapsed:.2}s)"),
            duration,
        },
        Err(details) => CriterionResult { name, passed: false, details, duration },
    }
}

/// Closed-form pulsed densities against the defining quadrature.
pub fn criterion_closed_spectra() -> CriterionResult {
    run("closed_spectral_density", 10.0, || {
        let params = CrystalParams::dimensionless(0.2, 3.0);
        let gamma = 1.3;
        let e0 = 0.8;
        let hcp = DrivePulse::Hcp { e0, gamma };
        let scp = DrivePulse::Scp { e0, gamma };
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let x = 0.05 * (10.0f64 / 0.05).powf(i as f64 / 49.0);
            let omega = x * gamma;
            for (closed, pulse) in [
                (spectra::spd_hcp_closed(omega, &params, e0, gamma), &hcp),
                (spectra::spd_scp_closed(omega, &params, e0, gamma), &scp),
            ] {
                let oracle = spectra::spd_order2_numeric(pulse, &params, omega)
                    .map_err(|e| format!("quadrature failed at omega/Gamma = {x}: {e}"))?;
                worst = worst.max(((closed - oracle) / oracle).abs());
            }
        }
        if worst <= 1e-6 {
            Ok(format!("max relative deviation {worst:.2e} over 50 log-spaced points (tol 1e-6)"))
        } else {
            Err(format!("max relative deviation {worst:.2e} exceeds 1e-6"))
        }
    })
}

/// Exponential tail of ρ/ω recovers the pulse duration scale π/Γ.
pub fn criterion_spectral_tail() -> CriterionResult {
    run("spectral_tail_duration", 5.0, || {
        let params = CrystalParams::dimensionless(1.0, 3.0);
        let mut worst: f64 = 0.0;
        for gamma in [1.0, 2.0] {
            for shape in [0, 1] {
                let samples: Vec<(f64, f64)> = (0..80)
                    .map(|i| {
                        let omega = (4.8 + 7.6 * i as f64 / 79.0) * gamma;
                        let rho = if shape == 0 {
                            spectra::spd_hcp_closed(omega, &params, 1.0, gamma)
                        } else {
                            spectra::spd_scp_closed(omega, &params, 1.0, gamma)
                        };
                        (omega, rho / omega)
                    })
                    .collect();
                let fit = fit_exponential_tail(&samples, (5.0 * gamma, 12.0 * gamma))
                    .map_err(|e| format!("tail fit failed: {e}"))?;
                worst = worst.max((fit.decay_rate * gamma / PI - 1.0).abs());
            }
        }
        if worst <= 0.01 {
            Ok(format!("decay constant within {worst:.2e} of pi/Gamma (tol 1%)"))
        } else {
            Err(format!("decay constant off by {worst:.2e} relative (tol 1%)"))
        }
    })
}

/// CW flux: exact downconversion parabola, an upconversion band only at
/// fourth order, and windowed averages converging onto the limiting curve.
pub fn criterion_cw_flux() -> CriterionResult {
    run("cw_flux", 30.0, || {
        let params = CrystalParams::dimensionless(0.15, 3.0);
        let (e0, omega0) = (1.2, 2.0);
        let norm = spectra::rho0(&params, e0, omega0) * omega0;

        let mut worst: f64 = 0.0;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let flux = spectra::cw_flux_closed(x * omega0, &params, e0, omega0, 2)
                .map_err(|e| e.to_string())?;
            let reference = if x < 1.0 { PI * PI * x * (1.0 - x) } else { 0.0 };
            worst = worst.max((flux / norm - reference).abs());
        }
        if worst > 1e-12 {
            return Err(format!("order-2 flux deviates {worst:.2e} from the parabola"));
        }

        let up2 = spectra::cw_flux_closed(1.5 * omega0, &params, e0, omega0, 2)
            .map_err(|e| e.to_string())?;
        let up4 = spectra::cw_flux_closed(1.5 * omega0, &params, e0, omega0, 4)
            .map_err(|e| e.to_string())?;
        let beyond = spectra::cw_flux_closed(2.05 * omega0, &params, e0, omega0, 4)
            .map_err(|e| e.to_string())?;
        if up2 != 0.0 || up4 <= 0.0 || beyond != 0.0 {
            return Err(format!(
                "upconversion support wrong: order-2 {up2:.2e}, order-4 {up4:.2e}, past 2w0 {beyond:.2e}"
            ));
        }

        let mut deviations = Vec::new();
        for n in [10u32, 50, 200] {
            let mut dev: f64 = 0.0;
            for k in 1..=9 {
                let x = k as f64 / 10.0;
                let mu = (x * n as f64).round().max(1.0) as u32;
                let windowed = spectra::cw_flux_windowed(&params, e0, omega0, n, mu)
                    .map_err(|e| e.to_string())?;
                let omega_mu = mu as f64 * omega0 / n as f64;
                let closed = spectra::cw_flux_closed(omega_mu, &params, e0, omega0, 2)
                    .map_err(|e| e.to_string())?;
                dev = dev.max((windowed - closed).abs() / (norm * PI * PI / 4.0));
            }
            deviations.push(dev);
        }
        if deviations[0] > deviations[1] && deviations[1] > deviations[2] {
            Ok(format!(
                "parabola exact to {worst:.1e}; window deviations {:.2e} > {:.2e} > {:.2e}",
                deviations[0], deviations[1], deviations[2]
            ))
        } else {
            Err(format!("window deviations not monotone: {deviations:?}"))
        }
    })
}

/// Discretized squeeze map: the linear truncation reproduces the closed
/// density; the full exponential stays symplectic.
pub fn criterion_bogoliubov_map() -> CriterionResult {
    run("bogoliubov_map", 60.0, || {
        let gamma = 1.0;
        let e0 = 1.0;
        let params = CrystalParams::dimensionless(0.05, 3.0);
        let pulse = DrivePulse::Hcp { e0, gamma };
        let grid = SignedFrequencyGrid::new(16.0 * gamma, 2048).map_err(|e| e.to_string())?;
        let kernel = SqueezeKernel::build(&pulse, &params, grid).map_err(|e| e.to_string())?;
        let map = expand_bogoliubov(&kernel, 1.0, 1).map_err(|e| e.to_string())?;
        let spectrum = spectra::spd_from_map(&map);
        let mut worst: f64 = 0.0;
        for &(omega, value) in spectrum.samples() {
            if !(0.1 * gamma..=5.0 * gamma).contains(&omega) {
                continue;
            }
            let closed = spectra::spd_hcp_closed(omega, &params, e0, gamma);
            worst = worst.max(((value - closed) / closed).abs());
        }
        if worst > 0.01 {
            return Err(format!("grid density off by {worst:.2e} relative (tol 1%)"));
        }

        // r = |C E0| Gamma = 0.1: resum the series to convergence.
        let params_strong = CrystalParams::dimensionless(0.1, 3.0);
        let grid = SignedFrequencyGrid::new(12.0 * gamma, 256).map_err(|e| e.to_string())?;
        let kernel =
            SqueezeKernel::build(&pulse, &params_strong, grid).map_err(|e| e.to_string())?;
        let map = expand_bogoliubov(&kernel, 1.0, 14).map_err(|e| e.to_string())?;
        let residual = map.symplectic_residual();
        if residual < 1e-8 {
            Ok(format!(
                "density within {worst:.2e} of closed form; symplectic residual {residual:.2e}"
            ))
        } else {
            Err(format!("symplectic residual {residual:.2e} exceeds 1e-8"))
        }
    })
}

/// Field variance: derivative form, quadratic amplitude law, sub-vacuum dips
/// at the reference strengths, and exact parity.
pub fn criterion_variance() -> CriterionResult {
    run("field_variance", 300.0, || {
        let params = CrystalParams::dimensionless(0.3, 3.0);

        for pulse in [
            DrivePulse::Hcp { e0: 1.3, gamma: 1.0 },
            DrivePulse::Scp { e0: 0.7, gamma: 1.0 },
        ] {
            let scale = variance::v1_prefactor(&params) * 2.0 * pulse.amplitude();
            let stencil = |tau: f64, h: f64| {
                (pulse.field_time(tau + 2.0 * h) - 2.0 * pulse.field_time(tau + h)
                    + 2.0 * pulse.field_time(tau - h)
                    - pulse.field_time(tau - 2.0 * h))
                    / (2.0 * h * h * h)
            };
            for i in 0..20 {
                let tau = -3.0 + 6.0 * i as f64 / 19.0;
                let fd = (4.0 * stencil(tau, 5e-3) - stencil(tau, 1e-2)) / 3.0;
                let closed =
                    variance::v1_closed(&pulse, &params, tau).map_err(|e| e.to_string())?;
                let diff = (closed - variance::v1_prefactor(&params) * fd).abs();
                if diff > 1e-6 * scale {
                    return Err(format!(
                        "first-order variance differs from finite differences by {:.2e} of scale",
                        diff / scale
                    ));
                }
            }
        }

        let base = variance::v2_terms(&params_pulse(1.0), &params, 0.4).map_err(|e| e.to_string())?;
        let doubled =
            variance::v2_terms(&params_pulse(2.0), &params, 0.4).map_err(|e| e.to_string())?;
        for (a, b) in [
            (base.part1, doubled.part1),
            (base.part2, doubled.part2),
            (base.part3, doubled.part3),
        ] {
            if (4.0 * a - b).abs() > 1e-8 * b.abs().max(1e-300) {
                return Err(format!("quadratic amplitude law violated: 4x{a:.6e} vs {b:.6e}"));
            }
        }

        let mut minima = Vec::new();
        for (r, pulse) in [
            (0.21, DrivePulse::Hcp { e0: 1.0, gamma: 1.0 }),
            (1.54, DrivePulse::Scp { e0: 1.0, gamma: 1.0 }),
        ] {
            let p = CrystalParams::dimensionless(r, 3.0);
            let taus: Vec<f64> = (0..=320).map(|i| -8.0 + 16.0 * i as f64 / 320.0).collect();
            let trace = variance::variance_trace(&pulse, &p, &taus).map_err(|e| e.to_string())?;
            let min = trace.samples.iter().map(|s| s.total()).fold(f64::INFINITY, f64::min);
            if min >= 0.0 {
                return Err(format!("no sub-vacuum window at r = {r} (min {min:.3e})"));
            }
            minima.push(min / trace.v0);
        }

        let pulse = DrivePulse::Hcp { e0: 1.0, gamma: 1.0 };
        let cache = V2Cache::build(&pulse, &params).map_err(|e| e.to_string())?;
        for i in 1..=10 {
            let tau = 0.37 * i as f64;
            let v1p = variance::v1_closed(&pulse, &params, tau).map_err(|e| e.to_string())?;
            let v1m = variance::v1_closed(&pulse, &params, -tau).map_err(|e| e.to_string())?;
            let fp = cache.eval(tau);
            let fm = cache.eval(-tau);
            if v1p != -v1m || fp.part1 != fm.part1 || fp.part2 != fm.part2 || fp.part3 != fm.part3
            {
                return Err(format!("parity violated at tau = {tau}"));
            }
        }

        Ok(format!(
            "derivative, scaling and parity hold; minima/V0 = {:.3} (half-cycle), {:.3} (single-cycle)",
            minima[0], minima[1]
        ))
    })
}

fn params_pulse(e0: f64) -> DrivePulse {
    DrivePulse::Scp { e0, gamma: 1.0 }
}

/// Ray tracing against the first integrals and the thin/undriven limits.
pub fn criterion_world_lines() -> CriterionResult {
    run("world_lines", 10.0, || {
        let params = RayParams::from_groups(0.49, 12.0, 3.0);
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let mut worst: f64 = 0.0;
        for shape in [RayShape::HalfCycle, RayShape::SingleCycle] {
            for k in 0..10 {
                let ell = (-6.0 + 12.0 * (k as f64 + 0.5) / 10.0) / params.zeta;
                let implicit = geodesics::worldline_implicit(shape, &params, ell, &grid)
                    .map_err(|e| e.to_string())?;
                let ode = geodesics::worldline_ode(shape, &params, ell, &grid)
                    .map_err(|e| e.to_string())?;
                for (a, b) in implicit.points.iter().zip(&ode.points) {
                    worst = worst.max((a.1 - b.1).abs());
                }
            }
        }
        if worst > 1e-6 {
            return Err(format!("integration deviates {worst:.2e} from the first integral"));
        }

        let free = RayParams::new(0.0, 3.0, 4.0);
        let line = geodesics::worldline_ode(RayShape::HalfCycle, &free, 0.7, &grid)
            .map_err(|e| e.to_string())?;
        let mut straight: f64 = 0.0;
        for &(z, x0) in &line.points {
            straight = straight.max((x0 - (0.7 + 3.0 * z)).abs());
        }
        if straight > 1e-12 {
            return Err(format!("undriven ray bends by {straight:.2e}"));
        }

        let thin = RayParams::new(2.1, 3.0, 1e-3);
        let line = geodesics::worldline_ode(RayShape::HalfCycle, &thin, 0.0, &grid)
            .map_err(|e| e.to_string())?;
        let (z0, x0) = line.points[0];
        let (z1, x1) = *line.points.last().unwrap();
        let slope = (x1 - x0) / (z1 - z0);
        let expected = 3.0 + 2.1 / 3.0;
        let slope_err = ((slope - expected) / expected).abs();
        if slope_err > 1e-4 {
            return Err(format!("thin-crystal slope off by {slope_err:.2e} relative"));
        }

        Ok(format!(
            "first-integral deviation {worst:.2e}; straight to {straight:.1e}; thin-crystal slope within {slope_err:.1e}"
        ))
    })
}

/// Temperature interpolation limits and thermometry on a known thermal input.
pub fn criterion_temperatures() -> CriterionResult {
    run("temperature_maps", 1.0, || {
        let t_acc = 7.0;
        let fast = analysis::temperature_profile(t_acc, 2.0 * t_acc / 100.0, 0.0)
            .map_err(|e| e.to_string())?;
        let fast_err = (fast - t_acc).abs() / fast;
        if fast_err > 0.01 {
            return Err(format!("confined limit misses the acceleration value by {fast_err:.2e}"));
        }
        let t_win = 3.0;
        let slow = analysis::temperature_profile(0.005 * t_win, t_win, 0.0)
            .map_err(|e| e.to_string())?;
        let slow_err = (slow - t_win).abs() / slow;
        if slow_err > 0.01 {
            return Err(format!("long-window limit misses the window value by {slow_err:.2e}"));
        }

        let mut last = 0.0;
        for i in 0..=18 {
            let t_tilde = 0.05 * i as f64;
            let plus =
                analysis::temperature_profile(5.0, 2.0, t_tilde).map_err(|e| e.to_string())?;
            let minus =
                analysis::temperature_profile(5.0, 2.0, -t_tilde).map_err(|e| e.to_string())?;
            if plus != minus || plus <= last {
                return Err(format!("profile not even/monotone at t = {t_tilde}"));
            }
            last = plus;
        }

        let gamma = 1e13;
        let t_true = HBAR * gamma / KB;
        let samples: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let omega = (4.5 + 8.5 * i as f64 / 199.0) * gamma;
                (omega, analysis::planck_weighted_occupation(omega, t_true))
            })
            .collect();
        let got = analysis::effective_temperature_from_spectrum(&samples, gamma)
            .map_err(|e| e.to_string())?;
        let planck_err = (got.kelvin - t_true).abs() / t_true;
        if planck_err > 0.02 {
            return Err(format!("thermal input recovered {planck_err:.2e} off (tol 2%)"));
        }

        Ok(format!(
            "limits within {:.1e}/{:.1e}; thermal recovery within {planck_err:.1e}",
            fast_err, slow_err
        ))
    })
}

/// Inversion of the CW fourth-order smallness factor.
pub fn criterion_cw_regime() -> CriterionResult {
    run("cw_regime_inversion", 1.0, || {
        let s = 0.02;
        let q = spectra::q_from_smallness(s);
        let round = spectra::smallness_from_q(q);
        let err = (round - s).abs() / s;
        if err > 1e-3 {
            return Err(format!("round trip error {err:.2e} (tol 1e-3)"));
        }
        // The inverted drive strength must itself sit in the perturbative
        // window for the reference factor.
        let params = CrystalParams::dimensionless(1.0, 3.0);
        let cw = DrivePulse::Cw { e0: Complex64::new(q, 0.0), omega0: 1.0 };
        let report = spectra::regime_check(&cw, &params);
        if report.regime != spectra::Regime::Perturbative {
            return Err(format!("q = {q:.4} not classified perturbative"));
        }
        Ok(format!("round trip exact to {err:.1e}; q = {q:.4} perturbative"))
    })
}

/// All criteria in order, followed by an aggregate entry that doubles as the
/// overall exit status of the suite.
pub fn run_all() -> Vec<CriterionResult> {
    let mut results = vec![
        criterion_closed_spectra(),
        criterion_spectral_tail(),
        criterion_cw_flux(),
        criterion_bogoliubov_map(),
        criterion_variance(),
        criterion_world_lines(),
        criterion_temperatures(),
        criterion_cw_regime(),
    ];
    let total: Duration = results.iter().map(|r| r.duration).sum();
    let all_passed = results.iter().all(|r| r.passed);
    let within = total.as_secs_f64() <= 600.0;
    results.push(CriterionResult {
        name: "suite",
        passed: all_passed && within,
        details: format!(
            "{}/8 families passed in {:.1}s of 600s budget",
            results.iter().filter(|r| r.passed).count(),
            total.as_secs_f64()
        ),
        duration: total,
    });
    results
}
