//! The seven commands. Each builds its drive from the resolved config, runs
//! the core-library operations, and emits deterministic text: fixed float
//! formatting, no timestamps, stable row order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use squeezelab::analysis;
use squeezelab::drive::{CrystalParams, DrivePulse};
use squeezelab::geodesics::{self, RayParams, RayShape, WorldLine};
use squeezelab::spectra::{self, Regime};
use squeezelab::validate;
use squeezelab::variance;

use crate::config::{CommandKind, DriveKind, RunConfig};
use crate::Failure;

const PI: f64 = std::f64::consts::PI;

fn num(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

/// The one float format in every output file; negative zero is folded so the
/// same number never prints two ways.
fn fmt(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.12e}")
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

/// Plot-ready labels and constants next to the data file, on request.
fn write_sidecar(cfg: &RunConfig, entries: &[(&str, String)]) -> Result<(), Failure> {
    if !cfg.sidecar {
        return Ok(());
    }
    let mut sorted: Vec<&(&str, String)> = entries.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut text = String::new();
    for (key, value) in sorted {
        writeln!(text, "{key}={value}").expect("string write");
    }
    write_output(&PathBuf::from(format!("{}.meta", cfg.out.display())), &text)
}

fn build_pulse(cfg: &RunConfig) -> Result<DrivePulse, Failure> {
    match cfg.drive {
        DriveKind::Hcp => Ok(DrivePulse::Hcp { e0: 1.0, gamma: cfg.gamma }),
        DriveKind::Scp => Ok(DrivePulse::Scp { e0: 1.0, gamma: cfg.gamma }),
        DriveKind::Cw => {
            Ok(DrivePulse::Cw { e0: Complex64::new(1.0, 0.0), omega0: cfg.omega0 })
        }
        DriveKind::Table => {
            let path = cfg.table.as_ref().expect("presence checked at resolve time");
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Config(format!("cannot read table {}: {e}", path.display()))
            })?;
            DrivePulse::tabulated_from_csv(&text, 1.0, cfg.gamma)
                .map_err(|e| Failure::Config(format!("table {}: {e}", path.display())))
        }
    }
}

/// Dimensionless crystal with the coupling set so that |C E0| Γ′ = r.
fn params_for(cfg: &RunConfig, pulse: &DrivePulse) -> CrystalParams {
    CrystalParams::dimensionless(cfg.r / (pulse.amplitude() * pulse.gamma()), cfg.n)
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Perturbative => "perturbative",
        Regime::Marginal => "marginal",
        Regime::Invalid => "invalid",
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    match cfg.command {
        CommandKind::Spectrum => cmd_spectrum(cfg),
        CommandKind::Flux => cmd_flux(cfg),
        CommandKind::Variance => cmd_variance(cfg),
        CommandKind::Worldlines => cmd_worldlines(cfg),
        CommandKind::Tailfit => cmd_tailfit(cfg),
        CommandKind::Regime => cmd_regime(cfg),
        CommandKind::Validate => cmd_validate(cfg),
    }
}

/// Closed-form pulsed density next to its quadrature oracle, row by row.
fn cmd_spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let closed: fn(f64, &CrystalParams, f64, f64) -> f64 = match cfg.drive {
        DriveKind::Hcp => spectra::spd_hcp_closed,
        DriveKind::Scp => spectra::spd_scp_closed,
        _ => {
            return Err(Failure::Config(
                "spectrum needs a closed-form pulsed drive (hcp or scp)".into(),
            ))
        }
    };
    let pulse = build_pulse(cfg)?;
    let params = params_for(cfg, &pulse);
    let rho0 = spectra::rho0(&params, 1.0, cfg.gamma);
    let (freq_scale, value_scale) =
        if cfg.normalized { (cfg.gamma, rho0) } else { (1.0, 1.0) };

    let rows: Vec<(f64, f64, f64)> = (0..cfg.points)
        .into_par_iter()
        .map(|i| {
            let x = cfg.omega_max * i as f64 / (cfg.points - 1) as f64;
            let omega = x * cfg.gamma;
            let oracle = spectra::spd_order2_numeric(&pulse, &params, omega).map_err(num)?;
            Ok((omega, closed(omega, &params, 1.0, cfg.gamma), oracle))
        })
        .collect::<Result<_, Failure>>()?;

    let mut text = String::new();
    text.push_str(if cfg.normalized {
        "omega_over_Gamma,rho_over_rho0,rho_oracle_over_rho0,rel_diff,order\n"
    } else {
        "omega,rho,rho_oracle,rel_diff,order\n"
    });
    let mut worst: f64 = 0.0;
    for &(omega, value, oracle) in &rows {
        let denom = value.abs().max(oracle.abs());
        let rel = if denom == 0.0 { 0.0 } else { (value - oracle).abs() / denom };
        worst = worst.max(rel);
        writeln!(
            text,
            "{},{},{},{},2",
            fmt(omega / freq_scale),
            fmt(value / value_scale),
            fmt(oracle / value_scale),
            fmt(rel)
        )
        .expect("string write");
    }
    write_output(&cfg.out, &text)?;
    write_sidecar(
        cfg,
        &[
            ("command", "spectrum".into()),
            ("drive", cfg.drive.name().into()),
            ("axis_x", if cfg.normalized { "omega_over_Gamma" } else { "omega" }.into()),
            ("axis_y", if cfg.normalized { "rho_over_rho0" } else { "rho" }.into()),
            ("gamma", fmt(cfg.gamma)),
            ("r", fmt(cfg.r)),
            ("rho0", fmt(rho0)),
        ],
    )?;
    println!("wrote {} rows to {}", rows.len(), cfg.out.display());
    println!("max closed-vs-oracle relative difference = {worst:.3e}");
    Ok(())
}

/// CW flux at the window frequencies: second order, fourth order, and the
/// finite-window average that converges onto them.
fn cmd_flux(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.drive != DriveKind::Cw {
        return Err(Failure::Config("flux needs a cw drive".into()));
    }
    let pulse = build_pulse(cfg)?;
    let params = params_for(cfg, &pulse);
    let norm = spectra::rho0(&params, 1.0, cfg.omega0) * cfg.omega0;
    let (freq_scale, value_scale) =
        if cfg.normalized { (cfg.omega0, norm) } else { (1.0, 1.0) };

    let mu_max = (cfg.periods as f64 * cfg.omega_max).floor() as u32;
    if mu_max < 1 {
        return Err(Failure::Config(
            "omega-max ends below the first window frequency omega0/periods".into(),
        ));
    }
    let rows: Vec<(f64, f64, f64, f64)> = (1..=mu_max)
        .into_par_iter()
        .map(|mu| {
            let omega = mu as f64 * cfg.omega0 / cfg.periods as f64;
            let phi2 = spectra::cw_flux_closed(omega, &params, 1.0, cfg.omega0, 2).map_err(num)?;
            let phi4 = spectra::cw_flux_closed(omega, &params, 1.0, cfg.omega0, 4).map_err(num)?;
            let windowed =
                spectra::cw_flux_windowed(&params, 1.0, cfg.omega0, cfg.periods, mu).map_err(num)?;
            Ok((omega, phi2, phi4, windowed))
        })
        .collect::<Result<_, Failure>>()?;

    let mut text = String::new();
    text.push_str(if cfg.normalized {
        "omega_over_omega0,phi2_over_rho0omega0,phi4_over_rho0omega0,phi_windowed_over_rho0omega0\n"
    } else {
        "omega,phi2,phi4,phi_windowed\n"
    });
    for &(omega, phi2, phi4, windowed) in &rows {
        writeln!(
            text,
            "{},{},{},{}",
            fmt(omega / freq_scale),
            fmt(phi2 / value_scale),
            fmt(phi4 / value_scale),
            fmt(windowed / value_scale)
        )
        .expect("string write");
    }
    write_output(&cfg.out, &text)?;
    let report = spectra::regime_check(&pulse, &params);
    let smallness = spectra::smallness_from_q(cfg.r);
    write_sidecar(
        cfg,
        &[
            ("command", "flux".into()),
            ("axis_x", if cfg.normalized { "omega_over_omega0" } else { "omega" }.into()),
            ("axis_y", if cfg.normalized { "phi_over_rho0omega0" } else { "phi" }.into()),
            ("omega0", fmt(cfg.omega0)),
            ("periods", cfg.periods.to_string()),
            ("r", fmt(cfg.r)),
            ("rho0_omega0", fmt(norm)),
            ("smallness", fmt(smallness)),
        ],
    )?;
    println!("wrote {} rows to {}", rows.len(), cfg.out.display());
    println!("smallness factor = {smallness:.6}");
    println!("regime = {}", regime_name(report.regime));
    Ok(())
}

/// Normally ordered variance trace: first and second order in the coupling.
fn cmd_variance(cfg: &RunConfig) -> Result<(), Failure> {
    let pulse = build_pulse(cfg)?;
    let params = params_for(cfg, &pulse);
    let scale = pulse.gamma();
    let phases: Vec<f64> = (0..cfg.points)
        .map(|i| -cfg.tau_max + 2.0 * cfg.tau_max * i as f64 / (cfg.points - 1) as f64)
        .collect();
    let taus: Vec<f64> = phases.iter().map(|&x| x / scale).collect();
    let trace = variance::variance_trace(&pulse, &params, &taus).map_err(num)?;
    let value_scale = if cfg.normalized { trace.v0 } else { 1.0 };

    let mut text = String::new();
    text.push_str(if cfg.normalized {
        "tau_Gamma,V1_over_V0,V2_over_V0,V_over_V0\n"
    } else {
        "tau,V1,V2,V\n"
    });
    let mut min_total = f64::INFINITY;
    for (phase, sample) in phases.iter().zip(&trace.samples) {
        min_total = min_total.min(sample.total() / trace.v0);
        let time_col = if cfg.normalized { *phase } else { sample.tau };
        writeln!(
            text,
            "{},{},{},{}",
            fmt(time_col),
            fmt(sample.v1 / value_scale),
            fmt(sample.v2 / value_scale),
            fmt(sample.total() / value_scale)
        )
        .expect("string write");
    }
    write_output(&cfg.out, &text)?;
    write_sidecar(
        cfg,
        &[
            ("command", "variance".into()),
            ("drive", cfg.drive.name().into()),
            ("axis_x", if cfg.normalized { "tau_Gamma" } else { "tau" }.into()),
            ("axis_y", if cfg.normalized { "V_over_V0" } else { "V" }.into()),
            ("r", fmt(trace.r)),
            ("v0", fmt(trace.v0)),
        ],
    )?;
    println!("wrote {} rows to {}", trace.samples.len(), cfg.out.display());
    println!("r = {:.6}", trace.r);
    println!("min V/V0 = {min_total:.6}");
    Ok(())
}

fn shape_for(cfg: &RunConfig) -> Result<RayShape, Failure> {
    match cfg.drive {
        DriveKind::Hcp => Ok(RayShape::HalfCycle),
        DriveKind::Scp => Ok(RayShape::SingleCycle),
        _ => Err(Failure::Config("worldlines needs a pulsed drive shape (hcp or scp)".into())),
    }
}

/// World lines from the first integrals, cross-checked against direct
/// integration of the ray equation.
fn cmd_worldlines(cfg: &RunConfig) -> Result<(), Failure> {
    let shape = shape_for(cfg)?;
    let ray = RayParams::from_groups(cfg.alpha_over_n2, cfg.n_zeta, cfg.n);
    let z_grid: Vec<f64> =
        (0..cfg.points).map(|i| i as f64 / (cfg.points - 1) as f64).collect();

    let lines: Vec<WorldLine> = match cfg.ell {
        Some(ell) => vec![geodesics::worldline_implicit(shape, &ray, ell, &z_grid).map_err(num)?],
        None => {
            let span = 6.0 / ray.zeta;
            geodesics::worldline_bundle(shape, &ray, (-span, span), cfg.bundle, &z_grid)
                .map_err(num)?
        }
    };
    let mut deviation: f64 = 0.0;
    for line in &lines {
        let ode = geodesics::worldline_ode(shape, &ray, line.launch, &z_grid).map_err(num)?;
        for (a, b) in line.points.iter().zip(&ode.points) {
            deviation = deviation.max((a.1 - b.1).abs());
        }
    }

    let single = cfg.ell.is_some();
    let mut text = String::new();
    text.push_str(if single {
        "x0_over_L,x1_over_L,constant\n"
    } else {
        "launch_index,x0_over_L,x1_over_L,constant\n"
    });
    let mut rows = 0usize;
    for (index, line) in lines.iter().enumerate() {
        for &(z, x0) in &line.points {
            if single {
                writeln!(text, "{},{},{}", fmt(x0), fmt(z), fmt(line.constant))
            } else {
                writeln!(text, "{index},{},{},{}", fmt(x0), fmt(z), fmt(line.constant))
            }
            .expect("string write");
            rows += 1;
        }
    }
    write_output(&cfg.out, &text)?;
    write_sidecar(
        cfg,
        &[
            ("command", "worldlines".into()),
            ("drive", cfg.drive.name().into()),
            ("axis_x", "x1_over_L".into()),
            ("axis_y", "x0_over_L".into()),
            ("alpha", fmt(ray.alpha)),
            ("zeta", fmt(ray.zeta)),
            ("n", fmt(ray.n)),
            ("strength", fmt(ray.strength())),
        ],
    )?;
    println!("wrote {} world lines ({rows} rows) to {}", lines.len(), cfg.out.display());
    println!("implicit vs direct integration max deviation = {deviation:.3e}");
    Ok(())
}

/// Exponential fit of the spectral tail and the temperature it implies.
fn cmd_tailfit(cfg: &RunConfig) -> Result<(), Failure> {
    let pulse = build_pulse(cfg)?;
    if pulse.is_cw() {
        return Err(Failure::Config("tailfit needs a pulsed drive".into()));
    }
    let params = params_for(cfg, &pulse);
    let samples: Vec<(f64, f64)> = (0..120)
        .into_par_iter()
        .map(|i| {
            let omega = (4.6 + 7.8 * i as f64 / 119.0) * cfg.gamma;
            let rho = match cfg.drive {
                DriveKind::Hcp => spectra::spd_hcp_closed(omega, &params, 1.0, cfg.gamma),
                DriveKind::Scp => spectra::spd_scp_closed(omega, &params, 1.0, cfg.gamma),
                _ => spectra::spd_order2_numeric(&pulse, &params, omega).map_err(num)?,
            };
            Ok((omega, rho))
        })
        .collect::<Result<_, Failure>>()?;
    let eff = analysis::effective_temperature_from_spectrum(&samples, cfg.gamma).map_err(num)?;

    let mut text = String::new();
    for (key, value) in [
        ("command", "tailfit".to_string()),
        ("drive", cfg.drive.name().to_string()),
        ("gamma", fmt(cfg.gamma)),
        ("fit_window_low", fmt(5.0 * cfg.gamma)),
        ("fit_window_high", fmt(12.0 * cfg.gamma)),
        ("decay_constant", fmt(eff.fit.decay_rate)),
        // The tail of a sech-class pulse decays on the time scale pi/Gamma;
        // this ratio is 1 when the fit recovers it.
        ("duration_ratio", fmt(eff.fit.decay_rate * cfg.gamma / PI)),
        ("amplitude", fmt(eff.fit.amplitude)),
        ("residual_rms", fmt(eff.fit.residual_rms)),
        ("effective_temperature_kelvin", fmt(eff.kelvin)),
    ] {
        writeln!(text, "{key}={value}").expect("string write");
    }
    write_output(&cfg.out, &text)?;
    print!("{text}");
    println!("wrote report to {}", cfg.out.display());
    Ok(())
}

/// Drive-strength report: kernel size, confinement reading, regime class.
fn cmd_regime(cfg: &RunConfig) -> Result<(), Failure> {
    let pulse = build_pulse(cfg)?;
    let params = params_for(cfg, &pulse);
    let report = spectra::regime_check(&pulse, &params);

    let mut text = String::new();
    for (key, value) in [
        ("command", "regime".to_string()),
        ("drive", cfg.drive.name().to_string()),
        ("rate", fmt(pulse.gamma())),
        ("q", fmt(report.q)),
        ("confinement", fmt(report.eps_confinement)),
        ("smallness", report.smallness.map(fmt).unwrap_or_else(|| "none".into())),
        ("regime", regime_name(report.regime).to_string()),
    ] {
        writeln!(text, "{key}={value}").expect("string write");
    }
    write_output(&cfg.out, &text)?;
    print!("{text}");
    println!("wrote report to {}", cfg.out.display());
    Ok(())
}

/// The full self-validation suite; any failed criterion fails the run.
fn cmd_validate(cfg: &RunConfig) -> Result<(), Failure> {
    let results = validate::run_all();
    let mut text = String::new();
    for result in &results {
        let status = if result.passed { "PASS" } else { "FAIL" };
        println!("{:<26} {status}  ({})", result.name, result.details);
        writeln!(text, "{} {status}", result.name).expect("string write");
    }
    write_output(&cfg.out, &text)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        println!("validation suite passed");
        Ok(())
    } else {
        Err(Failure::Numeric(format!("{failed} validation criteria failed")))
    }
}
