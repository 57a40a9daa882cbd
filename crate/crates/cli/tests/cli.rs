//! End-to-end tests against the built binary: exit codes, file schemas,
//! self-validation of emitted numbers, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_squeezelab")
}

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).output().unwrap()
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|line| line.split(',').map(|f| f.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Last `key = value` style float on a stdout line containing `needle`.
fn stdout_value(output: &Output, needle: &str) -> f64 {
    let stdout = String::from_utf8_lossy(&output.stdout).to_string();
    let line = stdout
        .lines()
        .find(|l| l.contains(needle))
        .unwrap_or_else(|| panic!("no line containing {needle:?} in: {stdout}"));
    line.rsplit('=').next().unwrap().trim().parse().unwrap()
}

#[test]
fn spectrum_self_validates_and_is_deterministic() {
    let dir = workdir("spectrum");
    let out = run_in(
        &dir,
        &["spectrum", "--drive", "hcp", "--omega-max", "12", "--points", "400", "--out", "a.csv"],
    );
    assert_ok(&out);
    assert!(stdout_value(&out, "max closed-vs-oracle") < 1e-6);

    let (header, rows) = read_csv(&dir.join("a.csv"));
    assert_eq!(header, "omega_over_Gamma,rho_over_rho0,rho_oracle_over_rho0,rel_diff,order");
    assert_eq!(rows.len(), 400);
    assert_eq!(rows[0][..4], [0.0, 0.0, 0.0, 0.0]);
    let worst = rows.iter().map(|r| r[3]).fold(0.0f64, f64::max);
    assert!(worst < 1e-6, "column says {worst}");

    // Identical run, then a run under a capped pool: both byte-identical.
    assert_ok(&run_in(&dir, &["spectrum", "--drive", "hcp", "--omega-max", "12", "--points", "400", "--out", "b.csv"]));
    let capped = Command::new(bin())
        .current_dir(&dir)
        .env("SQUEEZELAB_THREADS", "1")
        .args(["spectrum", "--drive", "hcp", "--omega-max", "12", "--points", "400", "--out", "c.csv"])
        .output()
        .unwrap();
    assert_ok(&capped);
    let a = std::fs::read(dir.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b.csv")).unwrap());
    assert_eq!(a, std::fs::read(dir.join("c.csv")).unwrap());
}

#[test]
fn spectrum_zero_row_and_normalized_peak() {
    let dir = workdir("spectrum_peak");
    assert_ok(&run_in(&dir, &["spectrum", "--drive", "scp", "--points", "120", "--out", "scp.csv"]));
    let (_, rows) = read_csv(&dir.join("scp.csv"));
    assert_eq!(rows[0][1], 0.0, "density at zero frequency");

    assert_ok(&run_in(&dir, &["spectrum", "--drive", "hcp", "--normalized", "--out", "hcp.csv"]));
    let (_, rows) = read_csv(&dir.join("hcp.csv"));
    let peak = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();

    // Continuous maximum of x ln(1 + e^{-pi x}) by ternary search.
    let f = |x: f64| x * (-std::f64::consts::PI * x).exp().ln_1p();
    let (mut lo, mut hi) = (0.01f64, 1.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let x_star = 0.5 * (lo + hi);
    let step = 12.0 / 399.0;
    assert!((peak[0] - x_star).abs() <= step, "peak at {} vs {x_star}", peak[0]);
    assert!((peak[1] - f(x_star)).abs() <= 1e-3, "peak value {} vs {}", peak[1], f(x_star));
}

#[test]
fn flux_reports_smallness_and_band_structure() {
    let dir = workdir("flux");
    let out = run_in(&dir, &["flux", "--out", "flux.csv"]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(stdout.contains("smallness factor = 0.020000"), "stdout: {stdout}");
    assert!(stdout.contains("regime = perturbative"));

    let (header, rows) = read_csv(&dir.join("flux.csv"));
    assert_eq!(
        header,
        "omega_over_omega0,phi2_over_rho0omega0,phi4_over_rho0omega0,phi_windowed_over_rho0omega0"
    );
    assert_eq!(rows.len(), 110);
    for row in &rows {
        let x = row[0];
        if x > 1.0 {
            assert_eq!(row[1], 0.0, "second order must vanish at {x}");
        }
        if x > 1.0 && x < 2.0 {
            assert!(row[2] > 0.0, "fourth order must populate ({x})");
        }
        if x > 2.0 {
            assert_eq!(row[2], 0.0, "no photons past twice the carrier ({x})");
        }
        assert!(row[3].is_finite() && row[3] >= 0.0);
    }
}

#[test]
fn worldlines_bundle_is_monotone_and_cross_checked() {
    let dir = workdir("worldlines");
    let out = run_in(&dir, &["worldlines", "--drive", "hcp", "--bundle", "21", "--out", "wl.csv"]);
    assert_ok(&out);
    assert!(stdout_value(&out, "max deviation") < 1e-6);

    let (header, rows) = read_csv(&dir.join("wl.csv"));
    assert_eq!(header, "launch_index,x0_over_L,x1_over_L,constant");
    assert_eq!(rows.len(), 21 * 201);
    let mut seen = std::collections::BTreeSet::new();
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        seen.insert(a[0] as i64);
        if a[0] == b[0] {
            assert!(b[1] > a[1], "x0 must increase along a line");
            assert!(b[2] > a[2], "x1 must increase along a line");
            assert_eq!(a[3], b[3], "one conserved constant per line");
        }
    }
    seen.insert(rows.last().unwrap()[0] as i64);
    assert_eq!(seen.len(), 21);
}

#[test]
fn cw_variance_trace_is_periodic() {
    let dir = workdir("variance_cw");
    // Phase grid over two carrier periods: step pi/32, so one period is
    // exactly 64 rows.
    let out = run_in(
        &dir,
        &[
            "variance", "--drive", "cw", "--r", "0.07",
            "--tau-max", "12.566370614359172", "--points", "257",
            "--out", "cw.csv",
        ],
    );
    assert_ok(&out);
    let (header, rows) = read_csv(&dir.join("cw.csv"));
    assert_eq!(header, "tau_Gamma,V1_over_V0,V2_over_V0,V_over_V0");
    assert_eq!(rows.len(), 257);
    let peak = rows.iter().map(|r| r[3].abs()).fold(0.0f64, f64::max);
    for i in 0..rows.len() - 64 {
        assert!(
            (rows[i][3] - rows[i + 64][3]).abs() <= 1e-8 * peak,
            "trace not periodic at row {i}"
        );
    }
    let min = rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
    assert!(min < 0.0, "squeezed CW trace must dip below vacuum");
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = workdir("config");
    std::fs::write(
        dir.join("run.conf"),
        "# reference single-cycle spectrum\ncommand=spectrum\ndrive=scp\npoints=64\nomega-max=6\nout=from_file.csv\n",
    )
    .unwrap();

    assert_ok(&run_in(&dir, &["--config", "run.conf"]));
    let (_, rows) = read_csv(&dir.join("from_file.csv"));
    assert_eq!(rows.len(), 64);

    assert_ok(&run_in(&dir, &["--config", "run.conf", "spectrum", "--points", "80", "--out", "override.csv"]));
    let (_, rows) = read_csv(&dir.join("override.csv"));
    assert_eq!(rows.len(), 80);

    let sidecar = run_in(&dir, &["--config", "run.conf", "spectrum", "--sidecar", "--out", "s.csv"]);
    assert_ok(&sidecar);
    let meta = std::fs::read_to_string(dir.join("s.csv.meta")).unwrap();
    assert!(meta.contains("axis_x=omega_over_Gamma"));
    assert!(meta.contains("rho0="));
}

#[test]
fn failures_use_the_documented_exit_codes() {
    let dir = workdir("failures");
    std::fs::write(dir.join("bad.conf"), "command=spectrum\nwavelength=5\n").unwrap();

    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--config", "bad.conf"], 2),
        (vec!["--config", "missing.conf", "spectrum"], 2),
        (vec!["flux", "--drive", "hcp"], 2),
        (vec!["spectrum", "--drive", "cw"], 2),
        (vec!["variance", "--drive", "table"], 2),
        (vec!["variance", "--drive", "table", "--table", "nope.csv"], 2),
        (vec!["spectrum", "--points", "1"], 2),
        (vec![], 2),
        (vec!["worldlines", "--drive", "scp", "--ell", "0"], 3),
    ];
    for (args, expected) in cases {
        let out = run_in(&dir, &args);
        assert_eq!(
            out.status.code(),
            Some(expected),
            "args {args:?}: stderr {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let out = Command::new(bin())
        .current_dir(&dir)
        .env("SQUEEZELAB_THREADS", "0")
        .args(["regime"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tailfit_recovers_the_pulse_duration() {
    let dir = workdir("tailfit");
    let out = run_in(&dir, &["tailfit", "--drive", "hcp", "--gamma", "2.0", "--out", "fit.txt"]);
    assert_ok(&out);
    let report = std::fs::read_to_string(dir.join("fit.txt")).unwrap();
    let ratio: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("duration_ratio="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((ratio - 1.0).abs() < 0.01, "duration ratio {ratio}");
}

#[test]
fn regime_report_classifies_the_default_drive() {
    let dir = workdir("regime");
    let out = run_in(&dir, &["regime", "--out", "regime.txt"]);
    assert_ok(&out);
    let report = std::fs::read_to_string(dir.join("regime.txt")).unwrap();
    assert!(report.contains("regime=perturbative"), "report: {report}");
    assert!(report.contains("smallness=2.000000000000e-2"));

    let strong = run_in(&dir, &["regime", "--drive", "hcp", "--r", "1.2", "--out", "strong.txt"]);
    assert_ok(&strong);
    let report = std::fs::read_to_string(dir.join("strong.txt")).unwrap();
    assert!(report.contains("regime=invalid"), "report: {report}");
}

#[test]
fn validate_command_exits_zero_and_lists_every_criterion() {
    let dir = workdir("validate");
    let out = run_in(&dir, &["validate", "--out", "validate.txt"]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert_eq!(stdout.matches(" PASS").count(), 9, "stdout: {stdout}");
    assert!(stdout.contains("validation suite passed"));

    let report = std::fs::read_to_string(dir.join("validate.txt")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 9);
    for line in lines {
        assert!(line.ends_with(" PASS"), "line: {line}");
    }
}
