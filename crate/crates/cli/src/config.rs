//! Run configuration: defaults, a flat key=value file, and flags, merged in
//! that order of increasing precedence. Keys and long flags are spelled
//! identically, so a config line `omega-max=12` and `--omega-max 12` are the
//! same statement.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::Failure;

pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "drive",
    "table",
    "r",
    "gamma",
    "omega0",
    "n",
    "omega-max",
    "points",
    "tau-max",
    "periods",
    "bundle",
    "ell",
    "alpha-over-n2",
    "n-zeta",
    "normalized",
    "out",
    "sidecar",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Spectrum,
    Flux,
    Variance,
    Worldlines,
    Tailfit,
    Regime,
    Validate,
}

impl CommandKind {
    pub fn parse(name: &str) -> Result<Self, Failure> {
        match name {
            "spectrum" => Ok(CommandKind::Spectrum),
            "flux" => Ok(CommandKind::Flux),
            "variance" => Ok(CommandKind::Variance),
            "worldlines" => Ok(CommandKind::Worldlines),
            "tailfit" => Ok(CommandKind::Tailfit),
            "regime" => Ok(CommandKind::Regime),
            "validate" => Ok(CommandKind::Validate),
            other => Err(Failure::Config(format!("unknown command {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Flux => "flux",
            CommandKind::Variance => "variance",
            CommandKind::Worldlines => "worldlines",
            CommandKind::Tailfit => "tailfit",
            CommandKind::Regime => "regime",
            CommandKind::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    Hcp,
    Scp,
    Cw,
    Table,
}

impl DriveKind {
    fn parse(name: &str) -> Result<Self, Failure> {
        match name {
            "hcp" => Ok(DriveKind::Hcp),
            "scp" => Ok(DriveKind::Scp),
            "cw" => Ok(DriveKind::Cw),
            "table" => Ok(DriveKind::Table),
            other => Err(Failure::Config(format!(
                "unknown drive {other:?} (expected hcp, scp, cw or table)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriveKind::Hcp => "hcp",
            DriveKind::Scp => "scp",
            DriveKind::Cw => "cw",
            DriveKind::Table => "table",
        }
    }
}

/// The shared flag set; every command accepts every flag and reads the
/// subset it needs, mirroring the single key space of the config file.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct Args {
    /// Drive shape: hcp, scp, cw or table
    #[arg(long)]
    pub drive: Option<String>,
    /// CSV of tau,field samples for a tabulated drive
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Squeezing strength r = |C E0| Γ (CW: |C E0| ω0)
    #[arg(long)]
    pub r: Option<f64>,
    /// Inverse pulse duration Γ
    #[arg(long)]
    pub gamma: Option<f64>,
    /// CW carrier frequency ω0
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Refractive index of the crystal
    #[arg(long)]
    pub n: Option<f64>,
    /// Upper edge of the frequency grid, in units of Γ (CW: ω0)
    #[arg(long = "omega-max")]
    pub omega_max: Option<f64>,
    /// Number of grid rows (spectrum, variance) or z-samples (worldlines)
    #[arg(long)]
    pub points: Option<usize>,
    /// Half-width of the detection-time grid, in phase units Γτ (CW: ω0 τ)
    #[arg(long = "tau-max")]
    pub tau_max: Option<f64>,
    /// Periods per averaging window for the windowed CW flux
    #[arg(long)]
    pub periods: Option<u32>,
    /// Number of world lines in the launch bundle
    #[arg(long)]
    pub bundle: Option<usize>,
    /// Launch coordinate of a single world line (units of L)
    #[arg(long, allow_hyphen_values = true)]
    pub ell: Option<f64>,
    /// Drive strength group α/n²
    #[arg(long = "alpha-over-n2")]
    pub alpha_over_n2: Option<f64>,
    /// Crystal thickness group n ζ L
    #[arg(long = "n-zeta")]
    pub n_zeta: Option<f64>,
    /// Emit columns in characteristic units (ρ0, V0, Γ); pass `false` for raw values
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalized: Option<bool>,
    /// Output file path
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write a .meta sidecar with axis labels and normalization constants
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sidecar: Option<bool>,
}

pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Config(format!("config line {}: expected key=value", idx + 1))
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Failure::Config(format!("config line {}: unknown key {key:?}", idx + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_map<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, Failure> {
    match map.get(key) {
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            Failure::Config(format!("config key {key}: cannot parse value {raw:?}"))
        }),
        None => Ok(None),
    }
}

fn pick<T: FromStr>(
    flag: Option<T>,
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, Failure> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => from_map(map, key),
    }
}

fn positive(value: f64, what: &str) -> Result<f64, Failure> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::Config(format!("{what} must be positive and finite, got {value}")))
    }
}

/// Fully resolved run: every field concrete, all defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub drive: DriveKind,
    pub table: Option<PathBuf>,
    pub r: f64,
    pub gamma: f64,
    pub omega0: f64,
    pub n: f64,
    pub omega_max: f64,
    pub points: usize,
    pub tau_max: f64,
    pub periods: u32,
    pub bundle: usize,
    pub ell: Option<f64>,
    pub alpha_over_n2: f64,
    pub n_zeta: f64,
    pub normalized: bool,
    pub out: PathBuf,
    pub sidecar: bool,
}

fn default_drive(command: CommandKind) -> DriveKind {
    match command {
        CommandKind::Flux | CommandKind::Regime => DriveKind::Cw,
        _ => DriveKind::Hcp,
    }
}

fn default_r(command: CommandKind, drive: DriveKind) -> f64 {
    match command {
        // The reference CW strength: fourth-order smallness factor 0.02.
        CommandKind::Flux | CommandKind::Regime => squeezelab::spectra::q_from_smallness(0.02),
        CommandKind::Variance => match drive {
            DriveKind::Scp => 1.54,
            DriveKind::Cw => 0.07,
            _ => 0.21,
        },
        _ => 0.1,
    }
}

pub fn resolve(
    command: CommandKind,
    args: &Args,
    map: &BTreeMap<String, String>,
) -> Result<RunConfig, Failure> {
    let drive_name = match (&args.drive, map.get("drive")) {
        (Some(flag), _) => flag.clone(),
        (None, Some(key)) => key.clone(),
        (None, None) => default_drive(command).name().to_string(),
    };
    let drive = DriveKind::parse(&drive_name)?;
    let table = args.table.clone().or_else(|| map.get("table").map(PathBuf::from));
    if drive == DriveKind::Table && table.is_none() {
        return Err(Failure::Config("a tabulated drive needs --table PATH".into()));
    }

    let gamma = positive(pick(args.gamma, map, "gamma")?.unwrap_or(1.0), "gamma")?;
    let omega0 = positive(pick(args.omega0, map, "omega0")?.unwrap_or(1.0), "omega0")?;
    let n = positive(pick(args.n, map, "n")?.unwrap_or(3.0), "n")?;
    let r = pick(args.r, map, "r")?.unwrap_or_else(|| default_r(command, drive));
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Failure::Config(format!("r must be non-negative and finite, got {r}")));
    }

    let omega_max_default = match command {
        CommandKind::Flux => 2.2,
        _ => 12.0,
    };
    let omega_max =
        positive(pick(args.omega_max, map, "omega-max")?.unwrap_or(omega_max_default), "omega-max")?;

    let points_default = match command {
        CommandKind::Spectrum => 400,
        CommandKind::Variance => 321,
        _ => 201,
    };
    let points = pick(args.points, map, "points")?.unwrap_or(points_default);
    if points < 2 {
        return Err(Failure::Config(format!("points must be at least 2, got {points}")));
    }

    let tau_max = positive(pick(args.tau_max, map, "tau-max")?.unwrap_or(8.0), "tau-max")?;
    let periods = pick(args.periods, map, "periods")?.unwrap_or(50);
    if periods < 1 {
        return Err(Failure::Config("periods must be at least 1".into()));
    }
    let bundle_default = match drive {
        // An even count straddles the single-cycle node instead of landing on it.
        DriveKind::Scp => 20,
        _ => 21,
    };
    let bundle = pick(args.bundle, map, "bundle")?.unwrap_or(bundle_default);
    if bundle < 1 {
        return Err(Failure::Config("bundle must be at least 1".into()));
    }
    let ell = pick(args.ell, map, "ell")?;
    let alpha_over_n2 =
        positive(pick(args.alpha_over_n2, map, "alpha-over-n2")?.unwrap_or(0.49), "alpha-over-n2")?;
    let n_zeta = positive(pick(args.n_zeta, map, "n-zeta")?.unwrap_or(12.0), "n-zeta")?;
    let normalized = pick(args.normalized, map, "normalized")?.unwrap_or(true);
    let sidecar = pick(args.sidecar, map, "sidecar")?.unwrap_or(false);

    let out = args
        .out
        .clone()
        .or_else(|| map.get("out").map(PathBuf::from))
        .unwrap_or_else(|| {
            let name = match command {
                CommandKind::Tailfit | CommandKind::Regime | CommandKind::Validate => {
                    format!("{}.txt", command.name())
                }
                _ => format!("{}.csv", command.name()),
            };
            PathBuf::from(name)
        });

    Ok(RunConfig {
        command,
        drive,
        table,
        r,
        gamma,
        omega0,
        n,
        omega_max,
        points,
        tau_max,
        periods,
        bundle,
        ell,
        alpha_over_n2,
        n_zeta,
        normalized,
        out,
        sidecar,
    })
}
