//! `squeezelab` — command-line front end for the squeezed-light toolkit.
//!
//! Every run is a single command against a resolved [`config::RunConfig`]:
//! flat key=value config file first, command-line flags on top. Exit codes:
//! 0 on success, 2 for configuration problems, 3 for numeric failures.

use clap::Parser;

mod commands;
mod config;

use config::{Args, CommandKind};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "squeezelab",
    version,
    about = "Spectra, field-variance traces and analogue world lines of \
             ultrabroadband squeezed light from a thin nonlinear crystal"
)]
struct Cli {
    /// Flat key=value run file; every flag below overrides its key
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Option<CommandName>,
}

#[derive(clap::Subcommand, Clone)]
enum CommandName {
    /// Pulsed spectral photon density with its quadrature oracle
    Spectrum(Args),
    /// CW spectral photon flux: truncated orders and windowed averages
    Flux(Args),
    /// Normally ordered field-variance trace over detection time
    Variance(Args),
    /// Analogue world lines of modes through the driven crystal
    Worldlines(Args),
    /// Exponential-tail fit of a pulsed spectrum
    Tailfit(Args),
    /// Drive-strength regime report
    Regime(Args),
    /// Run the complete self-validation suite
    Validate(Args),
}

impl CommandName {
    fn split(self) -> (CommandKind, Args) {
        match self {
            CommandName::Spectrum(a) => (CommandKind::Spectrum, a),
            CommandName::Flux(a) => (CommandKind::Flux, a),
            CommandName::Variance(a) => (CommandKind::Variance, a),
            CommandName::Worldlines(a) => (CommandKind::Worldlines, a),
            CommandName::Tailfit(a) => (CommandKind::Tailfit, a),
            CommandName::Regime(a) => (CommandKind::Regime, a),
            CommandName::Validate(a) => (CommandKind::Validate, a),
        }
    }
}

/// Cap the global worker pool before anything numeric can build it.
fn apply_thread_cap() -> Result<(), Failure> {
    let raw = match std::env::var("SQUEEZELAB_THREADS") {
        Ok(raw) => raw,
        Err(_) => return Ok(()),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Config(format!(
                "SQUEEZELAB_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the worker pool: {e}")))
}

fn dispatch() -> Result<(), Failure> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            config::parse_file(&text)?
        }
        None => Default::default(),
    };
    let (kind, args) = match cli.command {
        Some(command) => command.split(),
        None => {
            let name = file.get("command").ok_or_else(|| {
                Failure::Config(
                    "no command given: pass a subcommand or set command= in the config file"
                        .into(),
                )
            })?;
            (CommandKind::parse(name)?, Args::default())
        }
    };
    let run = config::resolve(kind, &args, &file)?;
    commands::run(&run)
}

fn main() {
    if let Err(failure) = apply_thread_cap().and_then(|()| dispatch()) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}
