//! Command-line front end. Every subcommand reads flat `key = value`
//! settings from `--config` and `--set`, and writes CSV files into `--out`.

mod commands;
mod setup;
mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::KeyValues;
use crate::error::{Error, Result};

pub use setup::Settings;

/// Exit status of a run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ION_LOST: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ion-transport", version, about = "Ion transport waveform synthesis and excitation analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Settings file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every noise source.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override one setting, `key=value`; may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a trap model and write its basis fields.
    Synth(CommandArgs),
    /// Solve a waveform along a path and report per-step frequencies.
    Build(CommandArgs),
    /// Tabulate a filter response or filter a timed waveform.
    Filter(CommandArgs),
    /// Simulate a transport and report the final mode excitation.
    Simulate(CommandArgs),
    /// Barrier profile and closed-form heating rates.
    Heat(CommandArgs),
    /// Mode-exchange curves and the exchange-and-recool protocol.
    Exchange(CommandArgs),
    /// Excitation against DAC update rate.
    Scan(CommandArgs),
}

#[derive(Debug, Clone, Args)]
struct CommandArgs {
    #[command(flatten)]
    common: Common,
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::IonLost { .. } => EXIT_ION_LOST,
        Error::InvalidParameter(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Csv(_)
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        Error::OutOfDomain { .. }
        | Error::NonFinite { .. }
        | Error::NoConvergence { .. }
        | Error::PositionUnsatisfiable { .. }
        | Error::UnstableFilter { .. }
        | Error::TimeStep { .. } => EXIT_NUMERICAL,
    }
}

fn settings(c: &Common) -> Result<Settings> {
    let mut kv = match &c.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::new(),
    };
    for o in &c.overrides {
        kv.apply(o)?;
    }
    if let Some(seed) = c.seed {
        kv.set("seed", &seed.to_string());
    }
    std::fs::create_dir_all(&c.out).map_err(|e| Error::io(&c.out, e))?;
    Ok(Settings::new(kv, c.out.clone()))
}

/// Parse `args` (program name first), run the subcommand and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (f, a): (fn(&Settings) -> Result<()>, _) = match &cli.command {
        Command::Synth(a) => (commands::synth, a),
        Command::Build(a) => (commands::build, a),
        Command::Filter(a) => (commands::filter, a),
        Command::Simulate(a) => (commands::simulate, a),
        Command::Heat(a) => (commands::heat, a),
        Command::Exchange(a) => (commands::exchange, a),
        Command::Scan(a) => (commands::scan, a),
    };
    match settings(&a.common).and_then(|s| f(&s)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
