//! Configuration-driven pipeline over the `biphoton` modelling crate.
//!
//! Every run is a pure function of the config (plus seed and optional
//! dispersion file). Output files carry the SHA-256 digest of that input so
//! results can be traced back to it.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{default_config, load_config, save_config, LoadedConfig, RunConfig};
pub use error::{CliError, EXIT_COMPUTATION, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "biphoton", version, about = "Design and simulate spectrally pure photon-pair sources")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML). The shipped default profile is used when
    /// omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory, or output file for `tomo` and `spectro`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides the config's base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Extra Sellmeier sets to register.
    #[arg(long, global = true, value_name = "FILE")]
    pub dispersion_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Poling period, GVM wavelength and ridge angle.
    Design,
    /// Joint spectral amplitude.
    Jsa {
        #[command(subcommand)]
        action: JsaAction,
    },
    /// Two-source Hong-Ou-Mandel interference.
    Hom {
        /// Gaussian filters of this FWHM (nm) on both arms, replacing any in
        /// the config.
        #[arg(long, value_name = "NM")]
        filter_nm: Option<f64>,
        /// Delay scan in fs, `start:stop:step`.
        #[arg(long, value_name = "START:STOP:STEP", value_parser = parse_delays, allow_hyphen_values = true)]
        delays: Option<(f64, f64, f64)>,
    },
    /// Polarization tomography.
    Tomo {
        #[command(subcommand)]
        action: TomoAction,
    },
    /// Time-of-flight spectrometer.
    Spectro {
        #[command(subcommand)]
        action: SpectroAction,
    },
    /// Klyshko heralding efficiencies.
    Efficiency {
        /// Measured rates: CSV with singles_signal, singles_idler,
        /// coincidences, integration_s and optional accidentals.
        #[arg(long, value_name = "CSV", conflicts_with = "budget")]
        counts: Option<PathBuf>,
        /// Loss budget (TOML or JSON) replacing the config's.
        #[arg(long, value_name = "FILE")]
        budget: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum JsaAction {
    /// Writes jsa_amplitude.csv, jsi.csv and schmidt.json.
    Compute,
}

#[derive(Debug, Subcommand)]
pub enum TomoAction {
    /// Simulated counts for the configured state, all 36 settings.
    Simulate,
    /// Maximum-likelihood reconstruction from a counts CSV.
    Reconstruct {
        #[arg(long = "in", value_name = "CSV")]
        input: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpectroAction {
    /// Arrival-time histogram of the configured source.
    Simulate {
        #[arg(long)]
        pairs: Option<u64>,
    },
}

fn parse_delays(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got '{s}'"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok((num(a)?, num(b)?, num(c)?))
}

fn load(global: &GlobalArgs) -> Result<LoadedConfig, CliError> {
    let disp = global.dispersion_file.as_deref();
    let mut loaded = match &global.config {
        Some(p) => load_config(p, disp)?,
        None => default_config(disp)?,
    };
    if let Some(seed) = global.seed {
        let mut cfg = loaded.config.clone();
        cfg.seeds.base = seed;
        loaded = config::finish(cfg)?;
    }
    Ok(loaded)
}

/// Runs one parsed command and returns the stdout text.
pub fn run_pipeline(cli: &Cli) -> Result<String, CliError> {
    let loaded = load(&cli.global)?;
    let ctx = commands::Context {
        loaded: &loaded,
        out: cli.global.out.clone(),
        json: cli.global.json,
    };
    match &cli.command {
        Command::Design => commands::design(&ctx),
        Command::Jsa { action: JsaAction::Compute } => commands::jsa_compute(&ctx),
        Command::Hom { filter_nm, delays } => commands::hom(&ctx, *filter_nm, *delays),
        Command::Tomo { action: TomoAction::Simulate } => commands::tomo_simulate(&ctx),
        Command::Tomo { action: TomoAction::Reconstruct { input } } => commands::tomo_reconstruct(&ctx, input),
        Command::Spectro { action: SpectroAction::Simulate { pairs } } => commands::spectro_simulate(&ctx, *pairs),
        Command::Efficiency { counts, budget } => commands::efficiency(&ctx, counts.as_deref(), budget.as_deref()),
    }
}

/// Parses `args`, runs, and writes the report or a JSON error record.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            let _ = writeln!(stderr, "{}", err.record());
            return EXIT_USAGE;
        }
    };
    match run_pipeline(&cli) {
        Ok(text) => {
            let _ = write!(stdout, "{text}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.record());
            e.exit_code()
        }
    }
}
