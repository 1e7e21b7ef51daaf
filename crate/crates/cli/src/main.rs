//! `fiberring`: generates the transmission, fitting, mode-profile and
//! cavity-QED scaling data sets of the fiber ring resonator model as CSV/JSON
//! files.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::output::Report;

pub const OUTPUT_DIR_ENV: &str = "FIBERRING_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "fiberring-out";

#[derive(Debug, Parser)]
#[command(
    name = "fiberring",
    version,
    about = "Fiber ring resonator and nanofiber cavity-QED toolkit"
)]
struct Cli {
    /// TOML run configuration (defaults to the built-in paper anchors).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory; takes precedence over `output_dir` in the config.
    #[arg(long, global = true, value_name = "DIR", env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,

    /// Print a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a transmission scan and optionally fit it.
    Spectrum(SpectrumArgs),
    /// Simulate a beam-splitter sweep and fit κ₀ globally.
    CouplingSweep(SweepArgs),
    /// Solve the nanofiber HE11 mode and export its intensity profile.
    Mode,
    /// Coupling and cooperativity versus resonator length.
    Scaling(ScalingArgs),
    /// Polariton spectrum of an ensemble coupled to several ring modes.
    Multimode(MultimodeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Under,
    Critical,
    Over,
}

impl Regime {
    /// κ_ext / κ₀ for the regime.
    pub fn kappa_ext_ratio(self) -> f64 {
        match self {
            Regime::Under => 0.3,
            Regime::Critical => 1.0,
            Regime::Over => 3.0,
        }
    }
}

/// Scan width: plain Hz, or a multiple of the FSR (`3fsr`) or of the loaded
/// linewidth (`10lw`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Span {
    Hz(f64),
    Fsr(f64),
    Linewidths(f64),
}

fn parse_span(s: &str) -> Result<Span, String> {
    let s = s.trim().to_ascii_lowercase();
    let (num, unit) = match s.find(|c: char| c.is_ascii_alphabetic() && c != 'e') {
        Some(i) => s.split_at(i),
        None => (s.as_str(), ""),
    };
    let v: f64 = num.trim().parse().map_err(|_| format!("invalid span `{s}`"))?;
    if v <= 0.0 || !v.is_finite() {
        return Err("span must be positive".into());
    }
    match unit {
        "" | "hz" => Ok(Span::Hz(v)),
        "khz" => Ok(Span::Hz(v * 1e3)),
        "mhz" => Ok(Span::Hz(v * 1e6)),
        "fsr" => Ok(Span::Fsr(v)),
        "lw" => Ok(Span::Linewidths(v)),
        _ => Err(format!(
            "unknown span unit `{unit}` (use hz, khz, mhz, fsr or lw)"
        )),
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number >= 0, got `{s}`")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number > 0, got `{s}`")),
    }
}

fn parse_odd_modes(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(m) if !m.is_multiple_of(2) => Ok(m),
        _ => Err(format!("mode count must be an odd integer >= 1, got `{s}`")),
    }
}

#[derive(Debug, clap::Args)]
pub struct SpectrumArgs {
    /// Scan width, e.g. `12e6`, `25mhz`, `3fsr` or `10lw`.
    #[arg(long, value_parser = parse_span)]
    pub span: Option<Span>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(8..))]
    pub samples: Option<u64>,
    /// Standard deviation of the additive transmission noise.
    #[arg(long, value_parser = parse_non_negative)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sets κ_ext to 0.3κ₀, κ₀ or 3κ₀.
    #[arg(long, value_enum)]
    pub regime: Option<Regime>,
    /// Fit every detected resonance and write the fit report.
    #[arg(long)]
    pub fit: bool,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Number of beam-splitter settings.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub settings: Option<u64>,
    #[arg(long, value_parser = parse_non_negative)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct ScalingArgs {
    /// Shortest ring length, m.
    #[arg(long, value_parser = parse_positive)]
    pub lmin: Option<f64>,
    /// Longest ring length, m.
    #[arg(long, value_parser = parse_positive)]
    pub lmax: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub points: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct MultimodeArgs {
    /// Number of ring modes (odd), centred on the atomic resonance.
    #[arg(long, value_parser = parse_odd_modes)]
    pub modes: Option<usize>,
    /// Collective coupling g_coll/2π in Hz (default: scaled to --length).
    #[arg(long, value_parser = parse_positive)]
    pub gcoll: Option<f64>,
    /// Free spectral range in Hz (default: scaled to --length).
    #[arg(long, value_parser = parse_positive)]
    pub fsr: Option<f64>,
    /// Ring length used for whichever of g_coll and FSR is not given, m.
    #[arg(long, value_parser = parse_positive)]
    pub length: Option<f64>,
    /// Atomic detuning from the central mode, /2π in Hz.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Command::Scaling(ScalingArgs {
        lmin: Some(lo),
        lmax: Some(hi),
        ..
    }) = &cli.command
    {
        if lo > hi {
            Cli::command()
                .error(
                    clap::error::ErrorKind::ArgumentConflict,
                    "--lmin must not exceed --lmax",
                )
                .exit();
        }
    }

    match run(&cli) {
        Ok(report) => {
            if cli.json {
                match serde_json::to_string_pretty(&report) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::FAILURE;
                    }
                }
            } else {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                print!("{}", report.text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let models = config.models()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    match &cli.command {
        Command::Spectrum(args) => commands::spectrum(&config, &models, args, &out_dir),
        Command::CouplingSweep(args) => commands::coupling_sweep(&models, args, &out_dir),
        Command::Mode => commands::mode(&config, &models, &out_dir),
        Command::Scaling(args) => commands::scaling(&config, &models, args, &out_dir),
        Command::Multimode(args) => commands::multimode(&config, &models, args, &out_dir),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_units() {
        assert_eq!(parse_span("3fsr"), Ok(Span::Fsr(3.0)));
        assert_eq!(parse_span("2.5e7"), Ok(Span::Hz(2.5e7)));
        assert_eq!(parse_span("25MHz"), Ok(Span::Hz(25e6)));
        assert_eq!(parse_span("10lw"), Ok(Span::Linewidths(10.0)));
        assert!(parse_span("0fsr").is_err());
        assert!(parse_span("3parsec").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
