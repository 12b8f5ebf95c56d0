use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use impulse_cli::commands;
use impulse_cli::scenario::{self, Kick, SimSettings};
use impulse_cli::units::{parse_quantity, Dimension};
use impulse_cli::{CliError, Format, Report};

#[derive(Parser)]
#[command(name = "impulse", version, about = "Momentum-impulse detection thresholds for optomechanical sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file, or `table1` for the built-in reference parameters
    #[arg(long, global = true, default_value = "table1")]
    config: String,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format (verify defaults to json, everything else to csv)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Suppress notes and summaries on stderr
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Force-noise PSD and its components on the frequency sweep
    Psd,
    /// Momentum threshold along the sweep, or at the single scenario point
    Threshold {
        /// Optimize the coupling at every point
        #[arg(long)]
        optimize: bool,
    },
    /// Check optimized thresholds against the analytic scaling laws
    Verify,
    /// Monte Carlo matched-filter experiment
    Simulate(SimArgs),
    /// Optimal squeezing angle on the frequency sweep
    OptimalAngle,
    /// Print the scenario in canonical units
    Normalize,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Sampling rate with unit, e.g. "3.2 MHz"
    #[arg(long)]
    sample_rate: Option<String>,
    /// Record length with unit, e.g. "20 ms"
    #[arg(long)]
    duration: Option<String>,
    /// Kick as a multiple of the band-limited threshold ("1.5") or in "kg m/s"
    #[arg(long)]
    kick: Option<String>,
    /// Quality factor of the simulated oscillator (default 100)
    #[arg(long = "Q")]
    q: Option<f64>,
}

impl SimArgs {
    fn settings(&self) -> Result<SimSettings, CliError> {
        let quantity = |v: &Option<String>, dim, flag: &str| {
            v.as_deref()
                .map(|s| parse_quantity(s, dim).map_err(|m| CliError::config(flag, m)))
                .transpose()
        };
        Ok(SimSettings {
            q: self.q,
            seed: self.seed,
            trials: self.trials,
            sample_rate: quantity(&self.sample_rate, Dimension::Rate, "--sample-rate")?,
            duration: quantity(&self.duration, Dimension::Time, "--duration")?,
            kick: self
                .kick
                .as_deref()
                .map(|k| Kick::parse(k).map_err(|m| CliError::config("--kick", m)))
                .transpose()?,
            kick_time: None,
        })
    }
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let parsed = scenario::load(&cli.config)?;
    let csv = cli.format.unwrap_or(Format::Csv);
    match &cli.command {
        Command::Psd => commands::psd(&parsed, csv),
        Command::Threshold { optimize } => commands::threshold(&parsed, *optimize, csv),
        Command::Verify => commands::verify(&parsed, cli.format.unwrap_or(Format::Json)),
        Command::Simulate(args) => commands::simulate(&parsed, &args.settings()?, csv),
        Command::OptimalAngle => commands::optimal_angle_grid(&parsed, csv),
        Command::Normalize => Ok(commands::normalize(&parsed)),
    }
}

fn emit(cli: &Cli, report: &Report) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, &report.output)?,
        None => std::io::stdout().lock().write_all(&report.output)?,
    }
    if !cli.quiet {
        let mut err = std::io::stderr().lock();
        for n in &report.notes {
            writeln!(err, "{n}")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|r| {
        emit(&cli, &r)?;
        Ok(r)
    });
    match result {
        Ok(report) => {
            match &report.verdict {
                impulse_cli::Verdict::Ok => {}
                impulse_cli::Verdict::Failed(m) | impulse_cli::Verdict::Numerical(m) => {
                    eprintln!("error: {m}")
                }
            }
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
