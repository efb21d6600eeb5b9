use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fsvie::cli_io::{exit, parse_config, run, Mode, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Solve,
    SweepInitial,
    SweepCoefficients,
    VerifyProperties,
    OracleCompare,
    MomentStudy,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Solve => Mode::Solve,
            ModeArg::SweepInitial => Mode::SweepInitial,
            ModeArg::SweepCoefficients => Mode::SweepCoefficients,
            ModeArg::VerifyProperties => Mode::VerifyProperties,
            ModeArg::OracleCompare => Mode::OracleCompare,
            ModeArg::MomentStudy => Mode::MomentStudy,
        }
    }
}

/// Fuzzy stochastic Volterra equations with delay: Picard solver and
/// Monte Carlo studies.
#[derive(Debug, Parser)]
#[command(name = "fsvie", version)]
struct Cli {
    /// What to run; overrides `mode` in the configuration.
    mode: ModeArg,
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every Picard iterate of path 0.
    #[arg(long)]
    keep_iterates: bool,
    /// Exit with a failure code when a bound check fails.
    #[arg(long)]
    strict_bounds: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok((c, summary)) => {
            println!("{summary}");
            c
        }
        Err((c, msg)) => {
            eprintln!("error: {msg}");
            c
        }
    };
    ExitCode::from(code as u8)
}

/// Exit code and summary, or exit code and error message.
fn execute(cli: Cli) -> Result<(i32, String), (i32, String)> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| (exit::IO, format!("{}: {e}", cli.config.display())))?;
    let config = parse_config(&text).map_err(|e| (exit::CONFIG, format!("{}: {e}", cli.config.display())))?;
    let ov = Overrides {
        mode: Some(cli.mode.into()),
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out,
        keep_iterates: cli.keep_iterates,
        strict_bounds: cli.strict_bounds,
    };
    let outcome = run(&config, &ov).map_err(|e| (e.exit_code(), e.to_string()))?;
    Ok((outcome.exit_code, outcome.summary))
}
