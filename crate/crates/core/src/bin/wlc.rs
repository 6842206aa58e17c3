//! `wlc <scenario> --config PATH [--output PATH] [--format csv|json] [--verbose]`
//!
//! Exit codes: 0 success, 1 scenario error, 2 config error, 3 selftest failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wlc_core::runner::config::{load_config_file, Format, Scenario};
use wlc_core::runner::{run_scenario, write_outputs, RunError};

#[derive(Parser)]
#[command(name = "wlc", version, about = "Ring cavity with a gain-doublet medium")]
struct Cli {
    #[command(subcommand)]
    scenario: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Bare cavity spectrum and linewidths.
    Empty(Args),
    /// Cavity with the configured medium: spectrum, measured and predicted width.
    Spectrum(Args),
    /// Closed-form linewidth figures only.
    Predict(Args),
    /// Solve the gain for the target group index and sample the result.
    Tune(Args),
    /// One spectrum per line separation plus a summary table.
    SweepSeparation(Args),
    /// Run the acceptance checks.
    Selftest(Args),
}

#[derive(clap::Args, Clone)]
struct Args {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

impl Command {
    fn split(self) -> (Scenario, Args) {
        match self {
            Command::Empty(a) => (Scenario::Empty, a),
            Command::Spectrum(a) => (Scenario::Spectrum, a),
            Command::Predict(a) => (Scenario::Predict, a),
            Command::Tune(a) => (Scenario::Tune, a),
            Command::SweepSeparation(a) => (Scenario::SweepSeparation, a),
            Command::Selftest(a) => (Scenario::Selftest, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = cli.scenario.split();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Ok(n) = std::env::var("WLC_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("WLC_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("WLC_THREADS={n:?} is not a positive integer; ignored"),
        }
    }

    match run(scenario, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(scenario: Scenario, args: Args) -> Result<ExitCode, RunError> {
    let cfg = match &args.config {
        Some(path) => load_config_file(path, Some(scenario))?,
        None if scenario == Scenario::Selftest => {
            wlc_core::runner::config::load_config_as("", Some(scenario))?
        }
        None => {
            return Err(RunError::Config(wlc_core::runner::config::ConfigError::Validation {
                key: "--config".into(),
                message: "required for this scenario".into(),
            }))
        }
    };
    let out = run_scenario(&cfg)?;

    let format = match args.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.output.format,
    };
    let path = args.output.clone().or_else(|| cfg.output.path.clone());
    if let Some(path) = path {
        for f in write_outputs(&cfg, &out, &path, format)? {
            log::info!("wrote {}", f.display());
        }
    }

    if let Some(criteria) = &out.criteria {
        for c in criteria {
            println!("{}", c.line());
        }
        let failed = criteria.iter().filter(|c| !c.passed).count();
        println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
        return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) });
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&out.report).expect("report is plain JSON")
    );
    Ok(ExitCode::SUCCESS)
}
