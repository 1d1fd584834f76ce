use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use duhem_cli::commands::{cmd_analyze, cmd_plot, cmd_simulate, CommandOutput, Outcome};
use duhem_cli::config::{load_config, resolve, ConfigError, Overrides};
use duhem_cli::exit_code;
use duhem_cli::verify::{report_to_json, run_suite};

/// Simulation and analysis of rate-independent Duhem hysteresis operators.
#[derive(Parser)]
#[command(name = "duhem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the switched dynamics and write the trajectory as CSV.
    Simulate(RunArgs),
    /// Iterate the return sequences and write a JSON analysis report.
    Analyze(RunArgs),
    /// Render the input-output phase plot as SVG.
    Plot(RunArgs),
    /// Run a named verification suite and write its JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted (config `output` is the fallback).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Integration step override, in input units.
    #[arg(long)]
    h: Option<f64>,
    /// Accommodation tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Cycle cap override for the accommodation iteration.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite id: lemma1..lemma6, prop1..prop3, or all.
    #[arg(long)]
    suite: String,
    /// Optional config whose model/drive replaces the builtin setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Seed input value for the crossing and butterfly suites.
    #[arg(long = "seed-upsilon", allow_hyphen_values = true)]
    seed_upsilon: Option<f64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            h: self.h,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

fn write_output(
    bytes: &str,
    cli_path: Option<&PathBuf>,
    config_path: Option<&str>,
) -> Result<(), String> {
    let target = cli_path
        .map(|p| p.display().to_string())
        .or_else(|| config_path.map(str::to_string));
    match target {
        Some(path) => std::fs::write(&path, bytes).map_err(|e| format!("cannot write {path}: {e}")),
        None => {
            print!("{bytes}");
            Ok(())
        }
    }
}

fn config_failure(err: &ConfigError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code::CONFIG_ERROR as u8)
}

fn finish(output: CommandOutput, args: &RunArgs, config_output: Option<&str>) -> ExitCode {
    if let Err(message) = write_output(&output.bytes, args.output.as_ref(), config_output) {
        eprintln!("error: {message}");
        return ExitCode::from(exit_code::CONFIG_ERROR as u8);
    }
    match output.outcome {
        Outcome::Clean => ExitCode::from(exit_code::SUCCESS as u8),
        Outcome::Diverged { t } => {
            eprintln!("divergence: state passed the sentinel near t = {t}; output truncated");
            ExitCode::from(exit_code::DIVERGENCE as u8)
        }
    }
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Simulate(args) => {
            let config = match load_config(&args.config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            let resolved = match resolve(&config, &args.overrides()) {
                Ok(r) => r,
                Err(e) => return config_failure(&e),
            };
            finish(cmd_simulate(&resolved), &args, config.output.as_deref())
        }
        Command::Analyze(args) => {
            let config = match load_config(&args.config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            let resolved = match resolve(&config, &args.overrides()) {
                Ok(r) => r,
                Err(e) => return config_failure(&e),
            };
            match cmd_analyze(&resolved) {
                Ok(out) => finish(out, &args, config.output.as_deref()),
                Err(e) => config_failure(&e),
            }
        }
        Command::Plot(args) => {
            let config = match load_config(&args.config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            let resolved = match resolve(&config, &args.overrides()) {
                Ok(r) => r,
                Err(e) => return config_failure(&e),
            };
            finish(cmd_plot(&resolved), &args, config.output.as_deref())
        }
        Command::Verify(args) => {
            let resolved = match &args.config {
                Some(path) => {
                    let config = match load_config(path) {
                        Ok(c) => c,
                        Err(e) => return config_failure(&e),
                    };
                    let overrides = Overrides {
                        h: args.h,
                        tol: args.tol,
                        max_iter: args.max_iter,
                    };
                    match resolve(&config, &overrides) {
                        Ok(r) => Some(r),
                        Err(e) => return config_failure(&e),
                    }
                }
                None => None,
            };
            let report = match run_suite(&args.suite, resolved.as_ref(), args.seed_upsilon) {
                Ok(r) => r,
                Err(e) => return config_failure(&e),
            };
            let bytes = report_to_json(&report);
            if let Err(message) = write_output(&bytes, args.output.as_ref(), None) {
                eprintln!("error: {message}");
                return ExitCode::from(exit_code::CONFIG_ERROR as u8);
            }
            if report.passed {
                ExitCode::from(exit_code::SUCCESS as u8)
            } else {
                ExitCode::from(exit_code::VERIFICATION_FAILURE as u8)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    run(Cli::parse())
}
