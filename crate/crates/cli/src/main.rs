use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deformed_lindblad::scenario::{parse_config, run_scenario, selftest, write_outputs, Scenario};
use deformed_lindblad::Error;

#[derive(Parser)]
#[command(name = "deformed-lindblad", version, about = "Damped Morse-oscillator scenarios: populations, purity and Wigner grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV outputs.
    Run {
        /// Flat `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config (default: ./output).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `scenario` from the config.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_ERROR: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        NUMERICAL_ERROR
    } else if matches!(err.root(), Error::Io { .. }) {
        1
    } else {
        CONFIG_ERROR
    }
}

fn run(config_path: &Path, output_dir: Option<PathBuf>, scenario: Option<String>) -> Result<(), Error> {
    let text = fs::read_to_string(config_path).map_err(|source| Error::Config {
        line: 0,
        key: "config".into(),
        msg: format!("cannot read {}: {source}", config_path.display()),
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(name) = scenario {
        cfg.scenario = name.parse::<Scenario>().map_err(|msg| Error::Config {
            line: 0,
            key: "--scenario".into(),
            msg,
        })?;
        cfg.validate()?;
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    if let Some(file) = cfg.rho_file.take() {
        cfg.rho_file = Some(if file.is_relative() { base.join(file) } else { file });
    }
    let dir = output_dir
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("output"));
    let result = run_scenario(&cfg)?;
    let manifest = write_outputs(&result, &dir)?;
    println!("wrote {} files to {}", manifest.files.len(), dir.display());
    print!("{manifest}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output_dir,
            scenario,
        } => match run(&config, output_dir, scenario) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
        Command::Selftest => {
            let mut failed = false;
            for check in selftest() {
                match check.outcome {
                    Ok(detail) => println!("PASS {}: {detail}", check.name),
                    Err(e) => {
                        failed = true;
                        println!("FAIL {}: {e}", check.name);
                    }
                }
            }
            if failed {
                ExitCode::from(NUMERICAL_ERROR)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
