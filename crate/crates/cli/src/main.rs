use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use landau_vacuum::experiment::{emit_report, run_scenario, ScenarioConfig, EXIT_CONFIG, EXIT_OK};

/// Near-vacuum Landau experiments.
///
/// LVLB_THREADS caps the worker count. Results do not depend on it.
#[derive(Parser)]
#[command(name = "lvlb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts. Exit 0 if every check passes,
    /// 1 on a failed check, 2 on a bad config, 3 on a runtime abort.
    Run { config: PathBuf },
    /// Summarize an artifacts directory and write plot data.
    Report { dir: PathBuf },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn init_threads() {
    let Ok(raw) = std::env::var("LVLB_THREADS") else { return };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: LVLB_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: LVLB_THREADS must be a positive integer, got {raw:?}"),
    }
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match cli.command {
        Command::Run { config } => {
            let outcome = run_scenario(&config);
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            if outcome.exit_code == EXIT_OK {
                println!("{}", outcome.message);
            } else {
                eprintln!("{}", outcome.message);
            }
            code(outcome.exit_code)
        }
        Command::Report { dir } => {
            let summary = emit_report(&dir);
            print!("{}", summary.text);
            code(summary.exit_code())
        }
        Command::Validate { config } => match ScenarioConfig::load(&config) {
            Ok(cfg) => {
                println!("{}: valid {} config", config.display(), cfg.scenario.name());
                code(EXIT_OK)
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                code(EXIT_CONFIG)
            }
        },
    }
}
