//! Scenario front end: configuration, pipelines, artifacts and reporting.

mod checkpoint;
mod config;
mod report;
mod scenarios;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint, CheckpointError, MAGIC,
    VERSION,
};
pub use config::{gaussian_data_radius, near_vacuum_grid, ConfigError, ScenarioConfig, ScenarioId};
pub use report::{emit_report, expected_checks, ReportSummary, ScenarioTable, TableRow, Verdict};
pub use scenarios::{
    bootstrap_check, coefficient_audit, compare_audits, fit_times, free_decay, inequality_suite, maxwellian,
    near_vacuum, run_pipeline, strang_convergence, Abort, Check, CheckKind, NearVacuumRun, ScenarioOutput,
};

use crate::norms_energy::write_series_csv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

/// The JSON record of one run. Holds no timings, so reruns compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioId,
    /// The config after defaults; feeding it back reproduces the run.
    pub config: ScenarioConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub series_file: Option<String>,
    pub checkpoint_file: Option<String>,
    pub details: serde_json::Value,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Option<ScenarioReport>,
    pub message: String,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    fn failed(exit_code: i32, message: String) -> Self {
        Self { exit_code, report: None, message, artifacts: vec![] }
    }
}

/// Loads, validates and runs a scenario, writing artifacts into its output
/// directory (relative paths resolve against the config's directory).
pub fn run_scenario(config_path: &Path) -> RunOutcome {
    let cfg = match ScenarioConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return RunOutcome::failed(EXIT_CONFIG, format!("{}: {e}", config_path.display())),
    };
    let out_dir = if cfg.output_dir.is_absolute() {
        cfg.output_dir.clone()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(&cfg.output_dir)
    };
    run_config(&cfg, &out_dir)
}

pub fn run_config(cfg: &ScenarioConfig, out_dir: &Path) -> RunOutcome {
    let name = cfg.scenario.name();
    if let Err(e) = fs::create_dir_all(out_dir) {
        return RunOutcome::failed(EXIT_ABORT, format!("{}: {e}", out_dir.display()));
    }
    let effective = cfg.effective();
    match run_pipeline(&effective) {
        Ok(out) => match write_artifacts(&effective, out, out_dir) {
            Ok((report, artifacts)) => {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                let (exit_code, message) = if failed.is_empty() {
                    (EXIT_OK, format!("{name}: all {} checks passed", report.checks.len()))
                } else {
                    (EXIT_ASSERTION, format!("{name}: failed checks: {}", failed.join(", ")))
                };
                RunOutcome { exit_code, report: Some(report), message, artifacts }
            }
            Err(e) => RunOutcome::failed(EXIT_ABORT, format!("{name}: writing artifacts: {e}")),
        },
        Err(abort) => {
            let mut artifacts = Vec::new();
            let mut message = format!("{name}: aborted: {}", abort.error);
            if let Some(state) = &abort.state {
                let path = out_dir.join(format!("{name}_abort.lvlb"));
                match write_checkpoint(&path, state, effective.gamma) {
                    Ok(()) => {
                        message.push_str(&format!(" (state at t = {} dumped to {})", state.time(), path.display()));
                        artifacts.push(path);
                    }
                    Err(e) => message.push_str(&format!(" (state dump failed: {e})")),
                }
            }
            let err_path = out_dir.join(format!("{name}_error.json"));
            let body = serde_json::json!({ "scenario": effective.scenario, "config": effective, "error": abort.error });
            if fs::write(&err_path, serde_json::to_string_pretty(&body).unwrap_or_default()).is_ok() {
                artifacts.push(err_path);
            }
            RunOutcome { exit_code: EXIT_ABORT, report: None, message, artifacts }
        }
    }
}

fn write_artifacts(
    cfg: &ScenarioConfig,
    out: ScenarioOutput,
    dir: &Path,
) -> Result<(ScenarioReport, Vec<PathBuf>), Box<dyn std::error::Error>> {
    let name = cfg.scenario.name();
    let mut artifacts = Vec::new();
    let series_file = if out.series.is_empty() {
        None
    } else {
        let file = format!("{name}.csv");
        write_series_csv(fs::File::create(dir.join(&file))?, &out.series)?;
        artifacts.push(dir.join(&file));
        Some(file)
    };
    let checkpoint_file = match (&out.state, cfg.checkpoint) {
        (Some(state), true) => {
            let file = format!("{name}_final.lvlb");
            write_checkpoint(&dir.join(&file), state, cfg.gamma)?;
            artifacts.push(dir.join(&file));
            Some(file)
        }
        _ => None,
    };
    let report = ScenarioReport {
        scenario: cfg.scenario,
        config: cfg.clone(),
        passed: out.checks.iter().all(|c| c.passed),
        checks: out.checks,
        series_file,
        checkpoint_file,
        details: out.details,
    };
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    artifacts.push(path);
    if cfg.scenario == ScenarioId::InequalitySuite {
        if let Some(reports) = report.details.get("reports") {
            let reports = serde_json::from_value::<Vec<crate::estimate_lab::InequalityReport>>(reports.clone())?;
            let path = dir.join(format!("{name}_summary.csv"));
            fs::write(&path, crate::estimate_lab::reports_csv(&reports)?)?;
            artifacts.push(path);
        }
    }
    Ok((report, artifacts))
}
