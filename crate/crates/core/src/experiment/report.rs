//! Human-readable summaries and gnuplot data files from an artifacts directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{read_checkpoint, CheckKind, ScenarioId, ScenarioReport};
use crate::norms_energy::read_series_csv;

/// Check names each scenario is expected to produce, in display order.
pub fn expected_checks(id: ScenarioId) -> &'static [&'static str] {
    match id {
        ScenarioId::FreeDecay => &[
            "L²_xL¹_v slope",
            "∂_v L²_xL¹_v slope",
            "closed-form relative error",
            "weighted L¹_v slope",
            "coefficient slope",
        ],
        ScenarioId::CoefficientAudit => {
            &["triangle-inequality max ratio", "bound constant refinement drift", "inconsistent bound rows"]
        }
        ScenarioId::InequalitySuite => &[
            "mixture ratio |slope|",
            "ratio refinement drift",
            "invalid inequality reports",
            "null-structure violations",
            "absorption refinement drift",
        ],
        ScenarioId::MaxwellianResidual => &["relative residual", "residual refinement factor"],
        ScenarioId::NearVacuumRun => &["max E_T/ε^(3/4)", "min f / max f"],
        ScenarioId::BootstrapCheck => {
            &["max E_T/ε^(3/4)", "E_T(ε)/E_T(ε/2)", "min f / max f", "Strang self-convergence order"]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIPPED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub name: String,
    pub measured: Option<f64>,
    pub target: String,
    pub tolerance: String,
    pub verdict: Verdict,
}

impl TableRow {
    pub fn line(&self) -> String {
        let measured = self.measured.map(num).unwrap_or_else(|| "n/a".into());
        format!(
            "{} | measured {} | target {} | tol {} | {}",
            self.name,
            measured,
            self.target,
            self.tolerance,
            self.verdict.label()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTable {
    pub scenario: ScenarioId,
    pub note: Option<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub tables: Vec<ScenarioTable>,
    pub data_files: Vec<PathBuf>,
    /// Unreadable artifacts, each message naming its file.
    pub integrity_errors: Vec<String>,
    pub text: String,
}

impl ReportSummary {
    pub fn exit_code(&self) -> i32 {
        if self.integrity_errors.is_empty() {
            super::EXIT_OK
        } else {
            super::EXIT_ASSERTION
        }
    }
}

/// Unicode minus for display, and compact exponents.
fn num(x: f64) -> String {
    let s = if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) { format!("{x:.4e}") } else { format!("{:.6}", x) };
    let s = if s.contains('.') && !s.contains('e') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    s.replacen('-', "−", 1)
}

fn skipped(name: &str) -> TableRow {
    TableRow { name: name.into(), measured: None, target: "n/a".into(), tolerance: "n/a".into(), verdict: Verdict::Skipped }
}

fn table_for(id: ScenarioId, dir: &Path, errors: &mut Vec<String>) -> ScenarioTable {
    let path = dir.join(format!("{}.json", id.name()));
    let mut note = None;
    let report: Option<ScenarioReport> = match fs::read_to_string(&path) {
        Ok(text) => match serde_json::from_str(&text) {
            Ok(r) => Some(r),
            Err(e) => {
                errors.push(format!("{}: unreadable report: {e}", path.display()));
                None
            }
        },
        Err(_) => {
            if dir.join(format!("{}_error.json", id.name())).exists() {
                note = Some("run aborted, see the error record".into());
            }
            None
        }
    };
    let rows = expected_checks(id)
        .iter()
        .map(|&name| {
            let Some(c) = report.as_ref().and_then(|r| r.checks.iter().find(|c| c.name == name)) else {
                return skipped(name);
            };
            let (target, tolerance) = match c.kind {
                CheckKind::Within => (num(c.target), format!("±{}", num(c.tolerance.unwrap_or(0.0)))),
                CheckKind::AtMost => (format!("≤ {}", num(c.target)), "none".into()),
                CheckKind::AtLeast => (format!("≥ {}", num(c.target)), "none".into()),
            };
            let verdict = if c.passed { Verdict::Pass } else { Verdict::Fail };
            TableRow { name: name.into(), measured: Some(c.measured), target, tolerance, verdict }
        })
        .collect();
    ScenarioTable { scenario: id, note, rows }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

fn write_data_files(id: ScenarioId, dir: &Path, errors: &mut Vec<String>) -> Vec<PathBuf> {
    let csv_path = dir.join(format!("{}.csv", id.name()));
    let Ok(file) = fs::File::open(&csv_path) else {
        return vec![];
    };
    let series = match read_series_csv(file) {
        Ok(s) => s,
        Err(e) => {
            errors.push(format!("{}: unreadable series: {e}", csv_path.display()));
            return vec![];
        }
    };
    let mut out = Vec::new();
    for (k, s) in series.iter().enumerate() {
        let path = dir.join(format!("{}_{k:02}_{}.dat", id.name(), sanitize(&s.norm_id)));
        let mut body = format!("# {}\n# t value\n", s.norm_id);
        for (t, v) in s.times.iter().zip(&s.values) {
            let _ = writeln!(body, "{t:e} {v:e}");
        }
        match fs::write(&path, body) {
            Ok(()) => out.push(path),
            Err(e) => errors.push(format!("{}: {e}", path.display())),
        }
    }
    out
}

/// Builds one table per scenario, writes `.dat` files for every stored
/// series plus `summary.txt`, and checks every `.lvlb` checkpoint.
pub fn emit_report(dir: &Path) -> ReportSummary {
    let mut errors = Vec::new();
    let mut tables = Vec::new();
    let mut data_files = Vec::new();
    if !dir.is_dir() {
        errors.push(format!("{}: not a directory", dir.display()));
    }
    for id in ScenarioId::ALL {
        tables.push(table_for(id, dir, &mut errors));
        data_files.extend(write_data_files(id, dir, &mut errors));
    }
    let mut checkpoints: Vec<PathBuf> = fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "lvlb")).collect())
        .unwrap_or_default();
    checkpoints.sort();
    let mut valid = Vec::new();
    for p in &checkpoints {
        match read_checkpoint(p) {
            Ok(c) => valid.push(format!("{}: t = {}, {} values", p.display(), c.field.time(), c.field.values().len())),
            Err(e) => errors.push(format!("integrity error: {e}")),
        }
    }

    let mut text = String::new();
    for t in &tables {
        let _ = writeln!(text, "== {} ==", t.scenario.name());
        if let Some(n) = &t.note {
            let _ = writeln!(text, "({n})");
        }
        for r in &t.rows {
            let _ = writeln!(text, "{}", r.line());
        }
        text.push('\n');
    }
    if !valid.is_empty() {
        let _ = writeln!(text, "== checkpoints ==");
        for v in &valid {
            let _ = writeln!(text, "{v}");
        }
        text.push('\n');
    }
    for e in &errors {
        let _ = writeln!(text, "{e}");
    }
    if dir.is_dir() {
        let path = dir.join("summary.txt");
        if let Err(e) = fs::write(&path, &text) {
            errors.push(format!("{}: {e}", path.display()));
        }
    }
    ReportSummary { tables, data_files, integrity_errors: errors, text }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_use_a_real_minus() {
        assert_eq!(num(-1.5), "−1.5");
        assert_eq!(num(0.15), "0.15");
        assert_eq!(num(1e-8), "1.0000e−8");
    }
}
