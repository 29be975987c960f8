//! Scenario configuration: JSON with defaults, validated at load, with
//! errors pointing at the offending line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision_kernel::check_gamma;
use crate::evolution::{ExpWeightParams, StepConfig};
use crate::phase_grid::{GridSpec, TAIL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    FreeDecay,
    CoefficientAudit,
    InequalitySuite,
    MaxwellianResidual,
    NearVacuumRun,
    BootstrapCheck,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        Self::FreeDecay,
        Self::CoefficientAudit,
        Self::InequalitySuite,
        Self::MaxwellianResidual,
        Self::NearVacuumRun,
        Self::BootstrapCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FreeDecay => "free-decay",
            Self::CoefficientAudit => "coefficient-audit",
            Self::InequalitySuite => "inequality-suite",
            Self::MaxwellianResidual => "maxwellian-residual",
            Self::NearVacuumRun => "near-vacuum-run",
            Self::BootstrapCheck => "bootstrap-check",
        }
    }
}

fn default_gamma() -> f64 {
    0.5
}
fn default_eps() -> f64 {
    1e-3
}
fn default_one() -> usize {
    1
}
fn default_output() -> PathBuf {
    PathBuf::from("lvlb-out")
}
fn default_order() -> u32 {
    2
}
fn default_base() -> f64 {
    3.0
}
fn default_window() -> [f64; 2] {
    [4.0, 64.0]
}
fn default_families() -> usize {
    20
}
fn default_samples() -> usize {
    1_000_000
}
fn default_horizon() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}

/// Optional blocks fall back to per-scenario defaults; see `effective`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub weights: Option<ExpWeightParams>,
    #[serde(default)]
    pub step: Option<StepConfig>,
    /// Snapshot every this many steps.
    #[serde(default = "default_one")]
    pub snapshot_every: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Derivative order m of the energy hierarchy.
    #[serde(default = "default_order")]
    pub order: u32,
    /// Base weight b of the hierarchy, kept small enough for desk-scale grids.
    #[serde(default = "default_base")]
    pub hierarchy_base: f64,
    #[serde(default = "default_window")]
    pub fit_window: [f64; 2],
    /// Seeded mixture families for the inequality suite.
    #[serde(default = "default_families")]
    pub families: usize,
    #[serde(default = "default_samples")]
    pub null_samples: usize,
    /// Spatial nodes of the coefficient audit; defaults to a spread around the center.
    #[serde(default)]
    pub x_nodes: Option<Vec<usize>>,
    /// Final time of the Strang self-convergence runs.
    #[serde(default = "default_horizon")]
    pub convergence_horizon: f64,
    #[serde(default = "default_true")]
    pub checkpoint: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

/// Radius beyond which the unit Gaussian falls below the tail tolerance.
pub fn gaussian_data_radius(width: f64) -> f64 {
    width * (1.0 / TAIL_TOLERANCE).ln().sqrt()
}

/// x grid for a 1D-x run: Δx = dv/2 and L_x ≥ data radius + L_v·T + 1.
pub fn near_vacuum_grid(t_final: f64, v_extent: f64, v_points: usize) -> GridSpec {
    let dv = 2.0 * v_extent / (v_points - 1) as f64;
    let dx = dv / 2.0;
    let x_extent = (gaussian_data_radius(1.0) + v_extent * t_final + 1.0).ceil();
    let x_points = (2.0 * x_extent / dx).round() as usize + 1;
    GridSpec { x_dims: 1, x_extent, x_points, v_extent, v_points }
}

impl ScenarioConfig {
    pub fn minimal(scenario: ScenarioId) -> Self {
        serde_json::from_value(serde_json::json!({ "scenario": scenario })).expect("defaults deserialize")
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError {
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| ConfigError { line: key_line(text, key), column: None, message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            column: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Fills every optional block with the scenario's defaults.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        let (weights, step) = match c.scenario {
            ScenarioId::NearVacuumRun | ScenarioId::BootstrapCheck => {
                (ExpWeightParams { d0: 0.25, delta: 0.1 }, StepConfig { dt: 1.0, t_final: 20.0, ..Default::default() })
            }
            _ => (ExpWeightParams::default(), StepConfig { collisions: false, ..Default::default() }),
        };
        c.weights.get_or_insert(weights);
        let step = *c.step.get_or_insert(step);
        if c.grid.is_none() {
            c.grid = Some(match c.scenario {
                ScenarioId::NearVacuumRun | ScenarioId::BootstrapCheck => near_vacuum_grid(step.t_final, 4.0, 25),
                ScenarioId::CoefficientAudit => {
                    GridSpec { x_dims: 1, x_extent: 6.0, x_points: 25, v_extent: 4.0, v_points: 24 }
                }
                ScenarioId::MaxwellianResidual => {
                    GridSpec { x_dims: 1, x_extent: 1.0, x_points: 8, v_extent: 6.0, v_points: 48 }
                }
                ScenarioId::FreeDecay | ScenarioId::InequalitySuite => {
                    GridSpec { x_dims: 3, x_extent: 8.0, x_points: 17, v_extent: 4.0, v_points: 17 }
                }
            });
        }
        c
    }

    /// Err carries the JSON key to point at.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        check_gamma(self.gamma).map_err(|e| ("gamma", e.to_string()))?;
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(("eps", format!("eps must be finite and non-negative, got {}", self.eps)));
        }
        if let Some(w) = &self.weights {
            if !(w.delta > 0.0 && w.delta < 0.125) {
                return Err(("delta", format!("delta must lie in (0, 1/8), got {}", w.delta)));
            }
            w.validate().map_err(|e| ("d0", e.to_string()))?;
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| ("grid", e.to_string()))?;
        }
        if let Some(s) = &self.step {
            s.validate().map_err(|e| ("step", e.to_string()))?;
        }
        if self.snapshot_every == 0 {
            return Err(("snapshot_every", "snapshot_every must be at least 1".into()));
        }
        if self.order > 4 {
            return Err(("order", format!("order must be at most 4, got {}", self.order)));
        }
        if !(self.hierarchy_base.is_finite() && self.hierarchy_base > 0.0) {
            return Err(("hierarchy_base", format!("hierarchy_base must be positive, got {}", self.hierarchy_base)));
        }
        let [t0, t1] = self.fit_window;
        if !(t0 >= 0.0 && t1 > t0) {
            return Err(("fit_window", format!("fit_window must satisfy 0 <= t0 < t1, got [{t0}, {t1}]")));
        }
        if self.families == 0 {
            return Err(("families", "families must be at least 1".into()));
        }
        if !(self.convergence_horizon > 0.0) {
            return Err(("convergence_horizon", "convergence_horizon must be positive".into()));
        }
        Ok(())
    }
}

/// First line mentioning `"key"`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(r#"{"scenario": "free-decay"}"#).unwrap();
        assert_eq!(c.gamma, 0.5);
        let e = c.effective();
        assert!(e.grid.is_some() && e.weights.is_some() && e.step.is_some());
        assert_eq!(e.effective(), e);
    }

    #[test]
    fn delta_violation_points_at_its_line() {
        let text = "{\n  \"scenario\": \"near-vacuum-run\",\n  \"weights\": {\n    \"d0\": 1.0,\n    \"delta\": 0.2\n  }\n}";
        let err = ScenarioConfig::parse(text).unwrap_err();
        assert_eq!(err.line, Some(5));
        assert!(err.to_string().starts_with("line 5: delta"));
    }

    #[test]
    fn syntax_and_unknown_keys_are_located() {
        let err = ScenarioConfig::parse("{\n  \"scenario\": \"free-decay\",\n  \"gama\": 0.5\n}").unwrap_err();
        assert_eq!(err.line, Some(3));
        let err = ScenarioConfig::parse("{\n  \"scenario\": \"free-decay\",\n  \"gamma\": 1.0\n}").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn near_vacuum_grid_follows_the_support_rule() {
        let g = near_vacuum_grid(20.0, 4.0, 25);
        assert_eq!(g.x_extent, 85.0);
        assert_eq!(g.x_points, 1021);
        assert!((g.dx() - 1.0 / 6.0).abs() < 1e-15);
    }
}
