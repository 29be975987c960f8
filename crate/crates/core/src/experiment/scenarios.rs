//! The six scenario pipelines. Each returns checks, series and details;
//! writing them to disk is the caller's business.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{gaussian_data_radius, ScenarioConfig, ScenarioId};
use crate::collision_kernel::{coefficient_bound_audit, BoundAudit, BoundKind};
use crate::estimate_lab::{
    bootstrap_monitor, solution_decay_audit, verify_exp_weight_absorption, verify_interpolation_suite,
    verify_null_structure, BootstrapReport, DecayThresholds, FreeGaussianSource, InequalityReport, Quadrature,
    SeriesKind, TestFamily, T_SWEEP,
};
use crate::evolution::{
    check_support_rule, gaussian_dv_l2x_l1v_closed_form, gaussian_l2x_l1v_closed_form, maxwellian_residual,
    self_convergence, strang_run, ConvergenceReport, EvolutionError, ExpWeightParams, FreeGaussian, RunHistory,
    SnapshotObserver, SnapshotSchedule, StepConfig,
};
use crate::norms_energy::{
    energy_normalized_data, fit_decay_rate, EnergyRecorder, EnergySpec, HierarchyExponents, NormSeries,
    SnapshotNorms,
};
use crate::phase_grid::{build_grid, DistributionField, GaussianProfile, GridSpec, MultiIndexTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// |measured − target| ≤ tolerance.
    Within,
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: Option<f64>,
    pub kind: CheckKind,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        let passed = (measured - target).abs() <= tol;
        Self { name: name.into(), measured, target, tolerance: Some(tol), kind: CheckKind::Within, passed }
    }

    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, target: bound, tolerance: None, kind: CheckKind::AtMost, passed: measured <= bound }
    }

    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, target: bound, tolerance: None, kind: CheckKind::AtLeast, passed: measured >= bound }
    }
}

/// What a pipeline hands back: verdicts, plot-ready series and free-form details.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub checks: Vec<Check>,
    pub series: Vec<NormSeries>,
    pub details: serde_json::Value,
    /// Final state worth checkpointing.
    pub state: Option<DistributionField>,
}

/// A failed run with the last state seen before the failure.
#[derive(Debug)]
pub struct Abort {
    pub error: String,
    pub state: Option<DistributionField>,
}

impl<E: std::fmt::Display> From<E> for Abort {
    fn from(e: E) -> Self {
        Abort { error: e.to_string(), state: None }
    }
}

pub fn run_pipeline(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let cfg = cfg.effective();
    match cfg.scenario {
        ScenarioId::FreeDecay => free_decay(&cfg),
        ScenarioId::CoefficientAudit => coefficient_audit(&cfg),
        ScenarioId::InequalitySuite => inequality_suite(&cfg),
        ScenarioId::MaxwellianResidual => maxwellian(&cfg),
        ScenarioId::NearVacuumRun => near_vacuum_scenario(&cfg),
        ScenarioId::BootstrapCheck => bootstrap_check(&cfg),
    }
}

fn weights(cfg: &ScenarioConfig) -> ExpWeightParams {
    cfg.weights.expect("effective config")
}

fn step(cfg: &ScenarioConfig) -> StepConfig {
    cfg.step.expect("effective config")
}

fn grid_spec(cfg: &ScenarioConfig) -> GridSpec {
    cfg.grid.expect("effective config")
}

/// Thirteen geometric times spanning the fit window.
pub fn fit_times(window: [f64; 2]) -> Vec<f64> {
    let [t0, t1] = window;
    (0..13).map(|k| t0 * (t1 / t0).powf(k as f64 / 12.0)).collect()
}

/// Exact 3D free transport of the unit Gaussian.
pub fn free_decay(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let times = fit_times(cfg.fit_window);
    let g = FreeGaussian::unit(3);
    let dv = MultiIndexTriple::dv(0);
    let base: Vec<f64> = times.iter().map(|&t| g.l2x_l1v_norm(&MultiIndexTriple::ZERO, t, 40)).collect();
    let deriv: Vec<f64> = times.iter().map(|&t| g.l2x_l1v_norm(&dv, t, 40)).collect();
    let mut oracle_err = 0.0f64;
    for (k, &t) in times.iter().enumerate() {
        oracle_err = oracle_err.max((base[k] / gaussian_l2x_l1v_closed_form(t) - 1.0).abs());
        oracle_err = oracle_err.max((deriv[k] / gaussian_dv_l2x_l1v_closed_form(t) - 1.0).abs());
    }
    let s0 = NormSeries::new("L2_xL1_v f", times.clone(), base)?;
    let s1 = NormSeries::new("L2_xL1_v dv f", times.clone(), deriv)?.with_triple(dv, &HierarchyExponents::default());
    let [t0, t1] = cfg.fit_window;
    let f0 = fit_decay_rate(&s0, t0, t1)?;
    let f1 = fit_decay_rate(&s1, t0, t1)?;

    let src = FreeGaussianSource::new(g, cfg.gamma, times.clone());
    let thresholds = DecayThresholds { t0, t1, delta: weights(cfg).delta, ..Default::default() };
    let audit = solution_decay_audit(&src, &[MultiIndexTriple::ZERO], &thresholds)?;
    let mut checks = vec![
        Check::within("L²_xL¹_v slope", f0.slope, -1.5, 0.15),
        Check::within("∂_v L²_xL¹_v slope", f1.slope, -0.5, 0.15),
        Check::at_most("closed-form relative error", oracle_err, 1e-4),
    ];
    let mut series = vec![s0, s1];
    for row in &audit.rows {
        let name = match row.kind {
            SeriesKind::WeightedL1v => "weighted L¹_v slope",
            SeriesKind::Coefficient => "coefficient slope",
        };
        checks.push(Check::at_most(name, row.fit.slope, row.target + thresholds.tolerance));
        series.push(row.series.clone());
    }
    let details = json!({ "fits": [f0, f1], "decay_audit": audit });
    Ok(ScenarioOutput { checks, series, details, state: None })
}

/// e^{−|x|²−|v|²}, narrow enough in v to vanish at the edge of the default box.
fn gaussian_field(spec: &GridSpec, t: f64) -> Result<DistributionField, Abort> {
    let grid = build_grid(spec)?;
    Ok(DistributionField::from_fn(grid, t, |x, v| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        (-r2 - (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
    })?)
}

/// Coefficient bound audit on a Gaussian, at N_v and at 4N_v/3 velocity points.
pub fn coefficient_audit(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let spec = grid_spec(cfg);
    let fine_spec = GridSpec { v_points: (spec.v_points * 4).div_ceil(3), ..spec };
    let mid = spec.x_points / 2;
    let nodes = cfg.x_nodes.clone().unwrap_or_else(|| vec![mid.saturating_sub(4), mid, (mid + 2).min(spec.x_points - 1)]);
    let triples = MultiIndexTriple::enumerate(spec.x_dims, 1, false);
    let method = step(cfg).convolution;
    let coarse = coefficient_bound_audit(&gaussian_field(&spec, 0.0)?, &triples, cfg.gamma, 0.0, &nodes, method)?;
    let fine = coefficient_bound_audit(&gaussian_field(&fine_spec, 0.0)?, &triples, cfg.gamma, 0.0, &nodes, method)?;
    let (exact_max, drift, inconsistent) = compare_audits(&coarse, &fine);
    let checks = vec![
        Check::at_most("triangle-inequality max ratio", exact_max, 1.0 + 1e-8),
        Check::at_most("bound constant refinement drift", drift, 0.10),
        Check::at_most("inconsistent bound rows", inconsistent as f64, 0.0),
    ];
    let details = json!({ "coarse": coarse, "fine": fine });
    Ok(ScenarioOutput { checks, series: vec![], details, state: None })
}

/// (max ratio over exact rows, max relative drift over the others, inconsistent rows).
pub fn compare_audits(coarse: &BoundAudit, fine: &BoundAudit) -> (f64, f64, usize) {
    let mut exact_max = 0.0f64;
    let mut drift = 0.0f64;
    let mut bad = 0;
    for row in &coarse.rows {
        let other = fine.row(row.bound, row.triple).expect("same rows on both grids");
        bad += usize::from(row.inconsistent) + usize::from(other.inconsistent);
        if row.bound.is_exact() {
            exact_max = exact_max.max(row.max_ratio).max(other.max_ratio);
        } else if other.max_ratio > 0.0 {
            drift = drift.max((other.max_ratio - row.max_ratio).abs() / other.max_ratio);
        } else if row.max_ratio > 0.0 {
            drift = f64::INFINITY;
        }
    }
    debug_assert!(BoundKind::ALL.iter().filter(|k| k.is_exact()).count() == 1);
    (exact_max, drift, bad)
}

/// Interpolation sweeps over seeded mixtures plus the fixed families,
/// the identity audit and the weight absorption check.
pub fn inequality_suite(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let quad = Quadrature::default();
    let mut reports: Vec<InequalityReport> = Vec::new();
    let mut mixture_slope = 0.0f64;
    for k in 0..cfg.families as u64 {
        let suite = verify_interpolation_suite(&TestFamily::mixture(cfg.seed + k), &T_SWEEP, &quad);
        for r in suite.reports() {
            mixture_slope = mixture_slope.max(r.slope.abs());
            reports.push(r.clone());
        }
    }
    for fam in [TestFamily::drifting(), TestFamily::isotropic(), TestFamily::anisotropic()] {
        reports.extend(verify_interpolation_suite(&fam, &T_SWEEP, &quad).reports().into_iter().cloned());
    }
    let drift = reports.iter().filter_map(|r| r.refinement_drift).fold(0.0f64, f64::max);
    let invalid = reports.iter().filter(|r| !r.is_valid()).count();

    let nulls = verify_null_structure(cfg.null_samples, cfg.seed);
    let w = weights(cfg);
    // e^{d⟨v⟩} grows fast, so the velocity box must be wide enough for g to vanish at its edge.
    let absorb = |v_points: usize| -> Result<InequalityReport, Abort> {
        let spec = GridSpec { x_dims: 1, x_extent: 3.5, x_points: 8, v_extent: 8.0, v_points };
        let f = DistributionField::from_fn(build_grid(&spec)?, 1.0, |x, v| {
            (-x[0] * x[0] - 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
        })?;
        Ok(verify_exp_weight_absorption(&f, 3, 2, MultiIndexTriple::dv(0), &w)?)
    };
    let (a0, a1) = (absorb(33)?, absorb(65)?);
    let absorb_drift = (a1.max_ratio - a0.max_ratio).abs() / a1.max_ratio;

    let checks = vec![
        Check::at_most("mixture ratio |slope|", mixture_slope, 0.05),
        Check::at_most("ratio refinement drift", drift, 0.10),
        Check::at_most("invalid inequality reports", invalid as f64, 0.0),
        Check::at_most(
            "null-structure violations",
            (nulls.linear_violations + nulls.squared_violations + nulls.transport_violations) as f64,
            0.0,
        ),
        Check::at_most("absorption refinement drift", absorb_drift, 0.10),
    ];
    let details = json!({ "reports": reports, "null_structure": nulls, "absorption": [a0, a1] });
    Ok(ScenarioOutput { checks, series: vec![], details, state: None })
}

/// Residual of ā:∇²M − c̄M on N and 2N−1 velocity points (Δv halved).
pub fn maxwellian(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let spec = grid_spec(cfg);
    let method = step(cfg).convolution;
    let coarse = maxwellian_residual(spec.v_points, spec.v_extent, cfg.gamma, method)?;
    let fine = maxwellian_residual(2 * spec.v_points - 1, spec.v_extent, cfg.gamma, method)?;
    let factor = coarse.ratio / fine.ratio;
    let checks = vec![
        Check::at_most("relative residual", coarse.ratio, 0.05),
        Check::within("residual refinement factor", factor, 4.0, 0.5),
    ];
    Ok(ScenarioOutput { checks, series: vec![], details: json!({ "coarse": coarse, "fine": fine }), state: None })
}

/// Energy recorder that also keeps the latest snapshot for abort dumps.
struct Recorder {
    energy: EnergyRecorder,
    last: Option<DistributionField>,
}

impl SnapshotObserver for Recorder {
    fn observe(&mut self, field: &DistributionField) -> Result<(), EvolutionError> {
        self.last = Some(field.clone());
        self.energy.observe(field)
    }
}

#[derive(Debug, Clone)]
pub struct NearVacuumRun {
    pub eps: f64,
    /// Factor from the unit profile to data with E_0 = ε².
    pub scale: f64,
    pub history: RunHistory,
    pub samples: Vec<SnapshotNorms>,
    pub bootstrap: BootstrapReport,
}

impl NearVacuumRun {
    /// E_T and E_T/ε² as series.
    pub fn series(&self) -> Result<Vec<NormSeries>, Abort> {
        let b = &self.bootstrap;
        let y: Vec<f64> = self.samples.iter().map(|s| s.y_xv_sq()).collect();
        let times: Vec<f64> = self.samples.iter().map(|s| s.time).collect();
        Ok(vec![
            NormSeries::new(format!("E_T eps={}", self.eps), b.times.clone(), b.energies.clone())?,
            NormSeries::new(format!("E_T/eps^2 eps={}", self.eps), b.times.clone(), b.quadratic_ratios.clone())?,
            NormSeries::new(format!("Y_xv^2 eps={}", self.eps), times, y)?,
        ])
    }
}

fn energy_spec(cfg: &ScenarioConfig, x_dims: usize) -> EnergySpec {
    EnergySpec::new(x_dims, cfg.order, HierarchyExponents::new(cfg.hierarchy_base), weights(cfg))
}

fn profile(eps: f64) -> GaussianProfile {
    GaussianProfile { amplitude: eps, x_center: [0.0; 3], v_center: [0.0; 3], x_width: 1.0, v_width: 1.0 }
}

/// The collisional 1D-x run at amplitude ε with its bootstrap monitor.
pub fn near_vacuum(cfg: &ScenarioConfig, eps: f64) -> Result<NearVacuumRun, Abort> {
    let cfg = cfg.effective();
    let grid = build_grid(&grid_spec(&cfg))?;
    let spec = energy_spec(&cfg, grid.x_dims());
    let (f0, scale) = energy_normalized_data(&grid, &profile(eps), &spec)?;
    let st = step(&cfg);
    check_support_rule(&f0, st.t_final)?;
    let mut rec = Recorder { energy: EnergyRecorder::new(spec), last: None };
    let schedule = SnapshotSchedule { every_steps: cfg.snapshot_every, keep_fields: false };
    let history = strang_run(&f0, &st, cfg.gamma, &weights(&cfg), &schedule, &mut rec)
        .map_err(|e| Abort { error: e.to_string(), state: rec.last.take() })?;
    let bootstrap = bootstrap_monitor(&rec.energy.samples, eps, cfg.order, weights(&cfg).delta)?;
    Ok(NearVacuumRun { eps, scale, history, samples: rec.energy.samples, bootstrap })
}

fn near_vacuum_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let run = near_vacuum(cfg, cfg.eps)?;
    let checks = vec![
        Check::at_most("max E_T/ε^(3/4)", run.bootstrap.max_bootstrap_ratio, 1.0),
        Check::at_least("min f / max f", run.history.min_negativity_ratio, -1e-8),
    ];
    let details = json!({
        "scale": run.scale,
        "bootstrap": run.bootstrap,
        "steps": run.history.steps,
        "negativity_flags": run.history.negativity_flags,
    });
    Ok(ScenarioOutput { checks, series: run.series()?, details, state: Some(run.history.final_field.clone()) })
}

/// Strang self-convergence on Δt ∈ {1, 1/2, 1/4} over a short horizon.
///
/// Δx = Δv/8 keeps every half-step shift v·Δt/2 an exact number of cells.
pub fn strang_convergence(cfg: &ScenarioConfig) -> Result<ConvergenceReport, Abort> {
    let cfg = cfg.effective();
    let base = grid_spec(&cfg);
    let horizon = cfg.convergence_horizon;
    let dv = base.dv();
    let x_extent = (gaussian_data_radius(1.0) + base.v_extent * horizon + 1.0).ceil();
    let x_points = (2.0 * x_extent / (dv / 8.0)).round() as usize + 1;
    let spec = GridSpec { x_dims: 1, x_extent, x_points, ..base };
    let grid = build_grid(&spec)?;
    let (f0, _) = energy_normalized_data(&grid, &profile(cfg.eps), &energy_spec(&cfg, 1))?;
    let st = StepConfig { dt: 1.0, t_final: horizon, ..step(&cfg) };
    Ok(self_convergence(&f0, &st, cfg.gamma, &weights(&cfg), 1.0)?)
}

/// Bootstrap at ε, quadratic scaling against ε/2, positivity and Strang order.
pub fn bootstrap_check(cfg: &ScenarioConfig) -> Result<ScenarioOutput, Abort> {
    let full = near_vacuum(cfg, cfg.eps)?;
    let half = near_vacuum(cfg, cfg.eps / 2.0)?;
    let ratios: Vec<f64> = full.bootstrap.energies.iter().zip(&half.bootstrap.energies).map(|(a, b)| a / b).collect();
    let worst = ratios.iter().copied().fold(4.0, |w, r| if (r - 4.0).abs() > (w - 4.0f64).abs() { r } else { w });
    let conv = strang_convergence(cfg)?;
    let neg = full.history.min_negativity_ratio.min(half.history.min_negativity_ratio);
    let checks = vec![
        Check::at_most("max E_T/ε^(3/4)", full.bootstrap.max_bootstrap_ratio, 1.0),
        Check::within("E_T(ε)/E_T(ε/2)", worst, 4.0, 1.0),
        Check::at_least("min f / max f", neg, -1e-8),
        Check::at_least("Strang self-convergence order", conv.order, 1.9),
    ];
    let mut series = full.series()?;
    series.extend(half.series()?);
    let details = json!({
        "bootstrap": full.bootstrap,
        "bootstrap_half": half.bootstrap,
        "scaling_ratios": ratios,
        "convergence": conv,
        "scale": full.scale,
        "steps": full.history.steps,
    });
    Ok(ScenarioOutput { checks, series, details, state: Some(full.history.final_field.clone()) })
}
