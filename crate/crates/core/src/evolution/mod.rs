//! Operator-split time stepping for ∂_t f + v·∂_x f = ā_ij ∂²_{v_iv_j} f − c̄ f,
//! exact free transport, and the exponential transform g = e^{d(t)⟨v⟩} f.

mod free;

pub use free::{
    free_transport_eval, gaussian_dv_l2x_l1v_closed_form, gaussian_l2x_l1v_closed_form, FreeGaussian,
    InitialData, Poly2, ProfileData,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::CalculusError;
use crate::collision_kernel::{ConvolutionMethod, KernelCoefficients, KernelError, KernelTable};
use crate::phase_grid::{build_grid, DistributionField, GridError, GridSpec, PhaseGrid};

/// min f < −NEGATIVITY_TOLERANCE · max f is flagged.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;
pub const MAX_HALVINGS: u32 = 8;
/// Largest exponent d(t)⟨v⟩ the g-transform accepts.
pub const OVERFLOW_EXPONENT: f64 = 700.0;
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("d0 must be positive and finite, got {0}")]
    D0(f64),
    #[error("delta must lie in (0, 1/8), got {0}")]
    Delta(f64),
    #[error("exponent d(t)<v_max> = {exponent:.1} exceeds {OVERFLOW_EXPONENT} at t = {t}")]
    Overflow { t: f64, exponent: f64 },
    #[error("support reaches |x| = {radius:.4} within 2dx of the box edge {extent} at t = {t}")]
    SupportBreach { t: f64, radius: f64, extent: f64 },
    #[error("box half-width {extent} is below data radius {data:.3} plus v_max*T = {sweep:.3}")]
    SupportRule { extent: f64, data: f64, sweep: f64 },
    #[error("CFL: dt = {dt:.3e} still exceeds {limit:.3e} after {MAX_HALVINGS} halvings at t = {t}")]
    Cfl { t: f64, dt: f64, limit: f64 },
    #[error("invalid step configuration: {0}")]
    Config(String),
    #[error("snapshot observer failed: {0}")]
    Observer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpWeightParams {
    pub d0: f64,
    pub delta: f64,
}

impl Default for ExpWeightParams {
    fn default() -> Self {
        Self { d0: 1.0, delta: 0.1 }
    }
}

impl ExpWeightParams {
    pub fn new(d0: f64, delta: f64) -> Result<Self, EvolutionError> {
        let p = Self { d0, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.d0.is_finite() && self.d0 > 0.0) {
            return Err(EvolutionError::D0(self.d0));
        }
        if !(self.delta > 0.0 && self.delta < 0.125) {
            return Err(EvolutionError::Delta(self.delta));
        }
        Ok(())
    }

    /// d(t) = d₀(1 + (1+t)^{−δ}).
    pub fn d(&self, t: f64) -> f64 {
        self.d0 * (1.0 + (1.0 + t).powf(-self.delta))
    }

    pub fn multiplier(&self, t: f64, v_bracket: f64) -> f64 {
        (self.d(t) * v_bracket).exp()
    }

    fn guard(&self, t: f64, grid: &PhaseGrid) -> Result<f64, EvolutionError> {
        let d = self.d(t);
        let exponent = d * grid.v_bracket_max();
        if exponent > OVERFLOW_EXPONENT {
            return Err(EvolutionError::Overflow { t, exponent });
        }
        Ok(d)
    }
}

fn scale_by_weight(field: &DistributionField, params: &ExpWeightParams, sign: f64) -> Result<DistributionField, EvolutionError> {
    let grid = field.grid();
    let d = params.guard(field.time(), grid)?;
    let mult: Vec<f64> = grid.v_bracket_table().iter().map(|b| (sign * d * b).exp()).collect();
    let nv = grid.nv_total();
    let values = field.values().iter().enumerate().map(|(n, v)| v * mult[n % nv]).collect();
    Ok(field.with_values(values)?)
}

/// g = e^{d(t)⟨v⟩} f at the field's own time.
pub fn g_transform(field: &DistributionField, params: &ExpWeightParams) -> Result<DistributionField, EvolutionError> {
    scale_by_weight(field, params, 1.0)
}

/// f = e^{−d(t)⟨v⟩} g.
pub fn g_inverse(field: &DistributionField, params: &ExpWeightParams) -> Result<DistributionField, EvolutionError> {
    scale_by_weight(field, params, -1.0)
}

/// Samples f_data(x − tv, v) on a grid.
pub fn free_transport_field(
    grid: &Arc<PhaseGrid>,
    data: &impl InitialData,
    t: f64,
) -> Result<DistributionField, EvolutionError> {
    Ok(DistributionField::from_fn(grid.clone(), t, |x, v| free_transport_eval(data, t, x, v))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    Lie,
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionIntegrator {
    #[default]
    ExplicitRk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub dt: f64,
    pub t_final: f64,
    pub splitting: Splitting,
    pub integrator: CollisionIntegrator,
    /// θ in Δt ≤ θ·Δv²/(2 max trace ā).
    pub cfl_safety: f64,
    /// When false ā and c̄ are forced to zero and only transport runs.
    pub collisions: bool,
    pub convolution: ConvolutionMethod,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            t_final: 20.0,
            splitting: Splitting::Strang,
            integrator: CollisionIntegrator::ExplicitRk2,
            cfl_safety: 0.5,
            collisions: true,
            convolution: ConvolutionMethod::Auto,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(EvolutionError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(EvolutionError::Config(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(EvolutionError::Config(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        let n = self.t_final / self.dt;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(EvolutionError::Config(format!(
                "t_final {} is not a whole number of steps of {}",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Source offset and interpolation weights for a uniform shift of a line.
#[derive(Debug, Clone, Copy)]
struct Shift {
    base: isize,
    /// None for an exact index shift.
    weights: Option<[f64; 4]>,
}

impl Shift {
    /// Sampling position k − s for target index k.
    fn new(s: f64) -> Self {
        let q = -s;
        let mut base = q.floor();
        let mut theta = q - base;
        if theta > 1.0 - ALIGN_TOL {
            base += 1.0;
            theta = 0.0;
        }
        if theta < ALIGN_TOL {
            return Self { base: base as isize, weights: None };
        }
        let th = theta;
        let w = [
            -th * (th - 1.0) * (th - 2.0) / 6.0,
            (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0,
            -(th + 1.0) * th * (th - 2.0) / 2.0,
            (th + 1.0) * th * (th - 1.0) / 6.0,
        ];
        Self { base: base as isize, weights: Some(w) }
    }
}

fn check_support(field: &DistributionField) -> Result<(), EvolutionError> {
    let grid = field.grid();
    let extent = grid.spec().x_extent;
    let radius = field.support_radius();
    if radius > 0.0 && radius >= extent - 2.0 * grid.dx() - 1e-12 {
        return Err(EvolutionError::SupportBreach { t: field.time(), radius, extent });
    }
    Ok(())
}

/// Semi-Lagrangian step f(x, v) ← f(x − vΔt, v): an index shift when vΔt is a
/// multiple of Δx, four-point Lagrange interpolation otherwise.
pub fn transport_step(field: &DistributionField, dt: f64) -> Result<DistributionField, EvolutionError> {
    let grid = field.grid().clone();
    let nv = grid.nv_total();
    let shape = grid.x_shape();
    let mut cur = field.values().to_vec();
    for axis in 0..grid.x_dims() {
        let n = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let shifts: Vec<Shift> = (0..nv).map(|vi| Shift::new(grid.v_coords(vi)[axis] * dt / grid.dx())).collect();
        let mut next = vec![0.0; cur.len()];
        for o in 0..outer {
            for r in 0..inner {
                let row = |k: usize| ((o * n + k) * inner + r) * nv;
                for k in 0..n {
                    let dst = row(k);
                    for (vi, sh) in shifts.iter().enumerate() {
                        let src = k as isize + sh.base;
                        let at = |j: isize| -> f64 {
                            if j < 0 || j >= n as isize {
                                0.0
                            } else {
                                cur[row(j as usize) + vi]
                            }
                        };
                        next[dst + vi] = match sh.weights {
                            None => at(src),
                            Some(w) => {
                                w[0] * at(src - 1) + w[1] * at(src) + w[2] * at(src + 1) + w[3] * at(src + 2)
                            }
                        };
                    }
                }
            }
        }
        cur = next;
    }
    let out = DistributionField::new(grid, field.time() + dt, cur)?;
    check_support(&out)?;
    Ok(out)
}

/// ā_ij D_ij f − c̄ f on one velocity slice; D_ii is the three-point second
/// difference and D_ij (i ≠ j) the composition of two central differences.
pub fn collision_operator(grid: &PhaseGrid, coeffs: &KernelCoefficients, f: &[f64]) -> Vec<f64> {
    let n = grid.nv() as isize;
    let h2 = grid.dv() * grid.dv();
    let idx = |p: [isize; 3]| -> Option<usize> {
        if p.iter().all(|&c| c >= 0 && c < n) {
            Some(((p[0] * n + p[1]) * n + p[2]) as usize)
        } else {
            None
        }
    };
    let at = |p: [isize; 3]| idx(p).map_or(0.0, |i| f[i]);
    let mut out = vec![0.0; f.len()];
    for i0 in 0..n {
        for i1 in 0..n {
            for i2 in 0..n {
                let p = [i0, i1, i2];
                let k = ((i0 * n + i1) * n + i2) as usize;
                let mid = f[k];
                let mut acc = -coeffs.c[k] * mid;
                for (e, &(i, j)) in crate::collision_kernel::SYM_PAIRS.iter().enumerate() {
                    let a = coeffs.a[e][k];
                    if a == 0.0 {
                        continue;
                    }
                    let step = |p: [isize; 3], axis: usize, d: isize| {
                        let mut q = p;
                        q[axis] += d;
                        q
                    };
                    let d = if i == j {
                        (at(step(p, i, 1)) - 2.0 * mid + at(step(p, i, -1))) / h2
                    } else {
                        2.0 * (at(step(step(p, i, 1), j, 1)) - at(step(step(p, i, 1), j, -1))
                            - at(step(step(p, i, -1), j, 1))
                            + at(step(step(p, i, -1), j, -1)))
                            / (4.0 * h2)
                    };
                    acc += a * d;
                }
                out[k] = acc;
            }
        }
    }
    out
}

/// Heun (SSP-RK2) with frozen coefficients.
pub fn collision_rk2(grid: &PhaseGrid, coeffs: &KernelCoefficients, f: &[f64], dt: f64) -> Vec<f64> {
    let l0 = collision_operator(grid, coeffs, f);
    let f1: Vec<f64> = f.iter().zip(&l0).map(|(a, b)| a + dt * b).collect();
    let l1 = collision_operator(grid, coeffs, &f1);
    f.iter().zip(f1.iter().zip(&l1)).map(|(a, (b, l))| 0.5 * a + 0.5 * (b + dt * l)).collect()
}

/// Largest stable Δt for one node's coefficients.
pub fn cfl_limit(grid: &PhaseGrid, coeffs: &KernelCoefficients, safety: f64) -> f64 {
    let tr = coeffs.max_trace();
    if tr > 0.0 {
        safety * grid.dv() * grid.dv() / (2.0 * tr)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionStats {
    pub max_trace: f64,
    /// None when every coefficient vanished.
    pub cfl_limit: Option<f64>,
    pub max_halvings: u32,
    pub nodes_updated: usize,
}

/// One collision step at every x node. Coefficients are recomputed from the
/// slice and frozen for the step; the CFL bound is evaluated per node and a
/// violating node is subcycled with Δt halved up to `MAX_HALVINGS` times.
pub fn collision_step(
    field: &DistributionField,
    table: &KernelTable,
    dt: f64,
    cfl_safety: f64,
) -> Result<(DistributionField, CollisionStats), EvolutionError> {
    let grid = field.grid().clone();
    let nv = grid.nv_total();
    let t = field.time();
    let results: Vec<Result<Option<(Vec<f64>, f64, f64, u32)>, EvolutionError>> = field
        .values()
        .par_chunks(nv)
        .map(|slice| {
            if slice.iter().all(|&v| v == 0.0) {
                return Ok(None);
            }
            let coeffs = table.convolve(slice, t)?;
            let limit = cfl_limit(&grid, &coeffs, cfl_safety);
            let mut halvings = 0;
            while dt / f64::from(1u32 << halvings) > limit {
                if halvings == MAX_HALVINGS {
                    return Err(EvolutionError::Cfl { t, dt, limit });
                }
                halvings += 1;
            }
            let sub = dt / f64::from(1u32 << halvings);
            let mut cur = slice.to_vec();
            for _ in 0..(1u32 << halvings) {
                cur = collision_rk2(&grid, &coeffs, &cur, sub);
            }
            Ok(Some((cur, coeffs.max_trace(), limit, halvings)))
        })
        .collect();
    let mut values = Vec::with_capacity(field.values().len());
    let mut stats = CollisionStats { max_trace: 0.0, cfl_limit: None, max_halvings: 0, nodes_updated: 0 };
    for (r, slice) in results.into_iter().zip(field.values().chunks(nv)) {
        match r? {
            None => values.extend_from_slice(slice),
            Some((v, tr, limit, h)) => {
                values.extend(v);
                stats.max_trace = stats.max_trace.max(tr);
                if limit.is_finite() {
                    stats.cfl_limit = Some(stats.cfl_limit.map_or(limit, |l: f64| l.min(limit)));
                }
                stats.max_halvings = stats.max_halvings.max(h);
                stats.nodes_updated += 1;
            }
        }
    }
    Ok((DistributionField::new(grid, t, values)?, stats))
}

/// Receives the field at every scheduled snapshot.
pub trait SnapshotObserver {
    fn observe(&mut self, field: &DistributionField) -> Result<(), EvolutionError>;
}

impl<F: FnMut(&DistributionField) -> Result<(), EvolutionError>> SnapshotObserver for F {
    fn observe(&mut self, field: &DistributionField) -> Result<(), EvolutionError> {
        self(field)
    }
}

pub struct NoObserver;

impl SnapshotObserver for NoObserver {
    fn observe(&mut self, _: &DistributionField) -> Result<(), EvolutionError> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapshotSchedule {
    /// Snapshot after every this many steps (and always at t = 0 and at the end).
    pub every_steps: usize,
    /// Keep copies of the snapshot fields in the history.
    pub keep_fields: bool,
}

impl Default for SnapshotSchedule {
    fn default() -> Self {
        Self { every_steps: 1, keep_fields: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    pub max_trace: f64,
    pub cfl_limit: Option<f64>,
    pub max_halvings: u32,
    pub negativity_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityFlag {
    pub time: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RunHistory {
    pub config: StepConfig,
    pub gamma: f64,
    pub weights: ExpWeightParams,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<DistributionField>,
    pub steps: Vec<StepRecord>,
    pub negativity_flags: Vec<NegativityFlag>,
    /// Most negative min f / max f seen at any step, 0 if none.
    pub min_negativity_ratio: f64,
    pub final_field: DistributionField,
}

/// The support-containment rule L_x ≥ L_x,data + L_v·T.
pub fn check_support_rule(field: &DistributionField, t_final: f64) -> Result<(), EvolutionError> {
    let spec = field.grid().spec();
    let data = field.support_radius();
    let sweep = spec.v_extent * t_final;
    if field.max_abs() > 0.0 && spec.x_extent < data + sweep {
        return Err(EvolutionError::SupportRule { extent: spec.x_extent, data, sweep });
    }
    Ok(())
}

fn one_step(
    f: DistributionField,
    cfg: &StepConfig,
    table: Option<&KernelTable>,
    dt: f64,
) -> Result<(DistributionField, CollisionStats), EvolutionError> {
    let idle = CollisionStats { max_trace: 0.0, cfl_limit: None, max_halvings: 0, nodes_updated: 0 };
    let collide = |f: DistributionField| match table {
        Some(tab) => collision_step(&f, tab, dt, cfg.cfl_safety),
        None => Ok((f, idle)),
    };
    match cfg.splitting {
        Splitting::Strang => {
            let f = transport_step(&f, 0.5 * dt)?;
            let (f, st) = collide(f)?;
            Ok((transport_step(&f, 0.5 * dt)?, st))
        }
        Splitting::Lie => {
            let f = transport_step(&f, dt)?;
            collide(f)
        }
    }
}

/// Runs the split scheme to `cfg.t_final`, handing snapshots to `observer`.
pub fn strang_run(
    initial: &DistributionField,
    cfg: &StepConfig,
    gamma: f64,
    weights: &ExpWeightParams,
    schedule: &SnapshotSchedule,
    observer: &mut dyn SnapshotObserver,
) -> Result<RunHistory, EvolutionError> {
    cfg.validate()?;
    weights.validate()?;
    crate::collision_kernel::check_gamma(gamma)?;
    if schedule.every_steps == 0 {
        return Err(EvolutionError::Config("every_steps must be at least 1".into()));
    }
    let grid = initial.grid().clone();
    weights.guard(0.0, &grid)?;
    check_support_rule(initial, cfg.t_final)?;
    let table = if cfg.collisions { Some(KernelTable::new(&grid, gamma, cfg.convolution)?) } else { None };

    let mut f = initial.clone();
    f.set_time(0.0);
    let mut history = RunHistory {
        config: *cfg,
        gamma,
        weights: *weights,
        snapshot_times: Vec::new(),
        snapshots: Vec::new(),
        steps: Vec::new(),
        negativity_flags: Vec::new(),
        min_negativity_ratio: f.negativity_ratio(),
        final_field: f.clone(),
    };
    let mut snap = |f: &DistributionField, h: &mut RunHistory| -> Result<(), EvolutionError> {
        observer.observe(f)?;
        h.snapshot_times.push(f.time());
        if schedule.keep_fields {
            h.snapshots.push(f.clone());
        }
        Ok(())
    };
    snap(&f, &mut history)?;
    let steps = cfg.steps();
    for k in 1..=steps {
        let (mut next, stats) = one_step(f, cfg, table.as_ref(), cfg.dt)?;
        let t = k as f64 * cfg.dt;
        next.set_time(t);
        let ratio = next.negativity_ratio();
        history.min_negativity_ratio = history.min_negativity_ratio.min(ratio);
        if ratio < -NEGATIVITY_TOLERANCE {
            history.negativity_flags.push(NegativityFlag { time: t, ratio });
        }
        history.steps.push(StepRecord {
            time: t,
            dt: cfg.dt,
            max_trace: stats.max_trace,
            cfl_limit: stats.cfl_limit,
            max_halvings: stats.max_halvings,
            negativity_ratio: ratio,
        });
        if k % schedule.every_steps == 0 || k == steps {
            snap(&next, &mut history)?;
        }
        f = next;
    }
    history.final_field = f;
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub dts: [f64; 3],
    /// ‖u_h − u_{h/2}‖ and ‖u_{h/2} − u_{h/4}‖ in discrete L².
    pub diffs: [f64; 2],
    pub order: f64,
}

/// Self-convergence of the split scheme on Δt ∈ {h, h/2, h/4}.
pub fn self_convergence(
    initial: &DistributionField,
    cfg: &StepConfig,
    gamma: f64,
    weights: &ExpWeightParams,
    h: f64,
) -> Result<ConvergenceReport, EvolutionError> {
    let dts = [h, h / 2.0, h / 4.0];
    let mut finals = Vec::new();
    for &dt in &dts {
        let c = StepConfig { dt, ..*cfg };
        let run = strang_run(initial, &c, gamma, weights, &SnapshotSchedule { every_steps: usize::MAX, keep_fields: false }, &mut NoObserver)?;
        finals.push(run.final_field);
    }
    let diff = |a: &DistributionField, b: &DistributionField| {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let diffs = [diff(&finals[0], &finals[1]), diff(&finals[1], &finals[2])];
    Ok(ConvergenceReport { dts, diffs, order: (diffs[0] / diffs[1]).log2() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub v_points: usize,
    pub v_extent: f64,
    pub dv: f64,
    pub gamma: f64,
    /// max |ā_ij D_ij M − c̄ M|.
    pub residual: f64,
    /// max |c̄ M|.
    pub scale: f64,
    pub ratio: f64,
}

/// Discrete collision operator applied to the Maxwellian e^{−|v|²/2}.
pub fn maxwellian_residual(
    v_points: usize,
    v_extent: f64,
    gamma: f64,
    method: ConvolutionMethod,
) -> Result<ResidualReport, EvolutionError> {
    let grid = build_grid(&GridSpec { x_dims: 1, x_extent: 1.0, x_points: 8, v_extent, v_points })?;
    let nv = grid.nv_total();
    let m: Vec<f64> = (0..nv)
        .map(|vi| {
            let v = grid.v_coords(vi);
            (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / 2.0).exp()
        })
        .collect();
    let table = KernelTable::new(&grid, gamma, method)?;
    let coeffs = table.convolve(&m, 0.0)?;
    let r = collision_operator(&grid, &coeffs, &m);
    let residual = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = coeffs.c.iter().zip(&m).fold(0.0f64, |a, (c, f)| a.max((c * f).abs()));
    Ok(ResidualReport { v_points, v_extent, dv: grid.dv(), gamma, residual, scale, ratio: residual / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_grid::GaussianProfile;

    fn grid(nx: usize, lx: f64, nv: usize, lv: f64) -> Arc<PhaseGrid> {
        build_grid(&GridSpec { x_dims: 1, x_extent: lx, x_points: nx, v_extent: lv, v_points: nv }).unwrap()
    }

    #[test]
    fn weight_function_examples() {
        let p = ExpWeightParams::new(1.0, 0.1).unwrap();
        assert_eq!(p.d(0.0), 2.0);
        assert!((p.d(1e12) - 1.0).abs() < 1e-1);
        assert!(p.d(3.0) < p.d(2.0));
        assert_eq!(p.multiplier(0.0, 1.0), 2f64.exp());
        assert!(ExpWeightParams::new(1.0, 0.125).is_err());
        assert!(ExpWeightParams::new(0.0, 0.1).is_err());
    }

    #[test]
    fn overflow_guard() {
        let g = grid(8, 4.0, 9, 400.0);
        let f = DistributionField::zeros(g, 0.0);
        assert!(matches!(g_transform(&f, &ExpWeightParams::default()), Err(EvolutionError::Overflow { .. })));
    }

    #[test]
    fn exact_shift_moves_indices() {
        // v-axis {-4..4}, Δx = 1, Δt = 1: node v moves by v cells
        let g = grid(33, 16.0, 9, 4.0);
        let f = DistributionField::from_fn(g.clone(), 0.0, |x, _| if x[0] == 0.0 { 1.0 } else { 0.0 }).unwrap();
        let out = transport_step(&f, 1.0).unwrap();
        for xi in 0..g.nx_total() {
            for vi in 0..g.nv_total() {
                let want = if g.x_coords(xi)[0] == g.v_coords(vi)[0] { 1.0 } else { 0.0 };
                assert_eq!(out.values()[xi * g.nv_total() + vi], want);
            }
        }
    }

    #[test]
    fn support_breach_aborts() {
        let g = grid(17, 8.0, 9, 4.0);
        let f = DistributionField::from_fn(g, 0.0, |x, _| if x[0] == 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!(matches!(transport_step(&f, 2.0), Err(EvolutionError::SupportBreach { .. })));
    }

    #[test]
    fn zero_collision_is_zero() {
        let g = grid(8, 4.0, 9, 4.0);
        let table = KernelTable::new(&g, 0.5, ConvolutionMethod::Direct).unwrap();
        let f = DistributionField::zeros(g, 0.0);
        let (out, st) = collision_step(&f, &table, 0.1, 0.5).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
        assert_eq!(st.nodes_updated, 0);
    }

    #[test]
    fn bump_update_signs() {
        let g = grid(8, 4.0, 17, 4.0);
        let nv = g.nv_total();
        let f: Vec<f64> = (0..nv)
            .map(|vi| {
                let v = g.v_coords(vi);
                (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
            })
            .collect();
        let table = KernelTable::new(&g, 0.3, ConvolutionMethod::Auto).unwrap();
        let coeffs = table.convolve(&f, 0.0).unwrap();
        assert!(coeffs.c.iter().all(|&c| c <= 0.0));
        let peak = f.iter().enumerate().fold((0, 0.0), |m, (i, &v)| if v > m.1 { (i, v) } else { m }).0;
        let mut diffusion_only = coeffs.clone();
        diffusion_only.c.iter_mut().for_each(|c| *c = 0.0);
        assert!(collision_operator(&g, &diffusion_only, &f)[peak] <= 0.0);
    }

    #[test]
    fn vacuum_stays_vacuum() {
        let g = grid(41, 20.0, 9, 4.0);
        let p = GaussianProfile { amplitude: 0.0, x_center: [0.0; 3], v_center: [0.0; 3], x_width: 1.0, v_width: 1.0 };
        let f = crate::phase_grid::gaussian_data(&g, &p, 0.25).unwrap();
        let cfg = StepConfig { dt: 0.5, t_final: 2.0, ..Default::default() };
        let run = strang_run(&f, &cfg, 0.5, &ExpWeightParams::new(0.25, 0.1).unwrap(), &SnapshotSchedule::default(), &mut NoObserver)
            .unwrap();
        assert!(run.final_field.values().iter().all(|&v| v == 0.0));
        assert_eq!(run.snapshot_times.len(), 5);
    }
}
