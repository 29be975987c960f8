//! Weight hierarchy (ν, ω), weighted L² norms of derivatives, the energy
//! E_T^m with its auxiliary Y and X norms, and power-law decay fits.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{apply_derivative, operator_roughness, CalculusError, DerivativeOp, StencilOrder};
use crate::evolution::{g_transform, EvolutionError, ExpWeightParams, SnapshotObserver};
use crate::phase_grid::{gaussian_data, DistributionField, GaussianProfile, GridError, MultiIndexTriple, PhaseGrid};

pub const DEFAULT_BASE: f64 = 20.0;
/// E_T needs at least this many snapshots in [0, T].
pub const MIN_SNAPSHOTS: usize = 8;
pub const MIN_FIT_SAMPLES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("triple {triple} has negative weight exponent (nu {nu}, omega {omega}) for base {base}")]
    Exponent { triple: MultiIndexTriple, nu: f64, omega: f64, base: f64 },
    #[error("energy needs at least {MIN_SNAPSHOTS} snapshots in [0, {t}], got {count}")]
    Snapshots { t: f64, count: usize },
    #[error("decay fit needs at least {MIN_FIT_SAMPLES} samples in the window, got {0}")]
    Window(usize),
    #[error("nonpositive value {value} at t = {time} in fit window")]
    NonPositive { time: f64, value: f64 },
    #[error("series times must be strictly increasing and values non-negative ({0})")]
    Series(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<NormError> for EvolutionError {
    fn from(e: NormError) -> Self {
        match e {
            NormError::Evolution(e) => e,
            other => EvolutionError::Observer(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyExponents {
    pub base: f64,
}

impl Default for HierarchyExponents {
    fn default() -> Self {
        Self { base: DEFAULT_BASE }
    }
}

impl HierarchyExponents {
    pub fn new(base: f64) -> Self {
        Self { base }
    }

    /// (ν, ω) for a triple.
    pub fn exponents(&self, t: &MultiIndexTriple) -> (f64, f64) {
        self.from_orders(t.abs_alpha(), t.abs_beta(), t.abs_sigma())
    }

    pub fn from_orders(&self, a: u32, b: u32, s: u32) -> (f64, f64) {
        let (a, b, s) = (f64::from(a), f64::from(b), f64::from(s));
        (self.base - 1.5 * (a + s) - 0.5 * b, self.base - 1.5 * s - 0.5 * (a + b))
    }

    /// ν, ω ≥ 0 for every triple in the list.
    pub fn check(&self, triples: &[MultiIndexTriple]) -> Result<(), NormError> {
        for t in triples {
            let (nu, omega) = self.exponents(t);
            if nu < 0.0 || omega < 0.0 {
                return Err(NormError::Exponent { triple: *t, nu, omega, base: self.base });
            }
        }
        Ok(())
    }
}

/// Powers of ⟨v⟩ and ⟨x−(t+1)v⟩ laid out for fast weighted sums.
/// ⟨x−(t+1)v⟩ depends on v only through its active components, which are the
/// leading ones in the flat v index.
struct WeightTables {
    v_log: Vec<f64>,
    xv_log: Vec<f64>,
    v_stride: usize,
    xv_cols: usize,
}

impl WeightTables {
    fn new(grid: &PhaseGrid, t: f64) -> Self {
        let nv = grid.nv_total();
        let n = grid.nv();
        let v_stride = n.pow(3 - grid.x_dims() as u32);
        let xv_cols = nv / v_stride;
        let mut xv_log = Vec::with_capacity(grid.nx_total() * xv_cols);
        for xi in 0..grid.nx_total() {
            for c in 0..xv_cols {
                xv_log.push(grid.xv_bracket(t, xi, c * v_stride).ln());
            }
        }
        Self { v_log: grid.v_bracket_table().iter().map(|b| b.ln()).collect(), xv_log, v_stride, xv_cols }
    }
}

/// Squared weighted norms with and without the extra ⟨v⟩^{1/2}, per x node.
fn weighted_sums(
    grid: &PhaseGrid,
    tables: &WeightTables,
    values: &[f64],
    nu: f64,
    omega: f64,
) -> Vec<(f64, f64)> {
    let nv = grid.nv_total();
    let vpow: Vec<f64> = tables.v_log.iter().map(|l| (2.0 * nu * l).exp()).collect();
    let vb: Vec<f64> = tables.v_log.iter().map(|l| l.exp()).collect();
    values
        .par_chunks(nv)
        .enumerate()
        .map(|(xi, slice)| {
            let xv = &tables.xv_log[xi * tables.xv_cols..(xi + 1) * tables.xv_cols];
            let xvpow: Vec<f64> = xv.iter().map(|l| (2.0 * omega * l).exp()).collect();
            let (mut plain, mut diss) = (0.0, 0.0);
            for (vi, &f) in slice.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                let w = grid.v_weight(vi) * vpow[vi] * xvpow[vi / tables.v_stride] * f * f;
                plain += w;
                diss += w * vb[vi];
            }
            let wx = grid.x_weight(xi);
            (wx * plain, wx * diss)
        })
        .collect()
}

fn total(parts: &[(f64, f64)]) -> (f64, f64) {
    parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1))
}

/// ‖⟨x−(t+1)v⟩^ω ⟨v⟩^{ν+extra} f‖_{L²_xL²_v}; `extra_v_power` is 0 or 1/2.
pub fn weighted_l2(field: &DistributionField, t: f64, nu: f64, omega: f64, extra_v_power: f64) -> f64 {
    let grid = field.grid();
    let tables = WeightTables::new(grid, t);
    let parts = weighted_sums(grid, &tables, field.values(), nu + extra_v_power, omega);
    total(&parts).0.sqrt()
}

/// Norms of one derivative of g at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleNorm {
    pub triple: MultiIndexTriple,
    pub nu: f64,
    pub omega: f64,
    /// ‖⟨x−(t+1)v⟩^ω⟨v⟩^ν ∂g‖².
    pub sup_sq: f64,
    /// Same with an extra ⟨v⟩^{1/2}.
    pub diss_sq: f64,
    /// Grid-scale energy fraction of g along the differentiated axes.
    pub roughness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotNorms {
    pub time: f64,
    pub entries: Vec<TripleNorm>,
}

impl SnapshotNorms {
    /// ‖h‖²_{Y^m_{x,v}} at this time.
    pub fn y_xv_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.sup_sq).sum()
    }
}

/// Which derivatives and weights the energy uses.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpec {
    pub exponents: HierarchyExponents,
    pub weights: ExpWeightParams,
    pub triples: Vec<MultiIndexTriple>,
    pub stencil: StencilOrder,
    pub inactive_y: bool,
}

impl EnergySpec {
    pub fn new(x_dims: usize, max_order: u32, exponents: HierarchyExponents, weights: ExpWeightParams) -> Self {
        Self {
            exponents,
            weights,
            triples: MultiIndexTriple::enumerate(x_dims, max_order, false),
            stencil: StencilOrder::Second,
            inactive_y: false,
        }
    }

    /// Weighted norms of every derivative of h (already g, not f).
    pub fn evaluate_g(&self, g: &DistributionField) -> Result<SnapshotNorms, NormError> {
        self.exponents.check(&self.triples)?;
        let t = g.time();
        let grid = g.grid();
        let tables = WeightTables::new(grid, t);
        let mut entries = Vec::with_capacity(self.triples.len());
        for &triple in &self.triples {
            let op = DerivativeOp::new(triple, t).with_stencil(self.stencil).with_inactive_y(self.inactive_y);
            let d = if triple == MultiIndexTriple::ZERO { g.clone() } else { apply_derivative(g, &op)? };
            let (nu, omega) = self.exponents.exponents(&triple);
            let (sup_sq, diss_sq) = total(&weighted_sums(grid, &tables, d.values(), nu, omega));
            entries.push(TripleNorm { triple, nu, omega, sup_sq, diss_sq, roughness: operator_roughness(g, &op) });
        }
        Ok(SnapshotNorms { time: t, entries })
    }

    pub fn evaluate_f(&self, f: &DistributionField) -> Result<SnapshotNorms, NormError> {
        self.evaluate_g(&g_transform(f, &self.weights)?)
    }
}

/// Collects per-snapshot norms during a run.
pub struct EnergyRecorder {
    pub spec: EnergySpec,
    pub samples: Vec<SnapshotNorms>,
}

impl EnergyRecorder {
    pub fn new(spec: EnergySpec) -> Self {
        Self { spec, samples: Vec::new() }
    }
}

impl SnapshotObserver for EnergyRecorder {
    fn observe(&mut self, field: &DistributionField) -> Result<(), EvolutionError> {
        let s = self.spec.evaluate_f(field)?;
        self.samples.push(s);
        Ok(())
    }
}

/// E_T^m from snapshot norms: for each triple,
/// (1+T)^{−2|β|(1+δ)} [ sup_{t≤T} ‖w ∂g‖² + ∫₀ᵀ (1+t)^{−1−δ} ‖⟨v⟩^{1/2} w ∂g‖² dt ],
/// with the sup over snapshots and the integral by the trapezoid rule.
pub fn energy_e(samples: &[SnapshotNorms], t_final: f64, delta: f64) -> Result<f64, NormError> {
    let used: Vec<&SnapshotNorms> = samples.iter().filter(|s| s.time <= t_final + 1e-12).collect();
    if used.len() < MIN_SNAPSHOTS {
        return Err(NormError::Snapshots { t: t_final, count: used.len() });
    }
    if used.windows(2).any(|w| w[1].time <= w[0].time) {
        return Err(NormError::Series("snapshot times".into()));
    }
    let n_triples = used[0].entries.len();
    let mut e = 0.0;
    for k in 0..n_triples {
        let triple = used[0].entries[k].triple;
        let sup = used.iter().fold(0.0f64, |m, s| m.max(s.entries[k].sup_sq));
        let integrand: Vec<f64> =
            used.iter().map(|s| (1.0 + s.time).powf(-1.0 - delta) * s.entries[k].diss_sq).collect();
        let mut integral = 0.0;
        for i in 1..used.len() {
            integral += 0.5 * (used[i].time - used[i - 1].time) * (integrand[i] + integrand[i - 1]);
        }
        let pre = (1.0 + t_final).powf(-2.0 * f64::from(triple.abs_beta()) * (1.0 + delta));
        e += pre * (sup + integral);
    }
    Ok(e)
}

/// Gaussian data scaled so that the t = 0 weighted energy of the unit profile
/// is 1, then multiplied by `profile.amplitude` (= ε). E_0 is then ε².
pub fn energy_normalized_data(
    grid: &Arc<PhaseGrid>,
    profile: &GaussianProfile,
    spec: &EnergySpec,
) -> Result<(DistributionField, f64), NormError> {
    let unit = GaussianProfile { amplitude: 1.0, ..*profile };
    let f1 = gaussian_data(grid, &unit, spec.weights.d0)?;
    let e0 = spec.evaluate_f(&f1)?.y_xv_sq();
    let scale = profile.amplitude / e0.sqrt();
    Ok((f1.map(|v| v * scale), scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxKind {
    /// sup over x of the Y^m_v norm.
    YV,
    YXV,
    YT,
    /// X^{k,l}_{x,v}.
    X { k: u32, l: u32 },
}

/// Auxiliary norms on one field g at its own time (Y_T over the given history).
pub fn auxiliary_norm(
    g: &DistributionField,
    history: &[SnapshotNorms],
    kind: AuxKind,
    spec: &EnergySpec,
) -> Result<f64, NormError> {
    let t = g.time();
    let grid = g.grid();
    let tables = WeightTables::new(grid, t);
    let deriv = |triple: MultiIndexTriple| -> Result<DistributionField, NormError> {
        if triple == MultiIndexTriple::ZERO {
            return Ok(g.clone());
        }
        let op = DerivativeOp::new(triple, t).with_stencil(spec.stencil).with_inactive_y(spec.inactive_y);
        Ok(apply_derivative(g, &op)?)
    };
    match kind {
        AuxKind::YV => {
            let mut per_x = vec![0.0; grid.nx_total()];
            for &triple in &spec.triples {
                let (nu, omega) = spec.exponents.exponents(&triple);
                let parts = weighted_sums(grid, &tables, deriv(triple)?.values(), nu, omega);
                for (xi, p) in parts.iter().enumerate() {
                    per_x[xi] += p.0 / grid.x_weight(xi);
                }
            }
            Ok(per_x.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt())
        }
        AuxKind::YXV => Ok(spec.evaluate_g(g)?.y_xv_sq().sqrt()),
        AuxKind::YT => {
            if history.is_empty() {
                return Ok(0.0);
            }
            let n = history[0].entries.len();
            let s: f64 = (0..n).map(|k| history.iter().fold(0.0f64, |m, h| m.max(h.entries[k].sup_sq))).sum();
            Ok(s.sqrt())
        }
        AuxKind::X { k, l } => {
            let mut s = 0.0;
            for triple in MultiIndexTriple::enumerate(grid.x_dims(), k, false) {
                if triple.abs_sigma() > 0 {
                    continue;
                }
                let (nu, _) = spec.exponents.exponents(&triple);
                let parts = weighted_sums(grid, &tables, deriv(triple)?.values(), nu + 0.5 * f64::from(l), 0.0);
                s += total(&parts).0.sqrt();
            }
            Ok(s)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub norm_id: String,
    pub triple: Option<MultiIndexTriple>,
    pub nu: Option<f64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl NormSeries {
    pub fn new(norm_id: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self, NormError> {
        let s = Self { norm_id: norm_id.into(), triple: None, nu: None, omega: None, delta: None, times, values };
        s.validate()?;
        Ok(s)
    }

    pub fn with_triple(mut self, triple: MultiIndexTriple, exps: &HierarchyExponents) -> Self {
        let (nu, omega) = exps.exponents(&triple);
        self.triple = Some(triple);
        self.nu = Some(nu);
        self.omega = Some(omega);
        self
    }

    pub fn validate(&self) -> Result<(), NormError> {
        if self.times.len() != self.values.len() {
            return Err(NormError::Series("length mismatch".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NormError::Series("times not increasing".into()));
        }
        if self.values.iter().any(|v| !(*v >= 0.0)) {
            return Err(NormError::Series("negative or NaN value".into()));
        }
        Ok(())
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Writes series as CSV rows: time, value, norm_id, alpha, beta, sigma, nu, omega.
pub fn write_series_csv<W: Write>(out: W, series: &[NormSeries]) -> Result<(), NormError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| NormError::Csv(e.to_string());
    w.write_record(["time", "value", "norm_id", "alpha", "beta", "sigma", "nu", "omega"]).map_err(err)?;
    for s in series {
        let (a, b, c) = match &s.triple {
            Some(t) => (
                crate::phase_grid::dotted(t.alpha),
                crate::phase_grid::dotted(t.beta),
                crate::phase_grid::dotted(t.sigma),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for (t, v) in s.times.iter().zip(&s.values) {
            w.write_record([
                format!("{t}"),
                format!("{v:e}"),
                s.norm_id.clone(),
                a.clone(),
                b.clone(),
                c.clone(),
                opt(s.nu),
                opt(s.omega),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| NormError::Csv(e.to_string()))
}

/// Reads series written by `write_series_csv`, grouped by norm id in file order.
pub fn read_series_csv<R: std::io::Read>(input: R) -> Result<Vec<NormSeries>, NormError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<NormSeries> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| NormError::Csv(e.to_string()))?;
        let num = |i: usize| -> Result<f64, NormError> {
            rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| NormError::Csv(format!("column {i}: {e}")))
        };
        let (t, v) = (num(0)?, num(1)?);
        let id = rec.get(2).unwrap_or("").to_string();
        match out.iter_mut().find(|s| s.norm_id == id) {
            Some(s) => {
                s.times.push(t);
                s.values.push(v);
            }
            None => out.push(NormSeries {
                norm_id: id,
                triple: None,
                nu: num(6).ok(),
                omega: num(7).ok(),
                delta: None,
                times: vec![t],
                values: vec![v],
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
}

/// Least squares of log(value) against log(1+t) over samples with t in [t0, t1].
pub fn fit_decay_rate(series: &NormSeries, t0: f64, t1: f64) -> Result<DecayFit, NormError> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(NormError::Window(pts.len()));
    }
    if let Some(&(time, value)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(NormError::NonPositive { time, value });
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(DecayFit { slope, intercept, residual, samples: pts.len() })
}

/// Straight-line fit y = a x + b; returns (a, b, rms residual).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// One index splitting that breaks a weight relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HierarchyViolation {
    pub parent: [u32; 3],
    pub first: [u32; 3],
    pub second: [u32; 3],
    pub third: [u32; 3],
    pub relation: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyAudit {
    pub max_order: u32,
    pub cases: u64,
    pub violations: Vec<HierarchyViolation>,
}

/// Enumerates every splitting (α',β',σ'), (α'',β'',σ''), (α''',β''',σ''') of a
/// parent order admissible in the trilinear a-term and checks, in exact
/// half-integer arithmetic,
///   ν'' + ν''' ≥ 2ν + (3|α'| + |β'| + 3|σ'|)/2 − 1,
///   ω'' + ω''' ≥ 2ω + (|α'| + |β'| + 3|σ'|)/2 − 1.
/// Only orders enter ν and ω, so magnitudes suffice.
pub fn hierarchy_relation_audit(max_order: u32) -> HierarchyAudit {
    // twice the exponents, base dropped (it cancels)
    let nu2 = |a: u32, b: u32, s: u32| -(3 * (a + s) as i64) - b as i64;
    let om2 = |a: u32, b: u32, s: u32| -(3 * s as i64) - (a + b) as i64;
    let mut cases = 0u64;
    let mut violations = Vec::new();
    for a in 0..=max_order {
        for b in 0..=max_order - a {
            for s in 0..=max_order - a - b {
                let n = a + b + s;
                if n < 2 {
                    continue;
                }
                for a1 in 0..=2 * a {
                    for b1 in 0..=2 * b + 2 {
                        for s1 in 0..=2 * s {
                            let n1 = a1 + b1 + s1;
                            if n1 < 2 || n1 > n.min(8) {
                                continue;
                            }
                            for a3 in 0..=(2 * a - a1) {
                                for b3 in 0..=(2 * b + 2 - b1) {
                                    let Some(s3) = n.checked_sub(a3 + b3) else { continue };
                                    if s1 + s3 > 2 * s {
                                        continue;
                                    }
                                    for a2 in 0..=(2 * a - a1 - a3) {
                                        for b2 in 0..=(2 * b + 2 - b1 - b3) {
                                            for s2 in 0..=(2 * s - s1 - s3) {
                                                if a2 + b2 + s2 > n {
                                                    continue;
                                                }
                                                cases += 1;
                                                let lhs_nu = nu2(a2, b2, s2) + nu2(a3, b3, s3);
                                                let rhs_nu =
                                                    2 * nu2(a, b, s) + (3 * a1 + b1 + 3 * s1) as i64 - 2;
                                                let lhs_om = om2(a2, b2, s2) + om2(a3, b3, s3);
                                                let rhs_om = 2 * om2(a, b, s) + (a1 + b1 + 3 * s1) as i64 - 2;
                                                for (ok, relation) in
                                                    [(lhs_nu >= rhs_nu, "nu"), (lhs_om >= rhs_om, "omega")]
                                                {
                                                    if !ok {
                                                        violations.push(HierarchyViolation {
                                                            parent: [a, b, s],
                                                            first: [a1, b1, s1],
                                                            second: [a2, b2, s2],
                                                            third: [a3, b3, s3],
                                                            relation,
                                                        });
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    HierarchyAudit { max_order, cases, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_grid::{build_grid, GridSpec};

    #[test]
    fn exponent_examples() {
        let h = HierarchyExponents::default();
        assert_eq!(h.exponents(&MultiIndexTriple::ZERO), (20.0, 20.0));
        assert_eq!(h.from_orders(2, 0, 0), (17.0, 19.0));
        assert_eq!(h.from_orders(0, 0, 1), (18.5, 18.5));
        assert!(HierarchyExponents::new(1.0).check(&MultiIndexTriple::enumerate(1, 2, false)).is_err());
    }

    #[test]
    fn point_supported_field() {
        let g = build_grid(&GridSpec { x_dims: 1, x_extent: 4.0, x_points: 9, v_extent: 4.0, v_points: 9 }).unwrap();
        let xi = 5;
        let vi = g.v_flat([3, 5, 4]);
        let mut vals = vec![0.0; g.len()];
        vals[xi * g.nv_total() + vi] = 2.5;
        let f = DistributionField::new(g.clone(), 1.5, vals).unwrap();
        let (nu, om) = (2.0, 1.5);
        let want = 2.5 * g.v_bracket(vi).powf(nu) * g.xv_bracket(1.5, xi, vi).powf(om) * (g.dx() * g.dv().powi(3)).sqrt();
        let got = weighted_l2(&f, 1.5, nu, om, 0.0);
        assert!((got / want - 1.0).abs() < 1e-13);
        assert_eq!(weighted_l2(&DistributionField::zeros(g, 0.0), 0.0, 3.0, 3.0, 0.5), 0.0);
    }

    #[test]
    fn synthetic_power_law() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 3.0).collect();
        let values = times.iter().map(|t| 4.0 * (1.0 + t).powf(-1.5)).collect();
        let fit = fit_decay_rate(&NormSeries::new("p", times.clone(), values).unwrap(), 0.0, 100.0).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        let flat = NormSeries::new("c", times.clone(), vec![2.0; 20]).unwrap();
        assert_eq!(fit_decay_rate(&flat, 0.0, 100.0).unwrap().slope, 0.0);
        let zero = NormSeries::new("z", times, vec![0.0; 20]).unwrap();
        assert!(matches!(fit_decay_rate(&zero, 0.0, 100.0), Err(NormError::NonPositive { .. })));
    }

    #[test]
    fn hierarchy_relations_hold() {
        let audit = hierarchy_relation_audit(4);
        assert!(audit.cases > 0);
        assert!(audit.violations.is_empty(), "{:?}", &audit.violations[..audit.violations.len().min(3)]);
    }

    #[test]
    fn csv_round_trip() {
        let s = NormSeries::new("l2", vec![0.0, 1.0], vec![1.0, 0.5]).unwrap().with_triple(MultiIndexTriple::dv(0), &HierarchyExponents::new(3.0));
        let mut buf = Vec::new();
        write_series_csv(&mut buf, std::slice::from_ref(&s)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,value,norm_id,alpha,beta,sigma,nu,omega\n"));
        assert!(text.contains("0.0.0,1.0.0,0.0.0,2.5,2.5"));
        let back = read_series_csv(&buf[..]).unwrap();
        assert_eq!(back[0].values, s.values);
    }
}
