//! Decay-rate audit of weighted L¹_v norms and coefficients along a solution,
//! and the bootstrap monitor on E_T.

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::calculus::{apply_derivative, DerivativeOp};
use crate::collision_kernel::{kernel_matrix, ConvolutionMethod, KernelTable};
use crate::evolution::{FreeGaussian, RunHistory};
use crate::norms_energy::{energy_e, fit_decay_rate, DecayFit, NormSeries, SnapshotNorms, MIN_SNAPSHOTS};
use crate::phase_grid::{bracket, MultiIndexTriple};

/// Anything that can produce the audited norms at a list of times.
pub trait DecaySource: Sync {
    fn gamma(&self) -> f64;
    fn times(&self) -> Vec<f64>;
    /// ‖⟨v⟩³⟨x−(t+1)v⟩²∂f‖_{L^∞_xL¹_v} at times()[k].
    fn weighted_l1v(&self, k: usize, triple: &MultiIndexTriple) -> Result<f64, EstimateError>;
    /// sup over x, v and entries of ⟨v⟩^{−2−γ}|∂ā_ij| at times()[k].
    fn coefficient_sup(&self, k: usize, triple: &MultiIndexTriple) -> Result<f64, EstimateError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    WeightedL1v,
    Coefficient,
}

impl SeriesKind {
    fn label(self) -> &'static str {
        match self {
            Self::WeightedL1v => "Linf_xL1_v <v>^3<x-(t+1)v>^2",
            Self::Coefficient => "<v>^(-2-gamma) abar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayThresholds {
    pub t0: f64,
    pub t1: f64,
    pub delta: f64,
    /// A fitted slope passes when ≤ target + tolerance.
    pub tolerance: f64,
}

impl Default for DecayThresholds {
    fn default() -> Self {
        Self { t0: 4.0, t1: 64.0, delta: 0.1, tolerance: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub kind: SeriesKind,
    pub triple: MultiIndexTriple,
    pub series: NormSeries,
    pub fit: DecayFit,
    /// −3/2 + |β|(1+δ).
    pub target: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayAudit {
    pub rows: Vec<DecayRow>,
    /// Series that vanished identically.
    pub skipped: Vec<String>,
}

impl DecayAudit {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

pub fn solution_decay_audit(
    source: &dyn DecaySource,
    triples: &[MultiIndexTriple],
    thresholds: &DecayThresholds,
) -> Result<DecayAudit, EstimateError> {
    let times = source.times();
    let mut audit = DecayAudit { rows: Vec::new(), skipped: Vec::new() };
    for &triple in triples {
        for kind in [SeriesKind::WeightedL1v, SeriesKind::Coefficient] {
            let id = format!("{} {}", kind.label(), triple);
            let values = (0..times.len())
                .map(|k| match kind {
                    SeriesKind::WeightedL1v => source.weighted_l1v(k, &triple),
                    SeriesKind::Coefficient => source.coefficient_sup(k, &triple),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if values.iter().all(|v| *v == 0.0) {
                audit.skipped.push(id);
                continue;
            }
            if let Some((t, v)) = times.iter().zip(&values).find(|(_, v)| !(**v > 0.0)) {
                return Err(EstimateError::NonPositive { series: id, time: *t, value: *v });
            }
            let series = NormSeries::new(id, times.clone(), values)?;
            let fit = fit_decay_rate(&series, thresholds.t0, thresholds.t1)?;
            let target = -1.5 + f64::from(triple.abs_beta()) * (1.0 + thresholds.delta);
            let passed = fit.slope <= target + thresholds.tolerance;
            audit.rows.push(DecayRow { kind, triple, series, fit, target, passed });
        }
    }
    Ok(audit)
}

/// Grid snapshots kept by a run (SnapshotSchedule::keep_fields).
pub struct HistorySource<'a> {
    pub history: &'a RunHistory,
    pub method: ConvolutionMethod,
    /// Convolve at every this many x nodes.
    pub x_stride: usize,
}

impl HistorySource<'_> {
    fn field(&self, k: usize, triple: &MultiIndexTriple) -> Result<crate::phase_grid::DistributionField, EstimateError> {
        let f = self.history.snapshots.get(k).ok_or(EstimateError::NoSnapshots)?;
        if *triple == MultiIndexTriple::ZERO {
            return Ok(f.clone());
        }
        Ok(apply_derivative(f, &DerivativeOp::new(*triple, f.time()))?)
    }
}

impl DecaySource for HistorySource<'_> {
    fn gamma(&self) -> f64 {
        self.history.gamma
    }

    fn times(&self) -> Vec<f64> {
        self.history.snapshots.iter().map(|f| f.time()).collect()
    }

    fn weighted_l1v(&self, k: usize, triple: &MultiIndexTriple) -> Result<f64, EstimateError> {
        let d = self.field(k, triple)?;
        let grid = d.grid();
        let t = d.time();
        let mut best = 0.0f64;
        for xi in 0..grid.nx_total() {
            let s: f64 = d
                .v_slice(xi)
                .iter()
                .enumerate()
                .map(|(vi, h)| grid.v_bracket(vi).powi(3) * grid.xv_bracket(t, xi, vi).powi(2) * h.abs() * grid.v_weight(vi))
                .sum();
            best = best.max(s);
        }
        Ok(best)
    }

    fn coefficient_sup(&self, k: usize, triple: &MultiIndexTriple) -> Result<f64, EstimateError> {
        let d = self.field(k, triple)?;
        let grid = d.grid();
        let gamma = self.history.gamma;
        let table = KernelTable::new(grid, gamma, self.method)?;
        let w: Vec<f64> = grid.v_bracket_table().iter().map(|b| b.powf(-2.0 - gamma)).collect();
        let mut best = 0.0f64;
        for xi in (0..grid.nx_total()).step_by(self.x_stride.max(1)) {
            let s = d.v_slice(xi);
            if s.iter().all(|v| *v == 0.0) {
                continue;
            }
            let c = table.convolve(s, d.time())?;
            for a in &c.a {
                for (val, wv) in a.iter().zip(&w) {
                    best = best.max(val.abs() * wv);
                }
            }
        }
        Ok(best)
    }
}

/// Exact free transport of a Gaussian, integrated in v on boxes that follow
/// the sheared profile at each x.
pub struct FreeGaussianSource {
    pub data: FreeGaussian,
    pub gamma: f64,
    pub times: Vec<f64>,
    /// Trapezoid points per velocity axis.
    pub v_points: usize,
    /// Points on each spatial ray scanned for the supremum.
    pub x_points: usize,
}

const BOX_RADIUS: f64 = 7.0;

fn rays(x_dims: usize, isotropic: bool) -> Vec<[f64; 3]> {
    let s = 1.0 / 3f64.sqrt();
    let mut out = vec![[1.0, 0.0, 0.0]];
    if !isotropic {
        out.extend([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [s, s, s]]);
    }
    // Inactive spatial axes carry x = 0.
    out.into_iter()
        .map(|r| std::array::from_fn(|a| if a < x_dims { r[a] } else { 0.0 }))
        .filter(|r: &[f64; 3]| r.iter().any(|c| *c != 0.0))
        .collect()
}

impl FreeGaussianSource {
    pub fn new(data: FreeGaussian, gamma: f64, times: Vec<f64>) -> Self {
        Self { data, gamma, times, v_points: 28, x_points: 16 }
    }

    /// Trapezoid nodes and the cell volume of the velocity box at (t, x).
    fn v_box(&self, t: f64, x: [f64; 3], n: usize) -> (Vec<[f64; 3]>, f64) {
        let (wx, wv) = (self.data.x_width, self.data.v_width);
        let axes: Vec<(f64, f64)> = (0..3)
            .map(|a| {
                if a < self.data.x_dims {
                    let curv = t * t / (wx * wx) + 1.0 / (wv * wv);
                    (t * x[a] / (wx * wx) / curv, BOX_RADIUS / curv.sqrt())
                } else {
                    (0.0, BOX_RADIUS * wv)
                }
            })
            .collect();
        let h: Vec<f64> = axes.iter().map(|(_, r)| 2.0 * r / (n - 1) as f64).collect();
        let mut nodes = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let idx = [i, j, k];
                    nodes.push(std::array::from_fn(|a| axes[a].0 - axes[a].1 + idx[a] as f64 * h[a]));
                }
            }
        }
        (nodes, h.iter().product())
    }

    fn l1v_at(&self, t: f64, x: [f64; 3], triple: &MultiIndexTriple) -> f64 {
        let (nodes, vol) = self.v_box(t, x, self.v_points);
        nodes
            .iter()
            .map(|v| {
                let z = [x[0] - (t + 1.0) * v[0], x[1] - (t + 1.0) * v[1], x[2] - (t + 1.0) * v[2]];
                bracket(*v).powi(3) * bracket(z).powi(2) * self.data.derivative(triple, t, x, *v).abs()
            })
            .sum::<f64>()
            * vol
    }

    fn r_max(&self, t: f64) -> f64 {
        BOX_RADIUS * (self.data.x_width + t * self.data.v_width) / 2f64.sqrt()
    }

    fn isotropic(&self, triple: &MultiIndexTriple) -> bool {
        *triple == MultiIndexTriple::ZERO && self.data.x_dims == 3
    }
}

/// Grid scan followed by golden-section refinement around the best node.
fn scan_max(f: impl Fn(f64) -> f64, r_max: f64, n: usize) -> f64 {
    let h = r_max / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
    let (jbest, &vbest) = vals.iter().enumerate().fold((0, &vals[0]), |b, (j, v)| if *v > *b.1 { (j, v) } else { b });
    let (mut a, mut b) = ((jbest as f64 - 1.0).max(0.0) * h, (jbest as f64 + 1.0).min((n - 1) as f64) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = vbest;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..20 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

impl DecaySource for FreeGaussianSource {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn weighted_l1v(&self, k: usize, triple: &MultiIndexTriple) -> Result<f64, EstimateError> {
        let t = self.times[k];
        let mut best = 0.0f64;
        for ray in rays(self.data.x_dims, self.isotropic(triple)) {
            let f = |r: f64| self.l1v_at(t, ray.map(|c| c * r), triple);
            best = best.max(scan_max(f, self.r_max(t), self.x_points));
        }
        Ok(best)
    }

    fn coefficient_sup(&self, k: usize, triple: &MultiIndexTriple) -> Result<f64, EstimateError> {
        let t = self.times[k];
        let gamma = self.gamma;
        crate::collision_kernel::check_gamma(gamma)?;
        let s = 1.0 / 3f64.sqrt();
        let mut dirs = vec![[0.0; 3]];
        for d in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [s, s, s], [s, -s, s]] {
            for sign in [1.0, -1.0] {
                for r in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
                    dirs.push(d.map(|c| sign * r * c));
                }
            }
        }
        let n = (self.v_points * 3 / 4).max(8);
        let mut best = 0.0f64;
        for ray in rays(self.data.x_dims, self.isotropic(triple)) {
            for j in 0..self.x_points / 2 {
                let r = self.r_max(t) * j as f64 / (self.x_points / 2) as f64;
                let x = ray.map(|c| c * r);
                let (nodes, vol) = self.v_box(t, x, n);
                let fvals: Vec<f64> = nodes.iter().map(|v| self.data.derivative(triple, t, x, *v) * vol).collect();
                for v in &dirs {
                    let mut abar = [0.0f64; 6];
                    for (vs, fv) in nodes.iter().zip(&fvals) {
                        if *fv == 0.0 {
                            continue;
                        }
                        let m = kernel_matrix([v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]], gamma);
                        for e in 0..6 {
                            abar[e] += m.entries[e] * fv;
                        }
                    }
                    let w = bracket(*v).powf(-2.0 - gamma);
                    best = abar.iter().fold(best, |b, a| b.max(a.abs() * w));
                }
            }
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub eps: f64,
    pub order: u32,
    /// Snapshot times at which E_T is defined (enough snapshots in [0, T]).
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// E_T / ε^{3/4}.
    pub bootstrap_ratios: Vec<f64>,
    /// E_T / ε².
    pub quadratic_ratios: Vec<f64>,
    pub max_bootstrap_ratio: f64,
    /// 1 / max_bootstrap_ratio.
    pub margin: f64,
    pub passed: bool,
}

fn over(e: f64, scale: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else if scale > 0.0 {
        e / scale
    } else {
        f64::INFINITY
    }
}

/// E_T of the order-≤m part of the recorded norms at every snapshot time
/// from the first one where it is defined.
pub fn bootstrap_monitor(samples: &[SnapshotNorms], eps: f64, m: u32, delta: f64) -> Result<BootstrapReport, EstimateError> {
    let filtered: Vec<SnapshotNorms> = samples
        .iter()
        .map(|s| SnapshotNorms {
            time: s.time,
            entries: s.entries.iter().filter(|e| e.triple.order() <= m).copied().collect(),
        })
        .collect();
    let mut rep = BootstrapReport {
        eps,
        order: m,
        times: Vec::new(),
        energies: Vec::new(),
        bootstrap_ratios: Vec::new(),
        quadratic_ratios: Vec::new(),
        max_bootstrap_ratio: 0.0,
        margin: f64::INFINITY,
        passed: true,
    };
    for s in filtered.iter().skip(MIN_SNAPSHOTS - 1) {
        let e = energy_e(&filtered, s.time, delta)?;
        let b = over(e, eps.powf(0.75));
        rep.times.push(s.time);
        rep.energies.push(e);
        rep.bootstrap_ratios.push(b);
        rep.quadratic_ratios.push(over(e, eps * eps));
        rep.max_bootstrap_ratio = rep.max_bootstrap_ratio.max(b);
    }
    if rep.max_bootstrap_ratio > 0.0 {
        rep.margin = 1.0 / rep.max_bootstrap_ratio;
    }
    rep.passed = rep.max_bootstrap_ratio <= 1.0;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_gives_an_empty_audit() {
        let data = FreeGaussian { amplitude: 0.0, ..FreeGaussian::unit(3) };
        let src = FreeGaussianSource { v_points: 8, x_points: 4, ..FreeGaussianSource::new(data, 0.5, vec![0.0, 1.0]) };
        let audit = solution_decay_audit(&src, &[MultiIndexTriple::ZERO], &DecayThresholds::default()).unwrap();
        assert!(audit.rows.is_empty());
        assert_eq!(audit.skipped.len(), 2);
    }

    #[test]
    fn weighted_l1v_at_time_zero_matches_direct_quadrature() {
        // At t = 0 and x = 0 the integrand is ⟨v⟩⁵ e^{−|v|²}, radial: 4π∫r²(1+r²)^{5/2}e^{−r²}dr.
        let src = FreeGaussianSource::new(FreeGaussian::unit(3), 0.5, vec![0.0]);
        let got = src.l1v_at(0.0, [0.0; 3], &MultiIndexTriple::ZERO);
        let n = 20000;
        let h = 10.0 / n as f64;
        let want: f64 = (1..n)
            .map(|i| {
                let r = i as f64 * h;
                r * r * (1.0 + r * r).powf(2.5) * (-r * r).exp()
            })
            .sum::<f64>()
            * h
            * 4.0
            * std::f64::consts::PI;
        assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
    }

    #[test]
    fn scan_finds_an_interior_peak() {
        let m = scan_max(|r| -(r - 1.37).powi(2), 4.0, 9);
        assert!(m > -1e-8);
    }

    #[test]
    fn zero_energy_passes() {
        let rep = bootstrap_monitor(&[], 0.0, 2, 0.1).unwrap();
        assert!(rep.passed);
        assert!(rep.times.is_empty());
    }
}
