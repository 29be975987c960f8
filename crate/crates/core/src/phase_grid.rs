//! Phase-space grids, sampled fields, the two Japanese-bracket weights,
//! derivative multi-indices and trapezoidal quadrature.
//!
//! Layout of a field: the flat index is `x_idx * N_v^3 + (i * N_v + j) * N_v + k`,
//! where `x_idx` is itself row-major over the active spatial axes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative size below which a value counts as "outside the support".
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Smallest admissible point count per axis.
pub const MIN_POINTS: usize = 8;

/// Smallest admissible velocity half-width.
pub const MIN_V_EXTENT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("x_dims must be 1, 2 or 3, got {0}")]
    XDims(usize),
    #[error("{axis} point count {count} is below the minimum of {MIN_POINTS}")]
    TooFewPoints { axis: &'static str, count: usize },
    #[error("{axis} extent must be positive and finite, got {value}")]
    Extent { axis: &'static str, value: f64 },
    #[error("velocity extent {0} is below {MIN_V_EXTENT}; tails cannot be represented")]
    VelocityExtent(f64),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("profile width must be positive and finite, got {0}")]
    Width(f64),
    #[error("amplitude must be finite and non-negative, got {0}")]
    Amplitude(f64),
    #[error("weighted velocity tail ratio {ratio:.3e} exceeds {TAIL_TOLERANCE:e}")]
    Tail { ratio: f64 },
    #[error("multi-index {index} acts on spatial axis {axis}, which is inactive for x_dims = {x_dims}")]
    InactiveAxis { index: String, axis: usize, x_dims: usize },
    #[error("multi-index order {order} exceeds the configured maximum {max}")]
    Order { order: u32, max: u32 },
    #[error("time must be finite and non-negative, got {0}")]
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_dims: usize,
    /// Half-width L_x of every active spatial axis.
    pub x_extent: f64,
    pub x_points: usize,
    /// Half-width L_v of every velocity axis.
    pub v_extent: f64,
    pub v_points: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(1..=3).contains(&self.x_dims) {
            return Err(GridError::XDims(self.x_dims));
        }
        if self.x_points < MIN_POINTS {
            return Err(GridError::TooFewPoints { axis: "x", count: self.x_points });
        }
        if self.v_points < MIN_POINTS {
            return Err(GridError::TooFewPoints { axis: "v", count: self.v_points });
        }
        if !(self.x_extent.is_finite() && self.x_extent > 0.0) {
            return Err(GridError::Extent { axis: "x", value: self.x_extent });
        }
        if !(self.v_extent.is_finite() && self.v_extent > 0.0) {
            return Err(GridError::Extent { axis: "v", value: self.v_extent });
        }
        if self.v_extent < MIN_V_EXTENT {
            return Err(GridError::VelocityExtent(self.v_extent));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_extent / (self.x_points - 1) as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.v_extent / (self.v_points - 1) as f64
    }
}

/// Uniform axis symmetric about zero; the middle node is exactly 0 for odd counts.
pub fn uniform_axis(points: usize, half_width: f64) -> Vec<f64> {
    let h = 2.0 * half_width / (points - 1) as f64;
    let mid = (points - 1) as f64 / 2.0;
    (0..points).map(|i| (i as f64 - mid) * h).collect()
}

/// One-dimensional trapezoid weights on a uniform axis.
pub fn trapezoid_weights(points: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; points];
    if points > 0 {
        w[0] = 0.5 * h;
        w[points - 1] = 0.5 * h;
    }
    w
}

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    spec: GridSpec,
    dx: f64,
    dv: f64,
    x_axis: Vec<f64>,
    v_axis: Vec<f64>,
    wx: Vec<f64>,
    wv: Vec<f64>,
}

/// Validates `spec` and builds the node arrays.
pub fn build_grid(spec: &GridSpec) -> Result<Arc<PhaseGrid>, GridError> {
    PhaseGrid::new(spec).map(Arc::new)
}

impl PhaseGrid {
    pub fn new(spec: &GridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        let dx = spec.dx();
        let dv = spec.dv();
        Ok(Self {
            spec: *spec,
            dx,
            dv,
            x_axis: uniform_axis(spec.x_points, spec.x_extent),
            v_axis: uniform_axis(spec.v_points, spec.v_extent),
            wx: trapezoid_weights(spec.x_points, dx),
            wv: trapezoid_weights(spec.v_points, dv),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn x_dims(&self) -> usize {
        self.spec.x_dims
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn x_axis(&self) -> &[f64] {
        &self.x_axis
    }

    pub fn v_axis(&self) -> &[f64] {
        &self.v_axis
    }

    pub fn nx(&self) -> usize {
        self.spec.x_points
    }

    pub fn nv(&self) -> usize {
        self.spec.v_points
    }

    /// Number of spatial nodes (product over active axes).
    pub fn nx_total(&self) -> usize {
        self.spec.x_points.pow(self.spec.x_dims as u32)
    }

    /// Number of velocity nodes, always N_v^3.
    pub fn nv_total(&self) -> usize {
        self.spec.v_points.pow(3)
    }

    pub fn len(&self) -> usize {
        self.nx_total() * self.nv_total()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shape of the spatial block, with inactive axes of length 1.
    pub fn x_shape(&self) -> [usize; 3] {
        let mut s = [1; 3];
        for a in s.iter_mut().take(self.spec.x_dims) {
            *a = self.spec.x_points;
        }
        s
    }

    /// Full six-axis shape `[x0, x1, x2, v0, v1, v2]`.
    pub fn shape6(&self) -> [usize; 6] {
        let xs = self.x_shape();
        let n = self.nv();
        [xs[0], xs[1], xs[2], n, n, n]
    }

    pub fn x_multi_index(&self, xi: usize) -> [usize; 3] {
        let s = self.x_shape();
        [xi / (s[1] * s[2]), (xi / s[2]) % s[1], xi % s[2]]
    }

    pub fn v_multi_index(&self, vi: usize) -> [usize; 3] {
        let n = self.nv();
        [vi / (n * n), (vi / n) % n, vi % n]
    }

    pub fn v_flat(&self, idx: [usize; 3]) -> usize {
        let n = self.nv();
        (idx[0] * n + idx[1]) * n + idx[2]
    }

    /// Spatial coordinates of node `xi`; inactive components are 0.
    pub fn x_coords(&self, xi: usize) -> [f64; 3] {
        let m = self.x_multi_index(xi);
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.spec.x_dims) {
            *xa = self.x_axis[m[a]];
        }
        x
    }

    pub fn v_coords(&self, vi: usize) -> [f64; 3] {
        let m = self.v_multi_index(vi);
        [self.v_axis[m[0]], self.v_axis[m[1]], self.v_axis[m[2]]]
    }

    pub fn v_bracket(&self, vi: usize) -> f64 {
        bracket(self.v_coords(vi))
    }

    /// ⟨x − (t+1)v⟩ restricted to the active spatial axes.
    pub fn xv_bracket(&self, t: f64, xi: usize, vi: usize) -> f64 {
        let x = self.x_coords(xi);
        let v = self.v_coords(vi);
        let mut s = 0.0;
        for a in 0..self.spec.x_dims {
            let d = x[a] - (t + 1.0) * v[a];
            s += d * d;
        }
        (1.0 + s).sqrt()
    }

    /// ⟨v⟩ at every velocity node.
    pub fn v_bracket_table(&self) -> Vec<f64> {
        (0..self.nv_total()).map(|vi| self.v_bracket(vi)).collect()
    }

    /// Largest ⟨v⟩ on the grid (a corner node).
    pub fn v_bracket_max(&self) -> f64 {
        let l = self.spec.v_extent;
        (1.0 + 3.0 * l * l).sqrt()
    }

    pub fn x_weights(&self) -> &[f64] {
        &self.wx
    }

    pub fn v_weights(&self) -> &[f64] {
        &self.wv
    }

    /// Trapezoid weight of spatial node `xi`.
    pub fn x_weight(&self, xi: usize) -> f64 {
        let m = self.x_multi_index(xi);
        (0..self.spec.x_dims).map(|a| self.wx[m[a]]).product()
    }

    /// Trapezoid weight of velocity node `vi`.
    pub fn v_weight(&self, vi: usize) -> f64 {
        let m = self.v_multi_index(vi);
        self.wv[m[0]] * self.wv[m[1]] * self.wv[m[2]]
    }

    /// True if `vi` lies on the outermost velocity shell.
    pub fn on_v_boundary(&self, vi: usize) -> bool {
        let last = self.nv() - 1;
        self.v_multi_index(vi).iter().any(|&i| i == 0 || i == last)
    }
}

/// ⟨z⟩ = √(1+|z|²).
pub fn bracket(z: [f64; 3]) -> f64 {
    (1.0 + z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSample {
    pub v_bracket: f64,
    pub xv_bracket: f64,
}

/// The pair (⟨v⟩, ⟨x − (t+1)v⟩) with full three-dimensional x.
pub fn weight_at(t: f64, x: [f64; 3], v: [f64; 3]) -> WeightSample {
    let s = t + 1.0;
    WeightSample {
        v_bracket: bracket(v),
        xv_bracket: bracket([x[0] - s * v[0], x[1] - s * v[1], x[2] - s * v[2]]),
    }
}

#[derive(Debug, Clone)]
pub struct DistributionField {
    grid: Arc<PhaseGrid>,
    time: f64,
    values: Vec<f64>,
}

impl DistributionField {
    pub fn new(grid: Arc<PhaseGrid>, time: f64, values: Vec<f64>) -> Result<Self, GridError> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(GridError::Time(time));
        }
        if values.len() != grid.len() {
            return Err(GridError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, time, values })
    }

    pub fn zeros(grid: Arc<PhaseGrid>, time: f64) -> Self {
        let n = grid.len();
        Self { grid, time, values: vec![0.0; n] }
    }

    /// Samples `f(x, v)` at every node. Inactive x components are passed as 0.
    pub fn from_fn(
        grid: Arc<PhaseGrid>,
        time: f64,
        f: impl Fn([f64; 3], [f64; 3]) -> f64,
    ) -> Result<Self, GridError> {
        let nv = grid.nv_total();
        let vs: Vec<[f64; 3]> = (0..nv).map(|vi| grid.v_coords(vi)).collect();
        let mut values = Vec::with_capacity(grid.len());
        for xi in 0..grid.nx_total() {
            let x = grid.x_coords(xi);
            values.extend(vs.iter().map(|&v| f(x, v)));
        }
        Self::new(grid, time, values)
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(self.grid.clone(), self.time, values)
    }

    pub fn v_slice(&self, xi: usize) -> &[f64] {
        let nv = self.grid.nv_total();
        &self.values[xi * nv..(xi + 1) * nv]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// min f / max f, or 0 for a field without positive values.
    pub fn negativity_ratio(&self) -> f64 {
        let hi = self.max();
        if hi > 0.0 {
            self.min().min(0.0) / hi
        } else {
            0.0
        }
    }

    /// Largest |f| on the outer velocity shell relative to the global max.
    pub fn velocity_tail_ratio(&self) -> f64 {
        weighted_tail_ratio(&self.grid, &self.values, |_| 1.0)
    }

    pub fn check_velocity_tail(&self) -> Result<(), GridError> {
        let ratio = self.velocity_tail_ratio();
        if ratio > TAIL_TOLERANCE {
            Err(GridError::Tail { ratio })
        } else {
            Ok(())
        }
    }

    /// Largest |x_a| over active axes among nodes whose velocity slice exceeds
    /// `TAIL_TOLERANCE` times the global max. Zero for a zero field.
    pub fn support_radius(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let cut = TAIL_TOLERANCE * peak;
        let mut r: f64 = 0.0;
        for xi in 0..self.grid.nx_total() {
            if self.v_slice(xi).iter().any(|v| v.abs() > cut) {
                let x = self.grid.x_coords(xi);
                for xa in x.iter().take(self.grid.x_dims()) {
                    r = r.max(xa.abs());
                }
            }
        }
        r
    }

    /// Pointwise map keeping grid and time.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            time: self.time,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn weighted_tail_ratio(grid: &PhaseGrid, values: &[f64], weight: impl Fn(usize) -> f64) -> f64 {
    let nv = grid.nv_total();
    let w: Vec<f64> = (0..nv).map(weight).collect();
    let boundary: Vec<bool> = (0..nv).map(|vi| grid.on_v_boundary(vi)).collect();
    let mut all: f64 = 0.0;
    let mut shell: f64 = 0.0;
    for (n, v) in values.iter().enumerate() {
        let vi = n % nv;
        let a = v.abs() * w[vi];
        all = all.max(a);
        if boundary[vi] {
            shell = shell.max(a);
        }
    }
    if all == 0.0 {
        0.0
    } else {
        shell / all
    }
}

/// Derivative label (α, β, σ) for ∂_x^α ∂_v^β Y^σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct MultiIndexTriple {
    pub alpha: [u32; 3],
    pub beta: [u32; 3],
    pub sigma: [u32; 3],
}

impl MultiIndexTriple {
    pub const ZERO: Self = Self { alpha: [0; 3], beta: [0; 3], sigma: [0; 3] };

    pub fn new(alpha: [u32; 3], beta: [u32; 3], sigma: [u32; 3]) -> Self {
        Self { alpha, beta, sigma }
    }

    pub fn dx(axis: usize) -> Self {
        let mut m = Self::ZERO;
        m.alpha[axis] = 1;
        m
    }

    pub fn dv(axis: usize) -> Self {
        let mut m = Self::ZERO;
        m.beta[axis] = 1;
        m
    }

    pub fn y(axis: usize) -> Self {
        let mut m = Self::ZERO;
        m.sigma[axis] = 1;
        m
    }

    pub fn abs_alpha(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn abs_beta(&self) -> u32 {
        self.beta.iter().sum()
    }

    pub fn abs_sigma(&self) -> u32 {
        self.sigma.iter().sum()
    }

    pub fn order(&self) -> u32 {
        self.abs_alpha() + self.abs_beta() + self.abs_sigma()
    }

    /// Component-wise sum (composition of the two operators).
    pub fn compose(&self, other: &Self) -> Self {
        let add = |a: [u32; 3], b: [u32; 3]| [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        Self {
            alpha: add(self.alpha, other.alpha),
            beta: add(self.beta, other.beta),
            sigma: add(self.sigma, other.sigma),
        }
    }

    /// α must live on active axes; σ too unless `inactive_y` allows the
    /// velocity-only part of Y on the remaining axes.
    pub fn validate(&self, x_dims: usize, max_order: u32, inactive_y: bool) -> Result<(), GridError> {
        if self.order() > max_order {
            return Err(GridError::Order { order: self.order(), max: max_order });
        }
        for axis in x_dims..3 {
            if self.alpha[axis] > 0 || (!inactive_y && self.sigma[axis] > 0) {
                return Err(GridError::InactiveAxis { index: self.label(), axis, x_dims });
            }
        }
        Ok(())
    }

    /// All admissible triples up to `max_order`, sorted by order then lexicographically.
    pub fn enumerate(x_dims: usize, max_order: u32, inactive_y: bool) -> Vec<Self> {
        let y_axes = if inactive_y { 3 } else { x_dims };
        let mut out = Vec::new();
        let tuples = |axes: usize, max: u32| -> Vec<[u32; 3]> {
            let mut v = Vec::new();
            for a in 0..=max {
                for b in 0..=max {
                    for c in 0..=max {
                        let t = [a, b, c];
                        if a + b + c <= max && t.iter().skip(axes).all(|&q| q == 0) {
                            v.push(t);
                        }
                    }
                }
            }
            v
        };
        let al = tuples(x_dims, max_order);
        let be = tuples(3, max_order);
        let si = tuples(y_axes, max_order);
        for a in &al {
            for b in &be {
                for s in &si {
                    let m = Self::new(*a, *b, *s);
                    if m.order() <= max_order {
                        out.push(m);
                    }
                }
            }
        }
        out.sort_by_key(|m| (m.order(), *m));
        out
    }

    pub fn label(&self) -> String {
        format!(
            "a{}-b{}-s{}",
            dotted(self.alpha),
            dotted(self.beta),
            dotted(self.sigma)
        )
    }
}

pub(crate) fn dotted(t: [u32; 3]) -> String {
    format!("{}.{}.{}", t[0], t[1], t[2])
}

impl fmt::Display for MultiIndexTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Which axes a quadrature runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `values` holds one velocity slice (N_v^3 entries).
    Velocity,
    /// `values` holds one number per spatial node.
    Space,
    /// `values` holds a full field.
    Full,
}

/// Tensor-product trapezoid rule over the selected axes.
pub fn integrate(grid: &PhaseGrid, values: &[f64], domain: Domain) -> Result<f64, GridError> {
    let expected = match domain {
        Domain::Velocity => grid.nv_total(),
        Domain::Space => grid.nx_total(),
        Domain::Full => grid.len(),
    };
    if values.len() != expected {
        return Err(GridError::Length { expected, got: values.len() });
    }
    Ok(match domain {
        Domain::Velocity => integrate_v(grid, values),
        Domain::Space => integrate_x(grid, values),
        Domain::Full => {
            let nv = grid.nv_total();
            let per_x: Vec<f64> = values.chunks(nv).map(|s| integrate_v(grid, s)).collect();
            integrate_x(grid, &per_x)
        }
    })
}

/// Trapezoid rule over one velocity slice. Summation order is fixed.
pub fn integrate_v(grid: &PhaseGrid, slice: &[f64]) -> f64 {
    let n = grid.nv();
    let w = grid.v_weights();
    let mut total = 0.0;
    for i in 0..n {
        let mut si = 0.0;
        for j in 0..n {
            let row = &slice[(i * n + j) * n..(i * n + j + 1) * n];
            let sk: f64 = row.iter().zip(w).map(|(f, wk)| f * wk).sum();
            si += w[j] * sk;
        }
        total += w[i] * si;
    }
    total
}

/// Trapezoid rule over the active spatial axes of one value per x node.
pub fn integrate_x(grid: &PhaseGrid, per_x: &[f64]) -> f64 {
    per_x
        .iter()
        .enumerate()
        .map(|(xi, v)| grid.x_weight(xi) * v)
        .sum()
}

/// Gaussian initial datum ε·exp(−|x−x_c|²/w_x² − |v−v_c|²/w_v²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub x_center: [f64; 3],
    pub v_center: [f64; 3],
    pub x_width: f64,
    pub v_width: f64,
}

impl GaussianProfile {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(GridError::Amplitude(self.amplitude));
        }
        for w in [self.x_width, self.v_width] {
            if !(w.is_finite() && w > 0.0) {
                return Err(GridError::Width(w));
            }
        }
        Ok(())
    }

    /// Value at a phase-space point; only the first `x_dims` spatial axes count.
    pub fn value(&self, x_dims: usize, x: [f64; 3], v: [f64; 3]) -> f64 {
        let mut qx = 0.0;
        for a in 0..x_dims {
            let d = x[a] - self.x_center[a];
            qx += d * d;
        }
        let mut qv = 0.0;
        for a in 0..3 {
            let d = v[a] - self.v_center[a];
            qv += d * d;
        }
        self.amplitude * (-qx / (self.x_width * self.x_width) - qv / (self.v_width * self.v_width)).exp()
    }

    /// Spatial radius beyond which the profile drops below `TAIL_TOLERANCE` of its peak.
    pub fn x_radius(&self, x_dims: usize) -> f64 {
        let c = self.x_center.iter().take(x_dims).fold(0.0f64, |m, c| m.max(c.abs()));
        c + self.x_width * (1.0 / TAIL_TOLERANCE).ln().sqrt()
    }
}

/// Samples a Gaussian profile and checks the e^{2 d₀⟨v⟩}-weighted tail.
pub fn gaussian_data(
    grid: &Arc<PhaseGrid>,
    profile: &GaussianProfile,
    d0: f64,
) -> Result<DistributionField, GridError> {
    profile.validate()?;
    let x_dims = grid.x_dims();
    let field = DistributionField::from_fn(grid.clone(), 0.0, |x, v| profile.value(x_dims, x, v))?;
    if profile.amplitude > 0.0 {
        let ratio = weighted_tail_ratio(grid, field.values(), |vi| (2.0 * d0 * grid.v_bracket(vi)).exp());
        if ratio > TAIL_TOLERANCE {
            return Err(GridError::Tail { ratio });
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(x_dims: usize, nx: usize, lx: f64, nv: usize, lv: f64) -> GridSpec {
        GridSpec { x_dims, x_extent: lx, x_points: nx, v_extent: lv, v_points: nv }
    }

    #[test]
    fn nine_point_velocity_axis() {
        let g = PhaseGrid::new(&spec(1, 8, 3.5, 9, 4.0)).unwrap();
        assert_eq!(g.v_axis(), &[-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.x_axis()[0], -3.5);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(PhaseGrid::new(&spec(1, 8, 1.0, 7, 0.0)).is_err());
        assert!(matches!(
            PhaseGrid::new(&spec(1, 8, 1.0, 9, 3.0)),
            Err(GridError::VelocityExtent(_))
        ));
        assert!(matches!(PhaseGrid::new(&spec(4, 8, 1.0, 9, 4.0)), Err(GridError::XDims(4))));
        assert!(matches!(
            PhaseGrid::new(&spec(1, 8, -1.0, 9, 4.0)),
            Err(GridError::Extent { axis: "x", .. })
        ));
    }

    #[test]
    fn weight_examples() {
        let w = weight_at(0.0, [0.0; 3], [0.0; 3]);
        assert_eq!((w.v_bracket, w.xv_bracket), (1.0, 1.0));
        let w = weight_at(1.0, [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(w.v_bracket, 2f64.sqrt());
        assert_eq!(w.xv_bracket, 1.0);
        let w = weight_at(3.0, [4.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(w.xv_bracket, 1.0);
    }

    #[test]
    fn trapezoid_constant_and_gaussian() {
        let g = PhaseGrid::new(&spec(1, 8, 1.0, 17, 4.0)).unwrap();
        let ones = vec![1.0; g.nv_total()];
        assert!((integrate(&g, &ones, Domain::Velocity).unwrap() - 512.0).abs() < 1e-10);

        let g = PhaseGrid::new(&spec(1, 8, 1.0, 49, 6.0)).unwrap();
        let gauss: Vec<f64> = (0..g.nv_total())
            .map(|vi| {
                let v = g.v_coords(vi);
                (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
            })
            .collect();
        let exact = std::f64::consts::PI.powf(1.5);
        let got = integrate_v(&g, &gauss);
        assert!((got - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn odd_function_integrates_to_zero() {
        let g = PhaseGrid::new(&spec(1, 8, 1.0, 16, 4.0)).unwrap();
        let odd: Vec<f64> = (0..g.nv_total())
            .map(|vi| {
                let v = g.v_coords(vi);
                v[0] * (-(v[1] * v[1])).exp()
            })
            .collect();
        assert!(integrate_v(&g, &odd).abs() < 1e-12);
    }

    #[test]
    fn gaussian_profile_samples() {
        let g = build_grid(&spec(1, 9, 4.0, 17, 4.0)).unwrap();
        let p = GaussianProfile {
            amplitude: 1.0,
            x_center: [0.0; 3],
            v_center: [0.0; 3],
            x_width: 1.0,
            v_width: 1.0,
        };
        let f = gaussian_data(&g, &p, 0.25).unwrap();
        let xi = g.nx_total() / 2;
        let vi = g.nv_total() / 2;
        assert_eq!(f.values()[xi * g.nv_total() + vi], 1.0);
        assert!(f.min() >= 0.0);

        let zero = gaussian_data(&g, &GaussianProfile { amplitude: 0.0, ..p }, 1.0).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let wide = GaussianProfile { v_width: 2.0, ..p };
        assert!(matches!(gaussian_data(&g, &wide, 1.0), Err(GridError::Tail { .. })));
    }

    #[test]
    fn triple_enumeration_respects_inactive_axes() {
        let all = MultiIndexTriple::enumerate(1, 1, false);
        // zero, α on one axis, β on three axes, σ on one axis
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], MultiIndexTriple::ZERO);
        assert_eq!(MultiIndexTriple::enumerate(1, 2, false).len(), 21);
        assert_eq!(MultiIndexTriple::enumerate(3, 1, false).len(), 10);
        assert_eq!(MultiIndexTriple::enumerate(1, 1, true).len(), 8);
        assert!(MultiIndexTriple::dx(1).validate(1, 2, false).is_err());
        assert!(MultiIndexTriple::y(2).validate(1, 2, true).is_ok());
    }
}
