//! Central-difference realizations of ∂_x, ∂_v and Y = (t+1)∂_x + ∂_v.
//!
//! Arrays are viewed with the six-axis shape `[x0, x1, x2, v0, v1, v2]`
//! (inactive spatial axes have length 1) and zero-extended past the edges.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase_grid::{DistributionField, GridError, MultiIndexTriple, TAIL_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("stencil on axis {axis} reaches boundary values at {ratio:.3e} of the field maximum")]
    StencilOverrun { axis: usize, ratio: f64 },
    #[error("time must be finite and non-negative, got {0}")]
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn half_width(self) -> usize {
        match self {
            Self::Second => 1,
            Self::Fourth => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOp {
    pub triple: MultiIndexTriple,
    pub stencil: StencilOrder,
    /// Evaluation time; Y depends on it.
    pub t: f64,
    /// Let Y components on inactive spatial axes act through their ∂_v part.
    pub inactive_y: bool,
    /// Refuse fields whose boundary band is not negligible.
    pub checked: bool,
}

impl DerivativeOp {
    pub fn new(triple: MultiIndexTriple, t: f64) -> Self {
        Self { triple, stencil: StencilOrder::Second, t, inactive_y: false, checked: true }
    }

    pub fn with_stencil(mut self, stencil: StencilOrder) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn unchecked(mut self) -> Self {
        self.checked = false;
        self
    }

    pub fn with_inactive_y(mut self, on: bool) -> Self {
        self.inactive_y = on;
        self
    }
}

fn strides(shape: &[usize; 6], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// First derivative along one axis by a central stencil, zero-extended.
pub fn diff_axis(values: &[f64], shape: [usize; 6], axis: usize, h: f64, order: StencilOrder) -> Vec<f64> {
    let (outer, n, inner) = strides(&shape, axis);
    let mut out = vec![0.0; values.len()];
    let at = |o: usize, c: isize, r: usize| -> f64 {
        if c < 0 || c >= n as isize {
            0.0
        } else {
            values[(o * n + c as usize) * inner + r]
        }
    };
    for o in 0..outer {
        for c in 0..n {
            let ci = c as isize;
            let row = (o * n + c) * inner;
            for r in 0..inner {
                out[row + r] = match order {
                    StencilOrder::Second => (at(o, ci + 1, r) - at(o, ci - 1, r)) / (2.0 * h),
                    StencilOrder::Fourth => {
                        (-at(o, ci + 2, r) + 8.0 * at(o, ci + 1, r) - 8.0 * at(o, ci - 1, r)
                            + at(o, ci - 2, r))
                            / (12.0 * h)
                    }
                };
            }
        }
    }
    out
}

/// Three-point second difference along one axis, zero-extended.
pub fn second_diff_axis(values: &[f64], shape: [usize; 6], axis: usize, h: f64) -> Vec<f64> {
    let (outer, n, inner) = strides(&shape, axis);
    let mut out = vec![0.0; values.len()];
    let h2 = h * h;
    for o in 0..outer {
        for c in 0..n {
            let row = (o * n + c) * inner;
            for r in 0..inner {
                let mid = values[row + r];
                let lo = if c > 0 { values[row + r - inner] } else { 0.0 };
                let hi = if c + 1 < n { values[row + r + inner] } else { 0.0 };
                out[row + r] = (hi - 2.0 * mid + lo) / h2;
            }
        }
    }
    out
}

/// Fraction of the field's energy carried by the grid-scale mode along `axis`,
/// estimated from the normalized second difference. 1 for the alternating mode.
pub fn grid_roughness(values: &[f64], shape: [usize; 6], axis: usize) -> f64 {
    let (outer, n, inner) = strides(&shape, axis);
    if n < 3 {
        return 0.0;
    }
    let mut hi = 0.0;
    let mut all = 0.0;
    for o in 0..outer {
        for c in 1..n - 1 {
            let row = (o * n + c) * inner;
            for r in 0..inner {
                let d = values[row + r + inner] - 2.0 * values[row + r] + values[row + r - inner];
                hi += d * d / 16.0;
                all += values[row + r] * values[row + r];
            }
        }
    }
    if all == 0.0 {
        0.0
    } else {
        hi / all
    }
}

/// Largest |value| within `width` layers of either end of `axis`, relative to the global max.
pub fn boundary_ratio(values: &[f64], shape: [usize; 6], axis: usize, width: usize) -> f64 {
    let (outer, n, inner) = strides(&shape, axis);
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || n == 1 {
        return 0.0;
    }
    let w = width.min(n);
    let mut band: f64 = 0.0;
    for o in 0..outer {
        for c in (0..w).chain(n - w..n) {
            let row = (o * n + c) * inner;
            for r in 0..inner {
                band = band.max(values[row + r].abs());
            }
        }
    }
    band / peak
}

/// Axes (in the six-axis view) that an operator differentiates.
fn touched_axes(op: &DerivativeOp, x_dims: usize) -> Vec<usize> {
    let mut axes = Vec::new();
    for a in 0..3 {
        if op.triple.alpha[a] > 0 || (op.triple.sigma[a] > 0 && a < x_dims) {
            axes.push(a);
        }
        if op.triple.beta[a] > 0 || op.triple.sigma[a] > 0 {
            axes.push(3 + a);
        }
    }
    axes
}

/// Grid-scale energy fraction along every axis the operator differentiates.
pub fn operator_roughness(field: &DistributionField, op: &DerivativeOp) -> f64 {
    let shape = field.grid().shape6();
    touched_axes(op, field.grid().x_dims())
        .into_iter()
        .map(|a| grid_roughness(field.values(), shape, a))
        .fold(0.0, f64::max)
}

/// ∂_x^α ∂_v^β Y^σ applied by composing one-dimensional central differences.
pub fn apply_derivative(field: &DistributionField, op: &DerivativeOp) -> Result<DistributionField, CalculusError> {
    if !(op.t.is_finite() && op.t >= 0.0) {
        return Err(CalculusError::Time(op.t));
    }
    let grid = field.grid().clone();
    let x_dims = grid.x_dims();
    op.triple.validate(x_dims, u32::MAX, op.inactive_y)?;
    let shape = grid.shape6();
    if op.checked {
        // Zero extension errs in proportion to the outermost layers only,
        // however many stencils are composed.
        for axis in touched_axes(op, x_dims) {
            let ratio = boundary_ratio(field.values(), shape, axis, op.stencil.half_width());
            if ratio > TAIL_TOLERANCE {
                return Err(CalculusError::StencilOverrun { axis, ratio });
            }
        }
    }
    let (hx, hv) = (grid.dx(), grid.dv());
    let mut cur = field.values().to_vec();
    for a in 0..3 {
        for _ in 0..op.triple.alpha[a] {
            cur = diff_axis(&cur, shape, a, hx, op.stencil);
        }
        for _ in 0..op.triple.beta[a] {
            cur = diff_axis(&cur, shape, 3 + a, hv, op.stencil);
        }
        for _ in 0..op.triple.sigma[a] {
            let dv = diff_axis(&cur, shape, 3 + a, hv, op.stencil);
            cur = if a < x_dims {
                let dx = diff_axis(&cur, shape, a, hx, op.stencil);
                dx.iter().zip(&dv).map(|(x, v)| (op.t + 1.0) * x + v).collect()
            } else {
                dv
            };
        }
    }
    Ok(field.with_values(cur)?)
}

/// max |A(B f) − B(A f)| with both operators applied unchecked at time `t`.
pub fn commutation_check(
    field: &DistributionField,
    a: MultiIndexTriple,
    b: MultiIndexTriple,
    t: f64,
    stencil: StencilOrder,
) -> Result<f64, CalculusError> {
    let op = |m| DerivativeOp::new(m, t).with_stencil(stencil).unchecked();
    let ab = apply_derivative(&apply_derivative(field, &op(b))?, &op(a))?;
    let ba = apply_derivative(&apply_derivative(field, &op(a))?, &op(b))?;
    Ok(ab
        .values()
        .iter()
        .zip(ba.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_grid::{build_grid, GridSpec};

    fn grid(nx: usize, nv: usize) -> std::sync::Arc<crate::phase_grid::PhaseGrid> {
        build_grid(&GridSpec { x_dims: 1, x_extent: 4.0, x_points: nx, v_extent: 4.0, v_points: nv }).unwrap()
    }

    #[test]
    fn affine_field_differentiates_exactly_inside() {
        let g = grid(9, 9);
        let f = DistributionField::from_fn(g.clone(), 0.0, |_, v| v[0]).unwrap();
        let d = apply_derivative(&f, &DerivativeOp::new(MultiIndexTriple::dv(0), 0.0).unchecked()).unwrap();
        for xi in 0..g.nx_total() {
            for vi in 0..g.nv_total() {
                let m = g.v_multi_index(vi);
                if m[0] > 0 && m[0] < 8 {
                    assert_eq!(d.values()[xi * g.nv_total() + vi], 1.0);
                }
            }
        }
    }

    #[test]
    fn checked_operator_rejects_large_boundary_values() {
        let g = grid(9, 9);
        let f = DistributionField::from_fn(g, 0.0, |_, v| v[0]).unwrap();
        let err = apply_derivative(&f, &DerivativeOp::new(MultiIndexTriple::dv(0), 0.0));
        assert!(matches!(err, Err(CalculusError::StencilOverrun { axis: 3, .. })));
    }

    #[test]
    fn alternating_mode_is_maximally_rough() {
        let v: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = grid_roughness(&v, [64, 1, 1, 1, 1, 1], 0);
        assert!((r - 1.0).abs() < 1e-12);
        let smooth: Vec<f64> = (0..64).map(|i| (-((i as f64 - 32.0) / 8.0).powi(2)).exp()).collect();
        assert!(grid_roughness(&smooth, [64, 1, 1, 1, 1, 1], 0) < 1e-3);
    }

    #[test]
    fn inactive_axis_rejected() {
        let g = grid(9, 9);
        let f = DistributionField::zeros(g, 0.0);
        assert!(apply_derivative(&f, &DerivativeOp::new(MultiIndexTriple::dx(1), 0.0)).is_err());
        assert!(apply_derivative(&f, &DerivativeOp::new(MultiIndexTriple::y(2), 0.0)).is_err());
        assert!(apply_derivative(&f, &DerivativeOp::new(MultiIndexTriple::y(2), 0.0).with_inactive_y(true)).is_ok());
    }
}
