//! Empirical constants of the pointwise bounds on ā and its velocity
//! derivatives, measured as max LHS/RHS over grid nodes.

use serde::Serialize;

use super::convolve::{ConvolutionMethod, Convolver, PreparedKernel};
use super::{check_gamma, kernel_gradient, kernel_hessian, kernel_matrix, KernelError, SYM_PAIRS};
use crate::calculus::{apply_derivative, DerivativeOp, StencilOrder};
use crate::phase_grid::{bracket, DistributionField, MultiIndexTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// max_ij |∂ā_ij| ≤ ∫|v−v*|^{2+γ}|∂f|; an exact triangle inequality.
    Matrix,
    /// max_j |∂(ā_ij v_i/⟨v⟩)| against ∫|v−v*|^{1+γ}⟨v*⟩|∂f|.
    ContractedOnce,
    /// |∂(ā_ij v_iv_j/⟨v⟩²)| against ⟨v⟩^γ ∫⟨v*⟩⁴|∂f|.
    ContractedTwice,
    /// max_ijk |∂ ∂_{v_k} ā_ij| against ∫|v−v*|^{1+γ}|∂f|.
    FirstDerivative,
    /// max_jk |∂ ∂_{v_k}(ā_ij v_i/⟨v⟩)| against ⟨v⟩^γ ∫⟨v*⟩^{2+γ}|∂f|.
    FirstDerivativeContracted,
    /// max_ijkl |∂ ∂²_{v_kv_l} ā_ij| against ∫|v−v*|^γ|∂f|.
    SecondDerivative,
}

impl BoundKind {
    pub const ALL: [BoundKind; 6] = [
        Self::Matrix,
        Self::ContractedOnce,
        Self::ContractedTwice,
        Self::FirstDerivative,
        Self::FirstDerivativeContracted,
        Self::SecondDerivative,
    ];

    /// True when the constant is exactly 1 by the triangle inequality.
    pub fn is_exact(self) -> bool {
        matches!(self, Self::Matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub bound: BoundKind,
    pub triple: MultiIndexTriple,
    pub max_ratio: f64,
    /// Some node had a zero right side with a nonzero left side.
    pub inconsistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundAudit {
    pub gamma: f64,
    pub time: f64,
    pub v_points: usize,
    pub x_nodes: Vec<usize>,
    pub rows: Vec<BoundRow>,
}

impl BoundAudit {
    pub fn row(&self, bound: BoundKind, triple: MultiIndexTriple) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.bound == bound && r.triple == triple)
    }
}

struct AuditKernels {
    a: Vec<PreparedKernel>,
    da: Vec<PreparedKernel>,
    dda: Vec<PreparedKernel>,
    pow_2g: PreparedKernel,
    pow_1g: PreparedKernel,
    pow_g: PreparedKernel,
}

fn dda_pairs() -> Vec<(usize, usize, usize)> {
    let mut v = Vec::new();
    for k in 0..3 {
        for l in k..3 {
            for e in 0..6 {
                v.push((k, l, e));
            }
        }
    }
    v
}

impl AuditKernels {
    fn new(conv: &Convolver, gamma: f64) -> Self {
        let norm = |z: [f64; 3]| (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let a = (0..6).map(|e| conv.prepare(move |z| kernel_matrix(z, gamma).entries[e])).collect();
        let mut da = Vec::new();
        for k in 0..3 {
            for &(i, j) in SYM_PAIRS.iter() {
                da.push(conv.prepare(move |z| kernel_gradient(z, gamma)[k][i][j]));
            }
        }
        let dda = dda_pairs()
            .into_iter()
            .map(|(k, l, e)| {
                let (i, j) = SYM_PAIRS[e];
                conv.prepare(move |z| kernel_hessian(z, gamma)[k][l][i][j])
            })
            .collect();
        let pow = |p: f64| {
            conv.prepare(move |z| {
                let r = norm(z);
                if r == 0.0 {
                    if p == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    r.powf(p)
                }
            })
        };
        Self { a, da, dda, pow_2g: pow(2.0 + gamma), pow_1g: pow(1.0 + gamma), pow_g: pow(gamma) }
    }
}

fn ratio(lhs: f64, rhs: f64, inconsistent: &mut bool) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else {
        if lhs > 0.0 {
            *inconsistent = true;
        }
        0.0
    }
}

/// Runs every bound for every derivative triple at the chosen spatial nodes.
///
/// ∂f comes from the calculus module (second-order stencils); the
/// derivative then passes through the convolution onto the kernel.
pub fn coefficient_bound_audit(
    field: &DistributionField,
    triples: &[MultiIndexTriple],
    gamma: f64,
    t: f64,
    x_nodes: &[usize],
    method: ConvolutionMethod,
) -> Result<BoundAudit, KernelError> {
    check_gamma(gamma)?;
    let grid = field.grid().clone();
    let nv = grid.nv_total();
    let conv = Convolver::for_grid(&grid, method);
    let kernels = AuditKernels::new(&conv, gamma);
    let dv3 = grid.dv().powi(3);
    let vs: Vec<[f64; 3]> = (0..nv).map(|vi| grid.v_coords(vi)).collect();
    let vb: Vec<f64> = vs.iter().map(|&v| bracket(v)).collect();
    let dda_index = dda_pairs();

    let mut rows = Vec::new();
    for &triple in triples {
        let d = apply_derivative(field, &DerivativeOp::new(triple, t).with_stencil(StencilOrder::Second))?;
        let mut worst = [0.0f64; 6];
        let mut bad = [false; 6];
        for &xi in x_nodes {
            let s = d.v_slice(xi);
            let abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
            let weighted: Vec<f64> = abs.iter().zip(&vb).map(|(a, b)| a * b).collect();
            let s4: f64 = abs.iter().zip(&vb).map(|(a, b)| a * b.powi(4)).sum::<f64>() * dv3;
            let s2g: f64 = abs.iter().zip(&vb).map(|(a, b)| a * b.powf(2.0 + gamma)).sum::<f64>() * dv3;

            let mut lhs_kernels: Vec<&PreparedKernel> = kernels.a.iter().collect();
            lhs_kernels.extend(kernels.da.iter());
            lhs_kernels.extend(kernels.dda.iter());
            let lhs = conv.apply(s, &lhs_kernels)?;
            let (abar, rest) = lhs.split_at(6);
            let (dabar, ddabar) = rest.split_at(18);
            let rhs = conv.apply(&abs, &[&kernels.pow_2g, &kernels.pow_1g, &kernels.pow_g])?;
            let rhs_w = conv.apply(&weighted, &[&kernels.pow_1g])?;

            let entry = |e_arr: &[Vec<f64>], i: usize, j: usize, vi: usize| {
                e_arr[super::sym_index(i, j)][vi]
            };
            for vi in 0..nv {
                let v = vs[vi];
                let b = vb[vi];
                // Matrix bound
                let l0 = (0..6).fold(0.0f64, |m, e| m.max(abar[e][vi].abs()));
                worst[0] = worst[0].max(ratio(l0, rhs[0][vi], &mut bad[0]));
                // contracted once
                let mut l1: f64 = 0.0;
                for j in 0..3 {
                    let s: f64 = (0..3).map(|i| entry(abar, i, j, vi) * v[i]).sum();
                    l1 = l1.max(s.abs() / b);
                }
                worst[1] = worst[1].max(ratio(l1, rhs_w[0][vi], &mut bad[1]));
                // contracted twice
                let mut q = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        q += entry(abar, i, j, vi) * v[i] * v[j];
                    }
                }
                let l2 = q.abs() / (b * b);
                worst[2] = worst[2].max(ratio(l2, b.powf(gamma) * s4, &mut bad[2]));
                // first derivative
                let l3 = (0..18).fold(0.0f64, |m, e| m.max(dabar[e][vi].abs()));
                worst[3] = worst[3].max(ratio(l3, rhs[1][vi], &mut bad[3]));
                // first derivative of the contracted matrix
                let mut l4: f64 = 0.0;
                for k in 0..3 {
                    let dk = &dabar[6 * k..6 * k + 6];
                    for j in 0..3 {
                        let mut s = 0.0;
                        for i in 0..3 {
                            let dvi = if i == k { 1.0 / b } else { 0.0 } - v[i] * v[k] / (b * b * b);
                            s += entry(dk, i, j, vi) * v[i] / b + entry(abar, i, j, vi) * dvi;
                        }
                        l4 = l4.max(s.abs());
                    }
                }
                worst[4] = worst[4].max(ratio(l4, b.powf(gamma) * s2g, &mut bad[4]));
                // second derivative
                let l5 = (0..dda_index.len()).fold(0.0f64, |m, e| m.max(ddabar[e][vi].abs()));
                worst[5] = worst[5].max(ratio(l5, rhs[2][vi], &mut bad[5]));
            }
        }
        for (n, bound) in BoundKind::ALL.iter().enumerate() {
            rows.push(BoundRow { bound: *bound, triple, max_ratio: worst[n], inconsistent: bad[n] });
        }
    }
    Ok(BoundAudit { gamma, time: t, v_points: grid.nv(), x_nodes: x_nodes.to_vec(), rows })
}
