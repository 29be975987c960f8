//! The Landau matrix a(z) = (I − zzᵀ/|z|²)|z|^{γ+2}, its contraction
//! c(z) = ∂²_{z_i z_j} a_ij(z), velocity convolutions against a sampled
//! distribution, and audits of the pointwise coefficient bounds.

mod audit;
mod convolve;

pub use audit::{coefficient_bound_audit, BoundAudit, BoundKind, BoundRow};
pub use convolve::{
    next_fast_len, ConvolutionMethod, Convolver, KernelCoefficients, KernelTable, PreparedKernel,
    DIRECT_MAX_POINTS,
};

use serde::Serialize;
use thiserror::Error;

/// Upper-triangle storage order of a symmetric 3×3 matrix.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("gamma must lie in [0, 1), got {0}")]
    Gamma(f64),
    #[error("velocity slice has {got} values, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] crate::phase_grid::GridError),
    #[error(transparent)]
    Calculus(#[from] crate::calculus::CalculusError),
}

pub fn check_gamma(gamma: f64) -> Result<(), KernelError> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(KernelError::Gamma(gamma))
    }
}

pub(crate) fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMatrix {
    /// Entries in `SYM_PAIRS` order.
    pub entries: [f64; 6],
    pub gamma: f64,
}

impl KernelMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[sym_index(i, j)]
    }

    pub fn to_array(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.get(i, j);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.entries[0] + self.entries[3] + self.entries[5]
    }

    pub fn apply(&self, z: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.get(i, j) * z[j]).sum();
        }
        out
    }
}

fn norm2(z: [f64; 3]) -> f64 {
    z[0] * z[0] + z[1] * z[1] + z[2] * z[2]
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// a_ij(z); the zero matrix at z = 0.
pub fn kernel_matrix(z: [f64; 3], gamma: f64) -> KernelMatrix {
    let r2 = norm2(z);
    let mut entries = [0.0; 6];
    if r2 > 0.0 {
        let rg = r2.powf(0.5 * gamma);
        for (e, &(i, j)) in entries.iter_mut().zip(SYM_PAIRS.iter()) {
            *e = (delta(i, j) * r2 - z[i] * z[j]) * rg;
        }
    }
    KernelMatrix { entries, gamma }
}

/// c(z) = −2(γ+3)|z|^γ.
///
/// At z = 0 we take the limit along rays: −6 for γ = 0, 0 for γ > 0.
pub fn kernel_c(z: [f64; 3], gamma: f64) -> f64 {
    let r2 = norm2(z);
    let rg = if r2 > 0.0 {
        r2.powf(0.5 * gamma)
    } else if gamma == 0.0 {
        1.0
    } else {
        0.0
    };
    -2.0 * (gamma + 3.0) * rg
}

/// ∂_k a_ij(z), indexed `[k][i][j]`; zero at z = 0.
pub fn kernel_gradient(z: [f64; 3], gamma: f64) -> [[[f64; 3]; 3]; 3] {
    let mut d = [[[0.0; 3]; 3]; 3];
    let r2 = norm2(z);
    if r2 == 0.0 {
        return d;
    }
    let p = gamma;
    let rp = r2.powf(0.5 * p);
    let rpm2 = rp / r2;
    for (k, dk) in d.iter_mut().enumerate() {
        for (i, row) in dk.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (p + 2.0) * delta(i, j) * z[k] * rp
                    - (delta(i, k) * z[j] + delta(j, k) * z[i]) * rp
                    - p * z[i] * z[j] * z[k] * rpm2;
            }
        }
    }
    d
}

/// ∂_k ∂_l a_ij(z), indexed `[k][l][i][j]`.
///
/// At z = 0 this is the constant 2δ_ijδ_kl − δ_ikδ_jl − δ_jkδ_il when γ = 0
/// (the kernel is then a quadratic polynomial) and 0 when γ > 0.
pub fn kernel_hessian(z: [f64; 3], gamma: f64) -> [[[[f64; 3]; 3]; 3]; 3] {
    let mut h = [[[[0.0; 3]; 3]; 3]; 3];
    let r2 = norm2(z);
    let p = gamma;
    if r2 == 0.0 && p > 0.0 {
        return h;
    }
    let (rp, rpm2, rpm4) = if r2 > 0.0 {
        let rp = r2.powf(0.5 * p);
        (rp, rp / r2, rp / (r2 * r2))
    } else {
        (1.0, 0.0, 0.0)
    };
    for (k, hk) in h.iter_mut().enumerate() {
        for (l, hkl) in hk.iter_mut().enumerate() {
            for (i, row) in hkl.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    let mut v = (p + 2.0) * delta(i, j) * (delta(k, l) * rp + p * z[k] * z[l] * rpm2);
                    v -= (delta(i, k) * delta(j, l) + delta(j, k) * delta(i, l)) * rp;
                    if p != 0.0 {
                        v -= p * (delta(i, k) * z[j] + delta(j, k) * z[i]) * z[l] * rpm2;
                        v -= p
                            * (delta(i, l) * z[j] * z[k]
                                + delta(j, l) * z[i] * z[k]
                                + delta(k, l) * z[i] * z[j])
                            * rpm2;
                        v -= p * (p - 2.0) * z[i] * z[j] * z[k] * z[l] * rpm4;
                    }
                    *e = v;
                }
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_examples() {
        let a = kernel_matrix([1.0, 0.0, 0.0], 0.0);
        assert_eq!(a.to_array(), [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let a = kernel_matrix([0.0, 0.0, 2.0], 1.0);
        assert_eq!(a.to_array(), [[8.0, 0.0, 0.0], [0.0, 8.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(kernel_matrix([0.0; 3], 0.5).entries, [0.0; 6]);
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(kernel_c([1.0, 0.0, 0.0], 0.0), -6.0);
        assert_eq!(kernel_c([0.0, 2.0, 0.0], 1.0), -16.0);
        assert_eq!(kernel_c([0.0; 3], 0.0), -6.0);
        assert_eq!(kernel_c([0.0; 3], 0.3), 0.0);
    }

    #[test]
    fn hessian_trace_is_contraction() {
        for &(z, g) in &[([0.3, -1.2, 0.7], 0.0), ([0.3, -1.2, 0.7], 0.6), ([2.0, 0.1, 0.0], 0.95)] {
            let h = kernel_hessian(z, g);
            let mut c = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    c += h[i][j][i][j];
                }
            }
            assert!((c - kernel_c(z, g)).abs() < 1e-12 * kernel_c(z, g).abs());
        }
    }

    #[test]
    fn gamma_range() {
        assert!(check_gamma(0.0).is_ok());
        assert!(check_gamma(0.99).is_ok());
        assert!(check_gamma(1.0).is_err());
        assert!(check_gamma(-0.1).is_err());
    }
}
