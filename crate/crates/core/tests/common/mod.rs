//! Oracles shared by the integration tests. Nothing here calls the
//! closed forms it is used to check.
#![allow(dead_code)]

use landau_vacuum::calculus::{apply_derivative, commutation_check, DerivativeOp, StencilOrder};
use landau_vacuum::collision_kernel::kernel_matrix;
use landau_vacuum::phase_grid::{build_grid, DistributionField, GridSpec, MultiIndexTriple};
use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Fourth-order central difference of `f` along `axis`.
fn d4(f: &dyn Fn([f64; 3]) -> f64, z: [f64; 3], axis: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut p = z;
        p[axis] += s * h;
        f(p)
    };
    (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
}

/// Σ_ij ∂_i ∂_j a_ij by nested finite differences of the matrix entries.
pub fn fd_contraction(z: [f64; 3], gamma: f64) -> f64 {
    let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
    let h = 1e-2 * r;
    let mut c = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let aij = move |p: [f64; 3]| kernel_matrix(p, gamma).get(i, j);
            let dj = move |p: [f64; 3]| d4(&aij, p, j, h);
            c += d4(&dj, z, i, h);
        }
    }
    c
}

/// Random probe with |z| ∈ [0.5, 3] and γ ∈ [0, 1).
pub fn probe(rng: &mut ChaCha8Rng) -> ([f64; 3], f64) {
    loop {
        let z: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        if (0.5..=3.0).contains(&r) {
            return (z, rng.random_range(0.0..1.0));
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KernelOracleReport {
    pub probes: usize,
    pub max_c_rel_error: f64,
    pub max_eigen_abs_error: f64,
}

/// The contraction against finite differences and the eigenvalues against
/// {0, |z|^{γ+2}, |z|^{γ+2}} from a general symmetric eigensolver.
pub fn kernel_oracles(probes: usize, seed: u64) -> KernelOracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_err = 0.0f64;
    let mut e_err = 0.0f64;
    for _ in 0..probes {
        let (z, gamma) = probe(&mut rng);
        let c = landau_vacuum::collision_kernel::kernel_c(z, gamma);
        c_err = c_err.max((fd_contraction(z, gamma) - c).abs() / c.abs());

        let a = kernel_matrix(z, gamma).to_array();
        let m = Matrix3::from_fn(|i, j| a[i][j]);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let top = r.powf(gamma + 2.0);
        for (got, want) in ev.iter().zip([0.0, top, top]) {
            e_err = e_err.max((got - want).abs());
        }
    }
    KernelOracleReport { probes, max_c_rel_error: c_err, max_eigen_abs_error: e_err }
}

#[derive(Debug, Serialize)]
pub struct AlgebraReport {
    /// max over pairs and fields of |[A, B]f| / scale.
    pub max_commutator: f64,
    /// max |Y φ(x − (t+1)v)| at three resolutions.
    pub y_residuals: Vec<f64>,
    pub y_orders: Vec<f64>,
}

fn smooth_field(spec: &GridSpec, t: f64, seed: u64) -> DistributionField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.3..1.2));
    let p: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.0..6.0));
    DistributionField::from_fn(build_grid(spec).unwrap(), t, move |x, v| {
        let c: [f64; 6] = [x[0], x[1], x[2], v[0], v[1], v[2]];
        let osc: f64 = (0..6).map(|i| (k[i] * c[i] + p[i]).sin()).product::<f64>() + 0.3 * (c[0] * c[3]).cos();
        osc * (-0.3 * (c.iter().map(|a| a * a).sum::<f64>())).exp()
    })
    .unwrap()
}

/// Commutators of ∂_x, ∂_v and Y on random smooth fields, and the
/// refinement order of Y applied to a profile of x − (t+1)v.
pub fn vector_field_algebra(seed: u64) -> AlgebraReport {
    let spec = GridSpec { x_dims: 1, x_extent: 5.0, x_points: 21, v_extent: 5.0, v_points: 15 };
    let ops = [MultiIndexTriple::dx(0), MultiIndexTriple::dv(0), MultiIndexTriple::dv(1), MultiIndexTriple::y(0)];
    let mut worst = 0.0f64;
    for (s, t) in [(0u64, 0.0), (1, 3.0), (2, 17.5)] {
        let f = smooth_field(&spec, t, seed + s);
        let (hx, hv) = (spec.dx(), spec.dv());
        let max_f = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for stencil in [StencilOrder::Second, StencilOrder::Fourth] {
            for (i, &a) in ops.iter().enumerate() {
                for &b in &ops[i + 1..] {
                    // Each operator scales like (t+1)/h at worst.
                    let scale = max_f * ((t + 1.0) / hx + 1.0 / hv).powi(2);
                    worst = worst.max(commutation_check(&f, a, b, t, stencil).unwrap() / scale);
                }
            }
        }
    }

    let t = 1.5;
    let mut residuals = Vec::new();
    for m in [1usize, 2, 4] {
        let spec = GridSpec { x_dims: 1, x_extent: 12.0, x_points: 48 * m + 1, v_extent: 4.0, v_points: 8 * m + 1 };
        let f = DistributionField::from_fn(build_grid(&spec).unwrap(), t, |x, v| {
            let s = x[0] - (t + 1.0) * v[0];
            (-s * s / 64.0).exp()
        })
        .unwrap();
        let y = apply_derivative(&f, &DerivativeOp::new(MultiIndexTriple::y(0), t).unchecked()).unwrap();
        // Interior only: the zero extension at the box edge is not part of the claim.
        let g = f.grid();
        let (nx, nv) = (g.nx(), g.nv());
        let mut r = 0.0f64;
        for xi in 0..g.nx_total() {
            let xm = g.x_multi_index(xi)[0];
            if xm < 2 || xm + 2 >= nx {
                continue;
            }
            for vi in 0..g.nv_total() {
                let vm = g.v_multi_index(vi)[0];
                if vm < 2 || vm + 2 >= nv {
                    continue;
                }
                r = r.max(y.values()[xi * g.nv_total() + vi].abs());
            }
        }
        residuals.push(r);
    }
    let orders = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    AlgebraReport { max_commutator: worst, y_residuals: residuals, y_orders: orders }
}
