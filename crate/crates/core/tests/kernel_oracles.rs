mod common;

use landau_vacuum::collision_kernel::{kernel_matrix, ConvolutionMethod, KernelTable};
use landau_vacuum::phase_grid::{build_grid, GridSpec};
use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn contraction_matches_finite_differences() {
    let r = common::kernel_oracles(100, 7);
    assert!(r.max_c_rel_error <= 1e-6, "{r:?}");
}

#[test]
fn eigenvalues_match_an_independent_solver() {
    let r = common::kernel_oracles(100, 8);
    assert!(r.max_eigen_abs_error <= 1e-12, "{r:?}");
}

#[test]
fn direct_and_fft_convolutions_agree() {
    let spec = GridSpec { x_dims: 1, x_extent: 2.0, x_points: 8, v_extent: 4.0, v_points: 16 };
    let grid = build_grid(&spec).unwrap();
    let slice: Vec<f64> = (0..grid.nv_total())
        .map(|vi| {
            let v = grid.v_coords(vi);
            (-(v[0] - 0.4).powi(2) - 0.7 * v[1] * v[1] - 0.5 * (v[2] + 0.2).powi(2)).exp()
        })
        .collect();
    for gamma in [0.0, 0.5, 0.9] {
        let direct = KernelTable::new(&grid, gamma, ConvolutionMethod::Direct).unwrap().convolve(&slice, 0.0).unwrap();
        let fft = KernelTable::new(&grid, gamma, ConvolutionMethod::Fft).unwrap().convolve(&slice, 0.0).unwrap();
        let scale = direct.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for (d, f) in direct.a.iter().chain([&direct.c]).zip(fft.a.iter().chain([&fft.c])) {
            for (x, y) in d.iter().zip(f) {
                worst = worst.max((x - y).abs() / scale);
            }
        }
        assert!(worst <= 1e-10, "gamma {gamma}: {worst}");
    }
}

#[test]
fn vector_fields_commute_and_y_kills_transported_profiles() {
    let r = common::vector_field_algebra(3);
    assert!(r.max_commutator <= 1e-12, "{r:?}");
    assert!(r.y_orders.iter().all(|&p| p >= 1.9), "{r:?}");
}

#[test]
fn gaussian_coefficient_matches_brute_force_sums() {
    let spec = GridSpec { x_dims: 1, x_extent: 2.0, x_points: 8, v_extent: 4.0, v_points: 25 };
    let grid = build_grid(&spec).unwrap();
    let nv = grid.nv_total();
    let slice: Vec<f64> = (0..nv)
        .map(|vi| {
            let v = grid.v_coords(vi);
            (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
        })
        .collect();
    let coeffs = KernelTable::new(&grid, 0.0, ConvolutionMethod::Auto).unwrap().convolve(&slice, 0.0).unwrap();
    let dv3 = grid.dv().powi(3);
    // v = (3, 0, 0) is node 21 of 25 on each axis (Δv = 1/3).
    for idx in [[21, 12, 12], [12, 12, 12], [3, 12, 20], [16, 9, 12], [0, 24, 12]] {
        let vi = grid.v_flat(idx);
        let v = grid.v_coords(vi);
        let mut want = 0.0;
        for (wi, f) in slice.iter().enumerate() {
            let w = grid.v_coords(wi);
            want += kernel_matrix([v[0] - w[0], v[1] - w[1], v[2] - w[2]], 0.0).get(0, 0) * f * dv3;
        }
        let got = coeffs.matrix(vi)[0][0];
        assert!((got - want).abs() <= 1e-10 * want.abs(), "{idx:?}: {got} vs {want}");
    }
}

#[test]
fn nonnegative_data_gives_psd_matrices_and_nonpositive_contraction() {
    let spec = GridSpec { x_dims: 1, x_extent: 2.0, x_points: 8, v_extent: 4.0, v_points: 16 };
    let grid = build_grid(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for gamma in [0.0, 0.3, 0.8] {
        let slice: Vec<f64> = (0..grid.nv_total()).map(|_| rng.random_range(0.0..1.0)).collect();
        let c = KernelTable::new(&grid, gamma, ConvolutionMethod::Fft).unwrap().convolve(&slice, 0.0).unwrap();
        let c_max = c.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for vi in 0..grid.nv_total() {
            let m = c.matrix(vi);
            let ev = SymmetricEigen::new(Matrix3::from_fn(|i, j| m[i][j])).eigenvalues;
            assert!(ev.min() >= -1e-10 * c.trace(vi), "gamma {gamma} node {vi}: {ev:?}");
            assert!(c.c[vi] <= 1e-12 * c_max);
        }
    }
}

#[test]
fn null_direction_over_a_million_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1_000_000 {
        let z: [f64; 3] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
        let gamma = rng.random_range(0.0..1.0);
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let az = kernel_matrix(z, gamma).apply(z);
        worst = worst.max(az.iter().fold(0.0f64, |m, c| m.max(c.abs())) / r.powf(gamma + 3.0));
    }
    assert!(worst <= 1e-14, "{worst}");
}
