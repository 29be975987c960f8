use landau_vacuum::evolution::ExpWeightParams;
use landau_vacuum::norms_energy::{EnergySpec, HierarchyExponents};
use landau_vacuum::phase_grid::{build_grid, gaussian_data, integrate, weight_at, Domain, GaussianProfile, GridSpec};
use proptest::prelude::*;

fn v_integral(v_points: usize, f: impl Fn([f64; 3]) -> f64) -> f64 {
    let g = build_grid(&GridSpec { x_dims: 1, x_extent: 1.0, x_points: 8, v_extent: 4.0, v_points }).unwrap();
    let vals: Vec<f64> = (0..g.nv_total()).map(|vi| f(g.v_coords(vi))).collect();
    integrate(&g, &vals, Domain::Velocity).unwrap()
}

#[test]
fn trapezoid_is_second_order_on_a_non_periodic_integrand() {
    // ∫ e^{v₁/4} over [−4, 4]³ = 8² · 4(e − e^{−1}).
    let exact = 64.0 * 4.0 * (1f64.exp() - (-1f64).exp());
    let f = |v: [f64; 3]| (v[0] / 4.0).exp();
    let errs: Vec<f64> = [9, 17, 33].iter().map(|&n| (v_integral(n, f) - exact).abs()).collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.05, "{errs:?}");
    }
}

#[test]
fn gaussian_quadrature_error_falls_at_least_quadratically() {
    // Smooth and nearly zero at the edge, so the trapezoid rule beats second order here.
    let exact = std::f64::consts::PI.powf(1.5) * libm_erf_cubed();
    let f = |v: [f64; 3]| (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp();
    let (coarse, fine) = ((v_integral(9, f) - exact).abs(), (v_integral(17, f) - exact).abs());
    assert!(coarse / fine >= 4.0, "{coarse} {fine}");
}

/// erf(4)³, the truncation of ∫e^{−|v|²} to the box, by Simpson on [0, 4].
fn libm_erf_cubed() -> f64 {
    let n = 20_000;
    let h = 4.0 / n as f64;
    let s: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let x = k as f64 * h;
            w * (-x * x).exp()
        })
        .sum();
    (2.0 / std::f64::consts::PI.sqrt() * s * h / 3.0).powi(3)
}

#[test]
fn data_norm_is_linear_in_the_amplitude() {
    let grid = build_grid(&GridSpec { x_dims: 1, x_extent: 6.0, x_points: 25, v_extent: 5.0, v_points: 21 }).unwrap();
    let spec = EnergySpec::new(1, 0, HierarchyExponents::new(3.0), ExpWeightParams::default());
    let norm = |eps: f64| {
        let p = GaussianProfile { amplitude: eps, x_center: [0.0; 3], v_center: [0.0; 3], x_width: 1.0, v_width: 0.5 };
        let f = gaussian_data(&grid, &p, 1.0).unwrap();
        spec.evaluate_f(&f).unwrap().y_xv_sq().sqrt()
    };
    let (a, b) = (norm(1e-3), norm(2e-3));
    assert!((b / a - 2.0).abs() < 1e-12, "{a} {b}");
}

proptest! {
    #[test]
    fn xv_bracket_is_constant_along_characteristics(
        x0 in prop::array::uniform3(-50.0..50.0f64),
        v in prop::array::uniform3(-6.0..6.0f64),
        t in 0.0..1e3f64,
    ) {
        let xt = [x0[0] + t * v[0], x0[1] + t * v[1], x0[2] + t * v[2]];
        let (w0, wt) = (weight_at(0.0, x0, v).xv_bracket, weight_at(t, xt, v).xv_bracket);
        // Only the rounding of x₀ + tv separates the two.
        let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let room = 8.0 * f64::EPSILON * (1.0 + t * vn + x0.iter().map(|c| c.abs()).sum::<f64>());
        prop_assert!((wt - w0).abs() <= room);
        prop_assert!(w0 >= 1.0);
    }
}
