use std::sync::Arc;

use landau_vacuum::collision_kernel::ConvolutionMethod;
use landau_vacuum::evolution::{
    free_transport_field, g_inverse, g_transform, strang_run, transport_step, ExpWeightParams, NoObserver,
    SnapshotSchedule, StepConfig,
};
use landau_vacuum::norms_energy::weighted_l2;
use landau_vacuum::phase_grid::{build_grid, DistributionField, GaussianProfile, GridSpec, PhaseGrid};

fn grid(x_extent: f64, x_points: usize, v_points: usize) -> Arc<PhaseGrid> {
    build_grid(&GridSpec { x_dims: 1, x_extent, x_points, v_extent: 4.0, v_points }).unwrap()
}

fn data(x: [f64; 3], v: [f64; 3]) -> f64 {
    (-(x[0] * x[0]) / 4.0 - (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
}

fn max_diff(a: &DistributionField, b: &DistributionField) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn l2(f: &DistributionField) -> f64 {
    weighted_l2(f, f.time(), 0.0, 0.0, 0.0)
}

#[test]
fn interpolated_transport_error_is_fourth_order_in_dx() {
    // Δt = 0.3Δx keeps the fractional shifts 0.3v the same on every grid.
    let errs: Vec<f64> = [81usize, 161, 321]
        .iter()
        .map(|&nx| {
            let g = grid(20.0, nx, 9);
            let dt = 0.3 * g.dx();
            let f0 = free_transport_field(&g, &data, 0.0).unwrap();
            max_diff(&transport_step(&f0, dt).unwrap(), &free_transport_field(&g, &data, dt).unwrap())
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 3.5, "{errs:?}");
    }
}

#[test]
fn transport_nearly_conserves_the_l2_norm() {
    let g = grid(20.0, 161, 9);
    let mut f = free_transport_field(&g, &data, 0.0).unwrap();
    let n0 = l2(&f);
    for _ in 0..10 {
        f = transport_step(&f, 0.1).unwrap();
    }
    // One unit of time in ten fractional steps.
    assert!((l2(&f) / n0 - 1.0).abs() <= 1e-4, "{}", l2(&f) / n0);
}

#[test]
fn collisionless_run_is_free_transport() {
    // Δx = Δv/2 and Δt = 1: every half-step shift is a whole number of cells.
    let g = grid(24.0, 193, 9);
    let f0 = free_transport_field(&g, &data, 0.0).unwrap();
    let cfg = StepConfig { dt: 1.0, t_final: 4.0, collisions: false, ..Default::default() };
    let run = strang_run(&f0, &cfg, 0.5, &ExpWeightParams::default(), &SnapshotSchedule::default(), &mut NoObserver)
        .unwrap();
    let exact = free_transport_field(&g, &data, 4.0).unwrap();
    assert!(max_diff(&run.final_field, &exact) <= 1e-13);
}

#[test]
fn g_transform_round_trips() {
    let g = grid(6.0, 25, 17);
    let mut f = free_transport_field(&g, &data, 0.0).unwrap();
    f.set_time(3.0);
    let w = ExpWeightParams::new(0.5, 0.1).unwrap();
    let back = g_inverse(&g_transform(&f, &w).unwrap(), &w).unwrap();
    let worst = f
        .values()
        .iter()
        .zip(back.values())
        .filter(|(a, _)| **a != 0.0)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / a.abs()));
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn small_data_weighted_norm_stays_bounded() {
    // The near-vacuum scenario's resolution: Δv = 1/3 and Δx = Δv/2. L_x leaves
    // room for the support to travel L_v·T.
    let g = build_grid(&GridSpec { x_dims: 1, x_extent: 14.0, x_points: 169, v_extent: 4.0, v_points: 25 }).unwrap();
    // About the amplitude the ε = 1e-3 scenario ends up with after normalization.
    let p = GaussianProfile { amplitude: 1e-5, x_center: [0.0; 3], v_center: [0.0; 3], x_width: 1.0, v_width: 1.0 };
    let w = ExpWeightParams::new(0.25, 0.1).unwrap();
    let f0 = landau_vacuum::phase_grid::gaussian_data(&g, &p, w.d0).unwrap();
    let cfg = StepConfig { dt: 1.0, t_final: 2.0, convolution: ConvolutionMethod::Fft, ..Default::default() };
    let schedule = SnapshotSchedule { every_steps: 1, keep_fields: true };
    let run = strang_run(&f0, &cfg, 0.5, &w, &schedule, &mut NoObserver).unwrap();
    let norm = |f: &DistributionField| weighted_l2(&g_transform(f, &w).unwrap(), f.time(), 3.0, 3.0, 0.0);
    let n0 = norm(&f0);
    let worst = run.snapshots.iter().map(|f| norm(f) / n0).fold(0.0f64, f64::max);
    assert!(worst <= 2.0, "{worst}");
    assert!(run.min_negativity_ratio >= -1e-8, "{}", run.min_negativity_ratio);
}
