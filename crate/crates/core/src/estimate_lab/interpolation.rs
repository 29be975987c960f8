//! Ratio sweeps for the L¹_v interpolation lemma and its L²_x, Sobolev and
//! L^∞_x companions, with one spatial dimension along e₀ and 3D velocity.
//!
//! Quadrature runs in coordinates s with v = c(x) + κ s. Fixed families use
//! s = v. Critical-ray families use s = (t+1)v − x e₀, so the box follows the
//! ray and shrinks like 1/(t+1) in v; ∂_x at fixed v becomes ∂_x − ∂_{s₀}.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InequalityId, InequalityReport};
use crate::calculus::{diff_axis, StencilOrder};

/// sup ‖h‖_{L¹_v}/((1+t)^{−3/2}‖⟨x−(t+1)v⟩²h‖_{L²_v}) = (∫⟨z⟩^{−4}dz)^{1/2} = π.
pub const L1V_SHARP_CONSTANT: f64 = std::f64::consts::PI;

/// Points below this fraction of the peak L¹_v are left out of pointwise ratios.
const SIGNIFICANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    /// Centered at a fixed velocity.
    Fixed,
    /// Centered on (t+1)v − x = offset, width shrinking like 1/(t+1) in v.
    CriticalRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub x_center: f64,
    pub x_width: f64,
    pub anchor: Anchor,
    pub offset: [f64; 3],
    pub widths: [f64; 3],
}

impl Bump {
    pub fn value(&self, t: f64, x: f64, v: [f64; 3]) -> f64 {
        let dx = (x - self.x_center) / self.x_width;
        let mut e = -dx * dx;
        for i in 0..3 {
            let q = self.xi(i, t, x, v[i]) / self.widths[i];
            e -= q * q;
        }
        self.amplitude * e.exp()
    }

    fn xi(&self, axis: usize, t: f64, x: f64, v: f64) -> f64 {
        match self.anchor {
            Anchor::Fixed => v - self.offset[axis],
            Anchor::CriticalRay => {
                let xa = if axis == 0 { x } else { 0.0 };
                (t + 1.0) * v - xa - self.offset[axis]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Zero,
    Isotropic,
    Anisotropic,
    Drifting,
    Mixture,
}

/// Members are functions h(t, x, v); each is a sum of bumps sharing one anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub seed: Option<u64>,
    members: Vec<Vec<Bump>>,
}

fn centered(anchor: Anchor, widths: [f64; 3], offset: [f64; 3]) -> Bump {
    Bump { amplitude: 1.0, x_center: 0.0, x_width: 1.0, anchor, offset, widths }
}

impl TestFamily {
    pub fn zero() -> Self {
        Self { kind: FamilyKind::Zero, seed: None, members: vec![vec![]] }
    }

    pub fn isotropic() -> Self {
        let members = [0.7, 1.0, 1.4].iter().map(|&w| vec![centered(Anchor::Fixed, [w; 3], [0.0; 3])]).collect();
        Self { kind: FamilyKind::Isotropic, seed: None, members }
    }

    pub fn anisotropic() -> Self {
        let members = vec![
            vec![centered(Anchor::Fixed, [0.7, 1.0, 1.4], [0.5, -0.3, 0.0])],
            vec![centered(Anchor::Fixed, [1.4, 0.7, 1.0], [-0.4, 0.0, 0.3])],
        ];
        Self { kind: FamilyKind::Anisotropic, seed: None, members }
    }

    /// e^{−|(t+1)v − x|²/w²}: concentrated on the critical ray v = x/(t+1).
    pub fn drifting() -> Self {
        let members =
            [0.7, 1.0, 1.4].iter().map(|&w| vec![centered(Anchor::CriticalRay, [w; 3], [0.0; 3])]).collect();
        Self { kind: FamilyKind::Drifting, seed: None, members }
    }

    /// Five critical-ray bumps with seeded signs, centers and widths.
    pub fn mixture(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..5)
            .map(|_| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Bump {
                    amplitude: sign * rng.random_range(0.3..1.0),
                    x_center: rng.random_range(-1.5..1.5),
                    x_width: rng.random_range(0.7..1.3),
                    anchor: Anchor::CriticalRay,
                    offset: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
                    widths: std::array::from_fn(|_| rng.random_range(0.7..1.3)),
                }
            })
            .collect();
        Self { kind: FamilyKind::Mixture, seed: Some(seed), members: vec![bumps] }
    }

    /// A family with one member made of the given bumps.
    pub fn single(kind: FamilyKind, bumps: Vec<Bump>) -> Self {
        assert!(bumps.windows(2).all(|w| w[0].anchor == w[1].anchor), "bumps must share an anchor");
        Self { kind, seed: None, members: vec![bumps] }
    }

    pub fn members(&self) -> &[Vec<Bump>] {
        &self.members
    }

    pub fn name(&self) -> String {
        let base = match self.kind {
            FamilyKind::Zero => "zero",
            FamilyKind::Isotropic => "isotropic",
            FamilyKind::Anisotropic => "anisotropic",
            FamilyKind::Drifting => "drifting",
            FamilyKind::Mixture => "mixture",
        };
        match self.seed {
            Some(s) => format!("{base}-{s}"),
            None => base.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Grid points per narrowest Gaussian width.
    pub cells_per_width: f64,
    /// Box half-size in widths.
    pub radius: f64,
    /// Factor on cells_per_width for the refinement pass.
    pub refinement: Option<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { cells_per_width: 2.5, radius: 6.0, refinement: Some(1.5) }
    }
}

/// v-integrals per x and x-integrals of the Sobolev pieces for one function.
#[derive(Debug, Clone, Default)]
struct Moments {
    hx: f64,
    l1: Vec<f64>,
    l2: Vec<f64>,
    l2w: Vec<f64>,
    sob: [f64; 3],
    wsob: [f64; 3],
}

impl Moments {
    fn zeros(nx: usize, hx: f64) -> Self {
        Self { hx, l1: vec![0.0; nx], l2: vec![0.0; nx], l2w: vec![0.0; nx], ..Default::default() }
    }

    fn add(&mut self, o: &Moments) {
        for (a, b) in [(&mut self.l1, &o.l1), (&mut self.l2, &o.l2), (&mut self.l2w, &o.l2w)] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for k in 0..3 {
            self.sob[k] += o.sob[k];
            self.wsob[k] += o.wsob[k];
        }
    }

    fn scale(&mut self, c: f64) {
        for a in [&mut self.l1, &mut self.l2, &mut self.l2w] {
            a.iter_mut().for_each(|x| *x *= c);
        }
        for k in 0..3 {
            self.sob[k] *= c;
            self.wsob[k] *= c;
        }
    }
}

fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).ceil() as usize + 1;
    let mid = 0.5 * (lo + hi);
    let start = mid - 0.5 * (n - 1) as f64 * h;
    (0..n).map(|k| start + k as f64 * h).collect()
}

fn moments(bumps: &[Bump], t: f64, cells: f64, radius: f64) -> Moments {
    if bumps.is_empty() {
        return Moments::zeros(1, 1.0);
    }
    let anchor = bumps[0].anchor;
    let tp = t + 1.0;
    let min_w = bumps.iter().flat_map(|b| b.widths).fold(f64::INFINITY, f64::min);
    let min_xw = bumps.iter().map(|b| b.x_width).fold(f64::INFINITY, f64::min);
    let hs = min_w / cells;
    let hx = min_xw / cells;
    let xs = axis(
        bumps.iter().map(|b| b.x_center - radius * b.x_width).fold(f64::INFINITY, f64::min),
        bumps.iter().map(|b| b.x_center + radius * b.x_width).fold(f64::NEG_INFINITY, f64::max),
        hx,
    );
    let s_axes: [Vec<f64>; 3] = std::array::from_fn(|i| {
        axis(
            bumps.iter().map(|b| b.offset[i] - radius * b.widths[i]).fold(f64::INFINITY, f64::min),
            bumps.iter().map(|b| b.offset[i] + radius * b.widths[i]).fold(f64::NEG_INFINITY, f64::max),
            hs,
        )
    });
    let (kappa, shear) = match anchor {
        Anchor::Fixed => (1.0, 0.0),
        Anchor::CriticalRay => (1.0 / tp, 1.0),
    };
    let v0 = |x: f64, s: f64| match anchor {
        Anchor::Fixed => s,
        Anchor::CriticalRay => (x + s) / tp,
    };
    let (nx, n0) = (xs.len(), s_axes[0].len());

    // Per-bump factor tables: axis 0 couples x and s₀, axes 1 and 2 are 1-D.
    let t0: Vec<Vec<f64>> = bumps
        .iter()
        .map(|b| {
            let mut tab = Vec::with_capacity(nx * n0);
            for &x in &xs {
                let dx = (x - b.x_center) / b.x_width;
                for &s in &s_axes[0] {
                    let q = b.xi(0, t, x, v0(x, s)) / b.widths[0];
                    tab.push(b.amplitude * (-dx * dx - q * q).exp());
                }
            }
            tab
        })
        .collect();
    let side = |i: usize| -> Vec<Vec<f64>> {
        bumps
            .iter()
            .map(|b| {
                s_axes[i]
                    .iter()
                    .map(|&s| {
                        let q = b.xi(i, t, 0.0, kappa * s) / b.widths[i];
                        (-q * q).exp()
                    })
                    .collect()
            })
            .collect()
    };
    let (t1, t2) = (side(1), side(2));
    let mut z0sq = Vec::with_capacity(nx * n0);
    for &x in &xs {
        for &s in &s_axes[0] {
            let z = x - tp * v0(x, s);
            z0sq.push(z * z);
        }
    }
    let zsq = |i: usize, k: usize| {
        let z = tp * kappa * s_axes[i][k];
        z * z
    };
    let shape = [nx, 1, 1, n0, 1, 1];
    let amp_max = bumps.iter().map(|b| b.amplitude.abs()).fold(0.0, f64::max);

    let partials: Vec<Moments> = (0..s_axes[1].len())
        .into_par_iter()
        .map(|k1| {
            let mut m = Moments::zeros(nx, hx);
            let mut h = vec![0.0; nx * n0];
            for k2 in 0..s_axes[2].len() {
                let col: Vec<f64> = (0..bumps.len()).map(|b| t1[b][k1] * t2[b][k2]).collect();
                if col.iter().fold(0.0f64, |a, c| a.max(*c)) * amp_max < 1e-300 {
                    continue;
                }
                h.iter_mut().for_each(|x| *x = 0.0);
                for (b, c) in col.iter().enumerate() {
                    for (y, f) in h.iter_mut().zip(&t0[b]) {
                        *y += c * f;
                    }
                }
                let zside = zsq(1, k1) + zsq(2, k2);
                let deriv = |u: &[f64]| -> Vec<f64> {
                    let mut d = diff_axis(u, shape, 0, hx, StencilOrder::Fourth);
                    if shear != 0.0 {
                        let ds = diff_axis(u, shape, 3, hs, StencilOrder::Fourth);
                        d.iter_mut().zip(&ds).for_each(|(a, b)| *a -= shear * b);
                    }
                    d
                };
                let d1 = deriv(&h);
                let d2 = deriv(&d1);
                for ix in 0..nx {
                    for k0 in 0..n0 {
                        let p = ix * n0 + k0;
                        let w = 1.0 + z0sq[p] + zside;
                        let w4 = w * w;
                        let y = h[p];
                        m.l1[ix] += y.abs();
                        m.l2[ix] += y * y;
                        m.l2w[ix] += w4 * y * y;
                        for (k, d) in [y, d1[p], d2[p]].iter().enumerate() {
                            m.sob[k] += d * d;
                            m.wsob[k] += w4 * d * d;
                        }
                    }
                }
            }
            m
        })
        .collect();
    let mut total = Moments::zeros(nx, hx);
    for p in &partials {
        total.add(p);
    }
    total.scale(hs.powi(3) * kappa.powi(3));
    total
}

/// Ratios of the four inequalities at one time; the flag marks RHS = 0 < LHS.
fn ratios(m: &Moments, t: f64) -> ([f64; 4], [bool; 4]) {
    let decay = (1.0 + t).powf(-1.5);
    let mut bad = [false; 4];
    let mut q = |k: usize, lhs: f64, rhs: f64| {
        if rhs > 0.0 {
            lhs / rhs
        } else {
            bad[k] |= lhs > 0.0;
            0.0
        }
    };
    let peak = m.l1.iter().fold(0.0f64, |a, b| a.max(*b));
    let mut pointwise = 0.0f64;
    for (l1, l2w) in m.l1.iter().zip(&m.l2w) {
        if *l1 > SIGNIFICANCE * peak {
            pointwise = pointwise.max(q(0, *l1, decay * l2w.sqrt()));
        }
    }
    let hx = m.hx;
    let l2x = q(
        1,
        (m.l1.iter().map(|a| a * a).sum::<f64>() * hx).sqrt(),
        decay * (m.l2w.iter().sum::<f64>() * hx).sqrt(),
    );
    let sob_rhs: f64 = m.sob.iter().map(|s| (s * hx).sqrt()).sum();
    let sobolev = q(2, m.l2.iter().fold(0.0f64, |a, b| a.max(*b)).sqrt(), sob_rhs);
    let wsob_rhs: f64 = m.wsob.iter().map(|s| (s * hx).sqrt()).sum();
    let linf = q(3, peak, decay * wsob_rhs);
    ([pointwise, l2x, sobolev, linf], bad)
}

struct Sweep {
    ratios: Vec<[f64; 4]>,
    bad: [bool; 4],
}

fn sweep(family: &TestFamily, t_grid: &[f64], cells: f64, radius: f64) -> Sweep {
    let mut out = Sweep { ratios: Vec::with_capacity(t_grid.len()), bad: [false; 4] };
    for &t in t_grid {
        let mut best = [0.0f64; 4];
        for member in family.members() {
            let (r, bad) = ratios(&moments(member, t, cells, radius), t);
            for k in 0..4 {
                best[k] = best[k].max(r[k]);
                out.bad[k] |= bad[k];
            }
        }
        out.ratios.push(best);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSuite {
    pub l1v: InequalityReport,
    pub l2x_l1v: InequalityReport,
    pub sobolev: InequalityReport,
    pub linf_l1v: InequalityReport,
}

impl InterpolationSuite {
    pub fn reports(&self) -> [&InequalityReport; 4] {
        [&self.l1v, &self.l2x_l1v, &self.sobolev, &self.linf_l1v]
    }
}

/// All four ratio sweeps over one family, sharing the quadrature.
pub fn verify_interpolation_suite(family: &TestFamily, t_grid: &[f64], quad: &Quadrature) -> InterpolationSuite {
    let coarse = sweep(family, t_grid, quad.cells_per_width, quad.radius);
    let fine = quad.refinement.map(|f| sweep(family, t_grid, quad.cells_per_width * f, quad.radius));
    let ids =
        [InequalityId::L1vInterpolation, InequalityId::L2xL1v, InequalityId::SobolevX, InequalityId::LinfxL1v];
    let mut reports = ids.iter().enumerate().map(|(k, id)| {
        InequalityReport::new(
            *id,
            family.name(),
            t_grid.to_vec(),
            coarse.ratios.iter().map(|r| r[k]).collect(),
            fine.as_ref().map(|s| s.ratios.iter().map(|r| r[k]).collect()),
            coarse.bad[k] || fine.as_ref().is_some_and(|s| s.bad[k]),
            false,
        )
    });
    InterpolationSuite {
        l1v: reports.next().unwrap(),
        l2x_l1v: reports.next().unwrap(),
        sobolev: reports.next().unwrap(),
        linf_l1v: reports.next().unwrap(),
    }
}

/// The pointwise-in-x L¹_v ratio sweep alone.
pub fn verify_interpolation_l1v(family: &TestFamily, t_grid: &[f64], quad: &Quadrature) -> InequalityReport {
    verify_interpolation_suite(family, t_grid, quad).l1v
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Quadrature = Quadrature { cells_per_width: 2.5, radius: 6.0, refinement: None };

    #[test]
    fn zero_family_gives_zero_ratios() {
        let s = verify_interpolation_suite(&TestFamily::zero(), &[0.0, 4.0], &Q);
        for r in s.reports() {
            assert!(r.ratios.iter().all(|x| *x == 0.0));
            assert!(!r.inconsistent);
        }
    }

    #[test]
    fn unit_critical_gaussian_ratio_matches_closed_form() {
        // ∫e^{−|u|²} = π^{3/2}; ∫(1+|u|²)²e^{−2|u|²} = (π/2)^{3/2}(1 + 3/2 + 15/16).
        let want = std::f64::consts::PI.powf(1.5)
            / ((std::f64::consts::PI / 2.0).powf(1.5) * (1.0 + 1.5 + 15.0 / 16.0)).sqrt();
        let fam = TestFamily::single(FamilyKind::Drifting, vec![centered(Anchor::CriticalRay, [1.0; 3], [0.0; 3])]);
        let r = verify_interpolation_l1v(&fam, &[0.0, 3.0, 50.0], &Q);
        for x in &r.ratios {
            assert!((x / want - 1.0).abs() < 1e-6, "{x} vs {want}");
        }
    }

    #[test]
    fn ratios_never_exceed_the_cauchy_schwarz_constant() {
        for fam in [TestFamily::isotropic(), TestFamily::drifting(), TestFamily::mixture(3)] {
            let s = verify_interpolation_suite(&fam, &[0.0, 8.0], &Q);
            assert!(s.l1v.max_ratio <= L1V_SHARP_CONSTANT);
            assert!(s.l2x_l1v.max_ratio <= L1V_SHARP_CONSTANT);
        }
    }

    #[test]
    fn fixed_gaussian_ratio_does_not_grow() {
        let r = verify_interpolation_l1v(&TestFamily::isotropic(), &[0.0, 128.0], &Q);
        assert!(r.ratios[1] <= 2.0 * r.ratios[0]);
    }

    #[test]
    fn mixtures_are_seeded() {
        assert_eq!(TestFamily::mixture(5), TestFamily::mixture(5));
        assert_ne!(TestFamily::mixture(5), TestFamily::mixture(6));
    }
}
