//! Exact free transport f(t,x,v) = f₀(x − tv, v) and closed-form derivatives
//! of a transported centered Gaussian.

use crate::phase_grid::{GaussianProfile, MultiIndexTriple};

/// Anything that can be evaluated at a phase-space point at t = 0.
pub trait InitialData {
    fn value(&self, x: [f64; 3], v: [f64; 3]) -> f64;
}

impl<F: Fn([f64; 3], [f64; 3]) -> f64> InitialData for F {
    fn value(&self, x: [f64; 3], v: [f64; 3]) -> f64 {
        self(x, v)
    }
}

/// A Gaussian profile together with the number of spatial axes it lives on.
#[derive(Debug, Clone, Copy)]
pub struct ProfileData {
    pub profile: GaussianProfile,
    pub x_dims: usize,
}

impl InitialData for ProfileData {
    fn value(&self, x: [f64; 3], v: [f64; 3]) -> f64 {
        self.profile.value(self.x_dims, x, v)
    }
}

/// f_data(x − tv, v).
pub fn free_transport_eval(data: &impl InitialData, t: f64, x: [f64; 3], v: [f64; 3]) -> f64 {
    let y = [x[0] - t * v[0], x[1] - t * v[1], x[2] - t * v[2]];
    data.value(y, v)
}

/// Polynomial in (x, v) stored as `c[i][j]` for x^i v^j.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    c: Vec<Vec<f64>>,
}

impl Poly2 {
    pub fn one() -> Self {
        Self { c: vec![vec![1.0]] }
    }

    fn degree(&self) -> (usize, usize) {
        (self.c.len(), self.c.iter().map(Vec::len).max().unwrap_or(0))
    }

    fn zeros(nx: usize, nv: usize) -> Self {
        Self { c: vec![vec![0.0; nv]; nx] }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.c.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
    }

    /// d/dx (P φ) / φ where (log φ)_x = px·x + pv·v.
    fn derive(&self, wrt_x: bool, px: f64, pv: f64) -> Self {
        let (nx, nv) = self.degree();
        let mut out = Self::zeros(nx + 1, nv + 1);
        for i in 0..nx {
            for j in 0..nv {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                if wrt_x && i > 0 {
                    out.c[i - 1][j] += a * i as f64;
                }
                if !wrt_x && j > 0 {
                    out.c[i][j - 1] += a * j as f64;
                }
                out.c[i + 1][j] += a * px;
                out.c[i][j + 1] += a * pv;
            }
        }
        out
    }

    fn add_scaled(&self, other: &Self, s: f64) -> Self {
        let (ax, av) = self.degree();
        let (bx, bv) = other.degree();
        let mut out = Self::zeros(ax.max(bx), av.max(bv));
        for i in 0..out.c.len() {
            for j in 0..out.c[i].len() {
                out.c[i][j] = self.get(i, j) + s * other.get(i, j);
            }
        }
        out
    }

    pub fn eval(&self, x: f64, v: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.c.iter().rev() {
            let mut r = 0.0;
            for &a in row.iter().rev() {
                r = r * v + a;
            }
            acc = acc * x + r;
        }
        acc
    }
}

/// ε·exp(−|x|²/w_x² − |v|²/w_v²) transported freely, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeGaussian {
    pub amplitude: f64,
    pub x_width: f64,
    pub v_width: f64,
    pub x_dims: usize,
}

impl FreeGaussian {
    pub fn unit(x_dims: usize) -> Self {
        Self { amplitude: 1.0, x_width: 1.0, v_width: 1.0, x_dims }
    }

    fn log_gradients(&self, active: bool, t: f64) -> ([f64; 2], [f64; 2]) {
        let (ax, av) = (1.0 / (self.x_width * self.x_width), 1.0 / (self.v_width * self.v_width));
        if active {
            // log φ = −(x − tv)²/w_x² − v²/w_v²
            ([-2.0 * ax, 2.0 * t * ax], [2.0 * t * ax, -2.0 * t * t * ax - 2.0 * av])
        } else {
            ([0.0, 0.0], [0.0, -2.0 * av])
        }
    }

    /// Polynomial prefactor of ∂_x^a ∂_v^b Y^s on one axis, with Y = (t+1)∂_x + ∂_v
    /// on active axes and ∂_v on inactive ones.
    pub fn axis_poly(&self, axis: usize, a: u32, b: u32, s: u32, t: f64) -> Poly2 {
        let active = axis < self.x_dims;
        let (gx, gv) = self.log_gradients(active, t);
        let mut p = Poly2::one();
        for _ in 0..a {
            p = p.derive(true, gx[0], gx[1]);
        }
        for _ in 0..b {
            p = p.derive(false, gv[0], gv[1]);
        }
        for _ in 0..s {
            let dv = p.derive(false, gv[0], gv[1]);
            p = if active { dv.add_scaled(&p.derive(true, gx[0], gx[1]), t + 1.0) } else { dv };
        }
        p
    }

    pub fn axis_exponent(&self, axis: usize, t: f64, x: f64, v: f64) -> f64 {
        let qv = v * v / (self.v_width * self.v_width);
        if axis < self.x_dims {
            let y = x - t * v;
            -y * y / (self.x_width * self.x_width) - qv
        } else {
            -qv
        }
    }

    pub fn value(&self, t: f64, x: [f64; 3], v: [f64; 3]) -> f64 {
        let e: f64 = (0..3).map(|a| self.axis_exponent(a, t, x[a], v[a])).sum();
        self.amplitude * e.exp()
    }

    /// ∂_x^α ∂_v^β Y^σ f(t, x, v), exact.
    pub fn derivative(&self, triple: &MultiIndexTriple, t: f64, x: [f64; 3], v: [f64; 3]) -> f64 {
        let mut out = self.amplitude;
        for a in 0..3 {
            let p = self.axis_poly(a, triple.alpha[a], triple.beta[a], triple.sigma[a], t);
            out *= p.eval(x[a], v[a]) * self.axis_exponent(a, t, x[a], v[a]).exp();
        }
        out
    }

    /// ‖∂f(t)‖_{L²_xL¹_v}; the norm factorizes over axes, so each factor is a
    /// two-dimensional quadrature on a window adapted to the sheared Gaussian.
    pub fn l2x_l1v_norm(&self, triple: &MultiIndexTriple, t: f64, panels: usize) -> f64 {
        let mut out = self.amplitude.abs();
        for a in 0..3 {
            let p = self.axis_poly(a, triple.alpha[a], triple.beta[a], triple.sigma[a], t);
            out *= if a < self.x_dims {
                self.axis_l2_l1(&p, t, panels)
            } else {
                self.axis_l1(&p, t, 0.0, panels, false)
            };
        }
        out
    }

    fn axis_l1(&self, p: &Poly2, t: f64, x: f64, panels: usize, active: bool) -> f64 {
        let (ax, av) = (1.0 / (self.x_width * self.x_width), 1.0 / (self.v_width * self.v_width));
        let (center, width) = if active {
            let prec = t * t * ax + av;
            (t * x * ax / prec, 1.0 / prec.sqrt())
        } else {
            (0.0, self.v_width)
        };
        let half = 14.0 * width;
        abs_integral(
            |v| {
                let e = if active {
                    let y = x - t * v;
                    -y * y * ax - v * v * av
                } else {
                    -v * v * av
                };
                p.eval(x, v) * e.exp()
            },
            center - half,
            center + half,
            panels,
        )
    }

    fn axis_l2_l1(&self, p: &Poly2, t: f64, panels: usize) -> f64 {
        let sx = (self.x_width * self.x_width + t * t * self.v_width * self.v_width).sqrt();
        let half = 14.0 * sx;
        abs_integral(
            |x| {
                let inner = self.axis_l1(p, t, x, panels, true);
                inner * inner
            },
            -half,
            half,
            panels,
        )
        .sqrt()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

/// ∫_a^b |f| by panelwise Gauss–Legendre, splitting panels at sign changes
/// so the kinks of |f| fall on panel edges.
pub(crate) fn abs_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const PROBES: usize = 8;
    let (gx, gw) = gauss_legendre(10);
    let gl = |lo: f64, hi: f64| -> f64 {
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        gx.iter().zip(&gw).map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
    };
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mut cuts = vec![lo];
        let mut prev = (lo, f(lo));
        for j in 1..=PROBES {
            let x = lo + h * j as f64 / PROBES as f64;
            let fx = f(x);
            if prev.1 * fx < 0.0 {
                let (mut l, mut r, fl) = (prev.0, x, prev.1);
                for _ in 0..60 {
                    let mid = 0.5 * (l + r);
                    if f(mid) * fl > 0.0 {
                        l = mid;
                    } else {
                        r = mid;
                    }
                }
                cuts.push(0.5 * (l + r));
            }
            prev = (x, fx);
        }
        cuts.push(lo + h);
        for w in cuts.windows(2) {
            total += gl(w[0], w[1]).abs();
        }
    }
    total
}

/// Closed form of ‖e^{−|x−tv|²−|v|²}‖_{L²_xL¹_v} in three spatial dimensions.
pub fn gaussian_l2x_l1v_closed_form(t: f64) -> f64 {
    let s = 1.0 + t * t;
    (std::f64::consts::PI / s).powf(1.5) * (std::f64::consts::PI * s / 2.0).powf(0.75)
}

/// Same norm after one ∂_v derivative.
pub fn gaussian_dv_l2x_l1v_closed_form(t: f64) -> f64 {
    let s = 1.0 + t * t;
    2.0 * (std::f64::consts::PI * s / 2.0).powf(0.75) * std::f64::consts::PI / s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_time_zero() {
        let g = |x: [f64; 3], v: [f64; 3]| x[0] + 2.0 * v[1];
        assert_eq!(free_transport_eval(&g, 0.0, [1.0, 2.0, 3.0], [4.0, 5.0, 6.0]), 11.0);
        assert_eq!(free_transport_eval(&g, 2.0, [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]), -1.0 + 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fg = FreeGaussian { amplitude: 1.3, x_width: 0.8, v_width: 1.1, x_dims: 2 };
        let t = 1.7;
        let x = [0.3, -0.4, 0.0];
        let v = [0.2, 0.1, -0.5];
        let h = 1e-4;
        let f = |x: [f64; 3], v: [f64; 3]| fg.value(t, x, v);
        let shift = |p: [f64; 3], a: usize, d: f64| {
            let mut q = p;
            q[a] += d;
            q
        };
        let d = fg.derivative(&MultiIndexTriple::dx(1), t, x, v);
        let fd = (f(shift(x, 1, h), v) - f(shift(x, 1, -h), v)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-7);
        let d = fg.derivative(&MultiIndexTriple::dv(0), t, x, v);
        let fd = (f(x, shift(v, 0, h)) - f(x, shift(v, 0, -h))) / (2.0 * h);
        assert!((d - fd).abs() < 1e-7);
        let d = fg.derivative(&MultiIndexTriple::y(0), t, x, v);
        let fdx = (f(shift(x, 0, h), v) - f(shift(x, 0, -h), v)) / (2.0 * h);
        let fdv = (f(x, shift(v, 0, h)) - f(x, shift(v, 0, -h))) / (2.0 * h);
        assert!((d - ((t + 1.0) * fdx + fdv)).abs() < 1e-7);
        // inactive axis: Y reduces to ∂_v
        let d = fg.derivative(&MultiIndexTriple::y(2), t, x, v);
        let fd = (f(x, shift(v, 2, h)) - f(x, shift(v, 2, -h))) / (2.0 * h);
        assert!((d - fd).abs() < 1e-7);
    }

    #[test]
    fn y_sees_only_the_transported_offset() {
        // With v-width → ∞, Y(x − tv) = (t+1) − t = 1, so Yφ/φ = −2(x − tv).
        let fg = FreeGaussian { amplitude: 1.0, x_width: 1.0, v_width: 1e8, x_dims: 1 };
        let p = fg.axis_poly(0, 0, 0, 1, 3.0);
        assert!((p.eval(0.5, 0.1) - (-2.0 * (0.5 - 0.3))).abs() < 1e-9);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let fg = FreeGaussian::unit(3);
        for &t in &[0.0, 2.0, 10.0] {
            let n = fg.l2x_l1v_norm(&MultiIndexTriple::ZERO, t, 40);
            assert!((n / gaussian_l2x_l1v_closed_form(t) - 1.0).abs() < 1e-8, "t={t}");
            let n = fg.l2x_l1v_norm(&MultiIndexTriple::dv(0), t, 40);
            assert!((n / gaussian_dv_l2x_l1v_closed_form(t) - 1.0).abs() < 1e-8, "t={t}");
        }
    }
}
