//! Linear (non-circular) velocity convolutions on the N_v^3 grid.
//!
//! Kernels depend only on v − v*, so they are tabulated once on the
//! (2N−1)^3 offset lattice. Small grids sum directly; larger grids
//! zero-pad to a 5-smooth length ≥ 2N−1 and multiply spectra.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{check_gamma, kernel_c, kernel_matrix, KernelError, SYM_PAIRS};
use crate::phase_grid::PhaseGrid;

type C64 = Complex<f64>;

/// Grids with at most this many points per axis default to direct summation.
pub const DIRECT_MAX_POINTS: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionMethod {
    #[default]
    Auto,
    Direct,
    Fft,
}

impl ConvolutionMethod {
    fn use_fft(self, n: usize) -> bool {
        match self {
            Self::Auto => n > DIRECT_MAX_POINTS,
            Self::Direct => false,
            Self::Fft => true,
        }
    }
}

/// Smallest integer ≥ `target` whose only prime factors are 2, 3 and 5.
pub fn next_fast_len(target: usize) -> usize {
    let mut m = target.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

struct Fft3 {
    n: usize,
    p: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(n: usize) -> Self {
        let p = next_fast_len(2 * n - 1);
        let mut planner = FftPlanner::new();
        Self { n, p, fwd: planner.plan_fft_forward(p), inv: planner.plan_fft_inverse(p) }
    }

    fn scratch(&self, fft: &Arc<dyn Fft<f64>>) -> Vec<C64> {
        vec![C64::default(); fft.get_inplace_scratch_len()]
    }

    /// Transforms along the last axis for planes `i < ni` and rows `j < nj`.
    fn along_k(&self, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>, ni: usize, nj: usize) {
        let p = self.p;
        let mut scratch = self.scratch(fft);
        for i in 0..ni {
            let start = i * p * p;
            fft.process_with_scratch(&mut buf[start..start + nj * p], &mut scratch);
        }
    }

    /// Transforms along the middle axis for planes `i < ni`.
    fn along_j(&self, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>, ni: usize) {
        let p = self.p;
        let mut scratch = self.scratch(fft);
        let mut lines = vec![C64::default(); p * p];
        for i in 0..ni {
            let plane = &mut buf[i * p * p..(i + 1) * p * p];
            for j in 0..p {
                for k in 0..p {
                    lines[k * p + j] = plane[j * p + k];
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for j in 0..p {
                for k in 0..p {
                    plane[j * p + k] = lines[k * p + j];
                }
            }
        }
    }

    /// Transforms along the first axis for rows `j < nj`.
    fn along_i(&self, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>, nj: usize) {
        let p = self.p;
        let mut scratch = self.scratch(fft);
        let mut lines = vec![C64::default(); p * p];
        for j in 0..nj {
            for i in 0..p {
                let row = &buf[(i * p + j) * p..(i * p + j + 1) * p];
                for (k, &c) in row.iter().enumerate() {
                    lines[k * p + i] = c;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for i in 0..p {
                let row = &mut buf[(i * p + j) * p..(i * p + j + 1) * p];
                for (k, c) in row.iter_mut().enumerate() {
                    *c = lines[k * p + i];
                }
            }
        }
    }

    /// Forward transform of data supported in the leading N^3 corner.
    fn forward_corner(&self, mut buf: Vec<C64>) -> Vec<C64> {
        let n = self.n;
        self.along_k(&mut buf, &self.fwd, n, n);
        self.along_j(&mut buf, &self.fwd, n);
        self.along_i(&mut buf, &self.fwd, self.p);
        buf
    }

    /// Full forward transform.
    fn forward_full(&self, mut buf: Vec<C64>) -> Vec<C64> {
        let p = self.p;
        self.along_k(&mut buf, &self.fwd, p, p);
        self.along_j(&mut buf, &self.fwd, p);
        self.along_i(&mut buf, &self.fwd, p);
        buf
    }

    /// Inverse transform, computed only where the leading N^3 corner needs it.
    fn inverse_corner(&self, buf: &mut [C64]) {
        let n = self.n;
        self.along_i(buf, &self.inv, self.p);
        self.along_j(buf, &self.inv, n);
        self.along_k(buf, &self.inv, n, n);
    }

    fn pad_real(&self, f: &[f64]) -> Vec<C64> {
        let (n, p) = (self.n, self.p);
        let mut buf = vec![C64::default(); p * p * p];
        for i in 0..n {
            for j in 0..n {
                let src = &f[(i * n + j) * n..(i * n + j + 1) * n];
                let dst = &mut buf[(i * p + j) * p..(i * p + j) * p + n];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = C64::new(s, 0.0);
                }
            }
        }
        buf
    }

    /// Spectrum of a kernel sampled at integer offsets, wrapped circularly.
    fn kernel_spectrum(&self, offsets: &OffsetTable) -> Vec<C64> {
        let (n, p) = (self.n as i64, self.p as i64);
        let wrap = |d: i64| if d < 0 { (d + p) as usize } else { d as usize };
        let mut buf = vec![C64::default(); (p * p * p) as usize];
        for a in -(n - 1)..n {
            for b in -(n - 1)..n {
                for c in -(n - 1)..n {
                    let idx = (wrap(a) * p as usize + wrap(b)) * p as usize + wrap(c);
                    buf[idx] = C64::new(offsets.at(a, b, c), 0.0);
                }
            }
        }
        self.forward_full(buf)
    }

    fn extract(&self, buf: &[C64], part: impl Fn(C64) -> f64, scale: f64) -> Vec<f64> {
        let (n, p) = (self.n, self.p);
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let row = &buf[(i * p + j) * p..(i * p + j) * p + n];
                out.extend(row.iter().map(|&c| part(c) * scale));
            }
        }
        out
    }
}

/// Kernel values K(dΔv) on offsets d ∈ [−(N−1), N−1]^3.
struct OffsetTable {
    n: usize,
    values: Vec<f64>,
}

impl OffsetTable {
    fn new(n: usize, dv: f64, kernel: &impl Fn([f64; 3]) -> f64) -> Self {
        let m = 2 * n - 1;
        let mut values = Vec::with_capacity(m * m * m);
        let off = |i: usize| (i as f64 - (n - 1) as f64) * dv;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    values.push(kernel([off(a), off(b), off(c)]));
                }
            }
        }
        Self { n, values }
    }

    fn at(&self, a: i64, b: i64, c: i64) -> f64 {
        let m = 2 * self.n - 1;
        let s = (self.n - 1) as i64;
        self.values[(((a + s) as usize) * m + (b + s) as usize) * m + (c + s) as usize]
    }

    /// Σ_m K(n − m) f(m), fixed summation order, skipping zero sources.
    fn direct(&self, f: &[f64], scale: f64) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n - 1;
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            let src = &f[(a * n + b) * n..(a * n + b + 1) * n];
                            let base = ((i + n - 1 - a) * m + (j + n - 1 - b)) * m + (k + n - 1);
                            for (c, &fv) in src.iter().enumerate() {
                                if fv != 0.0 {
                                    acc += self.values[base - c] * fv;
                                }
                            }
                        }
                    }
                    out[(i * n + j) * n + k] = acc * scale;
                }
            }
        }
        out
    }
}

/// A kernel ready to be convolved on one grid.
pub struct PreparedKernel {
    offsets: Option<OffsetTable>,
    spectrum: Option<Vec<C64>>,
}

/// Convolution engine for one velocity grid.
pub struct Convolver {
    n: usize,
    dv: f64,
    fft: Option<Fft3>,
}

impl Convolver {
    pub fn new(n: usize, dv: f64, method: ConvolutionMethod) -> Self {
        let fft = method.use_fft(n).then(|| Fft3::new(n));
        Self { n, dv, fft }
    }

    pub fn for_grid(grid: &PhaseGrid, method: ConvolutionMethod) -> Self {
        Self::new(grid.nv(), grid.dv(), method)
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    /// Padded FFT length per axis, if the FFT path is active.
    pub fn padded_len(&self) -> Option<usize> {
        self.fft.as_ref().map(|f| f.p)
    }

    pub fn prepare(&self, kernel: impl Fn([f64; 3]) -> f64) -> PreparedKernel {
        let offsets = OffsetTable::new(self.n, self.dv, &kernel);
        match &self.fft {
            Some(fft) => PreparedKernel { spectrum: Some(fft.kernel_spectrum(&offsets)), offsets: None },
            None => PreparedKernel { offsets: Some(offsets), spectrum: None },
        }
    }

    /// (K * f)(v) = Σ K(v − v*) f(v*) Δv³ for each kernel; one forward transform.
    pub fn apply(&self, f: &[f64], kernels: &[&PreparedKernel]) -> Result<Vec<Vec<f64>>, KernelError> {
        let nv = self.n * self.n * self.n;
        if f.len() != nv {
            return Err(KernelError::Length { expected: nv, got: f.len() });
        }
        let dv3 = self.dv * self.dv * self.dv;
        match &self.fft {
            None => Ok(kernels
                .iter()
                .map(|k| k.offsets.as_ref().expect("kernel prepared for direct summation").direct(f, dv3))
                .collect()),
            Some(fft) => {
                let fh = fft.forward_corner(fft.pad_real(f));
                let scale = dv3 / (fft.p * fft.p * fft.p) as f64;
                Ok(kernels
                    .iter()
                    .map(|k| {
                        let spec = k.spectrum.as_ref().expect("kernel prepared for FFT");
                        let mut buf: Vec<C64> = fh.iter().zip(spec).map(|(a, b)| a * b).collect();
                        fft.inverse_corner(&mut buf);
                        fft.extract(&buf, |c| c.re, scale)
                    })
                    .collect())
            }
        }
    }
}

/// ā_ij = a_ij * f and c̄ = c * f on one velocity slice.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoefficients {
    /// Entries in `SYM_PAIRS` order, one vector per entry.
    pub a: [Vec<f64>; 6],
    pub c: Vec<f64>,
    pub gamma: f64,
    pub time: f64,
}

impl KernelCoefficients {
    pub fn zeros(nv: usize, gamma: f64, time: f64) -> Self {
        Self {
            a: std::array::from_fn(|_| vec![0.0; nv]),
            c: vec![0.0; nv],
            gamma,
            time,
        }
    }

    pub fn matrix(&self, vi: usize) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (e, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            m[i][j] = self.a[e][vi];
            m[j][i] = self.a[e][vi];
        }
        m
    }

    pub fn trace(&self, vi: usize) -> f64 {
        self.a[0][vi] + self.a[3][vi] + self.a[5][vi]
    }

    pub fn max_trace(&self) -> f64 {
        (0..self.c.len()).fold(0.0, |m, vi| m.max(self.trace(vi)))
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0) && self.a.iter().all(|e| e.iter().all(|&v| v == 0.0))
    }
}

/// The six entries of a and the scalar c tabulated once per grid.
pub struct KernelTable {
    gamma: f64,
    nv: usize,
    conv: Convolver,
    direct: Vec<OffsetTable>,
    /// Spectra of even kernels are real; two of them share one inverse
    /// transform as real and imaginary parts.
    paired: Vec<(Vec<C64>, usize, Option<usize>)>,
}

impl KernelTable {
    pub fn new(grid: &PhaseGrid, gamma: f64, method: ConvolutionMethod) -> Result<Self, KernelError> {
        check_gamma(gamma)?;
        let n = grid.nv();
        let dv = grid.dv();
        let conv = Convolver::new(n, dv, method);
        let mut tables: Vec<OffsetTable> = SYM_PAIRS
            .iter()
            .enumerate()
            .map(|(e, _)| OffsetTable::new(n, dv, &|z| kernel_matrix(z, gamma).entries[e]))
            .collect();
        tables.push(OffsetTable::new(n, dv, &|z| kernel_c(z, gamma)));

        let mut paired = Vec::new();
        let mut direct = Vec::new();
        match &conv.fft {
            Some(fft) => {
                let spectra: Vec<Vec<C64>> = tables.iter().map(|t| fft.kernel_spectrum(t)).collect();
                let mut e = 0;
                while e < spectra.len() {
                    let second = (e + 1 < spectra.len()).then_some(e + 1);
                    let combined = match second {
                        Some(s) => spectra[e]
                            .iter()
                            .zip(&spectra[s])
                            .map(|(a, b)| C64::new(a.re, b.re))
                            .collect(),
                        None => spectra[e].iter().map(|a| C64::new(a.re, 0.0)).collect(),
                    };
                    paired.push((combined, e, second));
                    e += 2;
                }
            }
            None => direct = tables,
        }
        Ok(Self { gamma, nv: n * n * n, conv, direct, paired })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn uses_fft(&self) -> bool {
        self.conv.uses_fft()
    }

    /// ā and c̄ at every velocity node of one x slice.
    pub fn convolve(&self, f: &[f64], time: f64) -> Result<KernelCoefficients, KernelError> {
        if f.len() != self.nv {
            return Err(KernelError::Length { expected: self.nv, got: f.len() });
        }
        let mut out = KernelCoefficients::zeros(self.nv, self.gamma, time);
        if f.iter().all(|&v| v == 0.0) {
            return Ok(out);
        }
        let dv3 = self.conv.dv.powi(3);
        let mut results: Vec<Vec<f64>> = vec![Vec::new(); 7];
        match &self.conv.fft {
            None => {
                for (r, t) in results.iter_mut().zip(&self.direct) {
                    *r = t.direct(f, dv3);
                }
            }
            Some(fft) => {
                let fh = fft.forward_corner(fft.pad_real(f));
                let scale = dv3 / (fft.p * fft.p * fft.p) as f64;
                for (spec, first, second) in &self.paired {
                    // f is real, so F̂·(K̂₁ + iK̂₂) inverts to (K₁*f) + i(K₂*f).
                    let mut buf: Vec<C64> = fh
                        .iter()
                        .zip(spec)
                        .map(|(a, s)| C64::new(a.re * s.re - a.im * s.im, a.re * s.im + a.im * s.re))
                        .collect();
                    fft.inverse_corner(&mut buf);
                    results[*first] = fft.extract(&buf, |c| c.re, scale);
                    if let Some(s) = second {
                        results[*s] = fft.extract(&buf, |c| c.im, scale);
                    }
                }
            }
        }
        out.c = results.pop().expect("seven results");
        for (e, r) in results.into_iter().enumerate() {
            out.a[e] = r;
        }
        Ok(out)
    }
}
