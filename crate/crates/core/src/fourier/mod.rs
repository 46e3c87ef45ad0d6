//! Periodic spatial discretization.
//!
//! Fields are stored as spectral coefficients on the full complex grid with
//! the normalization `g(x) = Σ_k ĝ_k e^{ik·x}`, so `ĝ_0` is the spatial mean
//! and `∫ g² dx = |Ω| Σ_k |ĝ_k|²`.

mod field;
mod norms;

pub use field::{ScalarField, VectorField};
pub use norms::{ShellNorm, SobolevWeights};
pub(crate) use norms::multi_indices;

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^d` sampled on `n^d` points.
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    length: f64,
    total: usize,
    /// Integer wavenumber vector per flat index.
    kint: Vec<[i64; 3]>,
    /// Physical wavenumber vector per flat index (zero on Nyquist planes for
    /// differentiation purposes is handled separately).
    kvec: Vec<[f64; 3]>,
    k2: Vec<f64>,
    dealias: Vec<bool>,
    nyquist: Vec<bool>,
    shell: Vec<Option<i32>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid(format!("box length must be positive, got {length}")));
        }
        let total = n.pow(dim as u32);
        let scale = 2.0 * std::f64::consts::PI / length;
        // 2/3 rule: keep |k_i| <= floor(n/3)
        let kcut = (n / 3) as i64;
        let half = (n / 2) as i64;

        let mut kint = Vec::with_capacity(total);
        let mut kvec = Vec::with_capacity(total);
        let mut k2 = Vec::with_capacity(total);
        let mut dealias = Vec::with_capacity(total);
        let mut nyquist = Vec::with_capacity(total);
        let mut shell = Vec::with_capacity(total);
        for flat in 0..total {
            let mut ki = [0i64; 3];
            let mut rem = flat;
            for axis in (0..dim).rev() {
                let j = (rem % n) as i64;
                rem /= n;
                ki[axis] = if j <= half { j } else { j - n as i64 };
            }
            let kv = [ki[0] as f64 * scale, ki[1] as f64 * scale, ki[2] as f64 * scale];
            let kk = kv.iter().map(|k| k * k).sum::<f64>();
            kint.push(ki);
            kvec.push(kv);
            k2.push(kk);
            dealias.push(ki.iter().all(|k| k.abs() <= kcut));
            nyquist.push(ki.contains(&half));
            shell.push(if kk > 0.0 {
                // 2^{j-1} <= |k| < 2^j
                Some(kk.sqrt().log2().floor() as i32 + 1)
            } else {
                None
            });
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            dim,
            n,
            length,
            total,
            kint,
            kvec,
            k2,
            dealias,
            nyquist,
            shell,
            forward,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.total as f64
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Physical wavenumber vector of flat spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.kvec[idx]
    }

    pub fn wavenumber_index(&self, idx: usize) -> [i64; 3] {
        self.kint[idx]
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    pub fn in_dealias_band(&self, idx: usize) -> bool {
        self.dealias[idx]
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    /// Dyadic shell `j` with `2^{j-1} <= |k| < 2^j`; `None` for the mean mode.
    pub fn shell_index(&self, idx: usize) -> Option<i32> {
        self.shell[idx]
    }

    /// Largest `|k|²` retained by the dealiasing mask.
    pub fn max_k2_dealiased(&self) -> f64 {
        (0..self.total)
            .filter(|&i| self.dealias[i])
            .map(|i| self.k2[i])
            .fold(0.0, f64::max)
    }

    /// Flat index of the spectral mode with integer wavenumber `k`.
    pub fn index_of(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let mut flat = 0usize;
        for &ki in k.iter().take(self.dim) {
            flat = flat * self.n + ki.rem_euclid(n) as usize;
        }
        flat
    }

    /// Flat index of `-k`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let k = self.kint[idx];
        self.index_of([-k[0], -k[1], -k[2]])
    }

    /// Coordinates of physical grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let mut x = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            x[axis] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        x
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.total {
            return Err(Error::GridMismatch {
                expected: self.total,
                found: len,
            });
        }
        Ok(())
    }

    /// In-place multidimensional FFT over the full grid (unnormalized).
    fn fft_inplace(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = vec![zero; plan.get_inplace_scratch_len()];
        // contiguous last axis: rustfft processes back-to-back chunks
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        // strided axes are handled a few adjacent lines at a time so that
        // every gather reads a contiguous run; a plain line-by-line gather
        // at a power-of-two stride thrashes the cache
        const WIDTH: usize = 16;
        let mut buf = vec![zero; WIDTH * n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            let width = WIDTH.min(stride);
            let lines = &mut buf[..width * n];
            for outer in (0..self.total).step_by(block) {
                for inner in (0..stride).step_by(width) {
                    let base = outer + inner;
                    for j in 0..n {
                        let row = &data[base + j * stride..base + j * stride + width];
                        for (w, v) in row.iter().enumerate() {
                            lines[w * n + j] = *v;
                        }
                    }
                    plan.process_with_scratch(lines, &mut scratch);
                    for j in 0..n {
                        let row = &mut data[base + j * stride..base + j * stride + width];
                        for (w, v) in row.iter_mut().enumerate() {
                            *v = lines[w * n + j];
                        }
                    }
                }
            }
        }
    }

    /// Physical samples to spectral coefficients.
    pub fn forward(&self, values: &[f64]) -> ScalarField {
        assert_eq!(values.len(), self.total, "field length does not match grid");
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_inplace(&mut data, false);
        let inv = 1.0 / self.total as f64;
        for c in &mut data {
            *c *= inv;
        }
        ScalarField { data }
    }

    /// Spectral coefficients to physical samples (real part).
    pub fn inverse(&self, field: &ScalarField) -> Vec<f64> {
        let mut data = field.data.clone();
        self.fft_inplace(&mut data, true);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Forward transform followed by the 2/3 truncation.
    pub fn forward_dealiased(&self, values: &[f64]) -> ScalarField {
        let mut f = self.forward(values);
        self.dealias(&mut f);
        f
    }

    pub fn dealias(&self, f: &mut ScalarField) {
        for (c, keep) in f.data.iter_mut().zip(&self.dealias) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Dealiased pointwise product of two physical arrays.
    pub fn product(&self, a: &[f64], b: &[f64]) -> ScalarField {
        let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.forward_dealiased(&p)
    }

    pub fn from_fn(&self, g: impl Fn([f64; 3]) -> f64) -> ScalarField {
        let values: Vec<f64> = (0..self.total).map(|i| g(self.point(i))).collect();
        self.forward(&values)
    }

    /// Spectral derivative along `axis`; Nyquist modes are zeroed to keep
    /// the result real.
    pub fn derivative(&self, g: &ScalarField, axis: usize) -> ScalarField {
        debug_assert!(axis < self.dim);
        let data = g
            .data
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if self.nyquist[i] {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, self.kvec[i][axis])
                }
            })
            .collect();
        ScalarField { data }
    }

    pub fn gradient(&self, g: &ScalarField) -> VectorField {
        VectorField::new((0..self.dim).map(|a| self.derivative(g, a)).collect())
    }

    pub fn divergence(&self, w: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self);
        for (axis, comp) in w.comps.iter().enumerate() {
            for (i, (o, c)) in out.data.iter_mut().zip(&comp.data).enumerate() {
                if !self.nyquist[i] {
                    *o += c * Complex64::new(0.0, self.kvec[i][axis]);
                }
            }
        }
        out
    }

    pub fn laplacian(&self, g: &ScalarField) -> ScalarField {
        let data = g
            .data
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if self.nyquist[i] {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * (-self.k2[i])
                }
            })
            .collect();
        ScalarField { data }
    }

    /// Solves `Δp = rhs` for the zero-mean `p`.
    pub fn inverse_laplacian(&self, rhs: &ScalarField) -> ScalarField {
        let data = rhs
            .data
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if self.k2[i] == 0.0 || self.nyquist[i] {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * (-1.0 / self.k2[i])
                }
            })
            .collect();
        ScalarField { data }
    }

    /// Helmholtz–Leray projection `ŵ ↦ ŵ − k (k·ŵ)/|k|²`; the mean passes through.
    pub fn leray_project(&self, w: &VectorField) -> Result<VectorField> {
        if w.dim() != self.dim {
            return Err(Error::invalid(format!(
                "vector field has {} components on a {}-d grid",
                w.dim(),
                self.dim
            )));
        }
        for c in &w.comps {
            self.check(c.data.len())?;
        }
        let mut out = w.clone();
        for i in 0..self.total {
            if self.k2[i] == 0.0 {
                continue;
            }
            let k = self.kvec[i];
            if self.nyquist[i] {
                // derivative operators vanish here; drop the mode entirely
                for c in &mut out.comps {
                    c.data[i] = Complex64::new(0.0, 0.0);
                }
                continue;
            }
            let mut kdotw = Complex64::new(0.0, 0.0);
            for (a, c) in w.comps.iter().enumerate() {
                kdotw += c.data[i] * k[a];
            }
            let scale = kdotw / self.k2[i];
            for (a, c) in out.comps.iter_mut().enumerate() {
                c.data[i] -= scale * k[a];
            }
        }
        Ok(out)
    }

    /// `∫ g h dx` via Plancherel.
    pub fn inner(&self, g: &ScalarField, h: &ScalarField) -> f64 {
        self.volume()
            * g.data
                .iter()
                .zip(&h.data)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
    }

    pub fn l2_norm_sq(&self, g: &ScalarField) -> f64 {
        self.volume() * g.data.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Maximum absolute value in physical space.
    pub fn max_abs(&self, g: &ScalarField) -> f64 {
        self.inverse(g).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ g dx`.
    pub fn integral(&self, g: &ScalarField) -> f64 {
        self.volume() * g.data[0].re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn random_field(grid: &SpectralGrid, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        grid.forward(&vals)
    }

    #[test]
    fn forward_inverse_roundtrip() {
        for dim in 1..=3 {
            let grid = SpectralGrid::new(dim, 8, 2.0 * PI).unwrap();
            let f = random_field(&grid, 3);
            let back = grid.forward(&grid.inverse(&f));
            assert!(f.max_diff(&back) < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let l = 3.0;
        let grid = SpectralGrid::new(2, 32, l).unwrap();
        let w = 2.0 * PI / l;
        let g = grid.from_fn(|x| (w * x[0]).sin());
        let dg = grid.inverse(&grid.derivative(&g, 0));
        let err = (0..grid.len())
            .map(|i| (dg[i] - w * (w * grid.point(i)[0]).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
        let dy = grid.derivative(&g, 1);
        assert!(grid.max_abs(&dy) < 1e-12);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let grid = SpectralGrid::new(2, 16, 2.0 * PI).unwrap();
        let c = grid.from_fn(|_| 4.2);
        for a in 0..2 {
            assert!(grid.max_abs(&grid.derivative(&c, a)) < 1e-14);
        }
    }

    #[test]
    fn div_grad_is_laplacian() {
        let grid = SpectralGrid::new(2, 16, 2.0 * PI).unwrap();
        let g = random_field(&grid, 9);
        let lhs = grid.divergence(&grid.gradient(&g));
        let rhs = grid.laplacian(&g);
        assert!(lhs.max_diff(&rhs) < 1e-12);
    }

    #[test]
    fn leray_removes_parallel_component() {
        let grid = SpectralGrid::new(2, 8, 2.0 * PI).unwrap();
        let idx = grid.index_of([1, 0, 0]);
        let mut w = VectorField::zeros(&grid);
        w.comps[0].data[idx] = Complex64::new(1.0, 0.0);
        w.comps[1].data[idx] = Complex64::new(1.0, 0.0);
        let p = grid.leray_project(&w).unwrap();
        assert!((p.comps[0].data[idx]).norm() < 1e-15);
        assert!((p.comps[1].data[idx] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn leray_kills_divergence_and_is_idempotent() {
        let grid = SpectralGrid::new(2, 16, 2.0 * PI).unwrap();
        let w = VectorField::new(vec![random_field(&grid, 1), random_field(&grid, 2)]);
        let p = grid.leray_project(&w).unwrap();
        assert!(grid.max_abs(&grid.divergence(&p)) < 1e-11);
        let pp = grid.leray_project(&p).unwrap();
        assert!(p.max_diff(&pp) < 1e-13);
        // mean passes through
        assert!((p.comps[0].data[0] - w.comps[0].data[0]).norm() < 1e-15);
    }

    #[test]
    fn parseval() {
        let grid = SpectralGrid::new(2, 16, 1.7).unwrap();
        let g = random_field(&grid, 5);
        let phys = grid.inverse(&g);
        let direct: f64 = phys.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        assert!((direct - grid.l2_norm_sq(&g)).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn dealias_mask_cutoff() {
        let grid = SpectralGrid::new(2, 32, 2.0 * PI).unwrap();
        for i in 0..grid.len() {
            let k = grid.wavenumber_index(i);
            let expect = k[0].abs() <= 10 && k[1].abs() <= 10;
            assert_eq!(grid.in_dealias_band(i), expect);
        }
    }

    #[test]
    fn shells_follow_dyadic_rule() {
        let grid = SpectralGrid::new(2, 16, 2.0 * PI).unwrap();
        assert_eq!(grid.shell_index(0), None);
        assert_eq!(grid.shell_index(grid.index_of([1, 0, 0])), Some(1));
        assert_eq!(grid.shell_index(grid.index_of([1, 1, 0])), Some(1));
        assert_eq!(grid.shell_index(grid.index_of([2, 0, 0])), Some(2));
        assert_eq!(grid.shell_index(grid.index_of([3, 3, 0])), Some(3));
        assert_eq!(grid.shell_index(grid.index_of([4, 0, 0])), Some(3));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpectralGrid::new(4, 8, 1.0).is_err());
        assert!(SpectralGrid::new(2, 12, 1.0).is_err());
        assert!(SpectralGrid::new(2, 8, -1.0).is_err());
    }
}
