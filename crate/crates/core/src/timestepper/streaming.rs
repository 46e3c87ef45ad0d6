//! Exact free streaming `∂_t f + v·∇_x f = 0` in the truncated basis.
//!
//! Per wavenumber the coefficients obey `∂_t ĉ = −i S_k ĉ` with the real
//! symmetric `S_k = Σ_i k_i V_i`, `V_i` the matrix of `v_i` under the hard
//! closure, so the flow `V e^{−iΛτ} Vᵀ` is unitary. `S_k` only depends on
//! the direction of `k` up to a scalar factor, so one eigendecomposition
//! serves every multiple of a primitive lattice direction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::fourier::SpectralGrid;
use crate::hermite::{HermiteField, VelocityBasis};

struct Direction {
    /// Column-major eigenvectors.
    vecs: Vec<f64>,
    vals: Vec<f64>,
    /// Euclidean length of the primitive direction.
    norm: f64,
}

struct Mode {
    idx: usize,
    mirror: usize,
    dir: usize,
    /// `S_k = scale · S_dir`
    scale: f64,
}

pub struct StreamingPropagator {
    n: usize,
    dirs: Vec<Direction>,
    modes: Vec<Mode>,
    phase_cache: Mutex<Option<(f64, Arc<Vec<Complex64>>)>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl StreamingPropagator {
    pub fn new(grid: &SpectralGrid, basis: &VelocityBasis) -> Self {
        let n = basis.len();
        let dim = grid.dim();
        let kunit = 2.0 * std::f64::consts::PI / grid.length();
        let mut keys: HashMap<[i64; 3], usize> = HashMap::new();
        let mut prim: Vec<[i64; 3]> = Vec::new();
        let mut modes = Vec::new();
        for idx in 0..grid.len() {
            if !grid.in_dealias_band(idx) || grid.k_squared(idx) == 0.0 {
                continue;
            }
            let mirror = grid.mirror_index(idx);
            if mirror < idx {
                continue;
            }
            let k = grid.wavenumber_index(idx);
            let g = k.iter().take(dim).fold(0, |acc, &v| gcd(acc, v));
            let p = [k[0] / g, k[1] / g, k[2] / g];
            let next = prim.len();
            let dir = *keys.entry(p).or_insert_with(|| {
                prim.push(p);
                next
            });
            modes.push(Mode {
                idx,
                mirror,
                dir,
                scale: g as f64 * kunit,
            });
        }
        let dirs = prim
            .par_iter()
            .map(|p| {
                let mut s = DMatrix::<f64>::zeros(n, n);
                for beta in 0..n {
                    for l in basis.lower_links(beta).iter().chain(basis.upper_links(beta)) {
                        s[(beta, l.index)] += p[l.axis] as f64 * l.coef;
                    }
                }
                let eig = SymmetricEigen::new(s);
                Direction {
                    vecs: eig.eigenvectors.as_slice().to_vec(),
                    vals: eig.eigenvalues.as_slice().to_vec(),
                    norm: p.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt(),
                }
            })
            .collect();
        Self {
            n,
            dirs,
            modes,
            phase_cache: Mutex::new(None),
        }
    }

    /// Largest characteristic speed `max |λ(S_k)|/|k|` over all directions.
    pub fn max_speed(&self) -> f64 {
        self.dirs
            .iter()
            .map(|d| d.vals.iter().fold(0.0f64, |a, v| a.max(v.abs())) / d.norm)
            .fold(0.0, f64::max)
    }

    /// `e^{−iλ_j s τ}` for every mode and eigenvalue, cached for the last `tau`.
    fn phases(&self, tau: f64) -> Arc<Vec<Complex64>> {
        let mut cache = self.phase_cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((t, ph)) = &*cache {
            if *t == tau {
                return ph.clone();
            }
        }
        let n = self.n;
        let mut ph = vec![Complex64::new(0.0, 0.0); self.modes.len() * n];
        ph.par_chunks_mut(n).zip(&self.modes).for_each(|(out, m)| {
            for (o, lam) in out.iter_mut().zip(&self.dirs[m.dir].vals) {
                let (s, c) = (-lam * m.scale * tau).sin_cos();
                *o = Complex64::new(c, s);
            }
        });
        let ph = Arc::new(ph);
        *cache = Some((tau, ph.clone()));
        ph
    }

    /// Advances `f` by `tau` in place.
    pub fn apply(&self, f: &mut HermiteField, tau: f64) {
        if tau == 0.0 {
            return;
        }
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let phases = self.phases(tau);
        // [mode][beta] layout keeps every per-mode product contiguous
        let mut x = vec![zero; self.modes.len() * n];
        for (beta, c) in f.coeffs.iter().enumerate() {
            for (k, m) in self.modes.iter().enumerate() {
                x[k * n + beta] = c.data[m.idx];
            }
        }
        x.par_chunks_mut(n).enumerate().for_each_init(
            || vec![zero; n],
            |y, (k, xk)| {
                let m = &self.modes[k];
                let d = &self.dirs[m.dir];
                let ph = &phases[k * n..(k + 1) * n];
                for (j, yj) in y.iter_mut().enumerate() {
                    let col = &d.vecs[j * n..(j + 1) * n];
                    let (mut re, mut im) = (0.0, 0.0);
                    for (v, xb) in col.iter().zip(xk.iter()) {
                        re += v * xb.re;
                        im += v * xb.im;
                    }
                    *yj = Complex64::new(re, im) * ph[j];
                }
                xk.fill(zero);
                for (j, yj) in y.iter().enumerate() {
                    let col = &d.vecs[j * n..(j + 1) * n];
                    for (o, v) in xk.iter_mut().zip(col) {
                        o.re += yj.re * v;
                        o.im += yj.im * v;
                    }
                }
            },
        );
        for (beta, c) in f.coeffs.iter_mut().enumerate() {
            for (k, m) in self.modes.iter().enumerate() {
                let v = x[k * n + beta];
                c.data[m.idx] = v;
                c.data[m.mirror] = v.conj();
            }
        }
    }
}
