//! Quadrature cross-checks of the coefficient-space operators.
//!
//! A random `g = Σ c_β H_β = p √M` is pushed through each operator
//! analytically in `v` and projected back onto `H_β` with the tensor
//! Gauss–Hermite rule of the basis, which is exact for every integrand
//! involved. The projections are compared with the coefficient-space
//! implementation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::ops::{
    apply_drift_source, apply_fokker_planck, apply_v_multiply, gamma_ij, moments, project_macro,
    project_micro,
};
use super::{normalized_hermite, HermiteField, VelocityBasis};
use crate::error::Result;
use crate::fourier::{ScalarField, SpectralGrid, VectorField};

/// Largest absolute discrepancy per identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityErrors {
    /// `L H_β = −|β| H_β`
    pub fokker_planck: f64,
    /// `v_i` under the hard closure.
    pub v_multiply: f64,
    /// `(½u·v − u·∇_v) g + u·v√M`
    pub raising: f64,
    /// `a`, `b` against `∫g√M`, `∫v g√M`.
    pub moments: f64,
    /// `Γ_ij` against `∫(v_i v_j − δ_ij) g √M`.
    pub gamma: f64,
    /// Projection against the quadrature projection onto `span{√M, v√M}`,
    /// idempotence and orthogonality of the split.
    pub macro_micro: f64,
}

impl IdentityErrors {
    pub fn max(&self) -> f64 {
        [
            self.fokker_planck,
            self.v_multiply,
            self.raising,
            self.moments,
            self.gamma,
            self.macro_micro,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `p`, `∇p`, `Δp` at one node.
struct Jet {
    p: f64,
    grad: [f64; 3],
    lap: f64,
}

struct Nodes {
    v: Vec<[f64; 3]>,
    w: Vec<f64>,
    /// `p_β`, `∂_i p_β`, `∂_i² p_β` per node and basis element.
    val: Vec<Vec<f64>>,
    d1: Vec<Vec<[f64; 3]>>,
    d2: Vec<Vec<[f64; 3]>>,
}

impl Nodes {
    fn new(basis: &VelocityBasis) -> Self {
        let dim = basis.dim();
        let nv = basis.max_degree();
        let (v, w) = basis.quadrature().tensor(dim);
        let mut val = Vec::with_capacity(v.len());
        let mut d1 = Vec::with_capacity(v.len());
        let mut d2 = Vec::with_capacity(v.len());
        for x in &v {
            let axes: Vec<Vec<f64>> = (0..dim).map(|a| normalized_hermite(nv, x[a])).collect();
            let at = |a: usize, k: isize| if k < 0 { 0.0 } else { axes[a][k as usize] };
            let (mut pv, mut g1, mut g2) = (Vec::new(), Vec::new(), Vec::new());
            for beta in basis.multi_indices() {
                let prod = |skip: usize| -> f64 {
                    (0..dim).filter(|&a| a != skip).map(|a| axes[a][beta.get(a)]).product()
                };
                pv.push((0..dim).map(|a| axes[a][beta.get(a)]).product());
                let mut a1 = [0.0; 3];
                let mut a2 = [0.0; 3];
                for i in 0..dim {
                    let k = beta.get(i) as f64;
                    let bi = beta.get(i) as isize;
                    // p_k' = √k p_{k−1},  p_k'' = √(k(k−1)) p_{k−2}
                    a1[i] = k.sqrt() * at(i, bi - 1) * prod(i);
                    a2[i] = (k * (k - 1.0)).max(0.0).sqrt() * at(i, bi - 2) * prod(i);
                }
                g1.push(a1);
                g2.push(a2);
            }
            val.push(pv);
            d1.push(g1);
            d2.push(g2);
        }
        Self { v, w, val, d1, d2 }
    }

    fn jet(&self, q: usize, c: &[f64], dim: usize) -> Jet {
        let mut j = Jet {
            p: 0.0,
            grad: [0.0; 3],
            lap: 0.0,
        };
        for (b, &cb) in c.iter().enumerate() {
            j.p += cb * self.val[q][b];
            for i in 0..dim {
                j.grad[i] += cb * self.d1[q][b][i];
                j.lap += cb * self.d2[q][b][i];
            }
        }
        j
    }

    /// `⟨H_β, h√M⟩ = ∫ p_β h M dv` for every retained `β`.
    fn project(&self, h: impl Fn(usize, &Jet) -> f64, c: &[f64], dim: usize) -> Vec<f64> {
        let n = c.len();
        let mut out = vec![0.0; n];
        for q in 0..self.v.len() {
            let jet = self.jet(q, c, dim);
            let hv = h(q, &jet) * self.w[q];
            for (o, pb) in out.iter_mut().zip(&self.val[q]) {
                *o += hv * pb;
            }
        }
        out
    }

    fn integrate(&self, h: impl Fn(usize, &Jet) -> f64, c: &[f64], dim: usize) -> f64 {
        (0..self.v.len()).map(|q| self.w[q] * h(q, &self.jet(q, c, dim))).sum()
    }
}

fn constant_field(grid: &SpectralGrid, c: &[f64], basis: &Arc<VelocityBasis>) -> HermiteField {
    let coeffs = c
        .iter()
        .map(|&v| {
            let mut f = ScalarField::zeros(grid);
            f.coefficients_mut()[0] = Complex64::new(v, 0.0);
            f
        })
        .collect();
    HermiteField::from_coeffs(basis.clone(), coeffs).expect("one coefficient per mode")
}

fn means(f: &HermiteField) -> Vec<f64> {
    f.coeffs.iter().map(|c| c.mean()).collect()
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs every identity on `samples` random coefficient vectors.
pub fn identity_errors(basis: &Arc<VelocityBasis>, samples: usize, seed: u64) -> Result<IdentityErrors> {
    let dim = basis.dim();
    let grid = SpectralGrid::new(dim, 4, 1.0)?;
    let nodes = Nodes::new(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = IdentityErrors {
        fokker_planck: 0.0,
        v_multiply: 0.0,
        raising: 0.0,
        moments: 0.0,
        gamma: 0.0,
        macro_micro: 0.0,
    };
    for _ in 0..samples {
        let c: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = constant_field(&grid, &c, basis);
        let v = |q: usize| nodes.v[q];

        // L(p√M) = (Δp − v·∇p)√M
        let lq = nodes.project(
            |q, j| j.lap - (0..dim).map(|i| v(q)[i] * j.grad[i]).sum::<f64>(),
            &c,
            dim,
        );
        e.fokker_planck = e.fokker_planck.max(max_err(&means(&apply_fokker_planck(&f)), &lq));

        for axis in 0..dim {
            let vq = nodes.project(|q, j| v(q)[axis] * j.p, &c, dim);
            e.v_multiply = e.v_multiply.max(max_err(&means(&apply_v_multiply(&f, axis)?), &vq));
        }

        // (½v_i − ∂_i)(p√M) = (v_i p − ∂_i p)√M, source u·v√M
        let rq = nodes.project(
            |q, j| (0..dim).map(|i| u[i] * (v(q)[i] * j.p - j.grad[i] + v(q)[i])).sum(),
            &c,
            dim,
        );
        let uf = VectorField::new(
            u.iter()
                .map(|&ui| {
                    let mut s = ScalarField::zeros(&grid);
                    s.coefficients_mut()[0] = Complex64::new(ui, 0.0);
                    s
                })
                .collect(),
        );
        e.raising = e.raising.max(max_err(&means(&apply_drift_source(&f, &uf, &grid)?), &rq));

        let m = moments(&f);
        let a = nodes.integrate(|_, j| j.p, &c, dim);
        e.moments = e.moments.max((m.a.mean() - a).abs());
        for i in 0..dim {
            let bi = nodes.integrate(|q, j| v(q)[i] * j.p, &c, dim);
            e.moments = e.moments.max((m.b.comps[i].mean() - bi).abs());
            for k in 0..dim {
                let delta = if i == k { 1.0 } else { 0.0 };
                let g = nodes.integrate(|q, j| (v(q)[i] * v(q)[k] - delta) * j.p, &c, dim);
                e.gamma = e.gamma.max((gamma_ij(&f, i, k)?.mean() - g).abs());
            }
        }

        // P g = a√M + b·v√M
        let b: Vec<f64> = (0..dim)
            .map(|i| nodes.integrate(|q, j| v(q)[i] * j.p, &c, dim))
            .collect();
        let pq = nodes.project(
            |q, _| a + (0..dim).map(|i| b[i] * v(q)[i]).sum::<f64>(),
            &c,
            dim,
        );
        let pf = project_macro(&f);
        let qf = project_micro(&f);
        let mut mm = max_err(&means(&pf), &pq);
        mm = mm.max(max_err(&means(&project_macro(&pf)), &means(&pf)));
        mm = mm.max(max_err(&means(&project_micro(&qf)), &means(&qf)));
        // ⟨Pg, {I−P}g⟩_v by quadrature
        let pc = means(&pf);
        let qc = means(&qf);
        let cross: f64 = (0..nodes.v.len())
            .map(|q| {
                let x = nodes.jet(q, &pc, dim).p;
                let y = nodes.jet(q, &qc, dim).p;
                nodes.w[q] * x * y
            })
            .sum();
        mm = mm.max(cross.abs());
        let sum: Vec<f64> = pc.iter().zip(&qc).map(|(x, y)| x + y).collect();
        mm = mm.max(max_err(&sum, &c));
        e.macro_micro = e.macro_micro.max(mm);
    }
    Ok(e)
}
