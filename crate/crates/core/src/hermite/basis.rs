use std::collections::HashMap;
use std::fmt;

use super::quadrature::{normalized_hermite, GaussHermite};
use crate::error::{Error, Result};

/// Velocity multi-index `β`; entries past the basis dimension are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(pub [u8; 3]);

impl MultiIndex {
    pub fn zero() -> Self {
        Self([0; 3])
    }

    pub fn unit(axis: usize) -> Self {
        let mut b = [0; 3];
        b[axis] = 1;
        Self(b)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn get(&self, axis: usize) -> usize {
        self.0[axis] as usize
    }

    pub fn raised(&self, axis: usize) -> Self {
        let mut b = self.0;
        b[axis] += 1;
        Self(b)
    }

    pub fn lowered(&self, axis: usize) -> Option<Self> {
        let mut b = self.0;
        if b[axis] == 0 {
            return None;
        }
        b[axis] -= 1;
        Some(Self(b))
    }

    /// `β!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&b| (1..=b as u64).map(|k| k as f64).product::<f64>())
            .product()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "β{:?}", self.0)
    }
}

/// Coupling `(axis, index, coefficient)` between two basis elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub axis: usize,
    pub index: usize,
    pub coef: f64,
}

/// Orthonormal Hermite functions `H_β(v) = Π_i p_{β_i}(v_i) √M(v)` with
/// `|β| ≤ N_v`, listed in graded-lexicographic order.
///
/// Index 0 is `β = 0` and indices `1..=dim` are the unit vectors `e_i`.
#[derive(Debug, Clone)]
pub struct VelocityBasis {
    dim: usize,
    max_degree: usize,
    /// Basis indices followed by the degree `N_v + 1` shell, which is only
    /// used as an output space for untruncated operator images.
    indices: Vec<MultiIndex>,
    n_modes: usize,
    lookup: HashMap<MultiIndex, usize>,
    quadrature: GaussHermite,
    lower: Vec<Vec<Link>>,
    upper: Vec<Vec<Link>>,
}

impl PartialEq for VelocityBasis {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.max_degree == other.max_degree
    }
}

fn graded_lex(dim: usize, degree: usize) -> Vec<MultiIndex> {
    fn rec(dim: usize, axis: usize, left: usize, cur: &mut [u8; 3], out: &mut Vec<MultiIndex>) {
        if axis == dim - 1 {
            cur[axis] = left as u8;
            out.push(MultiIndex(*cur));
            cur[axis] = 0;
            return;
        }
        for b in (0..=left).rev() {
            cur[axis] = b as u8;
            rec(dim, axis + 1, left - b, cur, out);
        }
        cur[axis] = 0;
    }
    let mut out = Vec::new();
    rec(dim, 0, degree, &mut [0; 3], &mut out);
    out
}

impl VelocityBasis {
    pub fn new(dim: usize, max_degree: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("velocity dimension must be 1..=3, got {dim}")));
        }
        if !(3..=40).contains(&max_degree) {
            return Err(Error::invalid(format!(
                "Hermite truncation must be in 3..=40, got {max_degree}"
            )));
        }
        let mut indices = Vec::new();
        for g in 0..=max_degree {
            indices.extend(graded_lex(dim, g));
        }
        let n_modes = indices.len();
        indices.extend(graded_lex(dim, max_degree + 1));
        let lookup = indices.iter().enumerate().map(|(i, b)| (*b, i)).collect::<HashMap<_, _>>();

        let mut lower = vec![Vec::new(); n_modes];
        let mut upper = vec![Vec::new(); n_modes];
        for (i, beta) in indices[..n_modes].iter().enumerate() {
            for axis in 0..dim {
                if let Some(l) = beta.lowered(axis) {
                    lower[i].push(Link {
                        axis,
                        index: lookup[&l],
                        coef: (beta.get(axis) as f64).sqrt(),
                    });
                }
                let r = beta.raised(axis);
                if r.degree() <= max_degree {
                    upper[i].push(Link {
                        axis,
                        index: lookup[&r],
                        coef: ((beta.get(axis) + 1) as f64).sqrt(),
                    });
                }
            }
        }
        Ok(Self {
            dim,
            max_degree,
            indices,
            n_modes,
            lookup,
            quadrature: GaussHermite::new(2 * max_degree + 2),
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation degree `N_v`.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of retained coefficients `|{β : |β| ≤ N_v}|`.
    pub fn len(&self) -> usize {
        self.n_modes
    }

    pub fn is_empty(&self) -> bool {
        self.n_modes == 0
    }

    pub fn multi_indices(&self) -> &[MultiIndex] {
        &self.indices[..self.n_modes]
    }

    pub fn multi_index(&self, idx: usize) -> MultiIndex {
        self.indices[idx]
    }

    /// Position of `β` in the basis, if retained.
    pub fn index_of(&self, beta: MultiIndex) -> Option<usize> {
        self.lookup.get(&beta).copied().filter(|&i| i < self.n_modes)
    }

    pub(crate) fn extended_len(&self) -> usize {
        self.indices.len()
    }

    pub(crate) fn extended_index_of(&self, beta: MultiIndex) -> Option<usize> {
        self.lookup.get(&beta).copied()
    }

    /// Links `β → β - e_i` with coefficient `√β_i`.
    pub fn lower_links(&self, idx: usize) -> &[Link] {
        &self.lower[idx]
    }

    /// Links `β → β + e_i` (retained only) with coefficient `√(β_i + 1)`.
    pub fn upper_links(&self, idx: usize) -> &[Link] {
        &self.upper[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.indices[idx].degree()
    }

    /// One-dimensional rule of order `2N_v + 2`.
    pub fn quadrature(&self) -> &GaussHermite {
        &self.quadrature
    }

    /// `H_β(v)` for every retained `β`.
    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        let sqrt_m = maxwellian(&v[..self.dim]).sqrt();
        self.eval_polynomial(v).into_iter().map(|p| p * sqrt_m).collect()
    }

    /// `H_β(v)/√M(v) = Π_i p_{β_i}(v_i)` for every retained `β`.
    pub fn eval_polynomial(&self, v: &[f64]) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim)
            .map(|a| normalized_hermite(self.max_degree, v[a]))
            .collect();
        self.multi_indices()
            .iter()
            .map(|b| (0..self.dim).map(|a| per_axis[a][b.get(a)]).product())
            .collect()
    }
}

/// Global Maxwellian `(2π)^{-d/2} e^{-|v|²/2}`, `d = v.len()`.
pub fn maxwellian(v: &[f64]) -> f64 {
    let d = v.len() as f64;
    let v2: f64 = v.iter().map(|x| x * x).sum();
    (2.0 * std::f64::consts::PI).powf(-0.5 * d) * (-0.5 * v2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_values() {
        let m3 = maxwellian(&[0.0, 0.0, 0.0]);
        assert!((m3 - 0.063_493_635_934_240_97).abs() < 1e-15);
        let m2 = maxwellian(&[0.0, 0.0]);
        assert!((m2 - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-16);
        let mut last = m3;
        for r in 1..40 {
            let m = maxwellian(&[r as f64 * 0.25, 0.0, 0.0]);
            assert!(m < last && m > 0.0 || m == 0.0);
            last = m;
        }
        assert!(maxwellian(&[40.0, 0.0, 0.0]) < 1e-300);
    }

    #[test]
    fn graded_lexicographic_layout() {
        let b = VelocityBasis::new(2, 3).unwrap();
        let got: Vec<[u8; 3]> = b.multi_indices().iter().map(|m| m.0).collect();
        assert_eq!(
            &got[..6],
            &[[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [1, 1, 0], [0, 2, 0]]
        );
        assert_eq!(b.len(), 10);
        let b3 = VelocityBasis::new(3, 8).unwrap();
        assert_eq!(b3.len(), 165);
        assert_eq!(VelocityBasis::new(2, 8).unwrap().len(), 45);
    }

    #[test]
    fn gram_matrix_is_identity() {
        for (dim, nv) in [(1, 12), (2, 12), (3, 5)] {
            let b = VelocityBasis::new(dim, nv).unwrap();
            let (pts, wts) = b.quadrature().tensor(dim);
            let n = b.len();
            let mut gram = vec![0.0; n * n];
            for (v, w) in pts.iter().zip(&wts) {
                // ∫ H_β H_γ dv = Σ w_q p_β p_γ with M-weighted nodes
                let p = b.eval_polynomial(v);
                for i in 0..n {
                    for j in 0..n {
                        gram[i * n + j] += w * p[i] * p[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[i * n + j] - e).abs() < 1e-12, "dim {dim} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_truncation() {
        assert!(VelocityBasis::new(2, 2).is_err());
        assert!(VelocityBasis::new(0, 4).is_err());
    }
}
