//! Gauss–Hermite rules for the standard normal weight `M_1(v) = e^{-v²/2}/√(2π)`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Normalized probabilists' Hermite polynomials `p_k = He_k/√(k!)`, `k = 0..=n`,
/// evaluated at `x`.
pub fn normalized_hermite(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let next = (x * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
        p.push(next);
    }
    p
}

/// One-dimensional Gauss rule; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    ///
    /// Golub–Welsch seeds the nodes, Newton on `p_n` polishes them, and the
    /// weights come from the Christoffel function `1/Σ_{k<n} p_k(x)²`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for x in &mut nodes {
            for _ in 0..4 {
                let p = normalized_hermite(n, *x);
                let dp = (n as f64).sqrt() * p[n - 1];
                if dp == 0.0 {
                    break;
                }
                let step = p[n] / dp;
                *x -= step;
                if step.abs() < 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        // exact symmetry
        for i in 0..n / 2 {
            let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                let p = normalized_hermite(n - 1, x);
                1.0 / p.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ g(v) M_1(v) dv`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }

    /// Tensor-product nodes and weights in `dim` dimensions.
    pub fn tensor(&self, dim: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
        let n = self.len();
        let count = n.pow(dim as u32);
        let mut pts = Vec::with_capacity(count);
        let mut wts = Vec::with_capacity(count);
        for flat in 0..count {
            let mut v = [0.0; 3];
            let mut w = 1.0;
            let mut rem = flat;
            for axis in (0..dim).rev() {
                let j = rem % n;
                rem /= n;
                v[axis] = self.nodes[j];
                w *= self.weights[j];
            }
            pts.push(v);
            wts.push(w);
        }
        (pts, wts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_moments_match() {
        for n in [1, 2, 5, 12, 26] {
            let q = GaussHermite::new(n);
            assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            // E[v^{2k}] = (2k-1)!!
            let mut dfact = 1.0;
            for k in 1..n {
                dfact *= (2 * k - 1) as f64;
                let m = q.integrate(|x| x.powi(2 * k as i32));
                assert!((m - dfact).abs() < 1e-12 * dfact, "n={n} k={k}: {m} vs {dfact}");
            }
        }
    }

    #[test]
    fn nodes_are_roots() {
        let q = GaussHermite::new(9);
        for &x in q.nodes() {
            assert!(normalized_hermite(9, x)[9].abs() < 1e-12);
        }
    }
}
