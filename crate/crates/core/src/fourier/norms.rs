use std::collections::BTreeMap;

use super::{ScalarField, SpectralGrid, VectorField};

/// Plancherel multiplier `Σ_{|α|≤m} Π_i k_i^{2α_i}` tabulated on a grid.
#[derive(Debug, Clone)]
pub struct SobolevWeights {
    order: usize,
    weights: Vec<f64>,
}

impl SobolevWeights {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Squared L² norm of one dyadic block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellNorm {
    pub shell: i32,
    pub energy: f64,
}

/// All multi-indices `α ∈ ℕ^dim` with `|α| ≤ m`.
pub(crate) fn multi_indices(dim: usize, m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a0 in 0..=m {
        for a1 in 0..=(if dim > 1 { m - a0 } else { 0 }) {
            for a2 in 0..=(if dim > 2 { m - a0 - a1 } else { 0 }) {
                out.push([a0, a1, a2]);
            }
        }
    }
    out
}

impl SpectralGrid {
    pub fn sobolev_weights(&self, m: usize) -> SobolevWeights {
        let alphas = multi_indices(self.dim(), m);
        let weights = (0..self.len())
            .map(|i| {
                // derivatives vanish on Nyquist planes
                if self.nyquist[i] {
                    return 1.0;
                }
                let k = self.wavevector(i);
                alphas
                    .iter()
                    .map(|a| (0..3).map(|ax| k[ax].powi(2 * a[ax] as i32)).product::<f64>())
                    .sum()
            })
            .collect();
        SobolevWeights { order: m, weights }
    }

    /// `Σ_{|α|≤m} ‖∂^α g‖²_{L²}` evaluated in Fourier space.
    pub fn sobolev_norm_sq(&self, g: &ScalarField, m: usize) -> f64 {
        self.sobolev_norm_sq_with(g, &self.sobolev_weights(m))
    }

    pub fn sobolev_norm_sq_with(&self, g: &ScalarField, w: &SobolevWeights) -> f64 {
        self.volume()
            * g.data
                .iter()
                .zip(&w.weights)
                .map(|(c, w)| w * c.norm_sqr())
                .sum::<f64>()
    }

    pub fn sobolev_norm_sq_vec(&self, v: &VectorField, w: &SobolevWeights) -> f64 {
        v.comps.iter().map(|c| self.sobolev_norm_sq_with(c, w)).sum()
    }

    /// Same quantity as [`sobolev_norm_sq`](Self::sobolev_norm_sq), summed
    /// over physical grid samples of each derivative.
    pub fn sobolev_norm_sq_physical(&self, g: &ScalarField, m: usize) -> f64 {
        let mut total = 0.0;
        for alpha in multi_indices(self.dim(), m) {
            let mut d = g.clone();
            for (axis, &count) in alpha.iter().enumerate().take(self.dim()) {
                for _ in 0..count {
                    d = self.derivative(&d, axis);
                }
            }
            total += self.inverse(&d).iter().map(|v| v * v).sum::<f64>();
        }
        total * self.cell_volume()
    }

    /// `‖∇^m g‖²_{L²} = |Ω| Σ_k |k|^{2m} |ĝ_k|²`.
    pub fn homogeneous_norm_sq(&self, g: &ScalarField, m: usize) -> f64 {
        self.volume()
            * g.data
                .iter()
                .enumerate()
                .filter(|&(i, _)| m == 0 || !self.nyquist[i])
                .map(|(i, c)| self.k_squared(i).powi(m as i32) * c.norm_sqr())
                .sum::<f64>()
    }

    /// Squared L² norm of each sharp dyadic block `Δ_j g`.
    pub fn shell_energies(&self, g: &ScalarField) -> Vec<ShellNorm> {
        let mut acc: BTreeMap<i32, f64> = BTreeMap::new();
        for (i, c) in g.data.iter().enumerate() {
            if let Some(j) = self.shell_index(i) {
                *acc.entry(j).or_insert(0.0) += c.norm_sqr();
            }
        }
        let vol = self.volume();
        acc.into_iter()
            .map(|(shell, e)| ShellNorm {
                shell,
                energy: e * vol,
            })
            .collect()
    }

    /// Torus analogue of `sup_j 2^{-sj} ‖Δ_j g‖_{L²}` with sharp shell cutoffs.
    pub fn besov_block_norm(&self, g: &ScalarField, s: f64) -> f64 {
        besov_from_shells(&self.shell_energies(g), s)
    }

    /// Besov-type norm of a family of fields whose shell energies add
    /// (vector components, Hermite coefficients).
    pub fn besov_block_norm_many<'a>(
        &self,
        fields: impl IntoIterator<Item = &'a ScalarField>,
        s: f64,
    ) -> f64 {
        let mut acc: BTreeMap<i32, f64> = BTreeMap::new();
        for g in fields {
            for sn in self.shell_energies(g) {
                *acc.entry(sn.shell).or_insert(0.0) += sn.energy;
            }
        }
        let shells: Vec<ShellNorm> = acc
            .into_iter()
            .map(|(shell, energy)| ShellNorm { shell, energy })
            .collect();
        besov_from_shells(&shells, s)
    }
}

pub(crate) fn besov_from_shells(shells: &[ShellNorm], s: f64) -> f64 {
    shells
        .iter()
        .map(|sn| 2f64.powf(-s * sn.shell as f64) * sn.energy.sqrt())
        .fold(0.0, f64::max)
}
