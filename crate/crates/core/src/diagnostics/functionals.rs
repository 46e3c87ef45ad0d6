use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SobolevWeights, SpectralGrid};
use crate::hermite::{gamma_ij, maxwellian, weighted_micro_norm_sq_with, HermiteField, VelocityBasis};
use crate::model::{CoupledState, Model};

/// The four summands of the dissipation functional at derivative order `m`:
/// `‖b − u‖²_{H^m} + ‖{I−P}f‖²_{L²_{v,ν}(H^m)} + ‖∇(a,b)‖²_{H^{m−1}} + ‖∇P‖²_{H^{m−1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Dissipation {
    pub order: usize,
    pub drag: f64,
    pub micro: f64,
    pub grad_ab: f64,
    pub grad_p: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.drag + self.micro + self.grad_ab + self.grad_p
    }
}

/// Largest derivative order not exceeding `m` that the grid resolves: the
/// retained band must hold at least `m + 1` nonzero wavenumbers per axis.
pub fn effective_order(grid: &SpectralGrid, m: usize) -> usize {
    let kcut = grid.points_per_axis() / 3;
    m.min(kcut.saturating_sub(1)).max(1)
}

fn grad_sum_sq(grid: &SpectralGrid, g: &ScalarField, w: &SobolevWeights) -> f64 {
    (0..grid.dim())
        .map(|j| grid.sobolev_norm_sq_with(&grid.derivative(g, j), w))
        .sum()
}

/// Plancherel evaluation of the dissipation with a given pressure `p`.
pub fn dissipation_with_pressure(
    grid: &SpectralGrid,
    state: &CoupledState,
    p: &ScalarField,
    order: usize,
) -> Dissipation {
    let w = grid.sobolev_weights(order);
    let wl = grid.sobolev_weights(order.saturating_sub(1));
    let f = &state.f;
    let d = grid.dim();
    let drag = (0..d)
        .map(|i| grid.sobolev_norm_sq_with(&f.momentum(i).sub(&state.u.comps[i]), &w))
        .sum();
    let grad_ab = (0..=d).map(|i| grad_sum_sq(grid, &f.coeffs[i], &wl)).sum();
    Dissipation {
        order,
        drag,
        micro: weighted_micro_norm_sq_with(f, grid, &w),
        grad_ab,
        grad_p: grad_sum_sq(grid, p, &wl),
    }
}

/// Dissipation with the pressure recomputed from the state.
pub fn dissipation_d(model: &Model, state: &CoupledState, order: usize) -> Result<Dissipation> {
    let p = model.rhs(state)?.pressure.p;
    Ok(dissipation_with_pressure(model.grid(), state, &p, order))
}

/// Physical samples of `∂^α g` for every `|α| ≤ m`.
fn derivative_samples(grid: &SpectralGrid, g: &ScalarField, m: usize) -> Vec<Vec<f64>> {
    crate::fourier::multi_indices(grid.dim(), m)
        .into_iter()
        .map(|alpha| {
            let mut d = g.clone();
            for (axis, &count) in alpha.iter().enumerate().take(grid.dim()) {
                for _ in 0..count {
                    d = grid.derivative(&d, axis);
                }
            }
            grid.inverse(&d)
        })
        .collect()
}

/// Tensor Gauss–Hermite nodes with `p_β`, `∂_{v_i} p_β` and `|v|²` tabulated.
struct VelocityTable {
    weights: Vec<f64>,
    v: Vec<[f64; 3]>,
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<[f64; 3]>>,
}

impl VelocityTable {
    fn new(basis: &VelocityBasis) -> Self {
        let dim = basis.dim();
        let (v, weights) = basis.quadrature().tensor(dim);
        let nv = basis.max_degree();
        let mut p = Vec::with_capacity(v.len());
        let mut dp = Vec::with_capacity(v.len());
        for node in &v {
            let axes: Vec<Vec<f64>> = (0..dim)
                .map(|a| crate::hermite::normalized_hermite(nv, node[a]))
                .collect();
            let mut pv = Vec::with_capacity(basis.len());
            let mut dv = Vec::with_capacity(basis.len());
            for beta in basis.multi_indices() {
                pv.push((0..dim).map(|a| axes[a][beta.get(a)]).product());
                let mut g = [0.0; 3];
                for (i, gi) in g.iter_mut().enumerate().take(dim) {
                    // p_k' = √k p_{k−1}
                    let k = beta.get(i);
                    if k == 0 {
                        continue;
                    }
                    *gi = (k as f64).sqrt()
                        * (0..dim)
                            .map(|a| if a == i { axes[a][k - 1] } else { axes[a][beta.get(a)] })
                            .product::<f64>();
                }
                dv.push(g);
            }
            p.push(pv);
            dp.push(dv);
        }
        Self { weights, v, p, dp }
    }

    /// `∫ (|∇_v g|² + (1 + |v|²) g²) dv` for `g = Σ c_β H_β`, using
    /// `∇_v g = (∇p − v p/2)√M`.
    fn nu_form(&self, c: &[f64], dim: usize) -> f64 {
        let mut total = 0.0;
        for (q, w) in self.weights.iter().enumerate() {
            let v = self.v[q];
            let mut p = 0.0;
            let mut g = [0.0; 3];
            for (b, &cb) in c.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                p += cb * self.p[q][b];
                for i in 0..dim {
                    g[i] += cb * self.dp[q][b][i];
                }
            }
            let v2: f64 = v.iter().take(dim).map(|x| x * x).sum();
            let grad: f64 = (0..dim).map(|i| (g[i] - 0.5 * v[i] * p).powi(2)).sum();
            total += w * (grad + (1.0 + v2) * p * p);
        }
        total
    }
}

/// Second evaluation of [`dissipation_with_pressure`]: every spatial
/// integral is a grid sum of physical derivative samples and the velocity
/// weight is integrated by Gauss–Hermite quadrature.
pub fn dissipation_physical(
    grid: &SpectralGrid,
    state: &CoupledState,
    p: &ScalarField,
    order: usize,
) -> Dissipation {
    let f = &state.f;
    let basis = f.basis();
    let d = grid.dim();
    let cell = grid.cell_volume();
    let sq = |samples: Vec<Vec<f64>>| samples.iter().flatten().map(|v| v * v).sum::<f64>() * cell;
    let low = order.saturating_sub(1);
    let drag = (0..d)
        .map(|i| sq(derivative_samples(grid, &f.momentum(i).sub(&state.u.comps[i]), order)))
        .sum();
    let grads = |g: &ScalarField| -> f64 {
        (0..d)
            .map(|j| sq(derivative_samples(grid, &grid.derivative(g, j), low)))
            .sum()
    };
    let grad_ab = (0..=d).map(|i| grads(&f.coeffs[i])).sum();
    let table = VelocityTable::new(basis);
    let micro_idx: Vec<usize> = (0..basis.len()).filter(|&i| basis.degree(i) >= 2).collect();
    let samples: Vec<Vec<Vec<f64>>> = micro_idx
        .iter()
        .map(|&b| derivative_samples(grid, &f.coeffs[b], order))
        .collect();
    let mut micro = 0.0;
    let mut c = vec![0.0; basis.len()];
    for alpha in 0..samples.first().map_or(0, |s| s.len()) {
        for x in 0..grid.len() {
            for (k, &b) in micro_idx.iter().enumerate() {
                c[b] = samples[k][alpha][x];
            }
            micro += table.nu_form(&c, d);
        }
    }
    Dissipation {
        order,
        drag,
        micro: micro * cell,
        grad_ab,
        grad_p: grads(p),
    }
}

/// Cross functional
/// `E₀ = Σ_{|α|≤m} Σ_{i,j} ∫ ∂^α(∂_i b_j + ∂_j b_i) ∂^α Γ_ij({I−P}f) − Σ_{|α|≤m} ∫ ∂^α a ∂^α div b`.
///
/// `Γ_ij` only sees `|β| = 2`, where `{I−P}f` and `f` agree.
pub fn lyapunov_e0(grid: &SpectralGrid, f: &HermiteField, order: usize) -> Result<f64> {
    let w = grid.sobolev_weights(order);
    let d = grid.dim();
    let pairing = |g: &ScalarField, h: &ScalarField| -> f64 {
        grid.volume()
            * g.data
                .iter()
                .zip(&h.data)
                .zip(w.as_slice())
                .map(|((x, y), w)| w * (x * y.conj()).re)
                .sum::<f64>()
    };
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            let sym = grid
                .derivative(f.momentum(j), i)
                .add(&grid.derivative(f.momentum(i), j));
            total += pairing(&sym, &gamma_ij(f, i, j)?);
        }
    }
    let b = crate::fourier::VectorField::new((0..d).map(|i| f.momentum(i).clone()).collect());
    total -= pairing(f.density(), &grid.divergence(&b));
    Ok(total)
}

/// [`lyapunov_e0`] from physical derivative samples.
pub fn lyapunov_e0_physical(grid: &SpectralGrid, f: &HermiteField, order: usize) -> Result<f64> {
    let d = grid.dim();
    let cell = grid.cell_volume();
    let pair = |g: &ScalarField, h: &ScalarField| -> f64 {
        let gs = derivative_samples(grid, g, order);
        let hs = derivative_samples(grid, h, order);
        gs.iter()
            .flatten()
            .zip(hs.iter().flatten())
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * cell
    };
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            let sym = grid
                .derivative(f.momentum(j), i)
                .add(&grid.derivative(f.momentum(i), j));
            total += pair(&sym, &gamma_ij(f, i, j)?);
        }
    }
    let b = crate::fourier::VectorField::new((0..d).map(|i| f.momentum(i).clone()).collect());
    total -= pair(f.density(), &grid.divergence(&b));
    Ok(total)
}

/// `min F = min (M + √M f)` over every `stride`-th grid point per axis and the
/// tensor Gauss–Hermite nodes of the basis.
pub fn positivity_min_f(grid: &SpectralGrid, f: &HermiteField, stride: usize) -> Result<f64> {
    if stride == 0 {
        return Err(Error::invalid("positivity stride must be positive"));
    }
    let basis = f.basis();
    let dim = basis.dim();
    let n = grid.points_per_axis();
    let points: Vec<usize> = (0..grid.len())
        .filter(|&idx| {
            let mut rem = idx;
            (0..dim).all(|_| {
                let j = rem % n;
                rem /= n;
                j.is_multiple_of(stride)
            })
        })
        .collect();
    let phys: Vec<Vec<f64>> = f.coeffs.iter().map(|c| grid.inverse(c)).collect();
    let (nodes, _) = basis.quadrature().tensor(dim);
    let tables: Vec<(f64, Vec<f64>)> = nodes
        .iter()
        .map(|v| (maxwellian(&v[..dim]), basis.eval_polynomial(&v[..dim])))
        .collect();
    let mut min = f64::INFINITY;
    for &x in &points {
        for (m, p) in &tables {
            let s: f64 = phys.iter().zip(p).map(|(c, pb)| c[x] * pb).sum();
            min = min.min(m * (1.0 + s));
        }
    }
    Ok(min)
}

/// `‖(ϱ, u)‖²_{H^m} + ‖f‖²_{L²_v(H^m)}`, or the same without `ϱ`.
pub fn composite_energy(grid: &SpectralGrid, state: &CoupledState, w: &SobolevWeights, with_rho: bool) -> f64 {
    let mut e = grid.sobolev_norm_sq_vec(&state.u, w);
    e += state
        .f
        .coeffs
        .iter()
        .map(|c| grid.sobolev_norm_sq_with(c, w))
        .sum::<f64>();
    if with_rho {
        e += grid.sobolev_norm_sq_with(&state.rho, w);
    }
    e
}
