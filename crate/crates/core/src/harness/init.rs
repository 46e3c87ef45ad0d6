//! Seeded band-limited initial data.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SpectralGrid, VectorField};
use crate::hermite::{HermiteField, VelocityBasis};
use crate::model::CoupledState;

/// `min(1 + ϱ₀)` must stay above this.
pub const INITIAL_DENSITY_FLOOR: f64 = 0.5;

/// Zero-mean field with i.i.d. normal coefficients on `k_min ≤ |k| ≤ k_max`
/// (inside the dealiasing band), Hermitian by construction.
pub(crate) fn band_field(grid: &SpectralGrid, band: (f64, f64), rng: &mut ChaCha8Rng) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for i in 0..grid.len() {
        let j = grid.mirror_index(i);
        if j < i || !grid.in_dealias_band(i) {
            continue;
        }
        let k = grid.wavenumber_index(i);
        let mag = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
        if mag == 0.0 || mag < band.0 || mag > band.1 {
            continue;
        }
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if i == j { 0.0 } else { StandardNormal.sample(rng) };
        let z = Complex64::new(re, im);
        out.data[i] = z;
        out.data[j] = z.conj();
    }
    out
}

/// Composite energy `‖(ϱ,u)‖²_{H^m ∩ Ḃ^{−s}} + ‖f‖²_{H^m ∩ Ḃ^{−s}}`, with
/// the intersection norm squared as the sum of squares and the Besov part
/// of `f` taken as `Ḃ^{−s}_{2,∞}(L²_v)`.
pub fn initial_energy(grid: &SpectralGrid, state: &CoupledState, order: usize, s: f64) -> f64 {
    let w = grid.sobolev_weights(order);
    let sob = grid.sobolev_norm_sq_with(&state.rho, &w)
        + grid.sobolev_norm_sq_vec(&state.u, &w)
        + state
            .f
            .coeffs
            .iter()
            .map(|c| grid.sobolev_norm_sq_with(c, &w))
            .sum::<f64>();
    let besov = grid.besov_block_norm(&state.rho, s).powi(2)
        + grid.besov_block_norm_many(&state.u.comps, s).powi(2)
        + grid.besov_block_norm_many(&state.f.coeffs, s).powi(2);
    sob + besov
}

/// Builds `(ϱ₀, u₀, f₀)` from the `init` section:
///
/// * `ϱ₀`, the fluctuating part of `u₀` (Leray projected), `a₀`, `b₀` and
///   the `|β| = 2, 3` coefficients (times `micro_amplitude`) are drawn on
///   the active band with zero mean;
/// * a uniform velocity is added so that total momentum vanishes;
/// * everything is scaled so that [`initial_energy`] equals `ε`.
///
/// With a common scale `λ` the fluctuations are `O(λ)` and the uniform
/// velocity `O(λ²)`, so the energy is `λ² A + λ⁴ B` and `λ²` solves a quadratic.
pub fn generate_initial_data(
    cfg: &RunConfig,
    grid: &SpectralGrid,
    basis: Arc<VelocityBasis>,
) -> Result<CoupledState> {
    let init = &cfg.init;
    let mu = cfg.model.mu;
    let mut state = CoupledState::equilibrium(grid, basis.clone(), mu);
    if init.amplitude == 0.0 {
        return Ok(state);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    let band = (init.k_min, init.k_max);
    let d = grid.dim();
    let rho = band_field(grid, band, &mut rng);
    let raw = VectorField::new((0..d).map(|_| band_field(grid, band, &mut rng)).collect());
    let u = grid.leray_project(&raw)?;
    let mut f = HermiteField::zeros(basis.clone(), grid);
    for (beta, c) in f.coeffs.iter_mut().enumerate() {
        let deg = basis.degree(beta);
        if deg <= 1 {
            *c = band_field(grid, band, &mut rng);
        } else if deg <= 3 {
            *c = band_field(grid, band, &mut rng).scaled(init.micro_amplitude);
        }
    }
    state.rho = rho;
    state.u = u;
    state.f = f;
    if state.rho.is_zero() && state.u.is_zero() && state.f.is_zero() {
        return Err(Error::InfeasibleAmplitude(format!(
            "band [{}, {}] holds no resolved wavenumbers",
            init.k_min, init.k_max
        )));
    }

    // momentum ∫(1+ϱ)u + ∫b at unit scale; ∫u = ∫b = 0 so only ∫ϱu is left
    let vol = grid.volume();
    let drift: Vec<f64> = (0..d)
        .map(|i| -grid.inner(&state.rho, &state.u.comps[i]) / vol)
        .collect();
    let s = cfg.diagnostics.s;
    let a = initial_energy(grid, &state, init.energy_order, s);
    // the uniform velocity sits in the mean mode, orthogonal to everything
    // else and invisible to the dyadic blocks
    let b = vol * drift.iter().map(|v| v * v).sum::<f64>();
    let eps = init.amplitude;
    let lam2 = if b == 0.0 {
        eps / a
    } else {
        2.0 * eps / (a + (a * a + 4.0 * b * eps).sqrt())
    };
    let lam = lam2.sqrt();
    state.rho.scale(lam);
    state.u.scale(lam);
    state.f.scale(lam);
    for (i, v) in drift.iter().enumerate() {
        state.u.comps[i].coefficients_mut()[0] = Complex64::new(lam2 * v, 0.0);
    }
    let min = grid
        .inverse(&state.rho)
        .iter()
        .fold(f64::INFINITY, |m, r| m.min(1.0 + r));
    if min < INITIAL_DENSITY_FLOOR {
        return Err(Error::InfeasibleAmplitude(format!(
            "amplitude {eps} gives min(1 + rho) = {min:.4} < {INITIAL_DENSITY_FLOOR}"
        )));
    }
    Ok(state)
}
