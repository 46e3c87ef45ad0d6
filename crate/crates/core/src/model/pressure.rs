use rustfft::num_complex::Complex64;

use super::{CoupledState, Model};
use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SpectralGrid, VectorField};

/// Zero-mean solution of `div 𝔇(κ∇P) = div w` together with the flux
/// `𝔇(κ∇P)`, where `𝔇` is the 2/3 truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSolution {
    pub p: ScalarField,
    pub flux: VectorField,
    /// Residual `‖div w − div 𝔇(κ∇P)‖ / ‖∇w‖` after each iteration.
    pub residuals: Vec<f64>,
}

fn flux(grid: &SpectralGrid, kappa: &[f64], q: &ScalarField) -> VectorField {
    VectorField::new(
        (0..grid.dim())
            .map(|a| {
                let dq = grid.inverse(&grid.derivative(q, a));
                grid.product(kappa, &dq)
            })
            .collect(),
    )
}

fn norm(g: &ScalarField) -> f64 {
    g.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Fixed point `κ̄ ΔP^{m+1} = div w − div 𝔇((κ − κ̄)∇P^m)` with
/// `κ̄ = (max κ + min κ)/2`; the contraction factor is
/// `(max κ − min κ)/(max κ + min κ)`.
///
/// `kappa` is sampled on the physical grid, `w` is spectral.
pub fn solve_variable_poisson(
    grid: &SpectralGrid,
    kappa: &[f64],
    w: &VectorField,
    tol: f64,
    max_iter: usize,
) -> Result<PressureSolution> {
    let (kmin, kmax) = kappa
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    if !(kmin > 0.0) || !kmax.is_finite() {
        return Err(Error::invalid(format!(
            "pressure coefficient must be positive and finite, range [{kmin}, {kmax}]"
        )));
    }
    let kbar = 0.5 * (kmin + kmax);
    let target = grid.divergence(w);
    // residuals are measured against the size of ∇w so that the rounding
    // floor of a nearly solenoidal `w` does not stall the iteration
    let scale = (0..grid.len())
        .map(|i| grid.k_squared(i) * w.comps.iter().map(|c| c.data[i].norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let mut p = ScalarField::zeros(grid);
    if norm(&target) == 0.0 {
        return Ok(PressureSolution {
            flux: VectorField::zeros(grid),
            p,
            residuals: vec![0.0],
        });
    }
    let mut residuals = Vec::new();
    loop {
        let fl = flux(grid, kappa, &p);
        let r = target.sub(&grid.divergence(&fl));
        let rel = norm(&r) / scale;
        residuals.push(rel);
        if !rel.is_finite() {
            return Err(Error::PressureNotConverged { residuals });
        }
        if rel < tol {
            return Ok(PressureSolution { p, flux: fl, residuals });
        }
        if residuals.len() > max_iter {
            return Err(Error::PressureNotConverged { residuals });
        }
        p.axpy(1.0 / kbar, &grid.inverse_laplacian(&r));
        p.data[0] = Complex64::new(0.0, 0.0);
    }
}

impl Model {
    /// Pressure of the velocity form: with `ρ = 1 + ϱ` and the remaining
    /// velocity tendency `g`, solves `div(∇P/ρ) = div g` so that
    /// `g − ∇P/ρ` is divergence free.
    pub fn solve_pressure(&self, state: &CoupledState, g: &VectorField) -> Result<PressureSolution> {
        let grid = &self.grid;
        self.density_floor(&state.rho, state.t)?;
        let kappa: Vec<f64> = grid.inverse(&state.rho).iter().map(|r| 1.0 / (1.0 + r)).collect();
        solve_variable_poisson(
            grid,
            &kappa,
            g,
            self.options.pressure_tol,
            self.options.pressure_max_iter,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::ModelKind;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_density_is_one_poisson_solve() {
        let m = model(2, 16, 4, ModelKind::NsVfp);
        let grid = m.grid();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let g = VectorField::new(vec![
            random_field(grid, 5, 1.0, &mut rng),
            random_field(grid, 5, 1.0, &mut rng),
        ]);
        let mut s = super::super::CoupledState::equilibrium(grid, m.basis().clone(), 0.1);
        s.rho = ScalarField::zeros(grid);
        let sol = m.solve_pressure(&s, &g).unwrap();
        assert!(sol.residuals.len() <= 2);
        // closed form P̂ = −i k·ĝ/|k|²
        let exact = grid.inverse_laplacian(&grid.divergence(&g));
        assert!(sol.p.max_diff(&exact) < 1e-13);
        let proj = g.sub(&sol.flux);
        assert!(grid.max_abs(&grid.divergence(&proj)) < 1e-12);
    }

    #[test]
    fn contraction_bounded_by_density_contrast() {
        let m = model(2, 32, 4, ModelKind::NsVfp);
        let grid = m.grid();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let mut rho = random_field(grid, 4, 1.0, &mut rng);
        let peak = grid.max_abs(&rho);
        rho.scale(0.1 / peak);
        let mut s = super::super::CoupledState::equilibrium(grid, m.basis().clone(), 0.1);
        s.rho = rho;
        let g = VectorField::new(vec![
            random_field(grid, 6, 1.0, &mut rng),
            random_field(grid, 6, 1.0, &mut rng),
        ]);
        let sol = m.solve_pressure(&s, &g).unwrap();
        let bound = grid
            .inverse(&s.rho)
            .iter()
            .map(|r| (r / (1.0 + r)).abs())
            .fold(0.0, f64::max);
        for w in sol.residuals.windows(2).skip(1) {
            if w[1] > 1e-13 {
                assert!(w[1] / w[0] <= bound + 1e-3, "ratio {} > {bound}", w[1] / w[0]);
            }
        }
        assert!(*sol.residuals.last().unwrap() < 1e-10);
    }

    #[test]
    fn manufactured_solution_recovered() {
        let m = model(2, 32, 4, ModelKind::NsVfp);
        let grid = m.grid();
        let rho_fn = |x: [f64; 3]| 0.2 * (x[0] + 2.0 * x[1]).sin();
        let p_fn = |x: [f64; 3]| (2.0 * x[0]).cos() * x[1].sin() + 0.3 * (x[0] - x[1]).sin();
        let mut s = super::super::CoupledState::equilibrium(grid, m.basis().clone(), 0.1);
        s.rho = grid.from_fn(rho_fn);
        let p_star = grid.from_fn(p_fn);
        // g = 𝔇(∇P*/ρ) makes P* the exact discrete solution
        let kappa: Vec<f64> = grid.inverse(&s.rho).iter().map(|r| 1.0 / (1.0 + r)).collect();
        let g = flux(grid, &kappa, &p_star);
        let sol = m.solve_pressure(&s, &g).unwrap();
        assert!(sol.p.max_diff(&p_star) < 1e-9, "{}", sol.p.max_diff(&p_star));
    }

    #[test]
    fn degenerate_density_rejected() {
        let m = model(2, 8, 4, ModelKind::NsVfp);
        let mut s = super::super::CoupledState::equilibrium(m.grid(), m.basis().clone(), 0.1);
        s.rho.coefficients_mut()[0].re = -0.95;
        let g = VectorField::zeros(m.grid());
        assert!(matches!(m.solve_pressure(&s, &g), Err(Error::DegenerateDensity { .. })));
    }

    #[test]
    fn iteration_cap_reports_history() {
        let grid = SpectralGrid::new(1, 16, 2.0 * PI).unwrap();
        let kappa: Vec<f64> = (0..16).map(|i| 1.0 + 0.98 * grid.point(i)[0].sin()).collect();
        let w = VectorField::new(vec![grid.from_fn(|x| x[0].sin())]);
        match solve_variable_poisson(&grid, &kappa, &w, 1e-14, 3) {
            Err(Error::PressureNotConverged { residuals }) => assert_eq!(residuals.len(), 4),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
