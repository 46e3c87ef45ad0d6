//! Perturbation form of the coupled fluid–kinetic system.
//!
//! Unknowns are the density perturbation `ϱ = ρ − 1`, the divergence-free
//! velocity `u` and the kinetic perturbation `f = (F − M)/√M`:
//!
//! ```text
//! ∂_t ϱ + u·∇ϱ = 0
//! ∂_t u + u·∇u + ∇P/(1+ϱ) + (u − b) + a u = μ Δu/(1+ϱ),   div u = 0
//! ∂_t f + v·∇_x f − (1+ϱ) [Lf + (½u·v − u·∇_v) f + u·v√M] = 0
//! ```
//!
//! In Hermite coefficients the kinetic line reads
//! `∂_t c_β = −Σ_i ∂_i(√β_i c_{β−e_i} + √(β_i+1) c_{β+e_i})
//!            + (1+ϱ)[−|β| c_β + Σ_i √β_i u_i c_{β−e_i} + δ_{β,e_i} u_i]`.

mod inviscid;
mod pressure;
mod rhs;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SpectralGrid, VectorField};
use crate::hermite::{HermiteField, VelocityBasis};

pub use inviscid::ErrorRecord;
pub use pressure::{solve_variable_poisson, PressureSolution};
pub use rhs::{MomentResiduals, RhsParts, Tendency};

pub(crate) use rhs::ExplicitTerms;

/// Smallest admissible `1 + ϱ` anywhere on the grid.
pub const MIN_DENSITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Viscous fluid, `μ > 0`.
    NsVfp,
    /// Inviscid fluid; the viscosity of the state is ignored.
    EulerVfp,
}

/// Switches used by tests and experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Fluid–kinetic exchange (drag, source, drift and the `ϱ`-weighted
    /// kinetic terms). Off leaves free streaming plus `Lf` on the kinetic
    /// side and a pure variable-density fluid.
    pub drag_coupling: bool,
    /// Off zeroes every explicitly treated term except free streaming.
    pub explicit_terms: bool,
    pub pressure_tol: f64,
    pub pressure_max_iter: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            drag_coupling: true,
            explicit_terms: true,
            pressure_tol: 1e-12,
            pressure_max_iter: 200,
        }
    }
}

/// Full simulation state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub f: HermiteField,
    pub mu: f64,
    pub t: f64,
}

impl CoupledState {
    pub fn equilibrium(grid: &SpectralGrid, basis: Arc<VelocityBasis>, mu: f64) -> Self {
        Self {
            rho: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
            f: HermiteField::zeros(basis, grid),
            mu,
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.u.is_finite() && self.f.is_finite()
    }

    /// Largest nodal difference over all fields.
    pub fn max_diff(&self, other: &CoupledState) -> f64 {
        self.rho
            .max_diff(&other.rho)
            .max(self.u.max_diff(&other.u))
            .max(self.f.max_diff(&other.f))
    }
}

/// Discretized right-hand side for one model on one grid and basis.
#[derive(Debug, Clone)]
pub struct Model {
    grid: Arc<SpectralGrid>,
    basis: Arc<VelocityBasis>,
    kind: ModelKind,
    options: ModelOptions,
}

impl Model {
    pub fn new(
        grid: Arc<SpectralGrid>,
        basis: Arc<VelocityBasis>,
        kind: ModelKind,
        options: ModelOptions,
    ) -> Result<Self> {
        if grid.dim() != basis.dim() {
            return Err(Error::invalid(format!(
                "grid is {}-d but velocity basis is {}-d",
                grid.dim(),
                basis.dim()
            )));
        }
        if !(options.pressure_tol > 0.0) || options.pressure_max_iter == 0 {
            return Err(Error::invalid("pressure tolerance and iteration cap must be positive"));
        }
        Ok(Self {
            grid,
            basis,
            kind,
            options,
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn basis(&self) -> &Arc<VelocityBasis> {
        &self.basis
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    /// Viscosity actually used for `state`.
    pub fn viscosity(&self, state: &CoupledState) -> f64 {
        match self.kind {
            ModelKind::NsVfp => state.mu,
            ModelKind::EulerVfp => 0.0,
        }
    }

    /// Checks shapes, finiteness and the density bound.
    pub fn validate(&self, state: &CoupledState) -> Result<()> {
        let n = self.grid.len();
        let lens = std::iter::once(state.rho.len())
            .chain(state.u.comps.iter().map(|c| c.len()))
            .chain(state.f.coeffs.iter().map(|c| c.len()));
        for len in lens {
            if len != n {
                return Err(Error::GridMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if state.u.dim() != self.grid.dim() {
            return Err(Error::invalid("velocity has the wrong number of components"));
        }
        if **state.f.basis() != *self.basis {
            return Err(Error::BasisMismatch);
        }
        if !(0.0..1.0).contains(&state.mu) {
            return Err(Error::invalid(format!("viscosity must lie in [0, 1), got {}", state.mu)));
        }
        if !state.is_finite() {
            return Err(Error::NonFinite {
                t: state.t,
                what: "state",
            });
        }
        self.density_floor(&state.rho, state.t).map(|_| ())
    }

    /// `min(1 + ϱ)` on the grid, or an error below [`MIN_DENSITY`].
    pub fn density_floor(&self, rho: &ScalarField, t: f64) -> Result<f64> {
        let min = self
            .grid
            .inverse(rho)
            .iter()
            .fold(f64::INFINITY, |m, &r| m.min(1.0 + r));
        if min.is_nan() {
            return Err(Error::NonFinite { t, what: "density" });
        }
        if min < MIN_DENSITY {
            return Err(Error::DegenerateDensity { t, min });
        }
        Ok(min)
    }

    /// Total mass `∫ϱ` and momentum `∫(1+ϱ)u + ∫b`.
    pub fn conservation_totals(&self, state: &CoupledState) -> (f64, Vec<f64>) {
        let g = &self.grid;
        let mass = g.integral(&state.rho);
        let momentum = (0..g.dim())
            .map(|i| {
                g.integral(&state.u.comps[i])
                    + g.inner(&state.rho, &state.u.comps[i])
                    + g.integral(state.f.momentum(i))
            })
            .collect();
        (mass, momentum)
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn validation_catches_bad_states() {
        let m = model(2, 8, 4, ModelKind::NsVfp);
        let mut s = CoupledState::equilibrium(m.grid(), m.basis().clone(), 0.1);
        assert!(m.validate(&s).is_ok());
        s.rho.coefficients_mut()[0].re = -0.95;
        assert!(matches!(m.validate(&s), Err(Error::DegenerateDensity { .. })));
        s.rho.coefficients_mut()[0].re = 0.0;
        s.mu = 1.5;
        assert!(m.validate(&s).is_err());
        s.mu = 0.1;
        s.u.comps[0].coefficients_mut()[3].re = f64::NAN;
        assert!(matches!(m.validate(&s), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn euler_ignores_viscosity() {
        let m = model(2, 8, 4, ModelKind::EulerVfp);
        let s = CoupledState::equilibrium(m.grid(), m.basis().clone(), 0.3);
        assert_eq!(m.viscosity(&s), 0.0);
    }

    #[test]
    fn equilibrium_totals_vanish() {
        let m = model(2, 8, 4, ModelKind::NsVfp);
        let s = CoupledState::equilibrium(m.grid(), m.basis().clone(), 0.1);
        let (mass, mom) = m.conservation_totals(&s);
        assert_eq!(mass, 0.0);
        assert!(mom.iter().all(|&v| v == 0.0));
    }
}
