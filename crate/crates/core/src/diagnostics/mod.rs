//! Functionals evaluated on snapshots: energies, the dissipation, the cross
//! Lyapunov term, conservation totals, positivity and decay fits.
//!
//! Everything here is a pure function of the state.

mod fit;
mod functionals;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::SobolevWeights;
use crate::hermite::coercivity_ratio;
use crate::model::{CoupledState, Model};

pub use fit::{fit_decay, interpolation_ratio, DecayFit};
pub use functionals::{
    composite_energy, dissipation_d, dissipation_physical, dissipation_with_pressure,
    effective_order, lyapunov_e0, lyapunov_e0_physical, positivity_min_f, Dissipation,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Orders at which the energies are recorded.
    pub m_set: Vec<usize>,
    /// Order of the dissipation; lowered on grids that cannot resolve it.
    pub order: usize,
    /// Order of the cross functional `E₀`.
    pub e0_order: usize,
    /// Exponent of the negative Besov norms.
    pub s: f64,
    /// Grid stride for the positivity scan.
    pub positivity_stride: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            m_set: vec![1, 2, 3],
            order: 3,
            e0_order: 2,
            s: 1.5,
            positivity_stride: 2,
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_set.is_empty() {
            return Err(Error::Config("diagnostics.m_set must not be empty".into()));
        }
        if self.m_set.iter().any(|&m| m > 6) || self.order > 6 || self.e0_order > 6 {
            return Err(Error::Config("derivative orders above 6 are not supported".into()));
        }
        if self.order == 0 {
            return Err(Error::Config("diagnostics.order must be at least 1".into()));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::Config(format!("diagnostics.s must be positive, got {}", self.s)));
        }
        if self.positivity_stride == 0 {
            return Err(Error::Config("diagnostics.positivity_stride must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `(m, ‖(ϱ,u)‖²_{H^m} + ‖f‖²_{L²_v(H^m)})`
    pub energy: Vec<(usize, f64)>,
    /// `(m, ‖u‖²_{H^m} + ‖f‖²_{L²_v(H^m)})`, the quantity expected to decay.
    pub energy_uf: Vec<(usize, f64)>,
    pub dissipation: Dissipation,
    pub lyapunov_e0: f64,
    pub besov_u: f64,
    pub besov_f: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    /// May be negative under truncation; reported as computed.
    pub min_f: f64,
    pub u_minus_b_l2: f64,
    /// `‖{I−P}f‖_{L²_{v,ν}(L²_x)}`
    pub micro_norm: f64,
    /// `‖∇(a,b)‖²_{H²}`
    pub grad_ab_h2: f64,
    /// `‖∇P‖²_{H²}`
    pub grad_p_h2: f64,
    /// `(−⟨Lf,f⟩ − ‖b‖²)/‖{I−P}f‖²_ν`; absent when the micro part vanishes.
    pub lambda0: Option<f64>,
    pub div_u_max: f64,
    pub r_a_max: f64,
    pub r_b_l2: f64,
    /// `‖u‖_{L²} + ‖f‖_{L²_{x,v}}`
    pub decay_norm: f64,
}

/// Precomputed weights for one model and configuration.
pub struct Diagnostics {
    model: Arc<Model>,
    config: DiagnosticsConfig,
    order: usize,
    weights: Vec<(usize, SobolevWeights)>,
    w0: SobolevWeights,
}

impl Diagnostics {
    pub fn new(model: Arc<Model>, config: DiagnosticsConfig) -> Result<Self> {
        config.validate()?;
        let grid = model.grid();
        let order = effective_order(grid, config.order);
        let weights = config
            .m_set
            .iter()
            .map(|&m| (m, grid.sobolev_weights(m)))
            .collect();
        let w0 = grid.sobolev_weights(0);
        Ok(Self {
            model,
            config,
            order,
            weights,
            w0,
        })
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn config(&self) -> &DiagnosticsConfig {
        &self.config
    }

    /// Dissipation order actually used.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Fixed CSV header; the energy columns follow `m_set` and the momentum
    /// columns the spatial dimension.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for (m, _) in &self.weights {
            h.push(format!("energy_h{m}"));
        }
        for (m, _) in &self.weights {
            h.push(format!("energy_uf_h{m}"));
        }
        for name in [
            "d_drag",
            "d_micro",
            "d_grad_ab",
            "d_grad_p",
            "d_total",
            "lyapunov_e0",
            "besov_u",
            "besov_f",
            "mass",
        ] {
            h.push(name.to_string());
        }
        for i in 0..self.model.grid().dim() {
            h.push(format!("momentum_{i}"));
        }
        for name in [
            "min_f",
            "u_minus_b_l2",
            "micro_norm",
            "grad_ab_h2",
            "grad_p_h2",
            "lambda0",
            "div_u_max",
            "r_a_max",
            "r_b_l2",
            "decay_norm",
        ] {
            h.push(name.to_string());
        }
        h
    }

    pub fn record(&self, state: &CoupledState) -> Result<DiagnosticsRecord> {
        let model = &*self.model;
        let grid = model.grid();
        let d = grid.dim();
        let parts = model.rhs(state)?;
        let p = &parts.pressure.p;
        let res = model.moment_equation_residuals(state, &parts.total())?;
        let dissipation = dissipation_with_pressure(grid, state, p, self.order);
        let h2 = if self.order == 3 {
            dissipation
        } else {
            dissipation_with_pressure(grid, state, p, 3)
        };
        let (mass, momentum) = model.conservation_totals(state);
        let slip: f64 = (0..d)
            .map(|i| grid.l2_norm_sq(&state.f.momentum(i).sub(&state.u.comps[i])))
            .sum();
        let energy = self
            .weights
            .iter()
            .map(|(m, w)| (*m, composite_energy(grid, state, w, true)))
            .collect();
        let energy_uf = self
            .weights
            .iter()
            .map(|(m, w)| (*m, composite_energy(grid, state, w, false)))
            .collect();
        let u_l2 = grid.sobolev_norm_sq_vec(&state.u, &self.w0).sqrt();
        let f_l2 = state.f.l2_norm_sq(grid).sqrt();
        Ok(DiagnosticsRecord {
            t: state.t,
            energy,
            energy_uf,
            dissipation,
            lyapunov_e0: lyapunov_e0(grid, &state.f, self.config.e0_order)?,
            besov_u: grid.besov_block_norm_many(&state.u.comps, self.config.s),
            besov_f: grid.besov_block_norm_many(&state.f.coeffs, self.config.s),
            mass,
            momentum,
            min_f: positivity_min_f(grid, &state.f, self.config.positivity_stride)?,
            u_minus_b_l2: slip.sqrt(),
            micro_norm: crate::hermite::weighted_micro_norm(&state.f, grid).sqrt(),
            grad_ab_h2: h2.grad_ab,
            grad_p_h2: h2.grad_p,
            lambda0: coercivity_ratio(&state.f, grid).lambda().ok(),
            div_u_max: grid.max_abs(&grid.divergence(&state.u)),
            r_a_max: res.r_a_max,
            r_b_l2: res.r_b_l2,
            decay_norm: u_l2 + f_l2,
        })
    }
}

impl DiagnosticsRecord {
    /// Values in [`Diagnostics::csv_header`] order; a missing `λ₀` is NaN.
    pub fn csv_values(&self) -> Vec<f64> {
        let d = &self.dissipation;
        let mut v = vec![self.t];
        v.extend(self.energy.iter().map(|e| e.1));
        v.extend(self.energy_uf.iter().map(|e| e.1));
        v.extend([
            d.drag,
            d.micro,
            d.grad_ab,
            d.grad_p,
            d.total(),
            self.lyapunov_e0,
            self.besov_u,
            self.besov_f,
            self.mass,
        ]);
        v.extend(&self.momentum);
        v.extend([
            self.min_f,
            self.u_minus_b_l2,
            self.micro_norm,
            self.grad_ab_h2,
            self.grad_p_h2,
            self.lambda0.unwrap_or(f64::NAN),
            self.div_u_max,
            self.r_a_max,
            self.r_b_l2,
            self.decay_norm,
        ]);
        v
    }

    /// `‖u‖²_{H^m} + ‖f‖²_{L²_v(H^m)}` at order `m`, if recorded.
    pub fn energy_uf_at(&self, m: usize) -> Option<f64> {
        self.energy_uf.iter().find(|e| e.0 == m).map(|e| e.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::*;
    use crate::model::ModelKind;

    #[test]
    fn header_matches_values() {
        let m = Arc::new(model(2, 16, 4, ModelKind::NsVfp));
        let diag = Diagnostics::new(m.clone(), DiagnosticsConfig::default()).unwrap();
        let s = random_state(&m, 2, 0.02, 4, 4, 0.1);
        let r = diag.record(&s).unwrap();
        assert_eq!(diag.csv_header().len(), r.csv_values().len());
        assert!(r.dissipation.total() > 0.0);
        assert!(r.lambda0.unwrap() > 0.0);
        assert!(r.r_a_max < 1e-12);
    }

    #[test]
    fn equilibrium_record_is_quiet() {
        let m = Arc::new(model(2, 16, 4, ModelKind::NsVfp));
        let diag = Diagnostics::new(m.clone(), DiagnosticsConfig::default()).unwrap();
        let s = CoupledState::equilibrium(m.grid(), m.basis().clone(), 0.1);
        let r = diag.record(&s).unwrap();
        assert_eq!(r.dissipation.total(), 0.0);
        assert!(r.energy.iter().all(|e| e.1 == 0.0));
        assert!(r.lambda0.is_none());
        assert!(r.min_f > 0.0);
        assert_eq!(r.decay_norm, 0.0);
    }

    #[test]
    fn bad_config_rejected() {
        let m = Arc::new(model(2, 8, 4, ModelKind::NsVfp));
        let cfg = DiagnosticsConfig {
            s: -1.0,
            ..Default::default()
        };
        assert!(matches!(Diagnostics::new(m, cfg), Err(Error::Config(_))));
    }
}
