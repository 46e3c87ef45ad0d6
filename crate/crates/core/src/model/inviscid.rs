use serde::Serialize;

use super::{CoupledState, Model};
use crate::error::{Error, Result};
use crate::hermite::weighted_micro_norm_sq_with;

/// Norms of the difference between a viscous and an inviscid state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorRecord {
    pub rho_h1: f64,
    pub u_h1: f64,
    /// `‖f̃‖_{L²_v(H¹)}`
    pub f_h1: f64,
    /// `‖b̃ − ũ‖_{H¹}`
    pub b_minus_u_h1: f64,
    /// `‖{I−P}f̃‖_{L²_{v,ν}(H¹)}`
    pub micro_nu_h1: f64,
    /// `‖∇(P^μ − P)‖_{L²}`
    pub grad_p_l2: f64,
    /// `‖∇ũ‖_{H¹}`
    pub grad_u_h1: f64,
    /// `‖∇f̃‖_{L²_{x,v}}`
    pub grad_f_l2: f64,
}

impl ErrorRecord {
    /// `‖ũ‖_{H¹} + ‖f̃‖_{L²_v(H¹)}`
    pub fn uf(&self) -> f64 {
        self.u_h1 + self.f_h1
    }

    /// `(1+t)^{−1}‖ϱ̃‖²_{H¹} + ‖ũ‖²_{H¹} + ‖f̃‖²_{L²_v(H¹)}`
    pub fn state_sq(&self, t: f64) -> f64 {
        self.rho_h1.powi(2) / (1.0 + t) + self.u_h1.powi(2) + self.f_h1.powi(2)
    }

    /// `‖∇ũ‖²_{H¹} + ‖∇P̃‖² + ‖∇f̃‖² + ‖{I−P}f̃‖²_{L²_{v,ν}(H¹)}`
    pub fn dissipation_sq(&self) -> f64 {
        self.grad_u_h1.powi(2) + self.grad_p_l2.powi(2) + self.grad_f_l2.powi(2) + self.micro_nu_h1.powi(2)
    }
}

impl Model {
    /// Difference norms between `ns` and `euler`; the latter is evaluated
    /// with zero viscosity whatever its `mu` field says.
    pub fn error_functionals(&self, ns: &CoupledState, euler: &CoupledState) -> Result<ErrorRecord> {
        let grid = &*self.grid;
        self.validate(ns)?;
        self.validate(euler)?;
        if (ns.t - euler.t).abs() > 1e-9 * ns.t.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "states sampled at different times {} and {}",
                ns.t, euler.t
            )));
        }
        let w1 = grid.sobolev_weights(1);
        let rho = ns.rho.sub(&euler.rho);
        let u = ns.u.sub(&euler.u);
        let f = ns.f.sub(&euler.f)?;
        let mut slip = 0.0;
        for i in 0..grid.dim() {
            let bu = f.momentum(i).sub(&u.comps[i]);
            slip += grid.sobolev_norm_sq_with(&bu, &w1);
        }
        let mut inviscid = euler.clone();
        inviscid.mu = 0.0;
        let p_ns = self.rhs(ns)?.pressure.p;
        let p_eu = self.rhs(&inviscid)?.pressure.p;
        let dp = grid.gradient(&p_ns.sub(&p_eu));
        let grad_u: f64 = (0..grid.dim())
            .map(|j| {
                let du = crate::fourier::VectorField::new(u.comps.iter().map(|c| grid.derivative(c, j)).collect());
                grid.sobolev_norm_sq_vec(&du, &w1)
            })
            .sum();
        let grad_f: f64 = f.coeffs.iter().map(|c| grid.homogeneous_norm_sq(c, 1)).sum();
        Ok(ErrorRecord {
            rho_h1: grid.sobolev_norm_sq_with(&rho, &w1).sqrt(),
            u_h1: grid.sobolev_norm_sq_vec(&u, &w1).sqrt(),
            f_h1: f.sobolev_norm_sq(grid, 1).sqrt(),
            b_minus_u_h1: slip.sqrt(),
            micro_nu_h1: weighted_micro_norm_sq_with(&f, grid, &w1).sqrt(),
            grad_p_l2: grid.sobolev_norm_sq_vec(&dp, &grid.sobolev_weights(0)).sqrt(),
            grad_u_h1: grad_u.sqrt(),
            grad_f_l2: grad_f.sqrt(),
        })
    }
}
