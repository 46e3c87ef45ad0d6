use rayon::prelude::*;

use super::{CoupledState, Model, PressureSolution};
use crate::error::Result;
use crate::fourier::{ScalarField, SpectralGrid, VectorField};
use crate::hermite::{gamma_ij, HermiteField};

/// Time derivative of every unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub rho: ScalarField,
    pub u: VectorField,
    pub f: HermiteField,
}

impl Tendency {
    pub fn axpy(&mut self, s: f64, other: &Tendency) {
        self.rho.axpy(s, &other.rho);
        self.u.axpy(s, &other.u);
        self.f.axpy(s, &other.f);
    }

    pub fn is_zero(&self) -> bool {
        self.rho.is_zero() && self.u.is_zero() && self.f.is_zero()
    }
}

/// Right-hand side split into the implicitly treated linear block
/// (`Lf` on `|β| ≥ 2` and the `u ↔ b` drag) and everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsParts {
    pub explicit: Tendency,
    pub stiff: Tendency,
    pub pressure: PressureSolution,
}

impl RhsParts {
    pub fn total(&self) -> Tendency {
        let mut t = self.explicit.clone();
        t.axpy(1.0, &self.stiff);
        t
    }
}

/// Residuals of the macroscopic equations for `a` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResiduals {
    /// `∂_t a + div b`
    pub r_a: ScalarField,
    /// `∂_t b_i + ∂_i a + Σ_j ∂_j Γ_ij − (1+ϱ)(u_i − b_i) − (1+ϱ) u_i a`
    pub r_b: VectorField,
    pub r_a_max: f64,
    pub r_b_l2: f64,
}

/// Physical samples of a state.
pub(crate) struct Physical {
    pub rho: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl Physical {
    pub fn new(grid: &SpectralGrid, rho: &ScalarField, u: &VectorField, c: &[ScalarField]) -> Self {
        Self {
            rho: grid.inverse(rho),
            u: u.comps.iter().map(|c| grid.inverse(c)).collect(),
            c: c.par_iter().map(|c| grid.inverse(c)).collect(),
        }
    }
}

/// Explicit tendencies of the conservative update `(ϱ, m = ρu, c_β)`.
pub(crate) struct ExplicitTerms {
    pub rho: ScalarField,
    pub m: VectorField,
    pub c: Vec<ScalarField>,
}

impl Model {
    /// `K_β = (1+ϱ)[Σ_i √β_i u_i c_{β−e_i} + δ_{β,e_i} u_i] − |β| ϱ c_β`
    /// minus the implicit drag `u_i − b_i` on `β = e_i`; products are
    /// truncated pairwise.
    fn coupling(&self, ph: &Physical) -> Vec<ScalarField> {
        let grid = &*self.grid;
        let basis = &*self.basis;
        let n = grid.len();
        (0..basis.len())
            .into_par_iter()
            .map(|beta| {
                let links = basis.lower_links(beta);
                if links.is_empty() {
                    return ScalarField::zeros(grid);
                }
                let mut raw = vec![0.0; n];
                for l in links {
                    for ((r, u), c) in raw.iter_mut().zip(&ph.u[l.axis]).zip(&ph.c[l.index]) {
                        *r += l.coef * u * c;
                    }
                }
                let r = grid.forward_dealiased(&raw);
                let rp = grid.inverse(&r);
                let inner: Vec<f64> = if basis.degree(beta) == 1 {
                    let axis = links[0].axis;
                    (0..n).map(|x| ph.u[axis][x] - ph.c[beta][x] + rp[x]).collect()
                } else {
                    let deg = basis.degree(beta) as f64;
                    (0..n).map(|x| -deg * ph.c[beta][x] + rp[x]).collect()
                };
                r.add(&grid.product(&ph.rho, &inner))
            })
            .collect()
    }

    /// `−Σ_i ∂_i (v_i f)` under the hard closure.
    pub fn streaming(&self, f: &HermiteField) -> HermiteField {
        let grid = &*self.grid;
        let basis = &*self.basis;
        let coeffs = (0..basis.len())
            .into_par_iter()
            .map(|beta| {
                let mut out = ScalarField::zeros(grid);
                for l in basis.lower_links(beta).iter().chain(basis.upper_links(beta)) {
                    out.axpy(-l.coef, &grid.derivative(&f.coeffs[l.index], l.axis));
                }
                out
            })
            .collect();
        HermiteField::from_coeffs(self.basis.clone(), coeffs).expect("one field per mode")
    }

    fn drag(&self) -> f64 {
        if self.options.drag_coupling {
            1.0
        } else {
            0.0
        }
    }

    pub(crate) fn explicit_terms(
        &self,
        rho: &ScalarField,
        u: &VectorField,
        c: &[ScalarField],
        mu: f64,
    ) -> ExplicitTerms {
        let grid = &*self.grid;
        let d = grid.dim();
        if !self.options.explicit_terms {
            return ExplicitTerms {
                rho: ScalarField::zeros(grid),
                m: VectorField::zeros(grid),
                c: vec![ScalarField::zeros(grid); self.basis.len()],
            };
        }
        let ph = Physical::new(grid, rho, u, c);
        let rho_flux = VectorField::new((0..d).map(|j| grid.product(&ph.rho, &ph.u[j])).collect());
        let e_rho = grid.divergence(&rho_flux).scaled(-1.0);
        let density: Vec<f64> = ph.rho.iter().map(|r| 1.0 + r).collect();
        let mut e_m = Vec::with_capacity(d);
        for i in 0..d {
            let mi = grid.inverse(&grid.product(&density, &ph.u[i]));
            let fl = VectorField::new((0..d).map(|j| grid.product(&ph.u[j], &mi)).collect());
            let mut e = grid.divergence(&fl).scaled(-1.0);
            if mu != 0.0 {
                e.axpy(mu, &grid.laplacian(&u.comps[i]));
            }
            e_m.push(e);
        }
        let c = if self.options.drag_coupling {
            let k = self.coupling(&ph);
            for (i, e) in e_m.iter_mut().enumerate() {
                e.axpy(-1.0, &k[1 + i]);
            }
            k
        } else {
            vec![ScalarField::zeros(grid); self.basis.len()]
        };
        ExplicitTerms {
            rho: e_rho,
            m: VectorField::new(e_m),
            c,
        }
    }

    /// Full right-hand side in velocity form with the pressure recomputed.
    pub fn rhs(&self, state: &CoupledState) -> Result<RhsParts> {
        self.validate(state)?;
        let grid = &*self.grid;
        let basis = &self.basis;
        let d = grid.dim();
        let mu = self.viscosity(state);
        let drag = self.drag();
        let ph = Physical::new(grid, &state.rho, &state.u, &state.f.coeffs);
        let explicit_on = self.options.explicit_terms;

        let mut stiff_u = Vec::with_capacity(d);
        for i in 0..d {
            let mut s = state.u.comps[i].sub(state.f.momentum(i));
            s.scale(-drag);
            stiff_u.push(s);
        }
        let stiff_u = VectorField::new(stiff_u);
        let mut stiff_f = HermiteField::zeros(basis.clone(), grid);
        for (beta, c) in stiff_f.coeffs.iter_mut().enumerate() {
            let deg = basis.degree(beta);
            if deg == 1 && drag != 0.0 {
                let axis = basis.lower_links(beta)[0].axis;
                *c = state.u.comps[axis].sub(&state.f.coeffs[beta]);
            } else {
                *c = state.f.coeffs[beta].scaled(-(deg as f64));
            }
        }

        let (d_rho, mut g, mut kin) = if explicit_on {
            let rho_flux = VectorField::new((0..d).map(|j| grid.product(&ph.rho, &ph.u[j])).collect());
            let d_rho = grid.divergence(&rho_flux).scaled(-1.0);
            let kappa: Vec<f64> = ph.rho.iter().map(|r| 1.0 / (1.0 + r)).collect();
            let grads: Vec<Vec<Vec<f64>>> = (0..d)
                .map(|i| (0..d).map(|j| grid.inverse(&grid.derivative(&state.u.comps[i], j))).collect())
                .collect();
            let mut g = Vec::with_capacity(d);
            for i in 0..d {
                let adv: Vec<f64> = (0..grid.len())
                    .map(|x| (0..d).map(|j| ph.u[j][x] * grads[i][j][x]).sum())
                    .collect();
                let mut gi = grid.forward_dealiased(&adv).scaled(-1.0);
                if mu != 0.0 {
                    let lap = grid.inverse(&grid.laplacian(&state.u.comps[i]));
                    gi.axpy(mu, &grid.product(&kappa, &lap));
                }
                g.push(gi);
            }
            let kin = if drag != 0.0 {
                let k = self.coupling(&ph);
                for (i, gi) in g.iter_mut().enumerate() {
                    gi.axpy(-1.0, &grid.product(&ph.u[i], &ph.c[0]));
                }
                k
            } else {
                vec![ScalarField::zeros(grid); basis.len()]
            };
            (d_rho, g, kin)
        } else {
            (
                ScalarField::zeros(grid),
                vec![ScalarField::zeros(grid); d],
                vec![ScalarField::zeros(grid); basis.len()],
            )
        };

        let mut full = VectorField::new(g.clone());
        full.axpy(1.0, &stiff_u);
        let pressure = self.solve_pressure(state, &full)?;
        for (gi, fl) in g.iter_mut().zip(&pressure.flux.comps) {
            gi.axpy(-1.0, fl);
        }
        let stream = self.streaming(&state.f);
        for (k, s) in kin.iter_mut().zip(&stream.coeffs) {
            k.axpy(1.0, s);
        }
        Ok(RhsParts {
            explicit: Tendency {
                rho: d_rho,
                u: VectorField::new(g),
                f: HermiteField::from_coeffs(basis.clone(), kin)?,
            },
            stiff: Tendency {
                rho: ScalarField::zeros(grid),
                u: stiff_u,
                f: stiff_f,
            },
            pressure,
        })
    }

    /// Residuals of the moment equations evaluated from `state` and its
    /// tendency `d`.
    pub fn moment_equation_residuals(&self, state: &CoupledState, d: &Tendency) -> Result<MomentResiduals> {
        let grid = &*self.grid;
        let dim = grid.dim();
        let f = &state.f;
        let b = VectorField::new((0..dim).map(|i| f.momentum(i).clone()).collect());
        let r_a = d.f.density().add(&grid.divergence(&b));
        let rho = grid.inverse(&state.rho);
        let a = grid.inverse(f.density());
        let mut comps = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut r = d.f.momentum(i).add(&grid.derivative(f.density(), i));
            for j in 0..dim {
                r.axpy(1.0, &grid.derivative(&gamma_ij(f, i, j)?, j));
            }
            if self.options.drag_coupling && self.options.explicit_terms {
                let ui = grid.inverse(&state.u.comps[i]);
                let ua = grid.product(&ui, &a);
                let slip = state.u.comps[i].sub(f.momentum(i));
                let ua_p = grid.inverse(&ua);
                let slip_p = grid.inverse(&slip);
                let w: Vec<f64> = slip_p.iter().zip(&ua_p).map(|(s, q)| s + q).collect();
                r.axpy(-1.0, &slip);
                r.axpy(-1.0, &ua);
                r.axpy(-1.0, &grid.product(&rho, &w));
            }
            comps.push(r);
        }
        let r_b = VectorField::new(comps);
        Ok(MomentResiduals {
            r_a_max: grid.max_abs(&r_a),
            r_b_l2: grid.sobolev_norm_sq_vec(&r_b, &grid.sobolev_weights(0)).sqrt(),
            r_a,
            r_b,
        })
    }
}
