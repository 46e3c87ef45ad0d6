//! Invariant and property battery behind the `audit` command.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::init::band_field;
use super::output::write_json;
use super::{build_basis, build_grid, build_model, generate_initial_data, prepare_dir, with_pool};
use super::{Manifest, RunConfig, CODE_VERSION};
use crate::diagnostics::{
    dissipation_physical, dissipation_with_pressure, effective_order, interpolation_ratio, lyapunov_e0,
    lyapunov_e0_physical, positivity_min_f, Diagnostics,
};
use crate::error::{Error, Result};
use crate::fourier::{SpectralGrid, VectorField};
use crate::hermite::{coercivity_ratio, identity_errors, truncated_coercivity_constant, HermiteField, VelocityBasis};
use crate::model::{CoupledState, ModelKind};
use crate::timestepper::{integrate, Scheme, Stepper, StepperConfig};

#[derive(Debug, Clone, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl AuditCheck {
    /// Passes when `value ≤ threshold`.
    fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            detail: detail.into(),
        }
    }

    /// Passes when `value ≥ threshold`.
    fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
    /// Reported quantities without a pass/fail threshold.
    pub observations: BTreeMap<String, f64>,
    pub passed: bool,
}

/// Smallest coercivity ratio over random fields, next to the sharp
/// constant of the truncated basis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoercivityAudit {
    pub samples: usize,
    pub seed: u64,
    pub lambda_emp: f64,
    pub lambda_sharp: f64,
}

/// Draws `samples` fields with i.i.d. normal nodal values for every
/// Hermite coefficient on an 8-point grid and returns the smallest ratio
/// `(−⟨Lf,f⟩ − ‖b‖²)/‖{I−P}f‖²_ν`.
pub fn empirical_coercivity(basis: &Arc<VelocityBasis>, samples: usize, seed: u64) -> Result<CoercivityAudit> {
    let grid = SpectralGrid::new(basis.dim(), 8, 2.0 * std::f64::consts::PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda = f64::INFINITY;
    for _ in 0..samples {
        let coeffs = (0..basis.len())
            .map(|_| {
                let vals: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                grid.forward(&vals)
            })
            .collect();
        let f = HermiteField::from_coeffs(basis.clone(), coeffs)?;
        lambda = lambda.min(coercivity_ratio(&f, &grid).lambda()?);
    }
    Ok(CoercivityAudit {
        samples,
        seed,
        lambda_emp: lambda,
        lambda_sharp: truncated_coercivity_constant(basis),
    })
}

/// Largest interpolation ratio over `samples` random fields with i.i.d.
/// normal coefficients on `band`.
pub fn interpolation_constant(
    grid: &SpectralGrid,
    m: usize,
    s: f64,
    band: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: f64 = 0.0;
    for _ in 0..samples {
        let g = band_field(grid, band, &mut rng);
        c = c.max(interpolation_ratio(grid, &g, m, s)?);
    }
    Ok(c)
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relaxation `u − b` of a uniform slip under the stiff block alone;
/// returns the error against `e^{−2t}` at `t = 1`.
fn uniform_slip_error(scheme: Scheme, dt: f64) -> Result<f64> {
    let grid = Arc::new(SpectralGrid::new(2, 8, 2.0 * std::f64::consts::PI)?);
    let basis = Arc::new(VelocityBasis::new(2, 4)?);
    let cfg = RunConfig::default();
    let model = build_model(&cfg, &grid, &basis, ModelKind::NsVfp)?;
    let st = Stepper::new(model, scheme, 0.0);
    let mut s = CoupledState::equilibrium(&grid, basis, 0.0);
    s.u.comps[0].coefficients_mut()[0] = Complex64::new(1.0, 0.0);
    let n = (1.0 / dt).round() as usize;
    for _ in 0..n {
        s = st.step(&s, dt)?;
    }
    Ok((s.u.comps[0].mean() - s.f.momentum(0).mean() - (-2.0f64).exp()).abs())
}

/// Runs every check on the grid and basis of `cfg`.
pub fn audit(cfg: &RunConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg)?;
    let model = build_model(cfg, &grid, &basis, ModelKind::NsVfp)?;
    let mut checks = Vec::new();
    let mut obs = BTreeMap::new();
    let seed = cfg.init.seed;

    let e = identity_errors(&basis, 3, seed)?;
    checks.push(AuditCheck::at_most(
        "operator_identities",
        e.max(),
        1e-10,
        format!("{e:?}"),
    ));

    let c = empirical_coercivity(&basis, 1000, seed)?;
    checks.push(AuditCheck::at_least(
        "coercivity_positive",
        c.lambda_emp,
        f64::MIN_POSITIVE,
        format!("lambda_emp over {} fields", c.samples),
    ));
    checks.push(AuditCheck::at_least(
        "coercivity_above_sharp_constant",
        c.lambda_emp - c.lambda_sharp,
        -1e-12,
        format!("sharp truncated constant {}", c.lambda_sharp),
    ));

    // probe state: the configured data, or a small perturbation of it when
    // the configuration is the equilibrium
    let mut pcfg = cfg.clone();
    if pcfg.init.amplitude == 0.0 {
        pcfg.init.amplitude = 1e-3;
    }
    let probe = generate_initial_data(&pcfg, &grid, basis.clone())?;
    let parts = model.rhs(&probe)?;
    let p = &parts.pressure.p;
    let order = effective_order(&grid, cfg.diagnostics.order);
    let spec = dissipation_with_pressure(&grid, &probe, p, order);
    let phys = dissipation_physical(&grid, &probe, p, order);
    checks.push(AuditCheck::at_most(
        "dissipation_two_paths",
        rel(spec.total(), phys.total()),
        1e-8,
        format!("order {order}: {} vs {}", spec.total(), phys.total()),
    ));
    let e0s = lyapunov_e0(&grid, &probe.f, cfg.diagnostics.e0_order)?;
    let e0p = lyapunov_e0_physical(&grid, &probe.f, cfg.diagnostics.e0_order)?;
    checks.push(AuditCheck::at_most(
        "lyapunov_e0_two_paths",
        (e0s - e0p).abs() / probe.f.sobolev_norm_sq(&grid, cfg.diagnostics.e0_order),
        1e-10,
        format!("{e0s} vs {e0p}, relative to |f|^2 at the same order"),
    ));
    let mut sob = 0.0f64;
    for m in 0..=order {
        sob = sob.max(rel(grid.sobolev_norm_sq(&probe.rho, m), grid.sobolev_norm_sq_physical(&probe.rho, m)));
    }
    checks.push(AuditCheck::at_most("sobolev_two_paths", sob, 1e-10, format!("orders 0..={order}")));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
    let band = (1.0, (cfg.grid.points / 3) as f64);
    let raw = VectorField::new((0..grid.dim()).map(|_| band_field(&grid, band, &mut rng)).collect());
    let pw = grid.leray_project(&raw)?;
    let ppw = grid.leray_project(&pw)?;
    let scale = pw.comps.iter().map(|c| grid.max_abs(c)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    checks.push(AuditCheck::at_most(
        "leray_divergence",
        grid.max_abs(&grid.divergence(&pw)) / scale,
        1e-12,
        "max |div P w| / max |P w|",
    ));
    checks.push(AuditCheck::at_most(
        "leray_idempotent",
        ppw.max_diff(&pw) / scale,
        1e-14,
        "max |P P w - P w| / max |P w|",
    ));

    let res = model.moment_equation_residuals(&probe, &parts.total())?;
    checks.push(AuditCheck::at_most("density_moment_residual", res.r_a_max, 1e-11, "max |d_t a + div b|"));
    if cfg.velocity.max_degree >= 5 {
        checks.push(AuditCheck::at_most("momentum_moment_residual", res.r_b_l2, 1e-8, "|r_b|_L2"));
    } else {
        obs.insert("momentum_moment_residual".into(), res.r_b_l2);
    }
    obs.insert(
        "probe_min_f".into(),
        positivity_min_f(&grid, &probe.f, cfg.diagnostics.positivity_stride)?,
    );
    obs.insert("coercivity_lambda_emp".into(), c.lambda_emp);
    obs.insert("coercivity_lambda_sharp".into(), c.lambda_sharp);

    // short integration of the configured data
    let state0 = generate_initial_data(cfg, &grid, basis.clone())?;
    let diag = Diagnostics::new(model.clone(), cfg.diagnostics.clone())?;
    let short = StepperConfig {
        t_end: cfg.stepper.t_end.min(1.0),
        sample_dt: cfg.stepper.sample_dt.min(0.25),
        ..cfg.stepper.clone()
    };
    let stepper = Stepper::new(model.clone(), cfg.stepper.scheme, cfg.stepper.hermite_filter);
    let run = integrate(&stepper, state0.clone(), &short, |s| diag.record(s))?;
    let recs = &run.samples;
    let norm0 = (grid.l2_norm_sq(&state0.rho)
        + grid.sobolev_norm_sq_vec(&state0.u, &grid.sobolev_weights(0))
        + state0.f.l2_norm_sq(&grid))
    .sqrt();
    let relto = if norm0 > 0.0 { norm0 } else { 1.0 };
    let mass_drift = recs.iter().map(|r| (r.mass - recs[0].mass).abs()).fold(0.0, f64::max) / relto;
    let mom_drift = recs
        .iter()
        .flat_map(|r| r.momentum.iter().zip(&recs[0].momentum).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
        / relto;
    checks.push(AuditCheck::at_most("mass_drift", mass_drift, 1e-9, "relative to the initial perturbation"));
    checks.push(AuditCheck::at_most("momentum_drift", mom_drift, 1e-7, "relative to the initial perturbation"));
    checks.push(AuditCheck::at_most(
        "divergence_free",
        recs.iter().map(|r| r.div_u_max).fold(0.0, f64::max),
        1e-10,
        "max |div u| over samples",
    ));
    checks.push(AuditCheck::at_most(
        "density_moment_residual_in_time",
        recs.iter().map(|r| r.r_a_max).fold(0.0, f64::max),
        1e-11,
        "max over samples",
    ));
    let m_top = *cfg.diagnostics.m_set.iter().max().unwrap_or(&1);
    let growth = recs
        .windows(2)
        .filter_map(|w| Some((w[1].energy_uf_at(m_top)? - w[0].energy_uf_at(m_top)?) / w[0].energy_uf_at(m_top)?.max(f64::MIN_POSITIVE)))
        .fold(0.0, f64::max);
    checks.push(AuditCheck::at_most(
        "energy_non_increasing",
        growth,
        1e-9,
        format!("largest relative increase of energy_uf_h{m_top}"),
    ));
    if cfg.init.amplitude == 0.0 {
        checks.push(AuditCheck::at_most(
            "equilibrium_preserved",
            run.state.max_diff(&state0),
            0.0,
            "max coefficient change",
        ));
    }

    for scheme in [Scheme::ImexEuler, Scheme::Ars222] {
        let e1 = uniform_slip_error(scheme, 0.02)?;
        let e2 = uniform_slip_error(scheme, 0.01)?;
        let p = (e1 / e2).log2();
        let nominal = scheme.order() as f64;
        checks.push(AuditCheck::at_most(
            &format!("stiff_order_{}", scheme.order()),
            (p - nominal).abs() / nominal,
            0.1,
            format!("observed order {p}"),
        ));
    }

    let band = (1.0, (cfg.grid.points / 3) as f64);
    for m in 0..=2 {
        let c1 = interpolation_constant(&grid, m, cfg.diagnostics.s, band, 200, seed)?;
        let c2 = interpolation_constant(&grid, m, cfg.diagnostics.s, band, 200, seed + 1)?;
        obs.insert(format!("interpolation_constant_m{m}"), c1);
        checks.push(AuditCheck::at_most(
            &format!("interpolation_constant_m{m}"),
            if c1.is_finite() { rel(c1, c2) } else { f64::INFINITY },
            0.1,
            format!("seeds {seed}, {}: {c1} vs {c2}", seed + 1),
        ));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(AuditReport {
        checks,
        observations: obs,
        passed,
    })
}

/// Runs [`audit`] and writes `audit.json`. A failed check is reported in
/// the result, not as an error.
pub fn cmd_audit(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<AuditReport> {
    let start = Instant::now();
    let report = with_pool(jobs, || audit(cfg))??;
    prepare_dir(out)?;
    let manifest = Manifest {
        command: "audit",
        code_version: CODE_VERSION,
        config: cfg.clone(),
        jobs,
        wall_time_s: start.elapsed().as_secs_f64(),
        body: &report,
    };
    write_json(&out.join("audit.json"), &manifest)?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(Error::AuditFailed(failed.join(", ")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coercivity_sampler_respects_sharp_constant() {
        let basis = Arc::new(VelocityBasis::new(2, 6).unwrap());
        let c = empirical_coercivity(&basis, 50, 3).unwrap();
        assert!(c.lambda_emp > 0.0);
        assert!(c.lambda_emp >= c.lambda_sharp - 1e-12, "{c:?}");
    }

    #[test]
    fn small_equilibrium_audit_passes() {
        let mut cfg = RunConfig::default();
        cfg.grid.points = 16;
        cfg.velocity.max_degree = 5;
        cfg.init.amplitude = 0.0;
        let r = audit(&cfg).unwrap();
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).collect();
        assert!(r.passed, "{failed:#?}");
    }
}
