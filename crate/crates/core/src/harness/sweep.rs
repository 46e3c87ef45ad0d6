use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::output::{svg_plot, write_csv, write_json, DtSummary, Series};
use super::{build_basis, build_grid, build_model, generate_initial_data, prepare_dir, with_pool};
use super::{Manifest, OutputFormat, RunConfig, CODE_VERSION};
use crate::error::{Error, Result};
use crate::model::{CoupledState, ErrorRecord, ModelKind};
use crate::timestepper::{integrate, Stepper, StepperConfig};

/// Accepted band for the fitted slope of `sup_t ‖ũ‖_{H¹} + ‖f̃‖_{L²_v(H¹)}`.
pub const SLOPE_BAND: (f64, f64) = (0.85, 1.3);

/// Error functionals of one viscous run against the inviscid reference.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    /// `sup_t (‖ũ‖_{H¹} + ‖f̃‖_{L²_v(H¹)})`
    pub sup_uf: f64,
    pub sup_u_h1: f64,
    pub sup_f_h1: f64,
    /// `sup_t ((1+t)^{−1}‖ϱ̃‖²_{H¹} + ‖ũ‖²_{H¹} + ‖f̃‖²_{L²_v(H¹)})^{1/2}`
    pub sup_state: f64,
    /// `(∫ ‖∇ũ‖²_{H¹} + ‖∇P̃‖² + ‖∇f̃‖² + ‖{I−P}f̃‖²_{ν,H¹} dt)^{1/2}`, trapezoidal.
    pub integral_dissipation: f64,
    /// `sup_state² + integral_dissipation²`
    pub x_total: f64,
    pub steps: usize,
    #[serde(skip)]
    pub samples: Vec<(f64, ErrorRecord)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub dt: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Rows sorted by decreasing `μ`.
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log sup_uf` against `log μ`.
    pub slope_uf: f64,
    pub slope_state: f64,
    /// Slope of `log √X` against `log μ`.
    pub slope_x: f64,
    /// `sup_uf` decreases with `μ`.
    pub monotone_in_mu: bool,
    pub slope_band: (f64, f64),
    pub passed: bool,
    pub reference_dt: DtSummary,
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn summarize(mu: f64, samples: Vec<(f64, ErrorRecord)>, steps: usize) -> SweepRow {
    let sup = |g: &dyn Fn(&(f64, ErrorRecord)) -> f64| samples.iter().map(g).fold(0.0, f64::max);
    let sup_uf = sup(&|s| s.1.uf());
    let sup_u_h1 = sup(&|s| s.1.u_h1);
    let sup_f_h1 = sup(&|s| s.1.f_h1);
    let sup_state_sq = sup(&|s| s.1.state_sq(s.0));
    let integral: f64 = samples
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1.dissipation_sq() + w[1].1.dissipation_sq()))
        .sum();
    SweepRow {
        mu,
        sup_uf,
        sup_u_h1,
        sup_f_h1,
        sup_state: sup_state_sq.sqrt(),
        integral_dissipation: integral.sqrt(),
        x_total: sup_state_sq + integral,
        steps,
        samples,
    }
}

/// Runs the inviscid reference once and the viscous model for every `μ`
/// from identical initial data with one shared fixed step.
pub fn sweep_mu(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg)?;
    let ns_model = build_model(cfg, &grid, &basis, ModelKind::NsVfp)?;
    let eu_model = build_model(cfg, &grid, &basis, ModelKind::EulerVfp)?;
    let state0 = generate_initial_data(cfg, &grid, basis)?;
    let mu_max = cfg.sweep.mu_values.iter().copied().fold(0.0, f64::max);
    let ns_stepper = Stepper::new(ns_model.clone(), cfg.stepper.scheme, cfg.stepper.hermite_filter);
    let dt = match cfg.sweep.dt {
        Some(dt) => dt,
        None => {
            let probe = CoupledState { mu: mu_max, ..state0.clone() };
            ns_stepper.stable_dt(&probe, cfg.stepper.cfl).min(cfg.stepper.dt_max)
        }
    };
    let scfg = StepperConfig {
        sample_dt: cfg.sweep.sample_dt,
        dt_fixed: Some(dt),
        ..cfg.stepper.clone()
    };

    let eu_stepper = Stepper::new(eu_model, cfg.stepper.scheme, cfg.stepper.hermite_filter);
    let reference = integrate(&eu_stepper, CoupledState { mu: 0.0, ..state0.clone() }, &scfg, |s| {
        Ok(s.clone())
    })?;
    let refs = &reference.samples;

    let mut rows: Vec<SweepRow> = cfg
        .sweep
        .mu_values
        .par_iter()
        .map(|&mu| -> Result<SweepRow> {
            let mut k = 0;
            let run = integrate(&ns_stepper, CoupledState { mu, ..state0.clone() }, &scfg, |s| {
                let e = refs
                    .get(k)
                    .ok_or_else(|| Error::invalid("viscous run produced more samples than the reference"))?;
                k += 1;
                Ok((s.t, ns_model.error_functionals(s, e)?))
            })?;
            Ok(summarize(mu, run.samples, run.log.steps.len()))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.mu.total_cmp(&a.mu));

    let slope_uf = slope(&rows.iter().map(|r| (r.mu, r.sup_uf)).collect::<Vec<_>>());
    let slope_state = slope(&rows.iter().map(|r| (r.mu, r.sup_state)).collect::<Vec<_>>());
    let slope_x = slope(&rows.iter().map(|r| (r.mu, r.x_total.sqrt())).collect::<Vec<_>>());
    let monotone_in_mu = rows.windows(2).all(|w| w[1].sup_uf <= w[0].sup_uf);
    Ok(SweepReport {
        dt,
        t_end: scfg.t_end,
        sample_dt: scfg.sample_dt,
        passed: (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&slope_uf),
        rows,
        slope_uf,
        slope_state,
        slope_x,
        monotone_in_mu,
        slope_band: SLOPE_BAND,
        reference_dt: DtSummary::new(&reference.log),
    })
}

pub const SWEEP_HEADER: [&str; 8] = [
    "mu",
    "sup_uf",
    "sup_u_h1",
    "sup_f_h1",
    "sup_state",
    "integral_dissipation",
    "x_total",
    "steps",
];

pub const SWEEP_SAMPLES_HEADER: [&str; 10] = [
    "mu",
    "t",
    "rho_h1",
    "u_h1",
    "f_h1",
    "b_minus_u_h1",
    "micro_nu_h1",
    "grad_p_l2",
    "grad_u_h1",
    "grad_f_l2",
];

/// Runs [`sweep_mu`] on `jobs` threads and writes `sweep.csv`,
/// `sweep_samples.csv`, `sweep.json` and `sweep.svg`.
pub fn cmd_sweep_mu(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<SweepReport> {
    let start = Instant::now();
    let report = with_pool(jobs, || sweep_mu(cfg))??;
    prepare_dir(out)?;
    if cfg.output.wants(OutputFormat::Csv) {
        let header: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<f64>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.mu,
                    r.sup_uf,
                    r.sup_u_h1,
                    r.sup_f_h1,
                    r.sup_state,
                    r.integral_dissipation,
                    r.x_total,
                    r.steps as f64,
                ]
            })
            .collect();
        write_csv(&out.join("sweep.csv"), &header, &rows)?;
        let header: Vec<String> = SWEEP_SAMPLES_HEADER.iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<f64>> = report
            .rows
            .iter()
            .flat_map(|r| {
                r.samples.iter().map(move |(t, e)| {
                    vec![
                        r.mu,
                        *t,
                        e.rho_h1,
                        e.u_h1,
                        e.f_h1,
                        e.b_minus_u_h1,
                        e.micro_nu_h1,
                        e.grad_p_l2,
                        e.grad_u_h1,
                        e.grad_f_l2,
                    ]
                })
            })
            .collect();
        write_csv(&out.join("sweep_samples.csv"), &header, &rows)?;
    }
    if cfg.output.wants(OutputFormat::Svg) {
        let data: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.mu, r.sup_uf)).collect();
        // reference lines through the largest-μ point
        let (m0, e0) = data.first().copied().unwrap_or((1.0, 1.0));
        let line = |p: f64| data.iter().map(|&(m, _)| (m, e0 * (m / m0).powf(p))).collect::<Vec<_>>();
        let series = [
            Series { label: "sup |u~|_H1 + |f~|_H1", points: data.clone() },
            Series { label: "slope 1", points: line(1.0) },
            Series { label: "slope 1/2", points: line(0.5) },
        ];
        let svg = svg_plot("inviscid limit", "mu", "error", &series, true, true);
        std::fs::write(out.join("sweep.svg"), svg)?;
    }
    if cfg.output.wants(OutputFormat::Json) {
        let manifest = Manifest {
            command: "sweep-mu",
            code_version: CODE_VERSION,
            config: cfg.clone(),
            jobs,
            wall_time_s: start.elapsed().as_secs_f64(),
            body: &report,
        };
        write_json(&out.join("sweep.json"), &manifest)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power() {
        let p: Vec<(f64, f64)> = (0..6).map(|k| {
            let mu = 0.1 / 2f64.powi(k);
            (mu, 3.0 * mu.powf(1.1))
        }).collect();
        assert!((slope(&p) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn tiny_sweep_shrinks_with_mu() {
        let mut cfg = RunConfig::default();
        cfg.grid.points = 16;
        cfg.velocity.max_degree = 4;
        cfg.init.amplitude = 0.01;
        cfg.stepper.t_end = 0.5;
        cfg.sweep.mu_values = vec![0.1, 0.05, 0.025];
        cfg.sweep.sample_dt = 0.1;
        let r = sweep_mu(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.monotone_in_mu);
        assert!(r.rows.iter().all(|row| row.samples.len() == 6 && row.samples[0].1.uf() == 0.0));
        assert!(r.slope_uf > 0.5, "{}", r.slope_uf);
    }
}
