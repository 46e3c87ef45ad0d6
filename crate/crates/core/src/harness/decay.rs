use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::output::{write_csv, write_json};
use super::run::{series_svg, simulate, Simulation};
use super::{prepare_dir, with_pool, Manifest, OutputFormat, RunConfig, CODE_VERSION};
use crate::diagnostics::{fit_decay, DecayFit};
use crate::error::{Error, Result};
use crate::model::ModelKind;

/// Relative slack allowed between consecutive samples of a decaying series.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Fits and monotonicity of `‖u‖_{L²} + ‖f‖_{L²_{x,v}}` for one model.
#[derive(Debug, Clone, Serialize)]
pub struct DecaySide {
    pub kind: ModelKind,
    pub fit: DecayFit,
    /// `−d log(norm)/dt` from the exponential fit.
    pub rate: f64,
    pub monotone: bool,
    /// Largest relative increase between consecutive samples (zero if none).
    pub max_relative_increase: f64,
    pub initial: f64,
    pub last: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub ns: DecaySide,
    pub euler: DecaySide,
    /// `rate_ns / rate_euler`
    pub rate_ratio: f64,
    /// `rate_ns ≥ (1 − tol) rate_euler`
    pub rate_comparison_passed: bool,
    /// `norm_ns(t) ≤ (1 + tol) norm_euler(t)` at every sample.
    pub pointwise_comparison_passed: bool,
    pub passed: bool,
}

fn side(sim: &Simulation, window: (f64, f64)) -> Result<DecaySide> {
    let series: Vec<(f64, f64)> = sim.records.iter().map(|r| (r.t, r.decay_norm)).collect();
    let fit = fit_decay(&series, window)?;
    let max_rel = series
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / w[0].1.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(DecaySide {
        kind: sim.kind,
        fit,
        rate: -fit.exp_slope,
        monotone: max_rel <= MONOTONE_SLACK,
        max_relative_increase: max_rel,
        initial: series.first().map_or(0.0, |p| p.1),
        last: series.last().map_or(0.0, |p| p.1),
    })
}

/// Compares two finished runs started from the same data.
pub fn compare_decay(ns: &Simulation, euler: &Simulation, cfg: &RunConfig) -> Result<DecayReport> {
    let window = (cfg.decay.fit_start, cfg.stepper.t_end);
    let a = side(ns, window)?;
    let b = side(euler, window)?;
    let tol = cfg.decay.rate_tolerance;
    if ns.records.len() != euler.records.len() {
        return Err(Error::invalid("decay runs have different sample times"));
    }
    let pointwise = ns
        .records
        .iter()
        .zip(&euler.records)
        .all(|(x, y)| x.decay_norm <= (1.0 + tol) * y.decay_norm);
    let rate_ok = a.rate >= (1.0 - tol) * b.rate;
    let passed = a.monotone && b.monotone && rate_ok;
    Ok(DecayReport {
        rate_ratio: a.rate / b.rate,
        ns: a,
        euler: b,
        rate_comparison_passed: rate_ok,
        pointwise_comparison_passed: pointwise,
        passed,
    })
}

/// Runs the viscous and the inviscid model from the same initial data and
/// writes `decay_ns.csv`, `decay_euler.csv`, `decay.json` and `decay.svg`.
pub fn cmd_decay_study(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<DecayReport> {
    let start = Instant::now();
    let (ns, euler) = with_pool(jobs, || {
        rayon::join(|| simulate(cfg, ModelKind::NsVfp), || simulate(cfg, ModelKind::EulerVfp))
    })?;
    let (ns, euler) = (ns?, euler?);
    let report = compare_decay(&ns, &euler, cfg)?;
    prepare_dir(out)?;
    if cfg.output.wants(OutputFormat::Csv) {
        write_csv(&out.join("decay_ns.csv"), &ns.header, &ns.rows())?;
        write_csv(&out.join("decay_euler.csv"), &euler.header, &euler.rows())?;
    }
    if cfg.output.wants(OutputFormat::Svg) {
        let svg = series_svg(
            "decay of |u| + |f|",
            &[("ns-vfp", &ns), ("euler-vfp", &euler)],
            &["decay_norm".to_string()],
        );
        std::fs::write(out.join("decay.svg"), svg)?;
    }
    if cfg.output.wants(OutputFormat::Json) {
        let manifest = Manifest {
            command: "decay-study",
            code_version: CODE_VERSION,
            config: cfg.clone(),
            jobs,
            wall_time_s: start.elapsed().as_secs_f64(),
            body: serde_json::json!({
                "report": report,
                "dt_ns": super::DtSummary::new(&ns.log),
                "dt_euler": super::DtSummary::new(&euler.log),
            }),
        };
        write_json(&out.join("decay.json"), &manifest)?;
    }
    Ok(report)
}
