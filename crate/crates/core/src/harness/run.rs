use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::output::{svg_plot, write_csv, write_json, DtSummary, Series};
use super::{build_basis, build_grid, build_model, generate_initial_data, prepare_dir, with_pool};
use super::{Manifest, OutputFormat, RunConfig, CODE_VERSION};
use crate::diagnostics::{Diagnostics, DiagnosticsRecord};
use crate::error::Result;
use crate::model::{CoupledState, ModelKind};
use crate::timestepper::{integrate, DtLog, Stepper};

/// Result of one integration with diagnostics at every sample time.
pub struct Simulation {
    pub kind: ModelKind,
    pub header: Vec<String>,
    pub records: Vec<DiagnosticsRecord>,
    pub log: DtLog,
    pub state: CoupledState,
    pub dissipation_order: usize,
}

impl Simulation {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.csv_values()).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.records.iter().map(|r| (r.t, r.csv_values()[j])).collect())
    }
}

/// Generates the initial data of `cfg` and integrates it with `kind`.
pub fn simulate(cfg: &RunConfig, kind: ModelKind) -> Result<Simulation> {
    cfg.validate()?;
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg)?;
    let model = build_model(cfg, &grid, &basis, kind)?;
    let state0 = generate_initial_data(cfg, &grid, basis)?;
    let diag = Diagnostics::new(model.clone(), cfg.diagnostics.clone())?;
    let stepper = Stepper::new(model, cfg.stepper.scheme, cfg.stepper.hermite_filter);
    let out = integrate(&stepper, state0, &cfg.stepper, |s| diag.record(s))?;
    Ok(Simulation {
        kind,
        header: diag.csv_header(),
        records: out.samples,
        log: out.log,
        state: out.state,
        dissipation_order: diag.order(),
    })
}

#[derive(Serialize)]
struct RunBody {
    model_kind: ModelKind,
    dissipation_order: usize,
    samples: usize,
    final_t: f64,
    columns: Vec<String>,
    dt: DtSummary,
}

pub(crate) fn series_svg(title: &str, sims: &[(&str, &Simulation)], columns: &[String]) -> String {
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for (tag, sim) in sims {
        for c in columns {
            labels.push(if tag.is_empty() { c.clone() } else { format!("{tag} {c}") });
            series.push(sim.column(c).unwrap_or_default());
        }
    }
    let series: Vec<Series> = labels
        .iter()
        .zip(series)
        .map(|(l, points)| Series { label: l, points })
        .collect();
    svg_plot(title, "t", "value", &series, false, true)
}

/// Integrates the configured model and writes `timeseries.csv`,
/// `manifest.json` and `timeseries.svg`.
pub fn cmd_run(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Simulation> {
    let start = Instant::now();
    let sim = with_pool(jobs, || simulate(cfg, cfg.model.kind))??;
    prepare_dir(out)?;
    if cfg.output.wants(OutputFormat::Csv) {
        write_csv(&out.join("timeseries.csv"), &sim.header, &sim.rows())?;
    }
    if cfg.output.wants(OutputFormat::Svg) {
        let mut cols: Vec<String> = cfg.diagnostics.m_set.iter().map(|m| format!("energy_uf_h{m}")).collect();
        cols.push("d_total".into());
        cols.push("decay_norm".into());
        std::fs::write(out.join("timeseries.svg"), series_svg("diagnostics", &[("", &sim)], &cols))?;
    }
    if cfg.output.wants(OutputFormat::Json) {
        let manifest = Manifest {
            command: "run",
            code_version: CODE_VERSION,
            config: cfg.clone(),
            jobs,
            wall_time_s: start.elapsed().as_secs_f64(),
            body: RunBody {
                model_kind: sim.kind,
                dissipation_order: sim.dissipation_order,
                samples: sim.records.len(),
                final_t: sim.state.t,
                columns: sim.header.clone(),
                dt: DtSummary::new(&sim.log),
            },
        };
        write_json(&out.join("manifest.json"), &manifest)?;
    }
    Ok(sim)
}

