//! Configuration, initial data, experiment drivers and output files.

mod audit;
mod config;
mod decay;
mod init;
mod output;
mod run;
mod sweep;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::SpectralGrid;
use crate::hermite::VelocityBasis;
use crate::model::{Model, ModelKind};

pub use audit::{
    audit, cmd_audit, empirical_coercivity, interpolation_constant, AuditCheck, AuditReport,
    CoercivityAudit,
};
pub use config::{
    DecayConfig, GridConfig, InitConfig, ModelConfig, OutputConfig, OutputFormat, RunConfig, SweepConfig,
    VelocityConfig,
};
pub use decay::{cmd_decay_study, compare_decay, DecayReport, DecaySide, MONOTONE_SLACK};
pub use init::{generate_initial_data, initial_energy, INITIAL_DENSITY_FLOOR};
pub use output::{dt_digest, svg_plot, write_csv, write_json, DtSummary, Series};
pub use run::{cmd_run, simulate, Simulation};
pub use sweep::{
    cmd_sweep_mu, sweep_mu, SweepReport, SweepRow, SLOPE_BAND, SWEEP_HEADER, SWEEP_SAMPLES_HEADER,
};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "NSVFP_OUT_DIR";

/// Crate version written into every manifest.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory: command-line value, then [`OUT_DIR_ENV`], then the
/// configuration.
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output.directory.clone(),
    }
}

pub fn build_grid(cfg: &RunConfig) -> Result<Arc<SpectralGrid>> {
    Ok(Arc::new(SpectralGrid::new(cfg.grid.dim, cfg.grid.points, cfg.grid.length)?))
}

pub fn build_basis(cfg: &RunConfig) -> Result<Arc<VelocityBasis>> {
    Ok(Arc::new(VelocityBasis::new(cfg.grid.dim, cfg.velocity.max_degree)?))
}

pub fn build_model(
    cfg: &RunConfig,
    grid: &Arc<SpectralGrid>,
    basis: &Arc<VelocityBasis>,
    kind: ModelKind,
) -> Result<Arc<Model>> {
    Ok(Arc::new(Model::new(grid.clone(), basis.clone(), kind, cfg.model.options())?))
}

/// Runs `work` on a private pool of `jobs` threads.
pub(crate) fn with_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(pool.install(work))
}

/// Common head of every JSON manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<T: Serialize> {
    pub command: &'static str,
    pub code_version: &'static str,
    pub config: RunConfig,
    pub jobs: usize,
    pub wall_time_s: f64,
    #[serde(flatten)]
    pub body: T,
}

pub(crate) fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Structured report of a failed command, written as `failure.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FailureReport {
    pub command: String,
    pub code_version: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub numerical: bool,
}

pub fn write_failure(dir: &Path, command: &str, err: &Error) -> Result<PathBuf> {
    prepare_dir(dir)?;
    let path = dir.join("failure.json");
    write_json(
        &path,
        &FailureReport {
            command: command.to_string(),
            code_version: CODE_VERSION,
            kind: err.kind(),
            message: err.to_string(),
            numerical: err.is_numerical(),
        },
    )?;
    Ok(path)
}
