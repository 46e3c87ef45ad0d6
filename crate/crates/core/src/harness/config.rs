//! Sectioned TOML run configuration. Every key has a default and unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsConfig;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelOptions};
use crate::timestepper::StepperConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub length: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            length: 2.0 * std::f64::consts::PI,
            points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VelocityConfig {
    pub max_degree: usize,
}

impl Default for VelocityConfig {
    fn default() -> Self {
        Self { max_degree: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub mu: f64,
    pub drag_coupling: bool,
    pub pressure_tol: f64,
    pub pressure_max_iter: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let o = ModelOptions::default();
        Self {
            kind: ModelKind::NsVfp,
            mu: 0.05,
            drag_coupling: o.drag_coupling,
            pressure_tol: o.pressure_tol,
            pressure_max_iter: o.pressure_max_iter,
        }
    }
}

impl ModelConfig {
    pub fn options(&self) -> ModelOptions {
        ModelOptions {
            drag_coupling: self.drag_coupling,
            explicit_terms: true,
            pressure_tol: self.pressure_tol,
            pressure_max_iter: self.pressure_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub seed: u64,
    /// Target composite energy `ε`.
    pub amplitude: f64,
    /// Active band `k_min ≤ |k| ≤ k_max` in integer wavenumbers.
    pub k_min: f64,
    pub k_max: f64,
    /// Relative size of the `|β| = 2, 3` content of `f₀`.
    pub micro_amplitude: f64,
    /// Sobolev order of the composite energy that is normalized to `ε`.
    pub energy_order: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            amplitude: 0.05,
            k_min: 1.0,
            k_max: 3.0,
            micro_amplitude: 1.0,
            energy_order: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub mu_values: Vec<f64>,
    /// Spacing of the samples at which the error functionals are taken.
    pub sample_dt: f64,
    /// Step shared by the reference and every viscous run; when absent it
    /// is derived from the stability limit of the most viscous run.
    pub dt: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mu_values: (0..8).map(|k| 0.1 / 2f64.powi(k)).collect(),
            sample_dt: 0.25,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    /// Samples with `t` below this are left out of the fits.
    pub fit_start: f64,
    /// Allowed shortfall of the viscous decay rate against the inviscid one.
    pub rate_tolerance: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            fit_start: 2.0,
            rate_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub velocity: VelocityConfig,
    pub model: ModelConfig,
    pub init: InitConfig,
    pub stepper: StepperConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub decay: DecayConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(Error::Config(format!("grid.dim must be 1, 2 or 3, got {}", g.dim)));
        }
        if g.points < 4 || !g.points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.points must be a power of two >= 4, got {}",
                g.points
            )));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(Error::Config(format!("grid.length must be positive, got {}", g.length)));
        }
        if !(3..=40).contains(&self.velocity.max_degree) {
            return Err(Error::Config(format!(
                "velocity.max_degree must lie in 3..=40, got {}",
                self.velocity.max_degree
            )));
        }
        let m = &self.model;
        if !(0.0..1.0).contains(&m.mu) {
            return Err(Error::Config(format!("model.mu must lie in [0, 1), got {}", m.mu)));
        }
        if !(m.pressure_tol > 0.0) || m.pressure_max_iter == 0 {
            return Err(Error::Config("pressure tolerance and iteration cap must be positive".into()));
        }
        let i = &self.init;
        if !(i.amplitude >= 0.0 && i.amplitude.is_finite()) {
            return Err(Error::Config(format!("init.amplitude must be non-negative, got {}", i.amplitude)));
        }
        if !(i.k_min >= 0.0 && i.k_max >= i.k_min) {
            return Err(Error::Config(format!(
                "init band [{}, {}] is empty",
                i.k_min, i.k_max
            )));
        }
        if !(i.micro_amplitude >= 0.0 && i.micro_amplitude.is_finite()) {
            return Err(Error::Config("init.micro_amplitude must be non-negative".into()));
        }
        if i.energy_order > 6 {
            return Err(Error::Config("init.energy_order above 6 is not supported".into()));
        }
        self.stepper.validate()?;
        self.diagnostics.validate()?;
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats must not be empty".into()));
        }
        let s = &self.sweep;
        if s.mu_values.is_empty() || s.mu_values.iter().any(|mu| !(*mu > 0.0 && *mu < 1.0)) {
            return Err(Error::Config("sweep.mu_values must be a non-empty list in (0, 1)".into()));
        }
        if !(s.sample_dt > 0.0 && s.sample_dt.is_finite()) {
            return Err(Error::Config("sweep.sample_dt must be positive".into()));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("sweep.dt must be positive, got {dt}")));
            }
        }
        let d = &self.decay;
        if !(d.fit_start >= 0.0) || !(d.rate_tolerance >= 0.0) {
            return Err(Error::Config("decay.fit_start and decay.rate_tolerance must be non-negative".into()));
        }
        Ok(())
    }
}
