//! Pseudo-spectral simulation of a fluid–kinetic system.

pub mod diagnostics;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod hermite;
pub mod model;
pub mod timestepper;

pub use diagnostics::{Diagnostics, DiagnosticsConfig, DiagnosticsRecord};
pub use error::{Error, Result};
pub use fourier::{ScalarField, SpectralGrid, VectorField};
pub use harness::RunConfig;
pub use hermite::{HermiteField, MultiIndex, VelocityBasis};
pub use model::{CoupledState, Model, ModelKind, ModelOptions};
pub use timestepper::{integrate, Scheme, Stepper, StepperConfig};

#[cfg(test)]
#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;
