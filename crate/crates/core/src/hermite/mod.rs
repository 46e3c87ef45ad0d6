//! Hermite expansion in velocity.

mod basis;
mod field;
pub(crate) mod ops;
mod oracle;
mod quadrature;

pub use basis::{maxwellian, Link, MultiIndex, VelocityBasis};
pub use field::{HermiteField, Moments};
pub use ops::{
    apply_drift_source, apply_fokker_planck, apply_v_multiply, coercivity_ratio, gamma_ij,
    moments, project_macro, project_micro, truncated_coercivity_constant, weighted_micro_norm,
    weighted_micro_norm_sq_with, CoercivitySample,
};
pub use oracle::{identity_errors, IdentityErrors};
pub use quadrature::{normalized_hermite, GaussHermite};
