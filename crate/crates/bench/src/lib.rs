//! Fixtures shared by the benchmarks: the default desk-scale grid and a
//! perturbed state on it.

use std::sync::Arc;

use nsvfp_core::harness::{build_basis, build_grid, build_model, generate_initial_data};
use nsvfp_core::{CoupledState, Model, ModelKind, RunConfig};

pub struct Fixture {
    pub config: RunConfig,
    pub model: Arc<Model>,
    pub state: CoupledState,
}

/// Default configuration with `points` grid points per axis.
pub fn fixture(points: usize, kind: ModelKind) -> Fixture {
    let mut config = RunConfig::default();
    config.grid.points = points;
    let grid = build_grid(&config).expect("valid grid");
    let basis = build_basis(&config).expect("valid basis");
    let model = build_model(&config, &grid, &basis, kind).expect("valid model");
    let state = generate_initial_data(&config, &grid, basis).expect("feasible amplitude");
    Fixture { config, model, state }
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_is_perturbed() {
        let f = super::fixture(16, nsvfp_core::ModelKind::NsVfp);
        assert!(!f.state.u.is_zero());
    }
}
