//! Structural invariants on random fields: transforms, projections, the collision operator and one full step.

use std::sync::{Arc, OnceLock};

use nsvfp_core::harness::{build_basis, build_grid, build_model, generate_initial_data};
use nsvfp_core::hermite::{apply_fokker_planck, moments, project_macro, project_micro};
use nsvfp_core::{
    CoupledState, HermiteField, ModelKind, RunConfig, Scheme, SpectralGrid, Stepper, VectorField, VelocityBasis,
};
use proptest::prelude::*;

const N: usize = 16;

fn grid() -> &'static SpectralGrid {
    static G: OnceLock<SpectralGrid> = OnceLock::new();
    G.get_or_init(|| SpectralGrid::new(2, N, 2.0 * std::f64::consts::PI).unwrap())
}

fn basis() -> Arc<VelocityBasis> {
    static B: OnceLock<Arc<VelocityBasis>> = OnceLock::new();
    B.get_or_init(|| Arc::new(VelocityBasis::new(2, 5).unwrap())).clone()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, N * N)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(v in values()) {
        let g = grid();
        let back = g.inverse(&g.forward(&v));
        let err = v.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-13, "round trip error {err}");
    }

    #[test]
    fn parseval(v in values()) {
        let g = grid();
        let physical = g.cell_volume() * v.iter().map(|x| x * x).sum::<f64>();
        prop_assert!(close(g.l2_norm_sq(&g.forward(&v)), physical, 1e-12));
    }

    #[test]
    fn shells_partition_the_fluctuation(v in values()) {
        let g = grid();
        let f = g.forward(&v);
        let shells: f64 = g.shell_energies(&f).iter().map(|s| s.energy).sum();
        let mean = g.volume() * f.coefficients()[0].norm_sqr();
        prop_assert!(close(shells + mean, g.l2_norm_sq(&f), 1e-12));
    }

    #[test]
    fn derivative_is_skew(a in values(), b in values(), axis in 0usize..2) {
        let g = grid();
        let (fa, fb) = (g.forward(&a), g.forward(&b));
        let lhs = g.inner(&g.derivative(&fa, axis), &fb);
        let rhs = -g.inner(&fa, &g.derivative(&fb, axis));
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn leray_projection(a in values(), b in values()) {
        let g = grid();
        let w = VectorField::new(vec![g.forward(&a), g.forward(&b)]);
        let p = g.leray_project(&w).unwrap();
        let pp = g.leray_project(&p).unwrap();
        prop_assert!(pp.max_diff(&p) < 1e-14);
        prop_assert!(g.l2_norm_sq(&g.divergence(&p)) < 1e-24);
        let norm = |x: &VectorField| x.comps.iter().map(|c| g.l2_norm_sq(c)).sum::<f64>();
        prop_assert!(norm(&p) <= norm(&w) * (1.0 + 1e-12));
    }

    #[test]
    fn fokker_planck_dissipates_by_degree(seed in prop::collection::vec(values(), 21)) {
        let g = grid();
        let basis = basis();
        prop_assume!(seed.len() == basis.len());
        let f = HermiteField::from_coeffs(basis, seed.iter().map(|v| g.forward(v)).collect()).unwrap();
        let lf = apply_fokker_planck(&f);
        let micro = project_micro(&f);
        let b = moments(&f).b;
        let b2: f64 = b.comps.iter().map(|c| g.l2_norm_sq(c)).sum();
        let bound = -b2 - 2.0 * micro.l2_norm_sq(g);
        prop_assert!(lf.inner(&f, g) <= bound * (1.0 - 1e-12), "{} > {bound}", lf.inner(&f, g));
        let mut sum = project_macro(&f);
        sum.axpy(1.0, &micro);
        prop_assert!(sum.max_diff(&f) == 0.0);
        prop_assert!(g.l2_norm_sq(&moments(&lf).a) == 0.0);
    }
}

fn mass_and_momentum(g: &SpectralGrid, s: &CoupledState) -> (f64, [f64; 2]) {
    let mut p = [0.0; 2];
    for (i, pi) in p.iter_mut().enumerate() {
        *pi = g.integral(&s.u.comps[i]) + g.inner(&s.rho, &s.u.comps[i]) + g.integral(s.f.momentum(i));
    }
    (g.integral(&s.rho) + g.integral(s.f.density()), p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn one_step_conserves(seed in 0u64..1_000_000, ars in any::<bool>(), euler in any::<bool>()) {
        let text = format!("[grid]\npoints = 16\n[velocity]\nmax_degree = 4\n[init]\namplitude = 0.02\nseed = {seed}\n");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        let (g, basis) = (build_grid(&cfg).unwrap(), build_basis(&cfg).unwrap());
        let kind = if euler { ModelKind::EulerVfp } else { ModelKind::NsVfp };
        let model = build_model(&cfg, &g, &basis, kind).unwrap();
        let mut s = generate_initial_data(&cfg, &g, basis).unwrap();
        if euler {
            s.mu = 0.0;
        }
        let scheme = if ars { Scheme::Ars222 } else { Scheme::ImexEuler };
        let next = Stepper::new(model, scheme, 0.0).step(&s, 0.01).unwrap();
        let (m0, p0) = mass_and_momentum(&g, &s);
        let (m1, p1) = mass_and_momentum(&g, &next);
        prop_assert!((m1 - m0).abs() < 1e-13, "mass {m0} -> {m1}");
        for i in 0..2 {
            prop_assert!((p1[i] - p0[i]).abs() < 1e-13, "momentum {i}: {} -> {}", p0[i], p1[i]);
        }
        prop_assert!(g.l2_norm_sq(&g.divergence(&next.u)).sqrt() < 1e-10);
    }
}

