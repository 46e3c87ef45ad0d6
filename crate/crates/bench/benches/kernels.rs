use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nsvfp_bench::fixture;
use nsvfp_core::timestepper::StreamingPropagator;
use nsvfp_core::{ModelKind, Scheme, Stepper};

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn fft(c: &mut Criterion) {
    let mut g = c.benchmark_group("fft");
    for n in [32, 64] {
        let fx = fixture(n, ModelKind::NsVfp);
        let grid = fx.model.grid().clone();
        let field = fx.state.rho.clone();
        let values = grid.inverse(&field);
        g.bench_with_input(BenchmarkId::new("inverse", n), &field, |b, f| b.iter(|| grid.inverse(f)));
        g.bench_with_input(BenchmarkId::new("forward", n), &values, |b, v| b.iter(|| grid.forward(v)));
    }
    g.finish();
}

fn rhs(c: &mut Criterion) {
    let fx = fixture(64, ModelKind::NsVfp);
    c.bench_function("rhs/64", |b| b.iter(|| fx.model.rhs(&fx.state).unwrap()));
}

fn streaming(c: &mut Criterion) {
    let fx = fixture(64, ModelKind::NsVfp);
    let prop = StreamingPropagator::new(fx.model.grid(), fx.model.basis());
    c.bench_function("streaming/64", |b| {
        b.iter_batched(
            || fx.state.f.clone(),
            |mut f| prop.apply(&mut f, 0.01),
            criterion::BatchSize::LargeInput,
        )
    });
}

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    for scheme in [Scheme::ImexEuler, Scheme::Ars222] {
        let fx = fixture(64, ModelKind::NsVfp);
        let st = Stepper::new(fx.model.clone(), scheme, 0.0);
        g.bench_function(format!("{scheme:?}/64"), |b| b.iter(|| st.step(&fx.state, 0.005).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, fft, rhs, streaming, step);
criterion_main!(benches);
