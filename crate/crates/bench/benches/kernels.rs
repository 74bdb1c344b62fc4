use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nsvfp_bench::coupled_simulation;
use nsvfp_core::coupling::{coupled_drag_substep, full_step};
use nsvfp_core::diagnostics::dissipation;
use nsvfp_core::fluid::fluid_substep;
use nsvfp_core::kinetic::{fokker_planck_substep, transport_substep};

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for n in [64usize, 128] {
        let sim = coupled_simulation(n);
        let dt = sim.next_dt();
        let (s, g, p, cfg) = (&sim.state, &sim.grid, &sim.params, &sim.scheme);
        group.bench_with_input(BenchmarkId::new("transport", n), &n, |b, _| {
            b.iter(|| transport_substep(black_box(&s.kinetic), dt, g, &cfg.kinetic).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fokker_planck", n), &n, |b, _| {
            b.iter(|| fokker_planck_substep(black_box(&s.kinetic), &s.fluid, dt, p, g, &cfg.kinetic).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fluid", n), &n, |b, _| {
            b.iter(|| fluid_substep(black_box(&s.fluid), dt, p, &cfg.fluid, g).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("drag_exchange", n), &n, |b, _| {
            b.iter(|| coupled_drag_substep(black_box(s), dt, p, g, cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("full_step", n), &n, |b, _| {
            b.iter(|| full_step(black_box(s), dt, p, g, cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dissipation", n), &n, |b, _| {
            b.iter(|| dissipation(black_box(s), p, g, 1e-300))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
