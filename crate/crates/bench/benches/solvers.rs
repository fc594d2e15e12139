use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mcf_bench::{bumped_cone, cone};
use mcf_core::barriers::{lemma_barrier_flow, LemmaBarrierConfig};
use mcf_core::expander::{solve_expander_profile, ShootingConfig};
use mcf_core::flow::{evolve, step};

fn expander(c: &mut Criterion) {
    let k = cone(2, 1.0);
    let cfg = ShootingConfig::default();
    c.bench_function("expander_shooting_n2", |b| b.iter(|| solve_expander_profile(black_box(&k), &cfg).unwrap()));
}

fn flow(c: &mut Criterion) {
    let k = cone(2, 1.0);
    let (u0, cfg) = bumped_cone(&k, 801, 1.0);
    c.bench_function("implicit_step_801", |b| b.iter(|| step(black_box(&u0), 0.0, 1e-2, &cfg).unwrap()));
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    g.bench_function("evolve_801_to_t1", |b| b.iter(|| evolve(black_box(&u0), 1.0, &cfg).unwrap()));
    g.finish();
}

fn barrier(c: &mut Criterion) {
    let k = cone(3, 1.0);
    let cfg = LemmaBarrierConfig::default();
    let mut g = c.benchmark_group("barrier");
    g.sample_size(10);
    g.bench_function("lemma_barrier_n3", |b| b.iter(|| lemma_barrier_flow(black_box(&k), &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, expander, flow, barrier);
criterion_main!(benches);
