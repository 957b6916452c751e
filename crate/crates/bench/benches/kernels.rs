use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use otalg_core::dynamics::{step, EnvParams};
use otalg_core::guidance::otalg_command;
use otalg_core::presets;
use otalg_core::simulation::run_episode;

fn kernels(c: &mut Criterion) {
    let scenario = presets::scenario().unwrap();
    let state = presets::case(1).unwrap();
    let env = EnvParams::default();
    let g = env.gravity;

    c.bench_function("barrier_evaluate", |b| {
        b.iter(|| scenario.terrain.evaluate(black_box(&state.r)).unwrap())
    });
    c.bench_function("otalg_command", |b| {
        b.iter(|| {
            otalg_command(
                black_box(&state),
                &scenario.config.target,
                &g,
                &scenario.terrain,
                &scenario.gains,
            )
            .unwrap()
        })
    });
    c.bench_function("rk4_step", |b| {
        let a = -g;
        b.iter(|| step(black_box(&state), &a, &env, 0.01).unwrap())
    });
}

fn episodes(c: &mut Criterion) {
    let scenario = presets::scenario().unwrap();
    let state = presets::case(1).unwrap();
    let mut group = c.benchmark_group("episode");
    group.sample_size(20);
    group.bench_function("case1_otalg", |b| {
        b.iter(|| run_episode(&scenario, black_box(&state)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels, episodes);
criterion_main!(benches);
