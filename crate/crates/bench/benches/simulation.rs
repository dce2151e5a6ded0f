use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use mirl_bench::{filled_counts, trial_config};
use mirl_core::agents::AgentVariant;
use mirl_core::gridworld::FullState;
use mirl_core::harness::run_trial;
use mirl_core::missingness::{apply_mask, Mask};
use mirl_core::rng::indexed_stream;
use mirl_core::tabular::{q_update_fractional, sample_completion, QTable, StateSpace, TDParams};
use mirl_core::theory::coeffs::coeff_table;
use mirl_core::Color;

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("trial_5000_steps");
    group.sample_size(20);
    for (name, variant, k) in [
        ("mi_k10", AgentVariant::MiSynthetic, 10),
        ("mi_k5", AgentVariant::MiSynthetic, 5),
        ("si", AgentVariant::SiSynthetic, 1),
        ("missing_as_state", AgentVariant::MissingAsState, 1),
        ("random_action", AgentVariant::RandomAction, 1),
    ] {
        let cfg = trial_config(variant, k, 0.4, 5000);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_trial(black_box(cfg), 0).unwrap())
        });
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let space = StateSpace::full(8, 8);
    let counts = filled_counts(50_000, 10, 1);
    let obs = apply_mask(
        &FullState::new(3, 4, Color::Orange),
        Mask {
            x: true,
            y: false,
            color: true,
        },
    );
    c.bench_function("sample_completion", |b| {
        let mut rng = indexed_stream(2, 0);
        b.iter(|| sample_completion(&counts, black_box(17), 3, &obs, &space, &mut rng))
    });

    let params = TDParams::new(0.1, 1.0, 10);
    let pairs: Vec<(usize, usize)> = (0..10).map(|i| (i * 7, i * 7 + 3)).collect();
    c.bench_function("q_update_fractional_k10", |b| {
        let mut q = QTable::new(192, 8);
        b.iter(|| q_update_fractional(&mut q, black_box(&pairs), 2, -1.0, false, &params))
    });

    c.bench_function("coeff_table_100", |b| {
        b.iter(|| coeff_table(black_box(100)))
    });
}

criterion_group!(benches, trials, kernels);
criterion_main!(benches);
