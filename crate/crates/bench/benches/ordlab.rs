use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ordlab_core::generators::{gen_adversarial_highdim, Recursion};
use ordlab_core::{
    fit_task, gen_isotropic, md_score, run_policy, GreedyRule, OrderingPolicy, RunOptions,
};

fn projection_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_task");
    for d in [100, 400] {
        let g = gen_isotropic(d, d / 10, 4, 1).unwrap();
        let col = &g.collection;
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| fit_task(black_box(col.start()), col.task(0), col.cache(0)).unwrap())
        });
    }
    group.finish();
}

fn greedy_scores(c: &mut Criterion) {
    let g = gen_isotropic(100, 10, 50, 2).unwrap();
    let col = &g.collection;
    c.bench_function("md_score_all_tasks/d100_T50", |b| {
        b.iter(|| {
            (0..col.len())
                .map(|m| md_score(col.task(m), col.cache(m), black_box(col.start())).unwrap())
                .fold(0.0, f64::max)
        })
    });
}

fn full_runs(c: &mut Criterion) {
    let g = gen_isotropic(100, 10, 50, 3).unwrap();
    let col = &g.collection;
    let mut group = c.benchmark_group("run_policy/d100_r10_T50");
    group.sample_size(20);
    for (name, policy) in [
        ("random-without", OrderingPolicy::random_without(3)),
        ("md", OrderingPolicy::greedy(GreedyRule::MaxDistance)),
        ("mr", OrderingPolicy::greedy(GreedyRule::MaxResidual)),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| run_policy(col, policy, RunOptions::steps(50)).unwrap())
        });
    }
    group.finish();
}

fn construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("adversarial");
    group.sample_size(10);
    group.bench_function("recursion_min_delta/d500", |b| {
        b.iter(|| Recursion::new(black_box(500)).unwrap().min_delta())
    });
    group.bench_function("gen_highdim/d100", |b| {
        b.iter(|| gen_adversarial_highdim(black_box(100)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    projection_step,
    greedy_scores,
    full_runs,
    construction
);
criterion_main!(benches);
