use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use matic_core::agents::{garage_scenario, iid_trace};
use matic_core::implicature::{brute_force_oracle, infer_cause, ConditionalModel};

fn train(c: &mut Criterion) {
    let (_, corpus) = garage_scenario();
    c.bench_function("train/garage_k3", |b| {
        b.iter(|| ConditionalModel::train(black_box(&corpus), 3, 1.0).unwrap())
    });
    let symbols: Vec<_> = (0..20).map(|s| iid_trace(s, 30)).collect();
    c.bench_function("train/iid_20x30_k2", |b| {
        b.iter(|| ConditionalModel::train(black_box(&symbols), 2, 1.0).unwrap())
    });
}

fn infer(c: &mut Criterion) {
    let (trace, corpus) = garage_scenario();
    let model = ConditionalModel::train(&corpus, 3, 1.0).unwrap();
    c.bench_function("infer/garage_reply", |b| {
        b.iter(|| infer_cause(&model, black_box(&trace), "reply", 3).unwrap())
    });

    let corpus: Vec<_> = (0..20).map(|s| iid_trace(s, 30)).collect();
    let model = ConditionalModel::train(&corpus, 3, 1.0).unwrap();
    let mut group = c.benchmark_group("infer/predecessors");
    for preds in [2usize, 4, 6] {
        let trace = iid_trace(1000 + preds as u64, preds + 1);
        let y = trace.events()[preds].id.clone();
        group.bench_with_input(BenchmarkId::new("infer_cause", preds), &preds, |b, _| {
            b.iter(|| infer_cause(&model, black_box(&trace), &y, 3).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("brute_force", preds), &preds, |b, _| {
            b.iter(|| brute_force_oracle(&model, black_box(&trace), &y, 3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, train, infer);
criterion_main!(benches);
