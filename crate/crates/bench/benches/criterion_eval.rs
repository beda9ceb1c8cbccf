use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion as Bench};

use coclust::model::densify;
use coclust::{CoclusterModel, Criterion, CriterionOptions, PartitionSet};
use coclust_bench::{iris, planted};

fn model_for(data: &coclust::Dataset, parts: usize, g_u: usize, g_p: usize) -> CoclusterModel {
    let partitions = PartitionSet::equal_frequency(data, parts).unwrap();
    let inst: Vec<usize> = (0..data.n_instances()).map(|i| i % g_u).collect();
    let part: Vec<usize> = (0..partitions.n_parts()).map(|j| j % g_p).collect();
    CoclusterModel::build(data, partitions, densify(&inst), densify(&part)).unwrap()
}

fn evaluate(c: &mut Bench) {
    let mut group = c.benchmark_group("evaluate");
    for (name, data) in [("iris", iris()), ("planted-10k", planted(10_000))] {
        let model = model_for(&data, 8, 4, 4);
        let crit = Criterion::for_model(&model, CriterionOptions::default());
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(crit.total(black_box(&model))))
        });
    }
    group.finish();
}

fn deltas(c: &mut Bench) {
    let data = planted(10_000);
    let model = model_for(&data, 8, 4, 4);
    let crit = Criterion::for_model(&model, CriterionOptions::default());
    let moves = model.candidate_moves();
    c.bench_function("delta/all-candidates", |b| {
        b.iter(|| {
            let mut best = f64::INFINITY;
            for mv in &moves {
                best = best.min(crit.delta(&model, mv).unwrap());
            }
            black_box(best)
        })
    });
    c.bench_function("delta/recompute-one", |b| {
        let mv = moves[0];
        b.iter(|| black_box(crit.total(&model.with_move(&mv).unwrap())))
    });
}

criterion_group!(benches, evaluate, deltas);
criterion_main!(benches);
