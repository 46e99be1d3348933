use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use crsbench_bench::{synthetic_instances, toy_kb};
use crsbench_core::adapter::{BuiltinOverlap, Ranking, Recommender, RecommendRequest};
use crsbench_core::metrics::{aggregate, score, DEFAULT_CUTOFFS};
use crsbench_core::types::ItemId;

fn scoring_bench(c: &mut Criterion) {
    let rankings: Vec<(Vec<ItemId>, Ranking)> = (0..1000)
        .map(|i| {
            let items: Vec<ItemId> = (0..60).map(|j| ItemId::new(format!("i{:02}", (i + j) % 80))).collect();
            let truth = vec![items[(i * 7) % 60].clone()];
            (
                truth,
                Ranking {
                    instance_id: format!("b:{i}"),
                    items,
                },
            )
        })
        .collect();

    let mut group = c.benchmark_group("metrics");
    group.throughput(Throughput::Elements(rankings.len() as u64));
    group.bench_function("score_1000", |b| {
        b.iter(|| {
            rankings
                .iter()
                .map(|(truth, ranking)| score(truth, ranking, &DEFAULT_CUTOFFS))
                .collect::<Vec<_>>()
        })
    });
    let scores: Vec<_> = rankings
        .iter()
        .map(|(truth, ranking)| score(truth, ranking, &DEFAULT_CUTOFFS))
        .collect();
    group.bench_function("aggregate_1000", |b| {
        b.iter(|| aggregate(&scores, &DEFAULT_CUTOFFS, 0))
    });
    group.finish();
}

fn builtin_bench(c: &mut Criterion) {
    let kb = toy_kb();
    let mut adapter = BuiltinOverlap::new(&kb);
    let instances = synthetic_instances(50);
    let requests: Vec<RecommendRequest> = instances
        .iter()
        .map(|inst| RecommendRequest::from_instance(inst, &inst.answer.text, 50))
        .collect();
    c.bench_function("builtin_overlap_50", |b| {
        b.iter(|| {
            requests
                .iter()
                .map(|r| adapter.recommend(r).unwrap())
                .collect::<Vec<_>>()
        })
    });
}

criterion_group!(benches, scoring_bench, builtin_bench);
criterion_main!(benches);
