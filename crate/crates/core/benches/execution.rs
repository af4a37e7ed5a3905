use criterion::{criterion_group, criterion_main, Criterion};
use orlicz_bdg::exec::Execution;
use orlicz_bdg::lab::engine::{brownian_engine, EngineConfig};
use orlicz_bdg::lab::good_lambda::{estimate_good_lambda, GoodLambdaConfig};

fn engine(c: &mut Criterion) {
    let cfg = EngineConfig { horizon: 1.0, steps: 256, replicates: 4096 };
    let mut group = c.benchmark_group("brownian_engine");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| b.iter(|| brownian_engine(&cfg, 7, exec).unwrap()));
    }
    group.finish();
}

fn good_lambda(c: &mut Criterion) {
    let cfg = GoodLambdaConfig::standard(64, 2048);
    let mut group = c.benchmark_group("good_lambda");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| b.iter(|| estimate_good_lambda(&cfg, 7, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, engine, good_lambda);
criterion_main!(benches);
