use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use unitbound::simulation::{run_study, StudyConfig};
use unitbound::Structure;

fn bench_study(c: &mut Criterion) {
    let n = 20_000;
    let mut group = c.benchmark_group("study");
    group.sample_size(10);
    group.throughput(Throughput::Elements(n as u64));
    for case in [
        Structure::NonDescendant,
        Structure::PartialMediator,
        Structure::PureMediator,
    ] {
        for workers in [1usize, 4] {
            let mut cfg = StudyConfig::new(case, n, 9);
            cfg.workers = Some(workers);
            group.bench_with_input(
                BenchmarkId::new(case.name(), format!("{workers}w")),
                &cfg,
                |b, cfg| b.iter(|| run_study(cfg).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_study);
criterion_main!(benches);
