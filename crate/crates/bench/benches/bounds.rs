use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unitbound::benefit::{bounds, lipearl_bounds};
use unitbound::oracle::{exact_counterfactuals, induced_input, sample_scm};
use unitbound::{BenefitVector, Structure};

fn bench_bounds(c: &mut Criterion) {
    let bv = BenefitVector::cure_minus_harm();
    let mut group = c.benchmark_group("bounds");
    for st in Structure::ALL {
        for k in [2usize, 4] {
            let scm = sample_scm(st, k, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let data = induced_input(&scm);
            group.bench_with_input(BenchmarkId::new(st.name(), k), &data, |b, data| {
                b.iter(|| bounds(black_box(data), &bv).unwrap())
            });
        }
    }
    let margin = induced_input(
        &sample_scm(Structure::Baseline, 1, &mut ChaCha8Rng::seed_from_u64(2)).unwrap(),
    )
    .margin();
    group.bench_function("lipearl", |b| {
        b.iter(|| lipearl_bounds(black_box(&margin), &bv).unwrap())
    });
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    for st in [Structure::NonDescendant, Structure::PartialMediator] {
        let scm = sample_scm(st, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        group.bench_function(BenchmarkId::new("enumerate", st.name()), |b| {
            b.iter(|| exact_counterfactuals(black_box(&scm)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_bounds, bench_oracle);
criterion_main!(benches);
