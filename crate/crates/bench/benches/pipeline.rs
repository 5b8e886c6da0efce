use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lpembed_bench::gaussian_rows;
use lpembed_core::{
    reduce_lp, LpPointSet, ReductionConfig, SnowflakeMap, Sparsifier, VectorFamily,
};

fn snowflake(c: &mut Criterion) {
    let mut group = c.benchmark_group("snowflake_build");
    for rho in [0.25, 0.5, 0.75] {
        group.bench_with_input(BenchmarkId::from_parameter(rho), &rho, |b, &rho| {
            b.iter(|| SnowflakeMap::build(black_box(rho), 0.1, 1e-2, 1e2).unwrap())
        });
    }
    group.finish();
}

fn sparsify(c: &mut Criterion) {
    let mut group = c.benchmark_group("sparsify");
    group.sample_size(10);
    for (m, r) in [(200, 8), (400, 50), (400, 100)] {
        let family = VectorFamily::new(&gaussian_rows(m, r, 1)).unwrap();
        let sparsifier = Sparsifier::new(9.0).unwrap();
        group.bench_with_input(
            BenchmarkId::new(format!("m{m}"), r),
            &family,
            |b, family| b.iter(|| sparsifier.sparsify(family).unwrap()),
        );
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce_lp");
    group.sample_size(10);
    let config = ReductionConfig::split(0.1, 9.0).unwrap();
    for (k, m) in [(8, 32), (16, 64)] {
        let points = LpPointSet::new(1.0, gaussian_rows(k, m, 2)).unwrap();
        group.bench_with_input(
            BenchmarkId::new(format!("k{k}"), m),
            &points,
            |b, points| b.iter(|| reduce_lp(points, &config).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, snowflake, sparsify, pipeline);
criterion_main!(benches);
