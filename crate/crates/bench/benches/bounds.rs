use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trigbound_bench::random_real_poly;
use trigbound_core::toeplitz::eigen_range;
use trigbound_core::{certify_positive, cnd_sharp, BoundConstant, ToeplitzSpec, TrigPoly};

fn constants(c: &mut Criterion) {
    let mut group = c.benchmark_group("cnd_sharp");
    for (big_n, n) in [(17, 8), (64, 12), (512, 32)] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("N{big_n}_n{n}")), &(big_n, n), |b, &(big_n, n)| {
            b.iter(|| cnd_sharp(big_n, n, 1).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_stats");
    group.sample_size(10);
    let p2 = random_real_poly(2, 12, 1);
    group.bench_function("d2_n12_N64", |b| b.iter(|| p2.sample_stats(64).unwrap()));
    let p3 = TrigPoly::normalized_dirichlet(3, 8);
    group.bench_function("d3_n8_N128", |b| b.iter(|| p3.sample_stats(128).unwrap()));
    group.finish();
}

fn certificates(c: &mut Criterion) {
    let p = random_real_poly(2, 6, 2);
    c.bench_function("certify_d2_n6_N32", |b| {
        b.iter(|| certify_positive(&p.sample_stats(32).unwrap(), 6, BoundConstant::Sharp).unwrap())
    });
    let spec = ToeplitzSpec::from(random_real_poly(2, 4, 3));
    c.bench_function("eigen_range_bttb_n4_N32", |b| b.iter(|| eigen_range(&spec, 32).unwrap()));
}

criterion_group!(benches, constants, sampling, certificates);
criterion_main!(benches);
