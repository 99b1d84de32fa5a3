use bratteli_core::dynsys::{canonical_system, find_non_af_certificate_with, verify_nesting_with, GeneratorFamily};
use bratteli_core::{BratteliDiagram, Execution};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn certificate_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("certificate_search");
    group.sample_size(10);
    let car = canonical_system(&BratteliDiagram::car(5), 5).unwrap();
    let car = GeneratorFamily::from_system(&car);
    let odometer = GeneratorFamily::odometer(3, 4).unwrap();
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new("car_L3_D5", name), &exec, |b, &exec| {
            b.iter(|| find_non_af_certificate_with(&car, 3, 5, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("odometer3_L3_D4", name), &exec, |b, &exec| {
            b.iter(|| find_non_af_certificate_with(&odometer, 3, 4, exec).unwrap())
        });
    }
    group.finish();
}

fn nesting(c: &mut Criterion) {
    let mut group = c.benchmark_group("nesting");
    group.sample_size(10);
    let sys = canonical_system(&BratteliDiagram::gicar(6), 6).unwrap();
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new("gicar_n4_depth6", name), &exec, |b, &exec| {
            b.iter(|| verify_nesting_with(&sys, 4, 6, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, certificate_search, nesting);
criterion_main!(benches);
