use affdim_core::attractor::{box_dimension, dyadic_scales, generate_random, WindowPolicy};
use affdim_core::fixtures;
use affdim_core::lyapunov::exponents_mc;
use affdim_core::linalg::singular_values;
use affdim_core::pressure::{affinity_upper, LevelSpectra};
use affdim_core::rng::stream;
use affdim_core::StepMeasure;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn svd(c: &mut Criterion) {
    let mut rng = stream(1, 0);
    let mut group = c.benchmark_group("singular_values");
    for d in [2usize, 3, 5] {
        let a = fixtures::gaussian_matrix(d, 0.5, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(d), &a, |b, a| {
            b.iter(|| singular_values(black_box(a)).unwrap())
        });
    }
    group.finish();
}

fn pressure(c: &mut Criterion) {
    let ifs = fixtures::f1();
    let mut group = c.benchmark_group("pressure");
    group.sample_size(10);
    for n in [6usize, 8] {
        group.bench_with_input(BenchmarkId::new("level_spectra", n), &n, |b, &n| {
            b.iter(|| LevelSpectra::new(&ifs, n).unwrap())
        });
    }
    let levels = LevelSpectra::new(&ifs, 8).unwrap();
    group.bench_function("log_sum_n8", |b| b.iter(|| levels.log_sum(black_box(0.77))));
    group.bench_function("affinity_upper_n8", |b| b.iter(|| affinity_upper(&ifs, 8, 1e-9).unwrap()));
    group.finish();
}

fn lyapunov(c: &mut Criterion) {
    let ifs = fixtures::f1();
    let measure = StepMeasure::uniform(ifs.len(), 1).unwrap();
    let mut group = c.benchmark_group("lyapunov");
    group.sample_size(10);
    group.bench_function("exponents_mc_20k_x4", |b| {
        b.iter(|| exponents_mc(&ifs, &measure, 20_000, 4, 0).unwrap())
    });
    group.finish();
}

fn box_counting(c: &mut Criterion) {
    let ifs = fixtures::sierpinski();
    let mut group = c.benchmark_group("attractor");
    group.sample_size(10);
    group.bench_function("generate_random_100k", |b| {
        b.iter(|| generate_random(&ifs, 100_000, 40, 0).unwrap())
    });
    let cloud = generate_random(&ifs, 100_000, 40, 0).unwrap();
    let scales = dyadic_scales(cloud.max_norm(), 0, 16);
    group.bench_function("box_dimension_100k", |b| {
        b.iter(|| box_dimension(&cloud, &scales, WindowPolicy::All).unwrap())
    });
    group.finish();
}

criterion_group!(benches, svd, pressure, lyapunov, box_counting);
criterion_main!(benches);
