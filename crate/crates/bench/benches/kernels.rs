use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hblab_core::heavy_ball::run_standard;
use hblab_core::recurrence::peak_time;
use hblab_core::restart::{adaptive_run, DEFAULT_EPS};
use hblab_core::{DiagonalQuadratic, HbParams, SecondOrderRecurrence};

fn recurrence(c: &mut Criterion) {
    let rec = SecondOrderRecurrence::with_double_root(0.99, -1.0, 1.0);
    c.bench_function("iterate rho=0.99 k=1000", |b| b.iter(|| black_box(&rec).iterate(1000)));
    c.bench_function("peak_time rho=0.9999", |b| b.iter(|| peak_time(black_box(0.9999))));
}

fn heavy_ball(c: &mut Criterion) {
    let q = DiagonalQuadratic::log_uniform(1.0, 1e4, 100, 1).unwrap();
    let params = HbParams::optimal(1.0, 1e4).unwrap();
    let x0 = vec![1.0; 100];
    c.bench_function("heavy ball n=100 kappa=1e4 k=1000", |b| {
        b.iter(|| run_standard(&q, black_box(&x0), params, 1000))
    });
}

fn adaptive(c: &mut Criterion) {
    let q = DiagonalQuadratic::log_uniform(1.0, 1e2, 10, 1).unwrap();
    let x0 = vec![1.0; 10];
    c.bench_function("adaptive n=10 kappa=1e2 L0=L/1024", |b| {
        b.iter(|| adaptive_run(&q, black_box(&x0), 1e2 / 1024.0, DEFAULT_EPS, 100_000))
    });
}

criterion_group!(benches, recurrence, heavy_ball, adaptive);
criterion_main!(benches);
