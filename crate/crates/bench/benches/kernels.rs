use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use wdch::besov::{besov_norm, BesovIndex};
use wdch::eulerian::eulerian_rhs;
use wdch::lagrangian::{direct_exp_kernel_sums, fast_exp_kernel_sums, init_from_eulerian, lagrangian_rhs};
use wdch::ModelParams;
use wdch_bench::{ordered_instance, smooth_datum};

fn kernel_sums(c: &mut Criterion) {
    let mut g = c.benchmark_group("exp_kernel_sums");
    for n in [1024, 4096, 16384, 65536] {
        let (y, w) = ordered_instance(n, 40.0);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("fast", n), &n, |b, _| {
            b.iter(|| fast_exp_kernel_sums(black_box(&y), black_box(&w), 40.0).unwrap())
        });
        if n <= 4096 {
            g.bench_with_input(BenchmarkId::new("direct", n), &n, |b, _| {
                b.iter(|| direct_exp_kernel_sums(black_box(&y), black_box(&w), 40.0))
            });
        }
    }
    g.finish();
}

fn right_hand_sides(c: &mut Criterion) {
    let p = ModelParams::new(1.0, 3.0, 4.0, 2.0, 0.5).unwrap();
    let mut g = c.benchmark_group("rhs");
    for n in [1024, 8192] {
        let u = smooth_datum(n);
        let st = init_from_eulerian(&u).unwrap();
        g.bench_with_input(BenchmarkId::new("eulerian", n), &n, |b, _| b.iter(|| eulerian_rhs(black_box(&u), &p)));
        g.bench_with_input(BenchmarkId::new("lagrangian", n), &n, |b, _| {
            b.iter(|| lagrangian_rhs(black_box(&st), &p).unwrap())
        });
    }
    g.finish();
}

fn besov(c: &mut Criterion) {
    let idx = BesovIndex::critical(2.0, 1.0).unwrap();
    let u = smooth_datum(8192);
    c.bench_function("besov_norm/8192", |b| b.iter(|| besov_norm(black_box(&u), &idx)));
}

criterion_group!(benches, kernel_sums, right_hand_sides, besov);
criterion_main!(benches);
