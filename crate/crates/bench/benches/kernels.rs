use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use metavqe::exact::{ground_state_lanczos, LanczosConfig};
use metavqe::{param_shift_gradient, Gate, Statevector};
use metavqe_bench::{meta_circuit, plain_circuit, xxz};

fn gates(c: &mut Criterion) {
    let mut group = c.benchmark_group("gates");
    for n in [8, 12, 16] {
        let mut s = Statevector::zeros(n).unwrap();
        let ry = Gate::Ry { target: n / 2, angle: 0.3 };
        let cx = Gate::Cnot { control: 0, target: n - 1 };
        group.bench_with_input(BenchmarkId::new("ry", n), &n, |b, _| b.iter(|| s.apply(black_box(&ry)).unwrap()));
        group.bench_with_input(BenchmarkId::new("cnot", n), &n, |b, _| b.iter(|| s.apply(black_box(&cx)).unwrap()));
    }
    group.finish();
}

fn expectation(c: &mut Criterion) {
    let mut group = c.benchmark_group("expectation");
    for n in [8, 12, 14] {
        let h = xxz(n);
        let (circuit, p) = plain_circuit(n);
        let s = circuit.run(&[], &p).unwrap();
        group.bench_with_input(BenchmarkId::new("xxz", n), &n, |b, _| b.iter(|| black_box(&s).expectation(&h).unwrap()));
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("param_shift");
    group.sample_size(10);
    for n in [4, 8] {
        let h = xxz(n);
        let (circuit, p) = meta_circuit(n);
        group.bench_with_input(BenchmarkId::new("meta", n), &n, |b, _| {
            b.iter(|| param_shift_gradient(&circuit, &h, &[0.4], black_box(&p)).unwrap())
        });
    }
    group.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut group = c.benchmark_group("lanczos");
    group.sample_size(10);
    for n in [10, 12] {
        let h = xxz(n);
        group.bench_with_input(BenchmarkId::new("xxz", n), &n, |b, _| {
            b.iter(|| ground_state_lanczos(black_box(&h), &LanczosConfig::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gates, expectation, gradient, lanczos);
criterion_main!(benches);
