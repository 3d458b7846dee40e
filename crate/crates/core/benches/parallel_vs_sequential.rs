use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use synbif::bifurcation::{predict_with, PredictOptions};
use synbif::catalog::find_entry;
use synbif::classify::annotate_with;
use synbif::network::Network;
use synbif::numerics::{continue_equilibria, synthesize, ContinuationOptions};
use synbif::par::Exec;
use synbif::spectrum::RealClass;
use synbif::synchrony::enumerate_synchrony_with;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn ring(n: usize) -> Network {
    let next = (0..n).map(|i| (i + 1) % n).collect();
    let prev = (0..n).map(|i| (i + n - 1) % n).collect();
    Network::from_zero_indexed("ring", n, vec![next, prev]).unwrap()
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_synchrony");
    let net = ring(8);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "ring8"), &exec, |b, &exec| {
            b.iter(|| enumerate_synchrony_with(black_box(&net), exec).unwrap())
        });
    }
    group.finish();
}

fn annotate_and_predict(c: &mut Criterion) {
    let mut group = c.benchmark_group("annotate_predict");
    let net = find_entry("C1_D4").unwrap().network;
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "C1_D4"), &exec, |b, &exec| {
            b.iter(|| {
                let al = annotate_with(black_box(&net), exec).unwrap();
                predict_with(&al, &PredictOptions { exec, ..PredictOptions::default() }).unwrap()
            })
        });
    }
    group.finish();
}

fn continuation(c: &mut Criterion) {
    let mut group = c.benchmark_group("continue_equilibria");
    group.sample_size(10);
    let net = find_entry("E6_E4").unwrap().network;
    let al = annotate_with(&net, Exec::Sequential).unwrap();
    let mu = al
        .top_report()
        .eigenfunctions
        .iter()
        .find(|e| e.real_class == RealClass::Always)
        .unwrap()
        .clone();
    let profile = synthesize(&net, &mu, 1).unwrap();
    for (name, exec) in MODES {
        let opts = ContinuationOptions { exec, ..ContinuationOptions::default() };
        group.bench_with_input(BenchmarkId::new(name, "E6_E4"), &opts, |b, opts| {
            b.iter(|| continue_equilibria(&net, &al.lattice, &profile, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, annotate_and_predict, continuation);
criterion_main!(benches);
