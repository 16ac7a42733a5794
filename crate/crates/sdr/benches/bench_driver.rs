//! Compares the parallel benchmark driver against the sequential one on
//! small instance batches. With `--no-default-features` the parallel path
//! degrades to the sequential driver, which makes the two groups coincide.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sdr::bench::{run_many, run_many_sequential, BenchConfig};
use sdr::domains::{generate, DomainSpec, Family};
use sdr::executive::SdrConfig;
use sdr::model::PposProblem;
use sdr::parser;

fn build(family: Family, params: &[u32]) -> PposProblem {
    let spec = DomainSpec {
        family,
        params: params.to_vec(),
        seed: 0,
    };
    let (d, p) = generate(&spec).unwrap();
    let (dom, prob) = parser::parse(&d, &p).unwrap();
    parser::ground(&dom, &prob).unwrap()
}

fn config(runs: usize) -> BenchConfig {
    BenchConfig {
        runs,
        base: SdrConfig {
            seed: 11,
            ..Default::default()
        },
        measure_time: false,
    }
}

fn bench_drivers(c: &mut Criterion) {
    let cases: Vec<(&str, PposProblem, usize)> = vec![
        ("diseases-6", build(Family::Diseases, &[6]), 16),
        ("wumpus-4", build(Family::Wumpus, &[4]), 8),
        ("doors-5", build(Family::Doors, &[5]), 8),
    ];
    let mut group = c.benchmark_group("bench-driver");
    group.sample_size(10);
    for (name, problem, runs) in &cases {
        let cfg = config(*runs);
        group.bench_function(format!("{name}/parallel"), |b| {
            b.iter(|| black_box(run_many(problem, &cfg).unwrap()))
        });
        group.bench_function(format!("{name}/sequential"), |b| {
            b.iter(|| black_box(run_many_sequential(problem, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_drivers);
criterion_main!(benches);
