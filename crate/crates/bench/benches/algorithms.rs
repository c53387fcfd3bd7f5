use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use inertia_core::problems::{example51, example52};
use inertia_core::{
    check_assumptions, integrate, run, AlgorithmConfig, DomainBox, OdeConfig, PerturbationSpec, Point,
    StoppingRule,
};

fn discrete(c: &mut Criterion) {
    let p = example51();
    let x0 = Point::new(vec![3.0]);
    let stop = StoppingRule::iterations(1000);
    let methods = [
        ("iaa", AlgorithmConfig::iaa(0.3, 0.2, 1.0 / 6.0)),
        ("hbm", AlgorithmConfig::hbm(0.7, 1.0 / 24.0)),
        ("nag", AlgorithmConfig::nag(0.7, 1.0 / 24.0)),
        ("hbm-h", AlgorithmConfig::hbm_h(0.7, 0.05, 1.0 / 24.0)),
        ("nag-h", AlgorithmConfig::nag_h(0.7, 0.05, 1.0 / 24.0)),
    ];
    let mut g = c.benchmark_group("example51_1000_steps");
    for (name, cfg) in &methods {
        g.bench_with_input(BenchmarkId::from_parameter(name), cfg, |b, cfg| {
            b.iter(|| run(&p, black_box(cfg), &x0, &x0, &stop).unwrap())
        });
    }
    g.finish();

    let p2 = example52();
    let noise = PerturbationSpec::gaussian_decay(0.001, 0.01, 1).unwrap();
    let cfg = AlgorithmConfig::iaa(0.4, 0.15, 0.125).with_perturbation(noise);
    let x0 = Point::new(vec![3.0, 3.0]);
    c.bench_function("example52_iaa_per_200_steps", |b| {
        b.iter(|| run(&p2, black_box(&cfg), &x0, &x0, &StoppingRule::iterations(200)).unwrap())
    });
}

fn continuous(c: &mut Criterion) {
    let p = example51();
    let cfg = OdeConfig::new(1.0, 0.1, 10.0).with_record_every(100);
    let (x0, v0) = (Point::new(vec![3.0]), Point::zeros(1));
    c.bench_function("rk4_example51_10k_steps", |b| b.iter(|| integrate(&p, black_box(&cfg), &x0, &v0).unwrap()));
}

fn assumptions(c: &mut Criterion) {
    let p = example52();
    let dom = DomainBox::cube(2, -5.0, 5.0);
    c.bench_function("check_assumptions_example52_10k", |b| {
        b.iter(|| check_assumptions(&p, &dom, black_box(10_000), 0).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = discrete, continuous, assumptions
}
criterion_main!(benches);
