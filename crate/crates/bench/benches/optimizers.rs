use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nsm_core::corruption::{Adversary, CorruptionChannel};
use nsm_core::harness::{build_instance, ExperimentConfig, Scale, StartSpec};
use nsm_core::optimizers::{nsm_step, run, Method, RunSettings, StepSchedule};
use nsm_core::problems::{condition_number, Matrix};
use nsm_core::{FeasibleSet, RealVector};

fn bench_nsm_step(c: &mut Criterion) {
    let dim = 100;
    let set = FeasibleSet::ball(RealVector::zeros(dim), 20.0).unwrap();
    let x = RealVector::filled(dim, 1.0);
    let h = RealVector::new((0..dim).map(|i| (i as f64).sin()).collect()).unwrap();
    c.bench_function("nsm_step d=100 ball", |b| {
        b.iter(|| nsm_step(black_box(&x), black_box(&h), 0.5, &set).unwrap())
    });
}

fn bench_toy_run(c: &mut Criterion) {
    let cfg = ExperimentConfig::toy();
    let inst = build_instance(&cfg.problem, cfg.start, 0).unwrap();
    let settings = RunSettings::new(Method::Nsm, StepSchedule::inverse_t(200.0).unwrap(), 10_000);
    c.bench_function("toy run T=1e4", |b| {
        b.iter(|| {
            let mut ch = CorruptionChannel::new(0.2, Adversary::negate_iterate(10), 7).unwrap();
            run(inst.objective.as_ref(), &inst.set, &mut ch, &inst.start, &settings).unwrap()
        })
    });
}

fn bench_logistic_gradient(c: &mut Criterion) {
    let cfg = ExperimentConfig::logistic(Scale::Desk);
    let inst = build_instance(&cfg.problem, StartSpec::Constant(0.1), 0).unwrap();
    let mut out = vec![0.0; inst.objective.dim()];
    c.bench_function("logistic gradient d=10 m=3 N=300", |b| {
        b.iter(|| inst.objective.subgradient_into(black_box(inst.start.as_slice()), &mut out))
    });
}

fn bench_condition_number(c: &mut Criterion) {
    let (rows, cols) = (200, 20);
    let data = (0..rows * cols).map(|k| ((k * 7919 % 1009) as f64 / 1009.0 - 0.5) + (k as f64).sin()).collect();
    let a = Matrix::from_row_major(rows, cols, data).unwrap();
    c.bench_function("condition_number 200x20", |b| b.iter(|| condition_number(black_box(&a)).unwrap()));
}

criterion_group!(benches, bench_nsm_step, bench_toy_run, bench_logistic_gradient, bench_condition_number);
criterion_main!(benches);
