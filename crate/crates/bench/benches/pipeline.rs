//! Benchmarks for the pipeline hot paths: dataset generation, tape
//! forward/backward on one sample, and a full training epoch.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use gatlab_core::dataset::{generate, ExperimentKind, ExperimentSpec};
use gatlab_core::graphs::star_graph;
use gatlab_core::models::{ModelParams, TapeModel, Variant, VariantConfig};
use gatlab_core::training::{train, TrainConfig};

fn bench_dataset(c: &mut Criterion) {
    let graph = star_graph(3).unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::II, 0);
    c.bench_function("generate_1000_samples_exp_ii", |b| {
        b.iter(|| generate(black_box(&spec), &graph, 1000, 0).unwrap())
    });
}

fn bench_tape(c: &mut Criterion) {
    let graph = star_graph(3).unwrap();
    let cfg = VariantConfig::new(Variant::ThetaNPlus, 2);
    let params = ModelParams::init(&cfg, 0);
    let mut tm = TapeModel::build(&params, &cfg, &graph, 0).unwrap();
    let xs = [0.3, 1.1, 2.4];

    c.bench_function("tape_forward_replay", |b| {
        b.iter(|| {
            tm.bind_and_run(black_box(&xs), 0.7);
            tm.pred_value()
        })
    });

    c.bench_function("tape_forward_backward", |b| {
        b.iter(|| {
            tm.bind_and_run(black_box(&xs), 0.7);
            let root = tm.loss_abs;
            tm.tape.backward(root).unwrap();
            tm.param_adjoint("theta_r").unwrap()[0]
        })
    });
}

fn bench_training_epoch(c: &mut Criterion) {
    let graph = star_graph(3).unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::I, 0);
    let train_set = generate(&spec, &graph, 1000, 0).unwrap();
    let test_set = generate(&spec, &graph, 200, 1).unwrap();
    let cfg = VariantConfig::new(Variant::GatV2, 1);
    let tcfg = TrainConfig { epochs: 1, ..Default::default() };
    c.bench_function("train_one_epoch_1000_samples", |b| {
        b.iter(|| train(&cfg, &graph, black_box(&train_set), &test_set, &tcfg).unwrap())
    });
}

criterion_group!(benches, bench_dataset, bench_tape, bench_training_epoch);
criterion_main!(benches);
