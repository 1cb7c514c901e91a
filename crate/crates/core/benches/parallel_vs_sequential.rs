use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use exphydro::calibration::{screen_candidates_with, CalibrationProblem, Objective, SearchConfig};
use exphydro::evaluation::{make_split, SplitSpec};
use exphydro::hydro::ModelId;
use exphydro::io::config::{RunConfig, SyntheticSpec};
use exphydro::io::run_pipeline_with;
use exphydro::io::synth::synth_basin;
use exphydro::risk::{expectile_level_of_value_with, sample_expectile_with};
use exphydro::tail::{gp_sample_with, GpParams};
use exphydro::{Execution, Level, LossKind};

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sampling(c: &mut Criterion) {
    let g = GpParams::new(0.0, 1.0, 0.2).unwrap();
    let mut group = c.benchmark_group("gp_sample_1e6");
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| gp_sample_with(&g, 1_000_000, black_box(7), exec).unwrap())
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let g = GpParams::new(0.0, 1.0, 0.2).unwrap();
    let s = gp_sample_with(&g, 1_000_000, 7, Execution::Parallel).unwrap();
    let tau = Level::new(0.975).unwrap();
    let mut group = c.benchmark_group("expectile_1e6");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::new("sample_expectile", name), |b| {
            b.iter(|| sample_expectile_with(black_box(&s), tau, exec))
        });
        group.bench_function(BenchmarkId::new("expectile_level", name), |b| {
            b.iter(|| expectile_level_of_value_with(black_box(&s), 4.66, exec))
        });
    }
    group.finish();
}

fn screening(c: &mut Criterion) {
    let basin = synth_basin(1, 34).unwrap();
    let split = make_split(&basin.range(), SplitSpec::camels_default()).unwrap();
    let w = basin.window(&split.whole()).unwrap();
    let (forcing, observed) = (w.forcing().unwrap(), w.observed().unwrap());
    let obj = Objective::new(
        LossKind::Expectile,
        Level::new(0.9).unwrap(),
        split.warmup,
        split.calibration,
    )
    .unwrap();
    let problem = CalibrationProblem::new(ModelId::Gr4j, &forcing, &observed, &obj).unwrap();
    let cfg = SearchConfig::default();
    let mut group = c.benchmark_group("gr4j_screening_200");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| screen_candidates_with(&problem, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut cfg = RunConfig {
        synthetic: Some(SyntheticSpec {
            count: 4,
            years: 34,
            seed: 1,
            noise: 0.3,
        }),
        ..RunConfig::default()
    };
    cfg.search.max_evals = 400;
    let mut group = c.benchmark_group("pipeline_4_basins");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| b.iter(|| run_pipeline_with(&cfg, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sampling, estimators, screening, pipeline);
criterion_main!(benches);
