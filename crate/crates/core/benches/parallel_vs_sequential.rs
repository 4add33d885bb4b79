//! Sequential against data-parallel execution of the per-variable and
//! per-coalition loops. Without the `parallel` feature both arms run
//! sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lazyvi::data::{gen_binary_probit, gen_linear_corr, split};
use lazyvi::estimators::{estimate_all, EstimatorSpec, LazyConfig, SkillMeasure};
use lazyvi::network::{ntk_matrix, train, MlpModel, NetworkConfig, TrainOptions};
use lazyvi::numerics::RngSeed;
use lazyvi::par::Execution;
use lazyvi::shapley::{shapley_exact, CoalitionMethod, CoalitionValues};

const ARMS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn trained(d: &lazyvi::data::Dataset, n1: usize, hidden: Vec<usize>) -> (MlpModel, lazyvi::data::Split) {
    let parts = split(d, n1, RngSeed(1)).unwrap();
    let init = MlpModel::init(NetworkConfig::new(d.p(), hidden), RngSeed(2)).unwrap();
    let opts = TrainOptions {
        epochs: 200,
        learning_rate: 1e-2,
        seed: RngSeed(3),
        ..TrainOptions::default()
    };
    (train(&init, &parts.train, &opts).unwrap(), parts)
}

fn estimators(c: &mut Criterion) {
    let d = gen_linear_corr(600, 0.5, RngSeed(0)).unwrap();
    let (full, parts) = trained(&d, 400, vec![32]);
    let lazy = EstimatorSpec::Lazy(LazyConfig::fixed(1.0));
    let mut group = c.benchmark_group("estimate_all_lazy");
    group.sample_size(10);
    for (name, exec) in ARMS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| estimate_all(&full, &parts, SkillMeasure::NegMse, &lazy, exec).unwrap())
        });
    }
    group.finish();
}

fn coalitions(c: &mut Criterion) {
    let d = gen_binary_probit(300, RngSeed(0)).unwrap();
    let (full, parts) = trained(&d, 200, vec![16]);
    let method = CoalitionMethod::Lazy(LazyConfig::fixed(1.0));
    let mut group = c.benchmark_group("shapley_exact_lazy");
    group.sample_size(10);
    for (name, exec) in ARMS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            // coalition values are cached, so each iteration starts empty
            b.iter(|| {
                let values = CoalitionValues::new(&full, &parts, SkillMeasure::NegMse, method.clone());
                shapley_exact(&values, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    let d = gen_linear_corr(500, 0.5, RngSeed(0)).unwrap();
    let model = MlpModel::init(NetworkConfig::new(d.p(), vec![128]), RngSeed(4)).unwrap();
    c.bench_function("ntk_matrix_500x500", |b| b.iter(|| ntk_matrix(&model, d.x()).unwrap()));
}

criterion_group!(benches, estimators, coalitions, kernel);
criterion_main!(benches);
