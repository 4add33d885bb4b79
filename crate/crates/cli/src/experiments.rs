use std::time::Instant;

use lazyvi::analytic::{dropout_retrain_gap, linear_truth_vis, probit_accuracy_vi, LinearModelSpec};
use lazyvi::data::{
    gen_binary_probit, gen_highdim_teacher, gen_linear_corr, gen_logistic_sparse, load_csv, pair_correlated_cov, split,
    Dataset, Split, BINARY_BETA, LINEAR_CORR_BETA, LINEAR_CORR_NOISE_SD,
};
use lazyvi::estimators::{estimate_many, EstimatorSpec, LazyConfig, Method, SkillMeasure, ViEstimate};
use lazyvi::network::{ntk_trace, trace_linear_fit, train, MlpModel, NetworkConfig, TrainOptions};
use lazyvi::numerics::{RngSeed, Vector};
use lazyvi::par::Execution;
use lazyvi::roar::{grad_saliency, roar_curve, Ordering, OrderingSource};
use lazyvi::shapley::{shapley_exact, shapley_sampled, CoalitionMethod, CoalitionValues, MAX_EXACT_FEATURES};
use serde_json::json;

use crate::config::{CoalitionFit, Experiment, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{cell, coverage_table, summarize_coverage, Collector, CoverageInput, CoverageRow, Table};

const DEFAULT_RHOS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];
const DEFAULT_PROPORTIONS: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99];

// Streams derived from each run seed.
const SPLIT_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const LAZY_STREAM: u64 = 3;
const ORDERING_STREAM: u64 = 4;
const SHAPLEY_STREAM: u64 = 5;
const DATA_STREAM: u64 = 10;

/// Result columns of every experiment.
pub fn columns(experiment: Experiment) -> &'static [&'static str] {
    match experiment {
        Experiment::LinearCorr => &[
            "rho",
            "seed",
            "variable",
            "method",
            "vi",
            "se",
            "ci_lo",
            "ci_hi",
            "theoretical_gap",
        ],
        Experiment::Binary => &["seed", "variable", "method", "vi", "se", "ci_lo", "ci_hi", "truth"],
        Experiment::Highdim => &[
            "seed",
            "variable",
            "method",
            "vi",
            "se",
            "ci_lo",
            "ci_hi",
            "rel_error_vs_retrain",
        ],
        Experiment::CsvVi => &["seed", "variable", "method", "vi", "se", "ci_lo", "ci_hi", "lambda"],
        Experiment::Shapley => &["seed", "feature", "method", "psi", "se"],
        Experiment::Roar => &["seed", "ordering", "t", "method", "mse"],
        Experiment::TraceCheck => &["seed", "n_test", "trace"],
    }
}

/// Runs the configured experiment, appending to `out` as results arrive so
/// that a failure leaves everything computed so far in place.
pub fn run(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    match cfg.experiment {
        Experiment::LinearCorr => linear_corr(cfg, out),
        Experiment::Binary => binary(cfg, out),
        Experiment::Highdim => highdim(cfg, out),
        Experiment::CsvVi => csv_vi(cfg, out),
        Experiment::Shapley => shapley(cfg, out),
        Experiment::Roar => roar(cfg, out),
        Experiment::TraceCheck => trace_check(cfg, out),
    }
}

fn sizes(cfg: &RunConfig) -> (usize, usize) {
    (cfg.n.expect("validated"), cfg.n1.expect("validated"))
}

fn train_options(cfg: &RunConfig, seed: RngSeed) -> TrainOptions {
    TrainOptions {
        seed: seed.derive(TRAIN_STREAM),
        ..cfg.train.clone()
    }
}

fn lazy_config(cfg: &RunConfig, seed: RngSeed) -> LazyConfig {
    LazyConfig {
        seed: seed.derive(LAZY_STREAM),
        alpha: cfg.alpha,
        ..cfg.lazy.clone()
    }
}

fn estimator(cfg: &RunConfig, method: Method, seed: RngSeed) -> EstimatorSpec {
    let alpha = cfg.alpha;
    match method {
        Method::Dropout => EstimatorSpec::Dropout { alpha },
        Method::Retrain => EstimatorSpec::Retrain {
            opts: train_options(cfg, seed),
            alpha,
        },
        Method::Lazy => EstimatorSpec::Lazy(lazy_config(cfg, seed)),
        Method::LazyEs => EstimatorSpec::LazyEs {
            schedule: cfg.early_stop.expect("validated"),
            alpha,
        },
    }
}

/// Zero-based features to score; `default` when the config lists none.
fn features(cfg: &RunConfig, p: usize, default: &[usize]) -> CliResult<Vec<usize>> {
    match &cfg.features {
        Some(list) => list
            .iter()
            .map(|&f| {
                if f > p {
                    Err(CliError::Config(format!(
                        "`features` entry {f} exceeds the {p} features of the data"
                    )))
                } else {
                    Ok(f - 1)
                }
            })
            .collect(),
        None => Ok(default.to_vec()),
    }
}

/// Splits `data`, initialises and trains the full network.
fn fit_full(
    cfg: &RunConfig,
    data: &Dataset,
    n1: usize,
    seed: RngSeed,
    out: &mut Collector,
) -> CliResult<(MlpModel, Split)> {
    if let Some(dim) = cfg.network.input_dim {
        if dim != data.p() {
            return Err(CliError::Config(format!(
                "`network.input_dim` is {dim} but the data has {} features",
                data.p()
            )));
        }
    }
    if n1 == 0 || n1 >= data.n() {
        return Err(CliError::Config(format!(
            "`n1` must satisfy 0 < n1 < n (got n1 = {n1}, n = {})",
            data.n()
        )));
    }
    let parts = split(data, n1, seed.derive(SPLIT_STREAM))?;
    let net = NetworkConfig::new(data.p(), cfg.network.hidden_widths.clone());
    let init = MlpModel::init(net, seed.derive(INIT_STREAM))?;
    let started = Instant::now();
    let full = train(&init, &parts.train, &train_options(cfg, seed))?;
    out.training_seconds += started.elapsed().as_secs_f64();
    Ok((full, parts))
}

/// Estimates for every configured method, grouped by feature in the order
/// of `feats` and then by method.
fn estimates(
    cfg: &RunConfig,
    full: &MlpModel,
    parts: &Split,
    feats: &[usize],
    seed: RngSeed,
    out: &mut Collector,
) -> CliResult<Vec<Vec<ViEstimate>>> {
    let measure = cfg.measure();
    let mut by_method = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let spec = estimator(cfg, method, seed);
        let ests = estimate_many(full, parts, feats, measure, &spec, Execution::default())?;
        out.add_seconds(method, ests.iter().map(|e| e.seconds).sum());
        by_method.push(ests);
    }
    Ok((0..feats.len())
        .map(|k| by_method.iter().map(|ests| ests[k].clone()).collect())
        .collect())
}

fn estimate_cells(e: &ViEstimate) -> [String; 4] {
    [e.vi_hat, e.tau_hat, e.ci.0, e.ci.1].map(|v| v.to_string())
}

fn coverage_input(e: &ViEstimate, truth: Option<f64>) -> CoverageInput {
    CoverageInput {
        variable: e.variable + 1,
        method: e.method,
        vi_hat: e.vi_hat,
        ci: e.ci,
        truth,
    }
}

fn linear_corr(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let (n, n1) = sizes(cfg);
    let rhos = cfg.rho.clone().unwrap_or_else(|| DEFAULT_RHOS.to_vec());
    let beta = Vector::from(LINEAR_CORR_BETA.to_vec());
    let p = beta.len();
    let all: Vec<usize> = (0..p).collect();
    let mut coverage = Vec::new();
    for &rho in &rhos {
        let spec = LinearModelSpec::linear_truth(
            pair_correlated_cov(p, rho),
            beta.clone(),
            LINEAR_CORR_NOISE_SD * LINEAR_CORR_NOISE_SD,
        );
        let mut inputs = Vec::new();
        for &s in &cfg.seeds {
            let seed = RngSeed(s);
            let data = gen_linear_corr(n, rho, seed.derive(DATA_STREAM))?;
            let (full, parts) = fit_full(cfg, &data, n1, seed, out)?;
            let feats = features(cfg, p, &all)?;
            for (j, ests) in feats.iter().zip(estimates(cfg, &full, &parts, &feats, seed, out)?) {
                let gap = dropout_retrain_gap(&spec, *j)?;
                let (truth_retrain, truth_dropout) = linear_truth_vis(&spec, *j)?;
                for e in &ests {
                    let truth = if e.method == Method::Dropout {
                        truth_dropout
                    } else {
                        truth_retrain
                    };
                    inputs.push(coverage_input(e, Some(truth)));
                    let [vi, se, lo, hi] = estimate_cells(e);
                    out.results.push(vec![
                        rho.to_string(),
                        s.to_string(),
                        (j + 1).to_string(),
                        e.method.to_string(),
                        vi,
                        se,
                        lo,
                        hi,
                        gap.to_string(),
                    ]);
                }
            }
        }
        coverage.push(json!({ "rho": rho, "rows": summarize_coverage(cfg.experiment.as_str(), &inputs)? }));
    }
    out.summarize("coverage", coverage);
    Ok(())
}

fn binary(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let (n, n1) = sizes(cfg);
    let p = BINARY_BETA.len();
    let measure = cfg.measure();
    let mut inputs = Vec::new();
    for &s in &cfg.seeds {
        let seed = RngSeed(s);
        let data = gen_binary_probit(n, seed.derive(DATA_STREAM))?;
        let (full, parts) = fit_full(cfg, &data, n1, seed, out)?;
        let feats = features(cfg, p, &[0, 1])?;
        for (j, ests) in feats.iter().zip(estimates(cfg, &full, &parts, &feats, seed, out)?) {
            // the closed form is an accuracy difference
            let truth = match measure {
                SkillMeasure::Accuracy => Some(probit_accuracy_vi(&BINARY_BETA, *j)?),
                _ => None,
            };
            for e in &ests {
                inputs.push(coverage_input(e, truth));
                let [vi, se, lo, hi] = estimate_cells(e);
                out.results.push(vec![
                    s.to_string(),
                    (j + 1).to_string(),
                    e.method.to_string(),
                    vi,
                    se,
                    lo,
                    hi,
                    cell(truth),
                ]);
            }
        }
    }
    let rows: Vec<CoverageRow> = summarize_coverage(cfg.experiment.as_str(), &inputs)?;
    out.extra.insert("coverage", coverage_table(&rows));
    out.summarize("coverage", rows);
    Ok(())
}

fn highdim(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let (n, n1) = sizes(cfg);
    for &s in &cfg.seeds {
        let seed = RngSeed(s);
        let data = gen_highdim_teacher(n, cfg.sigma_w, seed.derive(DATA_STREAM))?;
        let (full, parts) = fit_full(cfg, &data, n1, seed, out)?;
        let feats = features(cfg, data.p(), &[0])?;
        for (j, ests) in feats.iter().zip(estimates(cfg, &full, &parts, &feats, seed, out)?) {
            let retrain = ests.iter().find(|e| e.method == Method::Retrain).map(|e| e.vi_hat);
            for e in &ests {
                let rel = retrain.map(|r| (e.vi_hat - r).abs() / r.abs());
                let [vi, se, lo, hi] = estimate_cells(e);
                out.results.push(vec![
                    s.to_string(),
                    (j + 1).to_string(),
                    e.method.to_string(),
                    vi,
                    se,
                    lo,
                    hi,
                    cell(rel),
                ]);
            }
        }
    }
    Ok(())
}

fn csv_vi(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let path = cfg.data.as_ref().expect("validated");
    let response = cfg.response.as_deref().expect("validated");
    let data = load_csv(path, response).map_err(|e| CliError::Config(format!("`data` {}: {e}", path.display())))?;
    let n1 = cfg.n1.unwrap_or(2 * data.n() / 3);
    let all: Vec<usize> = (0..data.p()).collect();
    for &s in &cfg.seeds {
        let seed = RngSeed(s);
        let (full, parts) = fit_full(cfg, &data, n1, seed, out)?;
        let feats = features(cfg, data.p(), &all)?;
        for (j, ests) in feats.iter().zip(estimates(cfg, &full, &parts, &feats, seed, out)?) {
            for e in &ests {
                let [vi, se, lo, hi] = estimate_cells(e);
                out.results.push(vec![
                    s.to_string(),
                    data.feature_name(*j),
                    e.method.to_string(),
                    vi,
                    se,
                    lo,
                    hi,
                    cell(e.lambda_used),
                ]);
            }
        }
    }
    Ok(())
}

fn shapley(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let (n, n1) = sizes(cfg);
    let measure = cfg.measure();
    for &s in &cfg.seeds {
        let seed = RngSeed(s);
        let data = gen_logistic_sparse(n, seed.derive(DATA_STREAM))?;
        if cfg.permutations.is_none() && data.p() > MAX_EXACT_FEATURES {
            return Err(CliError::Config(format!(
                "exact Shapley values need at most {MAX_EXACT_FEATURES} features, the data has {}; set `permutations`",
                data.p()
            )));
        }
        let (full, parts) = fit_full(cfg, &data, n1, seed, out)?;
        let method = match cfg.coalition {
            CoalitionFit::Lazy => CoalitionMethod::Lazy(lazy_config(cfg, seed)),
            CoalitionFit::Retrain => CoalitionMethod::Retrain(train_options(cfg, seed)),
        };
        let label = method.method();
        let values = CoalitionValues::new(&full, &parts, measure, method);
        let started = Instant::now();
        let est = match cfg.permutations {
            Some(k) => shapley_sampled(&values, k, seed.derive(SHAPLEY_STREAM), Execution::default())?,
            None => shapley_exact(&values, Execution::default())?,
        };
        out.add_seconds(label, started.elapsed().as_secs_f64());
        for (j, (psi, se)) in est.psi.iter().zip(&est.se).enumerate() {
            out.results.push(vec![
                s.to_string(),
                (j + 1).to_string(),
                label.to_string(),
                psi.to_string(),
                se.to_string(),
            ]);
        }
    }
    Ok(())
}

fn roar(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let (n, n1) = sizes(cfg);
    let ts = cfg.proportions.clone().unwrap_or_else(|| DEFAULT_PROPORTIONS.to_vec());
    for &s in &cfg.seeds {
        let seed = RngSeed(s);
        let data = gen_highdim_teacher(n, cfg.sigma_w, seed.derive(DATA_STREAM))?;
        let (full, parts) = fit_full(cfg, &data, n1, seed, out)?;
        let opts = train_options(cfg, seed);
        let lazy = lazy_config(cfg, seed);
        for &source in &cfg.orderings {
            let ordering = match source {
                OrderingSource::Random => Ordering::random(data.p(), seed.derive(ORDERING_STREAM)),
                _ => grad_saliency(&full, &parts.train)?,
            };
            let curve = roar_curve(
                &full,
                &parts,
                &ordering,
                &ts,
                &cfg.methods,
                &opts,
                &lazy,
                Execution::default(),
            )?;
            for &m in &cfg.methods {
                out.add_seconds(m, curve.total_seconds(m));
            }
            for p in &curve.points {
                out.results.push(vec![
                    s.to_string(),
                    source.as_str().to_owned(),
                    p.t.to_string(),
                    p.method.to_string(),
                    p.mse.to_string(),
                ]);
            }
        }
    }
    Ok(())
}

fn trace_check(cfg: &RunConfig, out: &mut Collector) -> CliResult<()> {
    let (n, n1) = sizes(cfg);
    let mut fits = Table::new(&["seed", "slope", "intercept", "r_squared"]);
    let mut summary = Vec::new();
    for &s in &cfg.seeds {
        let seed = RngSeed(s);
        let data = gen_linear_corr(n, 0.5, seed.derive(DATA_STREAM))?;
        let (full, _) = fit_full(cfg, &data, n1, seed, out)?;
        let mut traces = Vec::with_capacity(cfg.trace_sizes.len());
        for (k, &size) in cfg.trace_sizes.iter().enumerate() {
            let fresh = gen_linear_corr(size, 0.5, seed.derive(DATA_STREAM + 1 + k as u64))?;
            let trace = ntk_trace(&full, fresh.x())?;
            traces.push(trace);
            out.results
                .push(vec![s.to_string(), size.to_string(), trace.to_string()]);
        }
        let xs: Vec<f64> = cfg.trace_sizes.iter().map(|&v| v as f64).collect();
        let fit = trace_linear_fit(&xs, &traces);
        fits.push(vec![
            s.to_string(),
            fit.slope.to_string(),
            fit.intercept.to_string(),
            fit.r_squared.to_string(),
        ]);
        summary.push(json!({ "seed": s, "fit": fit }));
    }
    out.extra.insert("trace_fit", fits);
    out.summarize("trace_fit", summary);
    Ok(())
}
