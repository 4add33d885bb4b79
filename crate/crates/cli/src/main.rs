// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lazyvi::estimators::{LazyConfig, Method};

use crate::config::{CoalitionFit, Experiment, Overrides, RunConfig};
use crate::output::{write_outputs, Collector, Status};

/// Variable importance for feedforward networks: dropout, retrain and lazy
/// estimates with confidence intervals, Shapley values, remove-and-retrain
/// curves and the tangent-kernel trace diagnostic.
#[derive(Debug, Parser)]
#[command(name = "vi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory; defaults to the config value, then $VI_OUTPUT_DIR,
    /// then `vi-output`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Sizes {
    /// Total sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Training rows; the rest are held out.
    #[arg(long)]
    n1: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        experiment: Option<Experiment>,
        #[command(flatten)]
        sizes: Sizes,
        /// Comma-separated correlations for `linear_corr`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rho: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Importance of every column of a CSV file for predicting the response.
    Csv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        /// Comma-separated estimators.
        #[arg(long, value_delimiter = ',', default_value = "lazy")]
        method: Vec<Method>,
        #[arg(long)]
        n1: Option<usize>,
        /// Comma-separated hidden layer widths.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Tangent-kernel trace on fresh test sets of growing size.
    TraceCheck {
        #[command(flatten)]
        sizes: Sizes,
        /// Hidden layer width.
        #[arg(long)]
        width: Option<usize>,
        /// Comma-separated test-set sizes.
        #[arg(long, value_delimiter = ',')]
        test_sizes: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
    /// Shapley values on the sparse logistic design.
    Shapley {
        #[command(flatten)]
        sizes: Sizes,
        /// Sampled orderings.
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long, value_enum)]
        coalition: Option<CoalitionChoice>,
        /// Fixed ridge penalty for lazy coalitions.
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Remove-and-retrain curves on the teacher network.
    Roar {
        #[command(flatten)]
        sizes: Sizes,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum CoalitionChoice {
    Lazy,
    Retrain,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match build(cli.command) {
        Ok((cfg, output_dir)) => execute(cfg, output_dir),
        Err(e) => {
            eprintln!("vi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn apply_common(cfg: &mut RunConfig, common: &Common) {
    if let Some(seeds) = &common.seeds {
        cfg.seeds = seeds.clone();
    }
}

fn apply_sizes(cfg: &mut RunConfig, sizes: &Sizes) {
    cfg.n = sizes.n.or(cfg.n);
    cfg.n1 = sizes.n1.or(cfg.n1);
}

/// The config a command describes, plus the output directory flag.
fn build(command: Command) -> error::CliResult<(RunConfig, Option<PathBuf>)> {
    let (cfg, common) = match command {
        Command::Run {
            config,
            experiment,
            sizes,
            rho,
            common,
        } => {
            let mut cfg = RunConfig::from_path(&config)?;
            Overrides {
                experiment,
                n: sizes.n,
                n1: sizes.n1,
                rho,
                seeds: common.seeds.clone(),
            }
            .apply(&mut cfg);
            (cfg, common)
        }
        Command::Csv {
            data,
            response,
            method,
            n1,
            hidden,
            epochs,
            lr,
            common,
        } => {
            let mut cfg = RunConfig::preset(Experiment::CsvVi);
            cfg.data = Some(data);
            cfg.response = Some(response);
            cfg.methods = method;
            cfg.n1 = n1;
            if let Some(h) = hidden {
                cfg.network.hidden_widths = h;
            }
            cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
            cfg.train.learning_rate = lr.unwrap_or(cfg.train.learning_rate);
            apply_common(&mut cfg, &common);
            (cfg, common)
        }
        Command::TraceCheck {
            sizes,
            width,
            test_sizes,
            common,
        } => {
            let mut cfg = RunConfig::preset(Experiment::TraceCheck);
            apply_sizes(&mut cfg, &sizes);
            if let Some(w) = width {
                cfg.network.hidden_widths = vec![w];
            }
            if let Some(t) = test_sizes {
                cfg.trace_sizes = t;
            }
            apply_common(&mut cfg, &common);
            (cfg, common)
        }
        Command::Shapley {
            sizes,
            permutations,
            coalition,
            lambda,
            common,
        } => {
            let mut cfg = RunConfig::preset(Experiment::Shapley);
            apply_sizes(&mut cfg, &sizes);
            cfg.permutations = permutations.or(cfg.permutations);
            if let Some(c) = coalition {
                cfg.coalition = match c {
                    CoalitionChoice::Lazy => CoalitionFit::Lazy,
                    CoalitionChoice::Retrain => CoalitionFit::Retrain,
                };
            }
            if let Some(l) = lambda {
                cfg.lazy = LazyConfig::fixed(l);
            }
            apply_common(&mut cfg, &common);
            (cfg, common)
        }
        Command::Roar {
            sizes,
            epochs,
            lr,
            common,
        } => {
            let mut cfg = RunConfig::preset(Experiment::Roar);
            apply_sizes(&mut cfg, &sizes);
            cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
            cfg.train.learning_rate = lr.unwrap_or(cfg.train.learning_rate);
            apply_common(&mut cfg, &common);
            (cfg, common)
        }
    };
    Ok((cfg, common.output_dir))
}

fn execute(cfg: RunConfig, output_flag: Option<PathBuf>) -> ExitCode {
    if let Err(e) = cfg.validate() {
        eprintln!("vi: {e}");
        return ExitCode::from(e.exit_code());
    }
    let dir = cfg.resolve_output_dir(output_flag);
    let mut out = Collector::new(experiments::columns(cfg.experiment));
    let started = Instant::now();
    let result = experiments::run(&cfg, &mut out);
    let status = match &result {
        Ok(()) => Status::Ok,
        Err(e) => Status::Failed(e),
    };
    let written = write_outputs(&dir, &cfg, &out, status, started.elapsed().as_secs_f64());
    match (result, written) {
        (Ok(()), Ok(paths)) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            for (method, secs) in &out.method_seconds {
                println!("{method}: {secs:.3}s");
            }
            ExitCode::SUCCESS
        }
        (Err(e), written) => {
            eprintln!("vi: {e}");
            match written {
                Ok(_) => eprintln!("vi: partial results written to {}", dir.display()),
                Err(w) => eprintln!("vi: could not write partial results: {w}"),
            }
            ExitCode::from(e.exit_code())
        }
        (Ok(()), Err(w)) => {
            eprintln!("vi: {w}");
            ExitCode::from(w.exit_code())
        }
    }
}
