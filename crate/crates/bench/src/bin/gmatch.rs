use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gmatch_bench::pipeline::{prepare, solve_dpgm};
use gmatch_bench::{
    compare_solvers, run_experiment, run_grad_check, test_split, train_and_eval, train_split, Ablation, AffinitySource,
    ExperimentConfig, GradCheckSpec, LearnedModel, SolverChoice,
};
use gmatch_core::affinity::objective;
use gmatch_core::graphs::{Dataset, GraphPair};
use gmatch_core::math::Permutation;
use gmatch_core::solver::{accuracy, discretize, discretize_vector, ipfp, rrwm_with, spectral_match, SolveTrace};

#[derive(Parser)]
#[command(
    name = "gmatch",
    version,
    about = "Graph matching experiments on synthetic keypoint pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the test split (and optionally the training split) as dataset files.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file for the test split.
        #[arg(long)]
        out: PathBuf,
        /// Also write the training split here.
        #[arg(long)]
        train_out: Option<PathBuf>,
    },
    /// Solve one instance and dump its trace as JSON.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Pair file; defaults to the test-split instance at `--index`.
        #[arg(long)]
        pair: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured pipeline over the test split.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the predictor, save it, and evaluate on the test split.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Print per-epoch metrics to stderr.
        #[arg(long)]
        progress: bool,
    },
    /// Accuracy table for every solver under the given affinity sources.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AffinitySource::Handcrafted])]
        sources: Vec<AffinitySource>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Central finite differences against backpropagation on a tiny instance.
    Gradcheck {
        /// TOML file with grad-check settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        pair_seed: Option<u64>,
        #[arg(long)]
        param_seed: Option<u64>,
        /// Exit with failure when the error reaches this bound.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

/// Flags overriding fields of the config file.
#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    outliers: Option<usize>,
    /// Dataset file replacing generation of the test split.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    #[arg(long, value_enum)]
    affinity: Option<AffinitySource>,
    #[arg(long, value_enum)]
    ablation: Option<Ablation>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    loss_weight: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    train_instances: Option<usize>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    rows: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    learning_curve: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl CommonArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None => ExperimentConfig::default(),
        };
        set!(self.n => c.dataset.n);
        set!(self.noise => c.dataset.noise_levels);
        set!(self.instances => c.dataset.instances);
        set!(self.seed => c.dataset.seed);
        set!(self.outliers => c.dataset.outliers);
        if self.dataset.is_some() {
            c.dataset.path = self.dataset;
        }
        set!(self.solver => c.solver);
        set!(self.affinity => c.affinity);
        set!(self.ablation => c.ablation);
        set!(self.max_iters => c.solver_config.max_iters);
        set!(self.eta => c.solver_config.stop_eta);
        if let Some(d) = self.latent_dim {
            c.predictor.d_v = d;
            c.predictor.d_e = d;
        }
        set!(self.layers => c.predictor.layers);
        set!(self.loss_weight => c.loss.weight);
        set!(self.epochs => c.train.epochs);
        set!(self.train_instances => c.train.train_instances);
        set!(self.train_seed => c.train.seed);
        set!(self.batch_size => c.train.batch_size);
        set!(self.learning_rate => c.train.optimizer.learning_rate);
        set!(self.workers => c.workers);
        let out = &mut c.output;
        for (flag, slot) in [
            (self.checkpoint, &mut out.checkpoint),
            (self.rows, &mut out.rows),
            (self.summary, &mut out.summary),
            (self.learning_curve, &mut out.learning_curve),
        ] {
            if flag.is_some() {
                *slot = flag;
            }
        }
        Ok(c)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_model(cfg: &ExperimentConfig) -> Result<Option<LearnedModel>> {
    if cfg.affinity != AffinitySource::Learned {
        return Ok(None);
    }
    let path = cfg
        .output
        .checkpoint
        .as_deref()
        .context("learned affinity source needs --checkpoint")?;
    Ok(Some(LearnedModel::load(cfg, path)?))
}

#[derive(Serialize)]
struct SolveDump {
    solver: &'static str,
    affinity: &'static str,
    ablation: &'static str,
    seed: u64,
    ground_truth: Permutation,
    prediction: Permutation,
    accuracy: f64,
    /// `xᵀKx` of the prediction under the affinity used.
    objective: f64,
    iterations: usize,
    /// Present for the probabilistic solver unless the solve is skipped.
    trace: Option<SolveTrace>,
    /// Relaxed output of a baseline solver.
    relaxed: Option<Vec<f64>>,
}

fn solve_one(cfg: &ExperimentConfig, pair: &GraphPair) -> Result<SolveDump> {
    let model = load_model(cfg)?;
    let (k, x_init) = prepare(pair, cfg, model.as_ref())?;
    let (n1, n2) = (k.n1(), k.n2());
    let (prediction, iterations, trace, relaxed) = match cfg.solver {
        SolverChoice::Dpgm => {
            let (x, trace) = solve_dpgm(&k, x_init, cfg)?;
            let iters = trace.as_ref().map_or(0, |t| t.iterations());
            (discretize(&x)?, iters, trace, None)
        }
        other => {
            let r = match other {
                SolverChoice::Spectral => spectral_match(&k, cfg.baseline_iters)?,
                SolverChoice::Ipfp => ipfp(&k, x_init.entries(), cfg.baseline_iters)?,
                _ => rrwm_with(&k, &cfg.rrwm)?,
            };
            (discretize_vector(&r.x, n1, n2)?, r.iterations, None, Some(r.x))
        }
    };
    Ok(SolveDump {
        solver: cfg.solver.name(),
        affinity: cfg.affinity.name(),
        ablation: cfg.ablation.name(),
        seed: pair.meta.seed,
        accuracy: accuracy(&prediction, &pair.ground_truth)?,
        objective: objective(&k, &prediction.to_indicator(n2))?,
        ground_truth: pair.ground_truth.clone(),
        prediction,
        iterations,
        trace,
        relaxed,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, out, train_out } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            let pairs = test_split(&cfg.dataset)?.into_iter().map(|t| t.pair).collect();
            std::fs::write(&out, Dataset { pairs }.to_json()?).with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = train_out {
                let pairs = train_split(&cfg.dataset, &cfg.train)?;
                std::fs::write(&path, Dataset { pairs }.to_json()?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Solve {
            common,
            pair,
            index,
            out,
        } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            let pair = match pair {
                Some(path) => GraphPair::from_json(
                    &std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => {
                    let split = test_split(&cfg.dataset)?;
                    let len = split.len();
                    match split.into_iter().nth(index) {
                        Some(t) => t.pair,
                        None => bail!("instance {index} is outside the test split of {len}"),
                    }
                }
            };
            let dump = solve_one(&cfg, &pair)?;
            write_output(out.as_deref(), &(serde_json::to_string_pretty(&dump)? + "\n"))?;
        }
        Command::Bench { common } => {
            let report = run_experiment(&common.resolve()?)?;
            report.emit(std::io::stdout().lock())?;
            eprintln!(
                "mean accuracy {:.4} over {} instances ({:.3}s solving)",
                report.mean_accuracy(),
                report.aggregates.instances,
                report.timing.total_s
            );
        }
        Command::Train { common, progress } => {
            let cfg = common.resolve()?;
            let outcome = train_and_eval(&cfg, |m| {
                if progress {
                    eprintln!(
                        "epoch {:>3}  loss {:.5}  train acc {:.4}  iters {:.2}",
                        m.epoch, m.mean_loss, m.train_accuracy, m.mean_iterations
                    );
                }
            })?;
            outcome.report.emit(std::io::stdout().lock())?;
            eprintln!("test accuracy {:.4}", outcome.report.mean_accuracy());
        }
        Command::Compare { common, sources, out } => {
            let cfg = common.resolve()?;
            let mut model = None;
            if sources.contains(&AffinitySource::Learned) {
                let mut c = cfg.clone();
                c.affinity = AffinitySource::Learned;
                model = load_model(&c)?;
            }
            let mut check = cfg.clone();
            check.affinity = AffinitySource::Handcrafted;
            check.ablation = Ablation::Full;
            check.validate()?;
            let table = compare_solvers(&cfg, &sources, model.as_ref())?;
            write_output(out.as_deref(), &table.to_csv()?)?;
        }
        Command::Gradcheck {
            config,
            step,
            pair_seed,
            param_seed,
            tolerance,
        } => {
            let mut spec = match config {
                Some(path) => toml::from_str(
                    &std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => GradCheckSpec::default(),
            };
            set!(step => spec.step);
            set!(pair_seed => spec.pair_seed);
            set!(param_seed => spec.param_seed);
            let report = run_grad_check(&spec)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !(report.max_rel_error < tolerance) {
                bail!(
                    "max relative error {:.3e} is not below {tolerance:e}",
                    report.max_rel_error
                );
            }
        }
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
