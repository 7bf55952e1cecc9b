use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cosmo_cli::config::{parse_graph_kind, parse_noise, ModelKind, PartialRunConfig, RunConfig};
use cosmo_cli::runner;
use cosmo_core::synth::{GraphKind, NoiseFamily, SemSpec};
use cosmo_core::Error;

/// Constraint-free acyclic structure learning: synthetic benchmarks,
/// training, evaluation, and epoch timing.
#[derive(Parser)]
#[command(name = "cosmo", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset (data.csv + meta.json).
    Generate(GenerateArgs),
    /// Train one model on one seed and write report, history, and weights.
    Train(RunArgs),
    /// Run a multi-seed experiment and aggregate the metrics.
    Experiment(RunArgs),
    /// Time the core training epoch for a list of node counts.
    Bench(BenchArgs),
    /// Score a saved weight matrix against a saved ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CommonModelArgs {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Node count.
    #[arg(long)]
    d: Option<usize>,
    /// Random-graph family: er or sf.
    #[arg(long, value_parser = parse_graph_kind)]
    graph: Option<GraphKind>,
    /// Edge factor (about k*d arcs).
    #[arg(long)]
    k: Option<usize>,
    /// Noise family for linear data: gauss, exp, or gumbel.
    #[arg(long, value_parser = parse_noise)]
    noise: Option<NoiseFamily>,
    /// Observations per dataset.
    #[arg(long)]
    n: Option<usize>,
    /// Learner: cosmo-linear, cosmo-mlp, or nocurl-u.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Training epochs (the annealing window).
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// L1 coefficient on the direct matrix.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Squared-L2 coefficient on the direct matrix.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Squared-L2 coefficient on the priority vector.
    #[arg(long = "lambda-p", alias = "lambdap")]
    lambda_p: Option<f64>,
    /// Initial temperature.
    #[arg(long = "t-start")]
    t_start: Option<f64>,
    /// Final temperature.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Sigmoid shift / strict-order threshold.
    #[arg(long)]
    eps: Option<f64>,
    /// Weight threshold for the binary graph.
    #[arg(long)]
    omega: Option<f64>,
    /// Hidden width of the nonlinear learner.
    #[arg(long)]
    hidden: Option<usize>,
    /// Hidden width of the generator networks for MLP data.
    #[arg(long = "gen-hidden")]
    gen_hidden: Option<usize>,
    /// Per-epoch acyclicity diagnostic of the orientation factor.
    #[arg(long = "log-acyclicity")]
    log_acyclicity: Option<bool>,
}

impl CommonModelArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg = cfg.overlaid(&RunConfig::from_file(path)?);
        }
        let flags = PartialRunConfig {
            model: self.model,
            graph: self.graph,
            d: self.d,
            k: self.k,
            noise: self.noise,
            n: self.n,
            gen_hidden: self.gen_hidden,
            hidden: self.hidden,
            epochs: self.epochs,
            batch: self.batch,
            lr: self.lr,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda_p: self.lambda_p,
            t_start: self.t_start,
            t_end: self.t_end,
            eps: self.eps,
            omega: self.omega,
            seeds: None,
            log_acyclicity: self.log_acyclicity,
        };
        Ok(cfg.overlaid(&flags))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Seed list for `experiment` (comma separated).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Single seed for `train`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root (defaults to $COSMO_OUT_ROOT or ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run-directory name (defaults to a config-derived name).
    #[arg(long)]
    name: Option<String>,
    /// Load this saved dataset instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Structural equation model: linear or mlp.
    #[arg(long, default_value = "linear")]
    sem: String,
    /// Dataset seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for data.csv and meta.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Node counts to time (comma separated).
    #[arg(long = "d-list", value_delimiter = ',', required = true)]
    d_list: Vec<usize>,
    /// Timed epochs per node count (after one warmup epoch).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Learned weight matrix (headerless CSV).
    #[arg(long)]
    w: PathBuf,
    /// Ground truth: dataset meta.json or a weight-matrix CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Weight threshold.
    #[arg(long, default_value_t = 0.3)]
    omega: f64,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonFiniteLoss { .. } => 3,
        Error::Io(_) | Error::MalformedFile { .. } => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Generate(args) => {
            let cfg = args.common.resolve()?;
            let sem = match args.sem.as_str() {
                "linear" => SemSpec::Linear { noise: cfg.noise },
                "mlp" => SemSpec::Mlp { hidden: cfg.gen_hidden },
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown sem {other:?}; expected linear or mlp"
                    )))
                }
            };
            let out = runner::out_root(args.out);
            runner::run_generate(&cfg, sem, args.seed, &out)?;
            println!("dataset written to {}", out.display());
            Ok(())
        }
        Cmd::Train(args) => {
            let mut cfg = args.common.resolve()?;
            let seed = args.seed.or(args.seeds.as_ref().and_then(|s| s.first().copied()));
            let seed = seed.unwrap_or_else(|| cfg.seeds.first().copied().unwrap_or(1));
            cfg.seeds = vec![seed];
            let out = runner::out_root(args.out);
            let dir = match args.name {
                Some(name) => out.join(name),
                None => out.join(format!("{}_seed{}", cfg.run_name(), seed)),
            };
            let outcome = runner::run_train(&cfg, seed, &dir, args.data.as_deref())?;
            println!(
                "seed {seed}: auc {:.4} nhd {:.3} dag {} -> {}",
                outcome.report.eval.auc,
                outcome.report.eval.nhd,
                outcome.report.thresholded_is_dag,
                dir.display()
            );
            Ok(())
        }
        Cmd::Experiment(args) => {
            let mut cfg = args.common.resolve()?;
            if let Some(seeds) = args.seeds {
                cfg.seeds = seeds;
            }
            let out = runner::out_root(args.out);
            let dir = out.join(args.name.unwrap_or_else(|| cfg.run_name()));
            let agg = runner::run_experiment(&cfg, &dir, args.data.as_deref())?;
            println!(
                "{}: auc {:.4} +- {:.4}, nhd {:.3} +- {:.3}, dags {}/{} -> {}",
                cfg.run_name(),
                agg.auc_mean,
                agg.auc_std,
                agg.nhd_mean,
                agg.nhd_std,
                agg.dags,
                cfg.seeds.len(),
                dir.display()
            );
            Ok(())
        }
        Cmd::Bench(args) => {
            let cfg = args.common.resolve()?;
            let rows = runner::run_bench(&cfg, &args.d_list, args.reps)?;
            if let Some(path) = args.out {
                runner::write_bench_csv(&path, &rows)?;
                println!("benchmark written to {}", path.display());
            } else {
                println!("d,repetitions,mean_epoch_ms,min_epoch_ms");
                for row in &rows {
                    println!(
                        "{},{},{},{}",
                        row.d, row.repetitions, row.mean_epoch_ms, row.min_epoch_ms
                    );
                }
            }
            Ok(())
        }
        Cmd::Eval(args) => {
            let report = runner::run_eval(&args.w, &args.truth, args.omega)?;
            match args.out {
                Some(path) => {
                    runner::to_json_file(&path, &report)?;
                    println!("report written to {}", path.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&report).expect("serializes")),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
