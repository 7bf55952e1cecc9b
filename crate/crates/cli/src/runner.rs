//! Executes runs described by a [`RunConfig`]: dataset provisioning, model
//! training, evaluation, and all result files.
//!
//! Seeds within one experiment run in parallel worker threads; each worker
//! owns its RNG streams and the aggregation happens in seed order afterward,
//! so outputs are byte-identical across repeats regardless of scheduling.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cosmo_core::dense::Mat;
use cosmo_core::graph::{is_dag, threshold, BinaryAdjacency, WeightedAdjacency};
use cosmo_core::linear::{CosmoParams, NocurlUParams};
use cosmo_core::metrics::{evaluate, EvalReport};
use cosmo_core::nonlinear::NonlinearParams;
use cosmo_core::optim::{bench_epoch_ms, train, EpochRecord, Model, TrainReport};
use cosmo_core::orientation::OrientationConfig;
use cosmo_core::synth::{Dataset, DatasetMeta, GraphKind, NoiseFamily, SemSpec};
use cosmo_core::{Error, Result};

use crate::config::{ModelKind, RunConfig};

// Sub-stream salts: dataset generation uses the bare seed inside the data
// module; initialization and batch shuffling get their own streams.
const SALT_INIT: u64 = 0xc2b2_ae3d_27d4_eb4f;
const SALT_TRAIN: u64 = 0x1656_67b1_9e37_79f9;

pub const REPORT_SCHEMA: &str = "cosmo-report-v1";
pub const CONFIG_FILE: &str = "config.toml";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const REPORT_FILE: &str = "report.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const WEIGHTS_FILE: &str = "w_learned.csv";

/// Per-seed result document (`report.json`). Contains no timing, so repeated
/// runs of the same configuration produce byte-identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub schema: String,
    pub seed: u64,
    pub model: ModelKind,
    pub d: usize,
    pub thresholded_is_dag: bool,
    pub eval: EvalReport,
}

/// Everything produced by training one seed.
pub struct SeedOutcome {
    pub seed: u64,
    pub report: SeedReport,
    pub history: Vec<EpochRecord>,
    pub w_learned: Mat<f64>,
    pub fit_seconds: f64,
}

/// Mean/sample-std aggregate over the seeds of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub nhd_mean: f64,
    pub nhd_std: f64,
    pub tpr_mean: f64,
    pub tpr_std: f64,
    pub fpr_mean: f64,
    pub fpr_std: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    /// Number of seeds whose thresholded graph is acyclic.
    pub dags: usize,
    pub time_s_mean: f64,
    pub time_s_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn train_model(
    cfg: &RunConfig,
    seed: u64,
    x: &Mat<f64>,
) -> Result<(WeightedAdjacency<f64>, TrainReport)> {
    let orientation = OrientationConfig::new(cfg.t_start, cfg.eps)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ SALT_INIT);
    let tc = cfg.train_config(seed ^ SALT_TRAIN);
    let sched = cfg.schedule()?;
    match cfg.model {
        ModelKind::CosmoLinear => {
            let mut model = CosmoParams::<f64>::init(cfg.d, orientation, &mut init_rng);
            let report = train(&mut model, x, &tc, &sched)?;
            Ok((Model::score_matrix(&model), report))
        }
        ModelKind::NocurlU => {
            let mut model = NocurlUParams::<f64>::init(cfg.d, orientation, &mut init_rng);
            let report = train(&mut model, x, &tc, &sched)?;
            Ok((Model::score_matrix(&model), report))
        }
        ModelKind::CosmoMlp => {
            let mut model =
                NonlinearParams::<f64>::init(cfg.d, cfg.hidden, orientation, &mut init_rng);
            let report = train(&mut model, x, &tc, &sched)?;
            Ok((Model::score_matrix(&model), report))
        }
    }
}

/// Trains and evaluates one seed. `data` overrides generation when a dataset
/// was loaded from disk.
pub fn run_seed(cfg: &RunConfig, seed: u64, data: Option<&Dataset<f64>>) -> Result<SeedOutcome> {
    let generated;
    let ds = match data {
        Some(ds) => ds,
        None => {
            generated = Dataset::<f64>::generate(cfg.graph_spec(seed), cfg.sem(), cfg.n)?;
            &generated
        }
    };
    if ds.d() != cfg.d {
        return Err(Error::InvalidConfig(format!(
            "dataset has {} nodes but the run expects {}",
            ds.d(),
            cfg.d
        )));
    }
    let (w, train_report) = train_model(cfg, seed, &ds.x)?;
    let truth = ds.truth_support();
    let eval = evaluate(&w, &truth, cfg.omega)?;
    let thresholded_is_dag = is_dag(&threshold(&w, cfg.omega));
    Ok(SeedOutcome {
        seed,
        report: SeedReport {
            schema: REPORT_SCHEMA.into(),
            seed,
            model: cfg.model,
            d: cfg.d,
            thresholded_is_dag,
            eval,
        },
        history: train_report.history,
        w_learned: w.as_mat().clone(),
        fit_seconds: train_report.fit_seconds,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    f.write_all(json.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn csv_error(e: csv::Error, path: &Path) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedFile {
            path: path.display().to_string(),
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(e, path))?;
    wtr.write_record(["epoch", "temperature", "loss", "h_value", "h_bound", "elapsed_ms"])
        .map_err(|e| csv_error(e, path))?;
    for rec in history {
        wtr.write_record([
            rec.epoch.to_string(),
            rec.temperature.to_string(),
            rec.loss.to_string(),
            rec.h_value.to_string(),
            rec.h_bound.to_string(),
            rec.elapsed_ms.to_string(),
        ])
        .map_err(|e| csv_error(e, path))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Headerless numeric matrix, one row per line.
pub fn write_matrix_csv(path: &Path, m: &Mat<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(e, path))?;
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(e, path))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(e, path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| Error::MalformedFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::MalformedFile {
            path: path.display().to_string(),
            reason: "empty or ragged matrix".into(),
        });
    }
    Ok(Mat::from_rows(&rows))
}

fn aggregate(outcomes: &[SeedOutcome]) -> Aggregate {
    let nhd: Vec<f64> = outcomes.iter().map(|o| o.report.eval.nhd).collect();
    let tpr: Vec<f64> = outcomes.iter().map(|o| o.report.eval.tpr).collect();
    let fpr: Vec<f64> = outcomes.iter().map(|o| o.report.eval.fpr).collect();
    let auc: Vec<f64> = outcomes.iter().map(|o| o.report.eval.auc).collect();
    let secs: Vec<f64> = outcomes.iter().map(|o| o.fit_seconds).collect();
    let (nhd_mean, nhd_std) = mean_std(&nhd);
    let (tpr_mean, tpr_std) = mean_std(&tpr);
    let (fpr_mean, fpr_std) = mean_std(&fpr);
    let (auc_mean, auc_std) = mean_std(&auc);
    let (time_s_mean, time_s_std) = mean_std(&secs);
    Aggregate {
        nhd_mean,
        nhd_std,
        tpr_mean,
        tpr_std,
        fpr_mean,
        fpr_std,
        auc_mean,
        auc_std,
        dags: outcomes.iter().filter(|o| o.report.thresholded_is_dag).count(),
        time_s_mean,
        time_s_std,
    }
}

pub fn write_aggregate_csv(path: &Path, cfg: &RunConfig, agg: &Aggregate) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(e, path))?;
    wtr.write_record([
        "model", "graph", "k", "noise", "d", "n", "omega", "seeds", "nhd_mean", "nhd_std",
        "tpr_mean", "tpr_std", "fpr_mean", "fpr_std", "auc_mean", "auc_std", "dags",
        "time_s_mean", "time_s_std",
    ])
    .map_err(|e| csv_error(e, path))?;
    let seeds = cfg
        .seeds
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join("|");
    let graph = match cfg.graph {
        GraphKind::Er => "er",
        GraphKind::Sf => "sf",
    };
    let noise = match cfg.noise {
        NoiseFamily::Gauss => "gauss",
        NoiseFamily::Exp => "exp",
        NoiseFamily::Gumbel => "gumbel",
    };
    wtr.write_record([
        cfg.model.to_string(),
        graph.into(),
        cfg.k.to_string(),
        noise.into(),
        cfg.d.to_string(),
        cfg.n.to_string(),
        cfg.omega.to_string(),
        seeds,
        agg.nhd_mean.to_string(),
        agg.nhd_std.to_string(),
        agg.tpr_mean.to_string(),
        agg.tpr_std.to_string(),
        agg.fpr_mean.to_string(),
        agg.fpr_std.to_string(),
        agg.auc_mean.to_string(),
        agg.auc_std.to_string(),
        agg.dags.to_string(),
        agg.time_s_mean.to_string(),
        agg.time_s_std.to_string(),
    ])
    .map_err(|e| csv_error(e, path))?;
    wtr.flush()?;
    Ok(())
}

fn write_seed_files(dir: &Path, outcome: &SeedOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join(REPORT_FILE), &outcome.report)?;
    write_history_csv(&dir.join(HISTORY_FILE), &outcome.history)?;
    write_matrix_csv(&dir.join(WEIGHTS_FILE), &outcome.w_learned)?;
    Ok(())
}

/// Runs every seed (workers in parallel, at most one per core), writes
/// per-seed artifacts plus the resolved config and the aggregate row, and
/// returns the aggregate.
pub fn run_experiment(
    cfg: &RunConfig,
    run_dir: &Path,
    data_dir: Option<&Path>,
) -> Result<Aggregate> {
    cfg.validate()?;
    fs::create_dir_all(run_dir)?;
    fs::write(run_dir.join(CONFIG_FILE), cfg.to_toml())?;

    let loaded = match data_dir {
        Some(dir) => Some(Dataset::<f64>::load(dir)?),
        None => None,
    };

    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let loaded_ref = loaded.as_ref();
    let mut outcomes: Vec<SeedOutcome> = Vec::with_capacity(cfg.seeds.len());
    for chunk in cfg.seeds.chunks(workers.max(1)) {
        let mut chunk_results: Vec<Result<SeedOutcome>> = Vec::with_capacity(chunk.len());
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| scope.spawn(move || run_seed(cfg, seed, loaded_ref)))
                .collect();
            for handle in handles {
                chunk_results.push(handle.join().expect("worker thread panicked"));
            }
        });
        for result in chunk_results {
            outcomes.push(result?);
        }
    }

    for outcome in &outcomes {
        write_seed_files(&run_dir.join(format!("seed_{}", outcome.seed)), outcome)?;
    }
    let agg = aggregate(&outcomes);
    write_aggregate_csv(&run_dir.join(AGGREGATE_FILE), cfg, &agg)?;
    Ok(agg)
}

/// Single-seed run with a flat output layout.
pub fn run_train(cfg: &RunConfig, seed: u64, out_dir: &Path, data_dir: Option<&Path>) -> Result<SeedOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(CONFIG_FILE), cfg.to_toml())?;
    let loaded = match data_dir {
        Some(dir) => Some(Dataset::<f64>::load(dir)?),
        None => None,
    };
    let outcome = run_seed(cfg, seed, loaded.as_ref())?;
    write_json(&out_dir.join(REPORT_FILE), &outcome.report)?;
    write_history_csv(&out_dir.join(HISTORY_FILE), &outcome.history)?;
    write_matrix_csv(&out_dir.join(WEIGHTS_FILE), &outcome.w_learned)?;
    Ok(outcome)
}

/// Dataset-only run.
pub fn run_generate(cfg: &RunConfig, sem: SemSpec, seed: u64, out_dir: &Path) -> Result<()> {
    let ds = Dataset::<f64>::generate(cfg.graph_spec(seed), sem, cfg.n)?;
    ds.save(out_dir)
}

/// One row of the epoch-timing benchmark. The minimum is the robust
/// statistic on a shared machine, since interference only ever adds time.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub repetitions: usize,
    pub mean_epoch_ms: f64,
    pub min_epoch_ms: f64,
}

/// Times the core epoch loop for each node count. Dataset generation and
/// model setup are excluded from the timing.
pub fn run_bench(cfg: &RunConfig, d_list: &[usize], repetitions: usize) -> Result<Vec<BenchRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("benchmark needs at least one repetition".into()));
    }
    if d_list.iter().any(|&d| d < 2) {
        return Err(Error::InvalidConfig("benchmark node counts must be at least 2".into()));
    }
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        let mut run_cfg = cfg.clone();
        run_cfg.d = d;
        let seed = *cfg.seeds.first().unwrap_or(&1);
        let ds = Dataset::<f64>::generate(run_cfg.graph_spec(seed), run_cfg.sem(), run_cfg.n)?;
        let orientation = OrientationConfig::new(run_cfg.t_start, run_cfg.eps)?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ SALT_INIT);
        let tc = run_cfg.train_config(seed ^ SALT_TRAIN);
        let times = match run_cfg.model {
            ModelKind::CosmoLinear => {
                let mut model = CosmoParams::<f64>::init(d, orientation, &mut init_rng);
                bench_epoch_ms(&mut model, &ds.x, &tc, run_cfg.t_start, repetitions)?
            }
            ModelKind::NocurlU => {
                let mut model = NocurlUParams::<f64>::init(d, orientation, &mut init_rng);
                bench_epoch_ms(&mut model, &ds.x, &tc, run_cfg.t_start, repetitions)?
            }
            ModelKind::CosmoMlp => {
                let mut model =
                    NonlinearParams::<f64>::init(d, run_cfg.hidden, orientation, &mut init_rng);
                bench_epoch_ms(&mut model, &ds.x, &tc, run_cfg.t_start, repetitions)?
            }
        };
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(BenchRow { d, repetitions, mean_epoch_ms: mean, min_epoch_ms: min });
    }
    Ok(rows)
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(e, path))?;
    wtr.write_record(["d", "repetitions", "mean_epoch_ms", "min_epoch_ms"])
        .map_err(|e| csv_error(e, path))?;
    for row in rows {
        wtr.write_record([
            row.d.to_string(),
            row.repetitions.to_string(),
            row.mean_epoch_ms.to_string(),
            row.min_epoch_ms.to_string(),
        ])
        .map_err(|e| csv_error(e, path))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Loads a ground truth: either a dataset sidecar (`*.json`) or a headerless
/// weight-matrix CSV whose nonzero entries are the arcs.
pub fn load_truth(path: &Path) -> Result<BinaryAdjacency> {
    if path.extension().is_some_and(|e| e == "json") {
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::MalformedFile {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        let mut truth = BinaryAdjacency::empty(meta.graph.d);
        for arc in &meta.arcs {
            truth.set_arc(arc.u, arc.v, true);
        }
        Ok(truth)
    } else {
        let m = read_matrix_csv(path)?;
        Ok(WeightedAdjacency::from_mat(m)?.support())
    }
}

/// Standalone evaluation document (`cosmo eval`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub schema: String,
    pub d: usize,
    pub thresholded_is_dag: bool,
    pub eval: EvalReport,
}

pub const EVAL_SCHEMA: &str = "cosmo-eval-v1";

/// Scores a saved weight matrix against a saved ground truth.
pub fn run_eval(w_path: &Path, truth_path: &Path, omega: f64) -> Result<EvalOutput> {
    let w = WeightedAdjacency::from_mat(read_matrix_csv(w_path)?)?;
    let truth = load_truth(truth_path)?;
    let eval = evaluate(&w, &truth, omega)?;
    let thresholded_is_dag = is_dag(&threshold(&w, omega));
    Ok(EvalOutput {
        schema: EVAL_SCHEMA.into(),
        d: truth.node_count(),
        thresholded_is_dag,
        eval,
    })
}

/// Serializes a value the way every JSON artifact is written.
pub fn to_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)
}

/// Resolves the output root: `--out`, else `COSMO_OUT_ROOT`, else `./runs`.
pub fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("COSMO_OUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}
