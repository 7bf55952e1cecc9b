//! Run configuration: defaults, TOML config files, and CLI overrides.
//!
//! A run is described by one flat key-value document. Precedence is
//! defaults < config file < command-line flags, and the fully resolved
//! configuration is written into every run directory so a run can be
//! reproduced from its own artifacts.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use cosmo_core::linear::RegWeights;
use cosmo_core::optim::{AnnealSchedule, TrainConfig};
use cosmo_core::synth::{GraphKind, GraphSpec, NoiseFamily, SemSpec};
use cosmo_core::{Error, Result};

/// Which learner to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    CosmoLinear,
    CosmoMlp,
    NocurlU,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::CosmoLinear => "cosmo-linear",
            ModelKind::CosmoMlp => "cosmo-mlp",
            ModelKind::NocurlU => "nocurl-u",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cosmo-linear" => Ok(ModelKind::CosmoLinear),
            "cosmo-mlp" => Ok(ModelKind::CosmoMlp),
            "nocurl-u" => Ok(ModelKind::NocurlU),
            other => Err(format!(
                "unknown model {other:?}; expected cosmo-linear, cosmo-mlp, or nocurl-u"
            )),
        }
    }
}

pub fn parse_graph_kind(s: &str) -> std::result::Result<GraphKind, String> {
    match s {
        "er" => Ok(GraphKind::Er),
        "sf" => Ok(GraphKind::Sf),
        other => Err(format!("unknown graph kind {other:?}; expected er or sf")),
    }
}

pub fn parse_noise(s: &str) -> std::result::Result<NoiseFamily, String> {
    match s {
        "gauss" => Ok(NoiseFamily::Gauss),
        "exp" => Ok(NoiseFamily::Exp),
        "gumbel" => Ok(NoiseFamily::Gumbel),
        other => Err(format!("unknown noise family {other:?}; expected gauss, exp, or gumbel")),
    }
}

fn graph_kind_str(kind: GraphKind) -> &'static str {
    match kind {
        GraphKind::Er => "er",
        GraphKind::Sf => "sf",
    }
}

fn noise_str(noise: NoiseFamily) -> &'static str {
    match noise {
        NoiseFamily::Gauss => "gauss",
        NoiseFamily::Exp => "exp",
        NoiseFamily::Gumbel => "gumbel",
    }
}

/// Fully resolved description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub graph: GraphKind,
    pub d: usize,
    /// Edge factor: roughly `k * d` arcs.
    pub k: usize,
    pub noise: NoiseFamily,
    pub n: usize,
    /// Hidden width of the generator networks (MLP data only).
    pub gen_hidden: usize,
    /// Hidden width of the nonlinear learner.
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_p: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub eps: f64,
    pub omega: f64,
    pub seeds: Vec<u64>,
    /// Compute the per-epoch acyclicity diagnostic of the orientation factor.
    pub log_acyclicity: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::CosmoLinear,
            graph: GraphKind::Er,
            d: 30,
            k: 4,
            noise: NoiseFamily::Gauss,
            n: 1000,
            gen_hidden: 100,
            hidden: 10,
            epochs: 2000,
            batch: 64,
            lr: 5.5e-3,
            lambda1: 5.5e-4,
            lambda2: 3e-3,
            lambda_p: 2e-3,
            t_start: 0.45,
            t_end: 7.5e-4,
            eps: 5e-3,
            omega: 0.3,
            seeds: vec![1, 2, 3, 4, 5],
            log_acyclicity: true,
        }
    }
}

/// The same fields, all optional: the shape of a config file and of CLI
/// overrides.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PartialRunConfig {
    pub model: Option<ModelKind>,
    pub graph: Option<GraphKind>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub noise: Option<NoiseFamily>,
    pub n: Option<usize>,
    pub gen_hidden: Option<usize>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda_p: Option<f64>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub eps: Option<f64>,
    pub omega: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub log_acyclicity: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $patch:ident, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $patch.$field.clone() {
            $base.$field = v;
        })+
    };
}

impl RunConfig {
    /// Applies a patch on top of this configuration.
    pub fn overlaid(mut self, patch: &PartialRunConfig) -> Self {
        let p = patch;
        overlay!(
            self, p, model, graph, d, k, noise, n, gen_hidden, hidden, epochs, batch, lr,
            lambda1, lambda2, lambda_p, t_start, t_end, eps, omega, seeds, log_acyclicity
        );
        self
    }

    pub fn from_file(path: &Path) -> Result<PartialRunConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::MalformedFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        self.train_config(0).validate()?;
        self.schedule()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Dataset-generating SEM implied by the model.
    pub fn sem(&self) -> SemSpec {
        match self.model {
            ModelKind::CosmoMlp => SemSpec::Mlp { hidden: self.gen_hidden },
            _ => SemSpec::Linear { noise: self.noise },
        }
    }

    pub fn graph_spec(&self, seed: u64) -> GraphSpec {
        GraphSpec { kind: self.graph, d: self.d, edge_factor: self.k, seed }
    }

    pub fn reg(&self) -> RegWeights<f64> {
        RegWeights { lambda1: self.lambda1, lambda2: self.lambda2, lambda_p: self.lambda_p }
    }

    pub fn train_config(&self, train_seed: u64) -> TrainConfig<f64> {
        TrainConfig {
            batch_size: self.batch,
            epochs: self.epochs,
            lr: self.lr,
            reg: self.reg(),
            shift: self.eps,
            seed: train_seed,
            log_acyclicity: self.log_acyclicity,
        }
    }

    pub fn schedule(&self) -> Result<AnnealSchedule<f64>> {
        AnnealSchedule::new(self.t_start, self.t_end, self.epochs)
    }

    /// Default run-directory name.
    pub fn run_name(&self) -> String {
        format!(
            "{}_{}{}_{}_d{}_n{}",
            self.model,
            graph_kind_str(self.graph),
            self.k,
            noise_str(self.noise),
            self.d,
            self.n
        )
    }
}
