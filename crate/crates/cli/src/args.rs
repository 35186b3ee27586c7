use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "causal-kit", version, about = "Causal graphs, simulation and treatment-effect estimation")]
pub struct Cli {
    /// Worker threads for replicate-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identification queries on a DAG file.
    #[command(subcommand)]
    Dag(DagQuery),
    /// Simulate a preset scenario to CSV with an oracle sidecar.
    Simulate(SimulateArgs),
    /// Estimate a treatment effect from a CSV file.
    Estimate(EstimateArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum DagQuery {
    /// Is X d-separated from Y given the listed nodes?
    Dsep {
        file: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Backdoor paths from D to Y, and the validity of --given if supplied.
    Backdoor {
        file: PathBuf,
        #[arg(long)]
        d: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',')]
        given: Option<Vec<String>>,
    },
    /// All minimal valid adjustment sets for D on Y.
    Minsets {
        file: PathBuf,
        #[arg(long)]
        d: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
    },
    /// Split a node into its natural and fixed halves.
    Swig {
        file: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long, default_value = "d")]
        label: String,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// smoking_bias, heart_transplant or growth_highdim.
    pub scenario: String,
    /// Parameter overrides as key=value.
    pub params: Vec<String>,
    /// Rows to draw (default: the scenario's suggested size).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, env = "CAUSAL_KIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; the sidecar is written next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ate,
    Risk,
    Standardize,
    Relative,
    Ipw,
    Balance,
    Cate,
    DmlPo,
    DmlDs,
    DmlDb,
    OrthoCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuisanceArg {
    Lasso,
    PostLasso,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(value_enum)]
    pub method: Method,
    pub data: PathBuf,
    #[arg(long, default_value = "Y")]
    pub y: String,
    #[arg(long, default_value = "D")]
    pub d: String,
    /// Covariates (default: every other column except --stratum and a score column).
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<String>>,
    #[arg(long)]
    pub stratum: Option<String>,
    /// Propensity scores: `fit` for a logistic fit on the covariates, or a column name.
    #[arg(long, default_value = "fit")]
    pub scores: String,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, env = "CAUSAL_KIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// plugin, plugin:C, cv, cv:K, cv1se:K or fixed:LAMBDA.
    #[arg(long, default_value = "plugin")]
    pub lambda: String,
    #[arg(long, value_enum, default_value_t = NuisanceArg::PostLasso)]
    pub nuisance: NuisanceArg,
    /// Clamp IPW weights at these percentiles, e.g. 1,99.
    #[arg(long)]
    pub truncate: Option<String>,
    #[arg(long)]
    pub stabilized: bool,
    /// Bootstrap replicates for ipw and relative (0 disables).
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
}
