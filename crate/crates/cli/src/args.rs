use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "genefilter", version, about = "Rank genes, tune the fuzzy gene filter and benchmark classifiers")]
pub struct Cli {
    /// Seed for every random choice (GA, folds, network initialization).
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

/// An expression matrix (genes x samples TSV) and its sample labels.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Directory receiving the artifacts (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

/// Genetic algorithm settings; unset values come from `--ga-config` or the defaults.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct GaArgs {
    /// JSON file with any subset of the GA settings.
    #[arg(long)]
    pub ga_config: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    /// Number of top-ranked genes scored by the separability index.
    #[arg(long)]
    pub top_n: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Validate a matrix and labels pair and write canonical copies.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Quantile-normalize samples and optionally z-score genes.
    Normalize {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Use the rank-wise median instead of the mean as reference.
        #[arg(long)]
        median: bool,
        /// Skip quantile normalization.
        #[arg(long)]
        no_quantile: bool,
        /// Z-score every gene after normalization.
        #[arg(long)]
        standardize: bool,
    },
    /// Rank genes with one or more methods (fgf, ttest, wilcoxon, roc, all).
    Rank {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, required = true, value_delimiter = ',')]
        method: Vec<String>,
        /// Fuzzy filter parameters; defaults to `<out>/fgf_params.json`.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Tune the fuzzy filter regions with the genetic algorithm.
    OptimizeFgf {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        ga: GaArgs,
    },
    /// Nested leave-one-out sweep over top-k gene counts.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, required = true, value_delimiter = ',')]
        method: Vec<String>,
        /// knn, svm, nbc, mlp (or ann), all.
        #[arg(long, required = true, value_delimiter = ',')]
        classifier: Vec<String>,
        #[arg(long, default_value_t = genefilter_core::crossval::DEFAULT_K_MAX)]
        k_max: usize,
        /// Where genes are ranked: train (inside each fold) or full.
        #[arg(long, default_value = "train")]
        rank_scope: String,
        /// Fuzzy filter parameters; defaults to `<out>/fgf_params.json`.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Re-run the GA inside every outer fold instead of using fixed parameters.
        #[arg(long)]
        reoptimize: bool,
        #[command(flatten)]
        ga: GaArgs,
    },
    /// One-way ANOVA of the best accuracies across ranking methods.
    Compare {
        #[command(flatten)]
        out: OutArgs,
        /// Directories holding sweep results; defaults to the output directory.
        #[arg(long, value_delimiter = ',')]
        runs: Vec<PathBuf>,
    },
    /// Summary table, box-plot data and ANOVA from completed sweeps.
    Report {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_delimiter = ',')]
        runs: Vec<PathBuf>,
        /// Dataset name used as the table's corner label.
        #[arg(long, default_value = "dataset")]
        name: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Normalize { .. } => "normalize",
            Command::Rank { .. } => "rank",
            Command::OptimizeFgf { .. } => "optimize-fgf",
            Command::Evaluate { .. } => "evaluate",
            Command::Compare { .. } => "compare",
            Command::Report { .. } => "report",
        }
    }
}
