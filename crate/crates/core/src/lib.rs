//! Gene ranking and classifier benchmarking for two-class expression data.
//!
//! The crate provides:
//!
//! * [`dataio`]: TSV ingestion, quantile normalization and per-gene standardization.
//! * [`rankers`]: Welch t-test, Wilcoxon rank-sum and ROC-area rankers.
//! * [`fgf`]: the fuzzy gene filter, a Mamdani inference system that scores genes
//!   from fold change, within-class variance and rank sum.
//! * [`gaopt`]: a real-coded genetic algorithm that tunes the fuzzy regions of the
//!   filter against a class separability index.
//! * [`classifiers`]: KNN, linear SVM, kernel-density naive Bayes and an MLP trained
//!   by scaled conjugate gradient.
//! * [`crossval`]: nested stratified leave-one-out evaluation, gene-count sweeps and
//!   one-way ANOVA.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod crossval;
pub mod dataio;
mod error;
pub mod fgf;
pub mod gaopt;
pub mod rankers;
pub mod seed;
pub mod stats;
pub mod synthetic;

pub use classifiers::{Classifier, MlpModel, NbcModel, SvmModel, TrainSet};
pub use crossval::{AnovaResult, EvalConfig, RankScope, SweepResult};
pub use dataio::Dataset;
pub use error::{Error, Result};
pub use fgf::{FgfParams, FuzzyInputs, FuzzyRegion};
pub use gaopt::{GaConfig, GaTrace};
pub use rankers::{GeneRanking, RankMethod, TestResult};

/// Floor added to a zero variance before it is used as a divisor.
pub const EPS_VAR: f64 = 1e-8;
