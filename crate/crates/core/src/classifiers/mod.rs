//! Two-class classifiers used to score gene subsets.

mod knn;
mod mlp;
mod nbc;
mod svm;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use knn::knn_classify;
pub use mlp::{mlp_gradient, mlp_loss, mlp_predict, mlp_train, MlpModel, MLP_DEFAULT_LAMBDA};
pub use nbc::{nbc_predict, nbc_train, NbcModel};
pub use svm::{svm_predict, svm_train, SvmModel};

/// Samples (rows) by features (columns) with 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
}

impl TrainSet {
    pub fn new(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Labels("labels must be 0 or 1".into()));
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(Error::Labels("training set needs both classes".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features".into()));
        }
        // row slices are taken from the features, so keep them contiguous
        let features = features.as_standard_layout().into_owned();
        Ok(Self { features, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        check_len(query.len(), self.n_features())
    }
}

pub(crate) fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension(format!(
            "query has {got} features, model expects {expected}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn,
    Svm,
    Nbc,
    Mlp,
}

impl Classifier {
    pub const ALL: [Classifier; 4] = [
        Classifier::Knn,
        Classifier::Svm,
        Classifier::Nbc,
        Classifier::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Classifier::Knn => "knn",
            Classifier::Svm => "svm",
            Classifier::Nbc => "nbc",
            Classifier::Mlp => "mlp",
        }
    }

    /// Row heading used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Classifier::Knn => "KNN",
            Classifier::Svm => "SVM",
            Classifier::Nbc => "NBC",
            Classifier::Mlp => "ANN",
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Classifier::Knn),
            "svm" => Ok(Classifier::Svm),
            "nbc" => Ok(Classifier::Nbc),
            "mlp" | "ann" => Ok(Classifier::Mlp),
            _ => Err(Error::InvalidArgument(format!("unknown classifier {s:?}"))),
        }
    }
}

/// The single tuned hyperparameter of a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyper {
    Neighbours(usize),
    C(f64),
    BandwidthMultiplier(f64),
    HiddenNodes(usize),
}

/// A trained model of any of the four kinds.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Knn { train: TrainSet, k: usize },
    Svm(SvmModel),
    Nbc(NbcModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn fit(train: &TrainSet, hyper: Hyper, seed: u64) -> Result<Self> {
        Ok(match hyper {
            Hyper::Neighbours(k) => {
                if k == 0 || k > train.n_samples() {
                    return Err(Error::InvalidArgument(format!(
                        "k = {k} outside 1..={}",
                        train.n_samples()
                    )));
                }
                TrainedModel::Knn {
                    train: train.clone(),
                    k,
                }
            }
            Hyper::C(c) => TrainedModel::Svm(svm_train(train, c)?),
            Hyper::BandwidthMultiplier(m) => TrainedModel::Nbc(nbc_train(train, m)?),
            Hyper::HiddenNodes(h) => {
                TrainedModel::Mlp(mlp_train(train, h, MLP_DEFAULT_LAMBDA, seed)?)
            }
        })
    }

    pub fn predict(&self, query: &[f64]) -> Result<u8> {
        match self {
            TrainedModel::Knn { train, k } => knn_classify(train, query, *k),
            TrainedModel::Svm(m) => svm_predict(m, query),
            TrainedModel::Nbc(m) => nbc_predict(m, query).map(|(c, _)| c),
            TrainedModel::Mlp(m) => mlp_predict(m, query).map(|(c, _)| c),
        }
    }
}
