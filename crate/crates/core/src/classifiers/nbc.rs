use serde::{Deserialize, Serialize};

use super::{check_len, TrainSet};
use crate::{stats, Error, Result, EPS_VAR};

/// Naive Bayes with a Gaussian kernel density estimate per class and feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbcModel {
    /// `samples[class][feature]` holds that class's training values.
    pub samples: [Vec<Vec<f64>>; 2],
    /// `bandwidths[class][feature]`
    pub bandwidths: [Vec<f64>; 2],
    pub priors: [f64; 2],
}

/// Silverman's rule of thumb, `1.06 * sd * n^(-1/5)`, with the variance floored.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let sd = stats::sample_variance(values).max(EPS_VAR).sqrt();
    1.06 * sd * (values.len() as f64).powf(-0.2)
}

pub fn nbc_train(train: &TrainSet, bandwidth_multiplier: f64) -> Result<NbcModel> {
    if !(bandwidth_multiplier > 0.0) || !bandwidth_multiplier.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth multiplier must be positive (got {bandwidth_multiplier})"
        )));
    }
    let d = train.n_features();
    let mut samples: [Vec<Vec<f64>>; 2] = [vec![Vec::new(); d], vec![Vec::new(); d]];
    for (i, &l) in train.labels.iter().enumerate() {
        for (f, &v) in train.sample(i).iter().enumerate() {
            samples[l as usize][f].push(v);
        }
    }
    let bandwidths = [0, 1].map(|c| {
        samples[c]
            .iter()
            .map(|vals| bandwidth_multiplier * silverman_bandwidth(vals))
            .collect::<Vec<f64>>()
    });
    let n = train.n_samples() as f64;
    let n1 = train.labels.iter().filter(|&&l| l == 1).count() as f64;
    Ok(NbcModel {
        samples,
        bandwidths,
        priors: [(n - n1) / n, n1 / n],
    })
}

fn log_kde(values: &[f64], h: f64, x: f64) -> f64 {
    let terms: Vec<f64> = values
        .iter()
        .map(|v| {
            let z = (x - v) / h;
            -0.5 * z * z
        })
        .collect();
    stats::log_sum_exp(&terms)
        - (values.len() as f64).ln()
        - h.ln()
        - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Log joint density `ln p(x | class) + ln p(class)` for both classes.
pub fn nbc_log_joint(model: &NbcModel, query: &[f64]) -> Result<[f64; 2]> {
    check_len(query.len(), model.bandwidths[0].len())?;
    Ok([0, 1].map(|c| {
        query
            .iter()
            .enumerate()
            .map(|(f, &x)| log_kde(&model.samples[c][f], model.bandwidths[c][f], x))
            .sum::<f64>()
            + model.priors[c].ln()
    }))
}

/// Predicted class (ties to class 0) and the posterior of each class.
pub fn nbc_predict(model: &NbcModel, query: &[f64]) -> Result<(u8, [f64; 2])> {
    let lj = nbc_log_joint(model, query)?;
    let norm = stats::log_sum_exp(&lj);
    let post = [(lj[0] - norm).exp(), (lj[1] - norm).exp()];
    let class = u8::from(lj[1] > lj[0]);
    Ok((class, post))
}
