use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_len, TrainSet};
use crate::{Error, Result};

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOLERANCE: f64 = 1e-3;
/// Pair updates allowed per training sample.
const PASSES: usize = 100_000;
const TAU: f64 = 1e-12;

/// Linear soft-margin SVM in primal form plus the dual solution it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training indices with a nonzero dual coefficient.
    pub support_indices: Vec<usize>,
    pub dual_coefficients: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    /// Maximal KKT violation at termination.
    pub kkt_violation: f64,
}

impl SvmModel {
    pub fn decision_value(&self, query: &[f64]) -> f64 {
        self.weights.iter().zip(query).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

/// Solves the soft-margin dual with a linear kernel by SMO, choosing the
/// maximally violating pair at every step.
pub fn svm_train(train: &TrainSet, c: f64) -> Result<SvmModel> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be positive (got {c})")));
    }
    let n = train.n_samples();
    let d = train.n_features();
    let y: Vec<f64> = train.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let x = &train.features;
    let gram = x.dot(&x.t());
    let q = |i: usize, j: usize| y[i] * y[j] * gram[[i, j]];

    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let max_iter = PASSES.saturating_mul(n.max(1));
    let mut violation;
    let mut iter = 0usize;
    loop {
        let (i, j, gap) = select_pair(&alpha, &grad, &y, &gram, c);
        violation = gap;
        if gap < KKT_TOLERANCE || i.is_none() {
            break;
        }
        if iter >= max_iter {
            return Err(Error::SvmNotConverged { max_violation: gap });
        }
        iter += 1;
        let (i, j) = (i.unwrap(), j.unwrap());
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let mut weights = vec![0.0; d];
    for i in 0..n {
        if alpha[i] > 0.0 {
            for (w, xv) in weights.iter_mut().zip(x.row(i)) {
                *w += alpha[i] * y[i] * xv;
            }
        }
    }
    let raw = |i: usize| -> f64 { weights.iter().zip(x.row(i)).map(|(w, v)| w * v).sum() };
    let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0 && alpha[i] < c).collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&i| y[i] - raw(i)).sum::<f64>() / free.len() as f64
    } else {
        let max0 = (0..n).filter(|&i| y[i] < 0.0).map(raw).fold(f64::NEG_INFINITY, f64::max);
        let min1 = (0..n).filter(|&i| y[i] > 0.0).map(raw).fold(f64::INFINITY, f64::min);
        -(max0 + min1) / 2.0
    };
    let support_indices: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();
    let dual_coefficients = support_indices.iter().map(|&i| alpha[i]).collect();
    Ok(SvmModel {
        weights,
        bias,
        support_indices,
        dual_coefficients,
        c,
        kkt_violation: violation,
    })
}

/// Working pair and the current KKT gap m - M.
///
/// `i` is the maximal violator in I_up; `j` is the violating index in I_low with
/// the largest second-order decrease of the dual objective, which avoids the
/// zig-zagging of the plain maximal-violating-pair rule on rank-deficient Gram
/// matrices.
fn select_pair(
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    gram: &Array2<f64>,
    c: f64,
) -> (Option<usize>, Option<usize>, f64) {
    let in_up = |t: usize| (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
    let in_low = |t: usize| (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
    let mut i = None;
    let mut g_max = f64::NEG_INFINITY;
    for t in 0..alpha.len() {
        if in_up(t) && -y[t] * grad[t] > g_max {
            g_max = -y[t] * grad[t];
            i = Some(t);
        }
    }
    let Some(i) = i else {
        return (None, None, 0.0);
    };
    let mut j = None;
    let mut g_min = f64::INFINITY;
    let mut best_gain = f64::INFINITY;
    for t in 0..alpha.len() {
        if !in_low(t) {
            continue;
        }
        let v = -y[t] * grad[t];
        g_min = g_min.min(v);
        let b = g_max - v;
        if b > 0.0 {
            let a = (gram[[i, i]] + gram[[t, t]] - 2.0 * gram[[i, t]]).max(TAU);
            let gain = -b * b / a;
            if gain < best_gain {
                best_gain = gain;
                j = Some(t);
            }
        }
    }
    if j.is_none() {
        return (None, None, 0.0f64.max(g_max - g_min));
    }
    (Some(i), j, g_max - g_min)
}

/// Class 1 when the decision value is strictly positive, else class 0.
pub fn svm_predict(model: &SvmModel, query: &[f64]) -> Result<u8> {
    check_len(query.len(), model.weights.len())?;
    Ok(u8::from(model.decision_value(query) > 0.0))
}
