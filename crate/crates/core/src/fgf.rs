//! The fuzzy gene filter.
//!
//! Each gene is described by three inputs scaled to `[0, 1]` across genes:
//! fold change between class means, pooled within-class variance and rank-sum
//! deviation. A Mamdani system with 27 rules maps the inputs to a crisp score;
//! genes are ranked by descending score.
//!
//! Every input has three linguistic levels (Low, Medium, High) forming a
//! piecewise-linear partition of unity. The tunable fuzzy region `[alpha, beta]`
//! is the interval where adjacent levels overlap.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::standardize_genes;
use crate::rankers::{self, GeneRanking, RankMethod};
use crate::{stats, Dataset, Error, Result};

/// Resolution of the centroid defuzzification grid over `[0, 1]`.
pub const DEFUZZ_POINTS: usize = 1001;

/// Relative floor added to class means before the log ratio.
const FOLD_CHANGE_FLOOR: f64 = 1e-6;

static CLAMPED_INPUTS: AtomicU64 = AtomicU64::new(0);

/// Number of out-of-range inputs clamped by [`membership_grades`] since start-up.
pub fn clamped_input_count() -> u64 {
    CLAMPED_INPUTS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRegion {
    pub alpha: f64,
    pub beta: f64,
}

impl FuzzyRegion {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let r = Self { alpha, beta };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.alpha && self.alpha < self.beta && self.beta < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "fuzzy region needs 0 < alpha < beta < 1 (got alpha={}, beta={})",
                self.alpha, self.beta
            )))
        }
    }

    pub fn midpoint(&self) -> f64 {
        (self.alpha + self.beta) / 2.0
    }
}

/// Fuzzy regions of the three inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgfParams {
    pub fold_change: FuzzyRegion,
    pub variance: FuzzyRegion,
    pub rank_sum: FuzzyRegion,
}

impl Default for FgfParams {
    fn default() -> Self {
        let r = FuzzyRegion {
            alpha: 0.25,
            beta: 0.75,
        };
        Self {
            fold_change: r,
            variance: r,
            rank_sum: r,
        }
    }
}

impl FgfParams {
    pub fn validate(&self) -> Result<()> {
        self.fold_change.validate()?;
        self.variance.validate()?;
        self.rank_sum.validate()
    }

    /// `[fc.alpha, fc.beta, var.alpha, var.beta, rs.alpha, rs.beta]`
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.fold_change.alpha,
            self.fold_change.beta,
            self.variance.alpha,
            self.variance.beta,
            self.rank_sum.alpha,
            self.rank_sum.beta,
        ]
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Ok(Self {
            fold_change: FuzzyRegion::new(v[0], v[1])?,
            variance: FuzzyRegion::new(v[2], v[3])?,
            rank_sum: FuzzyRegion::new(v[4], v[5])?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Scaled fuzzy inputs, one entry per gene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyInputs {
    pub fold_change: Vec<f64>,
    pub variance: Vec<f64>,
    pub rank_sum: Vec<f64>,
}

impl FuzzyInputs {
    pub fn len(&self) -> usize {
        self.fold_change.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_change.is_empty()
    }

    pub fn triple(&self, g: usize) -> [f64; 3] {
        [self.fold_change[g], self.variance[g], self.rank_sum[g]]
    }
}

/// Unscaled per-gene inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInputs {
    pub fold_change: Vec<f64>,
    pub variance: Vec<f64>,
    pub rank_sum: Vec<f64>,
}

pub fn raw_fuzzy_inputs(dataset: &Dataset) -> RawInputs {
    let min = dataset.matrix.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let mean_abs = dataset.matrix.iter().map(|v| (v + shift).abs()).sum::<f64>()
        / dataset.matrix.len() as f64;
    let floor = if mean_abs > 0.0 {
        FOLD_CHANGE_FLOOR * mean_abs
    } else {
        FOLD_CHANGE_FLOOR
    };
    let standardized = standardize_genes(&dataset.matrix);
    let labels = &dataset.labels;
    let [n0, n1] = dataset.class_counts();

    let per_gene: Vec<(f64, f64, f64)> = (0..dataset.n_genes())
        .into_par_iter()
        .map(|g| {
            let (x, y) = dataset.split_gene(g);
            let m0 = stats::mean(&x) + shift + floor;
            let m1 = stats::mean(&y) + shift + floor;
            let fc = (m0.log2() - m1.log2()).abs();

            let (mut z0, mut z1) = (Vec::with_capacity(n0), Vec::with_capacity(n1));
            for (&v, &l) in standardized.row(g).iter().zip(labels) {
                if l == 0 {
                    z0.push(v);
                } else {
                    z1.push(v);
                }
            }
            let pooled = ((n0 as f64 - 1.0) * stats::sample_variance(&z0)
                + (n1 as f64 - 1.0) * stats::sample_variance(&z1))
                / (n0 + n1 - 2) as f64;

            let pooled_vals: Vec<f64> = x.iter().chain(&y).copied().collect();
            let ranks = stats::midranks(&pooled_vals);
            let rs = rankers::rank_sum(&ranks, x.len()).effect;
            (fc, pooled, rs)
        })
        .collect();
    RawInputs {
        fold_change: per_gene.iter().map(|t| t.0).collect(),
        variance: per_gene.iter().map(|t| t.1).collect(),
        rank_sum: per_gene.iter().map(|t| t.2).collect(),
    }
}

/// Min-max scales `v` to `[0, 1]`; a constant vector maps to all zeros.
fn min_max_scale(v: &[f64]) -> Vec<f64> {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![0.0; v.len()];
    }
    let span = max - min;
    v.iter().map(|x| ((x - min) / span).clamp(0.0, 1.0)).collect()
}

pub fn compute_fuzzy_inputs(dataset: &Dataset) -> FuzzyInputs {
    let raw = raw_fuzzy_inputs(dataset);
    FuzzyInputs {
        fold_change: min_max_scale(&raw.fold_change),
        variance: min_max_scale(&raw.variance),
        rank_sum: min_max_scale(&raw.rank_sum),
    }
}

/// Grades of `x` in the (Low, Medium, High) levels of `region`.
///
/// Low is 1 up to alpha and falls to 0 at the midpoint m; High rises from 0 at m
/// to 1 at beta; Medium is the triangle on `[alpha, beta]` peaking at m. Inputs
/// outside `[0, 1]` are clamped and counted.
pub fn membership_grades(x: f64, region: &FuzzyRegion) -> [f64; 3] {
    let x = if (0.0..=1.0).contains(&x) {
        x
    } else {
        CLAMPED_INPUTS.fetch_add(1, Ordering::Relaxed);
        if x.is_nan() {
            0.0
        } else {
            x.clamp(0.0, 1.0)
        }
    };
    let (a, b) = (region.alpha, region.beta);
    let m = region.midpoint();
    if x <= a {
        [1.0, 0.0, 0.0]
    } else if x <= m {
        let low = (m - x) / (m - a);
        [low, 1.0 - low, 0.0]
    } else if x < b {
        let high = (x - m) / (b - m);
        [0.0, 1.0 - high, high]
    } else {
        [0.0, 0.0, 1.0]
    }
}

const FC_POINTS: [u8; 3] = [0, 1, 2];
const VAR_POINTS: [u8; 3] = [2, 1, 0];
const RS_POINTS: [u8; 3] = [0, 1, 2];

/// Output set (0 = VeryLow .. 4 = VeryHigh) for a rule's goodness total.
pub fn consequent(total: u8) -> usize {
    match total {
        0 | 1 => 0,
        2 => 1,
        3 => 2,
        4 => 3,
        _ => 4,
    }
}

/// Memberships of the five output triangles at every grid point.
fn output_table() -> &'static [[f64; DEFUZZ_POINTS]; 5] {
    static TABLE: OnceLock<Box<[[f64; DEFUZZ_POINTS]; 5]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let steps = (DEFUZZ_POINTS - 1) as f64;
        let mut t = Box::new([[0.0; DEFUZZ_POINTS]; 5]);
        for (k, row) in t.iter_mut().enumerate() {
            let peak = k as f64 * 0.25;
            for (i, v) in row.iter_mut().enumerate() {
                let y = i as f64 / steps;
                *v = (1.0 - (y - peak).abs() / 0.25).max(0.0);
            }
        }
        t
    })
}

/// Firing strength of each output set: the max over rules of the min-AND of
/// the antecedent grades.
pub fn output_strengths(inputs: [f64; 3], params: &FgfParams) -> [f64; 5] {
    let fc = membership_grades(inputs[0], &params.fold_change);
    let var = membership_grades(inputs[1], &params.variance);
    let rs = membership_grades(inputs[2], &params.rank_sum);
    let mut strengths = [0.0f64; 5];
    for (i, &gf) in fc.iter().enumerate() {
        if gf == 0.0 {
            continue;
        }
        for (j, &gv) in var.iter().enumerate() {
            if gv == 0.0 {
                continue;
            }
            for (k, &gr) in rs.iter().enumerate() {
                let s = gf.min(gv).min(gr);
                let out = consequent(FC_POINTS[i] + VAR_POINTS[j] + RS_POINTS[k]);
                strengths[out] = strengths[out].max(s);
            }
        }
    }
    strengths
}

/// Centroid of the max-aggregate of the output sets clipped at `strengths`.
pub fn defuzzify(strengths: &[f64; 5]) -> f64 {
    let table = output_table();
    let steps = (DEFUZZ_POINTS - 1) as f64;
    // sets that do not fire contribute nothing to the max
    let active: Vec<usize> = (0..5).filter(|&k| strengths[k] > 0.0).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..DEFUZZ_POINTS {
        let mut mu = 0.0f64;
        for &k in &active {
            mu = mu.max(strengths[k].min(table[k][i]));
        }
        num += (i as f64 / steps) * mu;
        den += mu;
    }
    if den == 0.0 {
        0.5
    } else {
        num / den
    }
}

/// Mamdani inference on one gene's `(fold change, variance, rank sum)` triple.
pub fn mamdani_infer(inputs: [f64; 3], params: &FgfParams) -> f64 {
    defuzzify(&output_strengths(inputs, params))
}

/// Precomputed per-dataset state so that many parameter sets can be scored
/// cheaply (the inputs do not depend on the fuzzy regions).
#[derive(Debug, Clone)]
pub struct FuzzyGeneFilter {
    inputs: FuzzyInputs,
    tie_break: Vec<f64>,
}

impl FuzzyGeneFilter {
    pub fn new(dataset: &Dataset) -> Result<Self> {
        let tie_break = rankers::rank_genes(dataset, RankMethod::TTest)?.scores;
        Ok(Self {
            inputs: compute_fuzzy_inputs(dataset),
            tie_break,
        })
    }

    pub fn inputs(&self) -> &FuzzyInputs {
        &self.inputs
    }

    pub fn scores(&self, params: &FgfParams) -> Vec<f64> {
        (0..self.inputs.len())
            .into_par_iter()
            .map(|g| mamdani_infer(self.inputs.triple(g), params))
            .collect()
    }

    /// Orders genes by descending score, then ascending t-test p-value, then index.
    pub fn rank(&self, params: &FgfParams) -> GeneRanking {
        let scores = self.scores(params);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(self.tie_break[a].total_cmp(&self.tie_break[b]))
                .then(a.cmp(&b))
        });
        GeneRanking {
            method: RankMethod::Fgf,
            order,
            scores,
        }
    }
}

pub fn fgf_rank(dataset: &Dataset, params: &FgfParams) -> Result<GeneRanking> {
    params.validate()?;
    Ok(FuzzyGeneFilter::new(dataset)?.rank(params))
}
