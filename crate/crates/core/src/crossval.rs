//! Nested stratified leave-one-out evaluation of ranking method / classifier pairs.
//!
//! For every held-out sample the genes are ranked (on the remaining samples by
//! default), the top `k` genes are kept, the classifier's hyperparameter is
//! chosen by an inner stratified 10-fold search on the training samples, and the
//! held-out sample is classified by a model trained with that value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use log::debug;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Hyper, TrainSet, TrainedModel};
use crate::fgf::{fgf_rank, FgfParams};
use crate::gaopt::{optimize_fgf, GaConfig};
use crate::rankers::{rank_genes, GeneRanking, RankMethod};
use crate::{seed, stats, Dataset, Error, Result};

/// Inner cross-validation fold count before degradation for small classes.
pub const INNER_FOLDS: usize = 10;
pub const DEFAULT_K_MAX: usize = 50;

const KNN_GRID: [usize; 5] = [1, 3, 5, 7, 9];
const SVM_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
/// Multipliers ordered by distance from 1 in log scale, smaller first on ties.
const NBC_GRID: [f64; 5] = [1.0, 0.5, 2.0, 0.25, 4.0];

/// Where genes are ranked relative to the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankScope {
    /// Re-rank inside every outer fold using only its training samples.
    #[default]
    Train,
    /// Rank once on all samples.
    Full,
}

impl FromStr for RankScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(RankScope::Train),
            "full" => Ok(RankScope::Full),
            _ => Err(Error::InvalidArgument(format!("unknown rank scope {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub method: RankMethod,
    pub classifier: Classifier,
    pub rank_scope: RankScope,
    /// Required for the fuzzy filter unless `fgf_reoptimize` is set.
    pub fgf_params: Option<FgfParams>,
    /// Re-run the GA inside every outer fold with this configuration.
    pub fgf_reoptimize: Option<GaConfig>,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(method: RankMethod, classifier: Classifier) -> Self {
        Self {
            method,
            classifier,
            rank_scope: RankScope::Train,
            fgf_params: None,
            fgf_reoptimize: None,
            seed: 42,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.method == RankMethod::Fgf && self.fgf_params.is_none() && self.fgf_reoptimize.is_none() {
            return Err(Error::InvalidArgument(
                "the fuzzy filter needs FgfParams (or a GA config for per-fold optimization)".into(),
            ));
        }
        if let Some(p) = &self.fgf_params {
            p.validate()?;
        }
        Ok(())
    }
}

/// LOOCV accuracy for every gene count of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: RankMethod,
    pub classifier: Classifier,
    pub accuracy_by_k: BTreeMap<usize, f64>,
    /// Smallest k attaining `best_accuracy`.
    pub best_k: usize,
    pub best_accuracy: f64,
}

/// The JSON summary written next to a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub method: RankMethod,
    pub classifier: Classifier,
    pub best_k: usize,
    pub best_accuracy: f64,
}

impl SweepResult {
    pub fn from_accuracies(
        method: RankMethod,
        classifier: Classifier,
        accuracy_by_k: BTreeMap<usize, f64>,
    ) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        for (&k, &acc) in &accuracy_by_k {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((k, acc));
            }
        }
        let (best_k, best_accuracy) =
            best.ok_or_else(|| Error::InvalidArgument("empty sweep".into()))?;
        Ok(Self {
            method,
            classifier,
            accuracy_by_k,
            best_k,
            best_accuracy,
        })
    }

    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            method: self.method,
            classifier: self.classifier,
            best_k: self.best_k,
            best_accuracy: self.best_accuracy,
        }
    }

    /// `k<TAB>accuracy` with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\taccuracy\n");
        for (k, a) in &self.accuracy_by_k {
            let _ = writeln!(out, "{k}\t{a}");
        }
        out
    }
}

/// Assigns each sample a fold in `0..n_folds`.
///
/// Samples of each class are shuffled with `seed` and dealt round-robin; class 1
/// continues dealing where class 0 stopped, so overall fold sizes also differ by
/// at most one.
pub fn stratified_folds(labels: &[u8], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds (got {n_folds})")));
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(folds)
}

/// Candidate hyperparameters, simplest model first.
pub fn hyper_grid(classifier: Classifier, n_features: usize) -> Vec<Hyper> {
    match classifier {
        Classifier::Knn => KNN_GRID.iter().map(|&k| Hyper::Neighbours(k)).collect(),
        Classifier::Svm => SVM_GRID.iter().map(|&c| Hyper::C(c)).collect(),
        Classifier::Nbc => NBC_GRID.iter().map(|&m| Hyper::BandwidthMultiplier(m)).collect(),
        Classifier::Mlp => {
            let d = n_features.max(1);
            let mut sizes = vec![1, d.div_ceil(2), d, 2 * d];
            sizes.dedup();
            sizes.into_iter().map(Hyper::HiddenNodes).collect()
        }
    }
}

/// Column means and standard deviations of the training features.
struct Scaler {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Scaler {
    fn fit(x: &Array2<f64>) -> Self {
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let v = col.to_vec();
            mean.push(stats::mean(&v));
            let s = stats::sample_variance(&v).sqrt();
            sd.push(if s > 0.0 { s } else { 1.0 });
        }
        Self { mean, sd }
    }

    fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.outer_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.sd[j];
            }
        }
        out
    }
}

/// A model trained on z-scored features; queries are scaled with the training
/// statistics.
pub struct FittedModel {
    scaler: Scaler,
    model: TrainedModel,
}

impl FittedModel {
    pub fn fit(train: &TrainSet, hyper: Hyper, seed: u64) -> Result<Self> {
        let scaler = Scaler::fit(&train.features);
        let scaled = TrainSet::new(scaler.apply(&train.features), train.labels.clone())?;
        Ok(Self {
            model: TrainedModel::fit(&scaled, hyper, seed)?,
            scaler,
        })
    }

    pub fn predict(&self, query: &[f64]) -> Result<u8> {
        self.model.predict(&self.scaler.apply_row(query))
    }
}

fn subset(train: &TrainSet, rows: &[usize]) -> Result<TrainSet> {
    TrainSet::new(
        train.features.select(Axis(0), rows),
        rows.iter().map(|&i| train.labels[i]).collect(),
    )
}

/// Mean inner-fold accuracy of every grid value, in grid order.
///
/// Uses 10 stratified folds, or as many folds as the smaller class has members
/// when that is below 10. Returns an empty list when a class has fewer than two
/// members. KNN values larger than the smallest inner training fold are skipped.
pub fn inner_cv_scores(train: &TrainSet, classifier: Classifier, seed: u64) -> Result<Vec<(Hyper, f64)>> {
    let grid = hyper_grid(classifier, train.n_features());
    let n1 = train.labels.iter().filter(|&&l| l == 1).count();
    let min_class = n1.min(train.n_samples() - n1);
    if min_class < 2 {
        debug!("inner search skipped: smallest class has {min_class} samples");
        return Ok(Vec::new());
    }
    let n_folds = if min_class < INNER_FOLDS {
        debug!("inner search degraded to {min_class} folds");
        min_class
    } else {
        INNER_FOLDS
    };
    let folds = stratified_folds(&train.labels, n_folds, seed)?;
    let splits: Vec<(TrainSet, Vec<usize>)> = (0..n_folds)
        .map(|f| {
            let tr: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != f).collect();
            let te: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == f).collect();
            Ok((subset(train, &tr)?, te))
        })
        .collect::<Result<_>>()?;
    let smallest_train = splits.iter().map(|(t, _)| t.n_samples()).min().unwrap_or(0);

    let mut scores = Vec::with_capacity(grid.len());
    for hyper in grid {
        if let Hyper::Neighbours(k) = hyper {
            if k > smallest_train {
                continue;
            }
        }
        let mut acc_sum = 0.0;
        for (f, (tr, te)) in splits.iter().enumerate() {
            let model = FittedModel::fit(tr, hyper, seed::derive(seed, &[f as u64]))?;
            let mut correct = 0usize;
            for &i in te {
                let row = train.sample(i).to_vec();
                if model.predict(&row)? == train.labels[i] {
                    correct += 1;
                }
            }
            acc_sum += correct as f64 / te.len() as f64;
        }
        scores.push((hyper, acc_sum / n_folds as f64));
    }
    Ok(scores)
}

/// Picks the grid value with the best mean inner-fold accuracy; ties go to the
/// earlier (simpler) grid entry.
pub fn inner_search(train: &TrainSet, classifier: Classifier, seed: u64) -> Result<Hyper> {
    let mut best: Option<(Hyper, f64)> = None;
    for (hyper, acc) in inner_cv_scores(train, classifier, seed)? {
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((hyper, acc));
        }
    }
    Ok(best.map_or_else(|| hyper_grid(classifier, train.n_features())[0], |(h, _)| h))
}

fn ranking_for(data: &Dataset, cfg: &EvalConfig, fold_seed: u64) -> Result<GeneRanking> {
    match cfg.method {
        RankMethod::Fgf => {
            let params = match &cfg.fgf_reoptimize {
                Some(ga) => {
                    let ga = GaConfig {
                        seed: fold_seed,
                        ..ga.clone()
                    };
                    optimize_fgf(data, &ga)?.0
                }
                None => cfg.fgf_params.expect("validated"),
            };
            fgf_rank(data, &params)
        }
        m => rank_genes(data, m),
    }
}

/// The gene ranking used when `held_out` is left out: computed on the other
/// samples only (`RankScope::Train`) or on all samples (`RankScope::Full`).
pub fn fold_ranking(dataset: &Dataset, cfg: &EvalConfig, held_out: usize) -> Result<GeneRanking> {
    cfg.validate()?;
    match cfg.rank_scope {
        RankScope::Full => ranking_for(dataset, cfg, seed::derive(cfg.seed, &[u64::MAX])),
        RankScope::Train => {
            let train: Vec<usize> = (0..dataset.n_samples()).filter(|&s| s != held_out).collect();
            ranking_for(&dataset.select_samples(&train), cfg, seed::derive(cfg.seed, &[held_out as u64]))
        }
    }
}

/// Number of correctly classified held-out samples for each gene count in `ks`.
fn loocv_correct_counts(dataset: &Dataset, cfg: &EvalConfig, ks: &[usize]) -> Result<Vec<usize>> {
    cfg.validate()?;
    dataset.validate()?;
    let n = dataset.n_samples();
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > dataset.n_genes()) {
        return Err(Error::InvalidArgument(format!(
            "gene count {k} outside 1..={}",
            dataset.n_genes()
        )));
    }
    let [n0, n1] = dataset.class_counts();
    if n0.min(n1) < 3 {
        return Err(Error::InvalidArgument(
            "leave-one-out needs at least 3 samples per class".into(),
        ));
    }
    let full_ranking = match cfg.rank_scope {
        RankScope::Full => Some(ranking_for(dataset, cfg, seed::derive(cfg.seed, &[u64::MAX]))?),
        RankScope::Train => None,
    };

    let per_fold: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|held_out| -> Result<Vec<bool>> {
            let train_idx: Vec<usize> = (0..n).filter(|&s| s != held_out).collect();
            let train_ds = dataset.select_samples(&train_idx);
            let ranking = match &full_ranking {
                Some(r) => r.clone(),
                None => ranking_for(&train_ds, cfg, seed::derive(cfg.seed, &[held_out as u64]))?,
            };
            ks.iter()
                .map(|&k| {
                    let genes = ranking.top(k);
                    let features = train_ds.matrix.select(Axis(0), genes).reversed_axes();
                    let train = TrainSet::new(features.as_standard_layout().to_owned(), train_ds.labels.clone())?;
                    let fold_seed = seed::derive(cfg.seed, &[held_out as u64, k as u64]);
                    let hyper = inner_search(&train, cfg.classifier, fold_seed)?;
                    let model = FittedModel::fit(&train, hyper, seed::derive(fold_seed, &[u64::MAX]))?;
                    let query: Vec<f64> = genes.iter().map(|&g| dataset.matrix[[g, held_out]]).collect();
                    Ok(model.predict(&query)? == dataset.labels[held_out])
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok((0..ks.len())
        .map(|j| per_fold.iter().filter(|f| f[j]).count())
        .collect())
}

/// Fraction of held-out samples classified correctly using the top `k_genes`.
pub fn loocv_accuracy(dataset: &Dataset, cfg: &EvalConfig, k_genes: usize) -> Result<f64> {
    let counts = loocv_correct_counts(dataset, cfg, &[k_genes])?;
    Ok(counts[0] as f64 / dataset.n_samples() as f64)
}

/// LOOCV accuracy for k = 1..=k_max. Each outer fold ranks genes once and
/// reuses the ranking for every k.
pub fn sweep_gene_counts(dataset: &Dataset, cfg: &EvalConfig, k_max: usize) -> Result<SweepResult> {
    if k_max == 0 || k_max > dataset.n_genes() {
        return Err(Error::InvalidArgument(format!(
            "k_max {k_max} outside 1..={}",
            dataset.n_genes()
        )));
    }
    let ks: Vec<usize> = (1..=k_max).collect();
    let counts = loocv_correct_counts(dataset, cfg, &ks)?;
    let n = dataset.n_samples() as f64;
    let accuracy_by_k = ks.iter().zip(counts).map(|(&k, c)| (k, c as f64 / n)).collect();
    SweepResult::from_accuracies(cfg.method, cfg.classifier, accuracy_by_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    #[serde(rename = "F")]
    pub f: f64,
    pub p: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// Classical one-way ANOVA.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("ANOVA needs at least 2 groups".into()));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidArgument(
            "every ANOVA group needs at least 2 observations".into(),
        ));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ANOVA observation".into()));
    }
    let first = groups[0][0];
    if groups.iter().flatten().all(|&v| v == first) {
        return Err(Error::DegenerateAnova);
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = stats::mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = total - groups.len();
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let f = if ms_within > 0.0 {
        ms_between / ms_within
    } else {
        f64::INFINITY
    };
    Ok(AnovaResult {
        f,
        p: stats::f_upper_tail(f, df_between as f64, df_within as f64),
        df_between,
        df_within,
    })
}
