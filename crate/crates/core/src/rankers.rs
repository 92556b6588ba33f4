//! Classical per-gene differential-expression tests and the rankings they induce.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{stats, Dataset, Error, Result, EPS_VAR};

/// Sample sizes up to this total use the exact rank-sum distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    Fgf,
    #[serde(rename = "ttest")]
    TTest,
    Wilcoxon,
    Roc,
}

impl RankMethod {
    pub const ALL: [RankMethod; 4] = [
        RankMethod::Fgf,
        RankMethod::TTest,
        RankMethod::Wilcoxon,
        RankMethod::Roc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RankMethod::Fgf => "fgf",
            RankMethod::TTest => "ttest",
            RankMethod::Wilcoxon => "wilcoxon",
            RankMethod::Roc => "roc",
        }
    }

    /// Column heading used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            RankMethod::Fgf => "FGF",
            RankMethod::TTest => "t-test",
            RankMethod::Wilcoxon => "Wilcoxon test",
            RankMethod::Roc => "ROC",
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgf" => Ok(RankMethod::Fgf),
            "ttest" | "t-test" => Ok(RankMethod::TTest),
            "wilcoxon" => Ok(RankMethod::Wilcoxon),
            "roc" => Ok(RankMethod::Roc),
            _ => Err(Error::InvalidArgument(format!("unknown ranking method {s:?}"))),
        }
    }
}

/// Outcome of a two-sample test on one gene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// t, W or AUC depending on the test.
    pub statistic: f64,
    pub p_value: f64,
    /// Signed mean difference for t; |W - E\[W\]| for Wilcoxon; |AUC - 0.5| for ROC.
    pub effect: f64,
    /// Welch-Satterthwaite degrees of freedom (t-test only).
    pub df: Option<f64>,
}

/// Genes ordered from most to least differentially expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneRanking {
    pub method: RankMethod,
    /// Gene indices, best first.
    pub order: Vec<usize>,
    /// Per-gene score indexed by original gene index: p-value for the statistical
    /// tests, defuzzified score for the fuzzy filter.
    pub scores: Vec<f64>,
}

impl GeneRanking {
    pub fn top(&self, n: usize) -> &[usize] {
        &self.order[..n.min(self.order.len())]
    }

    /// `rank<TAB>gene_id<TAB>score` with a header line; ranks are 1-based.
    pub fn to_tsv(&self, gene_ids: &[String]) -> String {
        let mut out = String::from("rank\tgene_id\tscore\n");
        for (r, &g) in self.order.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", r + 1, gene_ids[g], self.scores[g]);
        }
        out
    }
}

fn check_len(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() < min || y.len() < min {
        return Err(Error::InvalidArgument(format!(
            "each sample needs at least {min} values (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Unpaired two-sample t-test without the equal-variance assumption.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_len(x, y, 2)?;
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let diff = stats::mean(x) - stats::mean(y);
    let mut vx = stats::sample_variance(x);
    let mut vy = stats::sample_variance(y);
    if vx == 0.0 && vy == 0.0 {
        vx = EPS_VAR;
        vy = EPS_VAR;
    }
    let (ax, ay) = (vx / nx, vy / ny);
    let se2 = ax + ay;
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (ax * ax / (nx - 1.0) + ay * ay / (ny - 1.0));
    Ok(TestResult {
        statistic: t,
        p_value: stats::student_t_two_sided(t, df),
        effect: diff,
        df: Some(df),
    })
}

/// Wilcoxon rank-sum test with midranks.
///
/// W is the rank sum of the smaller sample (`x` on equal sizes). The p-value is
/// exact for totals up to [`WILCOXON_EXACT_MAX_N`] and otherwise uses the normal
/// approximation with continuity and tie corrections.
pub fn wilcoxon_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_len(x, y, 1)?;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = stats::midranks(&pooled);
    let n = pooled.len();
    let RankSum { w, m, effect } = rank_sum(&ranks, x.len());

    let p_value = if n <= WILCOXON_EXACT_MAX_N {
        exact_rank_sum_p(&ranks, m, w)
    } else {
        let k = (n - m) as f64;
        let nf = n as f64;
        let tie_term: f64 = stats::tie_group_sizes(&pooled)
            .into_iter()
            .map(|t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = m as f64 * k / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = (effect - 0.5).max(0.0) / var.sqrt();
            stats::normal_two_sided(z)
        }
    };
    Ok(TestResult {
        statistic: w,
        p_value,
        effect,
        df: None,
    })
}

pub(crate) struct RankSum {
    /// Rank sum of the smaller group.
    pub w: f64,
    /// Size of the smaller group.
    pub m: usize,
    /// |w - E\[w\]|.
    pub effect: f64,
}

/// Rank sum over pooled midranks where the first `nx` entries belong to `x`.
pub(crate) fn rank_sum(ranks: &[f64], nx: usize) -> RankSum {
    let n = ranks.len();
    let ny = n - nx;
    let (group, m) = if ny < nx {
        (&ranks[nx..], ny)
    } else {
        (&ranks[..nx], nx)
    };
    let w: f64 = group.iter().sum();
    let expected = m as f64 * (n as f64 + 1.0) / 2.0;
    RankSum {
        w,
        m,
        effect: (w - expected).abs(),
    }
}

/// P(|S - E| >= |w - E|) where S is the rank sum of a uniformly random
/// `m`-subset of `ranks`. Counts subsets by dynamic programming over doubled
/// (integral) midranks.
fn exact_rank_sum_p(ranks: &[f64], m: usize, w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[j][s]: number of j-subsets with doubled rank sum s
    let mut counts = vec![vec![0u64; max_sum + 1]; m + 1];
    counts[0][0] = 1;
    for &r in &doubled {
        for j in (1..=m).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let prev = &lower[j - 1];
            for s in (r..=max_sum).rev() {
                upper[0][s] += prev[s - r];
            }
        }
    }
    let n = ranks.len() as u64;
    let center2 = m as i64 * (n as i64 + 1);
    let observed = ((2.0 * w).round() as i64 - center2).abs();
    let total: u64 = counts[m].iter().sum();
    let extreme: u64 = counts[m]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - center2).abs() >= observed)
        .map(|(_, &c)| c)
        .sum();
    (extreme as f64 / total as f64).min(1.0)
}

/// ROC analysis with `x` as the positive class.
///
/// AUC = U / (nx ny) with ties counted as one half; the p-value tests
/// AUC = 0.5 using the Hanley-McNeil standard error.
pub fn roc_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_len(x, y, 2)?;
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = stats::midranks(&pooled);
    let rx: f64 = ranks[..x.len()].iter().sum();
    let u = rx - nx * (nx + 1.0) / 2.0;
    let auc = u / (nx * ny);

    let q1 = auc / (2.0 - auc);
    let q2 = 2.0 * auc * auc / (1.0 + auc);
    let a2 = auc * auc;
    let var = (auc * (1.0 - auc) + (nx - 1.0) * (q1 - a2) + (ny - 1.0) * (q2 - a2)) / (nx * ny);
    let dev = auc - 0.5;
    let p_value = if dev == 0.0 {
        1.0
    } else if var <= 0.0 {
        0.0
    } else {
        stats::normal_two_sided(dev / var.sqrt())
    };
    Ok(TestResult {
        statistic: auc,
        p_value,
        effect: dev.abs(),
        df: None,
    })
}

/// Runs one of the statistical tests on (class 0, class 1) values.
pub fn run_test(method: RankMethod, x: &[f64], y: &[f64]) -> Result<TestResult> {
    match method {
        RankMethod::TTest => welch_t_test(x, y),
        RankMethod::Wilcoxon => wilcoxon_test(x, y),
        RankMethod::Roc => roc_test(x, y),
        RankMethod::Fgf => Err(Error::InvalidArgument(
            "the fuzzy filter is not a statistical test; use fgf::fgf_rank".into(),
        )),
    }
}

/// Applies `method` to every gene and orders genes by ascending p-value, then
/// descending |effect|, then ascending gene index.
pub fn rank_genes(dataset: &Dataset, method: RankMethod) -> Result<GeneRanking> {
    let results = (0..dataset.n_genes())
        .into_par_iter()
        .map(|g| {
            let (x, y) = dataset.split_gene(g);
            run_test(method, &x, &y).map_err(|e| match e {
                e @ Error::InvalidArgument(_) if method == RankMethod::Fgf => e,
                e => Error::Gene {
                    gene_id: dataset.gene_ids[g].clone(),
                    source: Box::new(e),
                },
            })
        })
        .collect::<Result<Vec<TestResult>>>()?;
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        ra.p_value
            .total_cmp(&rb.p_value)
            .then(rb.effect.abs().total_cmp(&ra.effect.abs()))
            .then(a.cmp(&b))
    });
    Ok(GeneRanking {
        method,
        order,
        scores: results.iter().map(|r| r.p_value).collect(),
    })
}
