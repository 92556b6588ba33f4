//! Brute-force reference implementations used to cross-check the library.
//! Nothing here calls into the crate under test.

#![allow(dead_code)]

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Welch t statistic and Welch-Satterthwaite df straight from the textbook formulas.
pub fn welch_direct(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (var(x), var(y));
    let t = (mean(x) - mean(y)) / (vx / nx + vy / ny).sqrt();
    let df = (vx / nx + vy / ny).powi(2)
        / ((vx / nx).powi(2) / (nx - 1.0) + (vy / ny).powi(2) / (ny - 1.0));
    (t, df)
}

/// Two-sided Student-t tail by quadrature. With s = sqrt(df) tan(theta) the tail
/// integral becomes c * int cos^(df-1)(theta) over [atan(|t|/sqrt(df)), pi/2].
pub fn student_t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let c = (libm::lgamma((df + 1.0) / 2.0) - libm::lgamma(df / 2.0)).exp() / std::f64::consts::PI.sqrt();
    let lo = (t.abs() / df.sqrt()).atan();
    let f = |th: f64| th.cos().max(0.0).powf(df - 1.0);
    2.0 * c * adaptive_simpson(&f, lo, std::f64::consts::FRAC_PI_2, 1e-14, 50)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    recurse(f, a, b, f(a), f(m), f(b), whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// 1-based midranks by counting.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided rank-sum p by enumerating every way to choose the smaller
/// group's positions (x on equal sizes). Returns (W, p).
pub fn wilcoxon_enumerate(x: &[f64], y: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let n = pooled.len();
    let (group, m): (Vec<usize>, usize) = if y.len() < x.len() {
        ((x.len()..n).collect(), y.len())
    } else {
        ((0..x.len()).collect(), x.len())
    };
    // doubled ranks are integers, so all comparisons below are exact
    let r2: Vec<i64> = ranks.iter().map(|r| (2.0 * r) as i64).collect();
    let center2 = m as i64 * (n as i64 + 1);
    let w2: i64 = group.iter().map(|&i| r2[i]).sum();
    let observed = (w2 - center2).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let s: i64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| r2[i]).sum();
        total += 1;
        if (s - center2).abs() >= observed {
            extreme += 1;
        }
    }
    (w2 as f64 / 2.0, extreme as f64 / total as f64)
}

/// Fraction of (x, y) pairs with x > y, ties counting one half.
pub fn auc_pairwise(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for &a in x {
        for &b in y {
            s += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (x.len() * y.len()) as f64
}

/// One-way ANOVA F by the textbook sums of squares (no p).
pub fn anova_f(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let ssb: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let ssw: f64 = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum();
    let k = groups.len() as f64;
    (ssb / (k - 1.0)) / (ssw / (all.len() as f64 - k))
}

/// Majority vote of the k nearest points with the documented tie rules,
/// by sorting every distance.
pub fn knn_brute(points: &[Vec<f64>], labels: &[u8], query: &[f64], k: usize) -> u8 {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let ones = d[..k].iter().filter(|(_, i)| labels[*i] == 1).count();
    let zeros = k - ones;
    let sum = |c: u8| d[..k].iter().filter(|(_, i)| labels[*i] == c).map(|(x, _)| x).sum::<f64>();
    if ones > zeros || (ones == zeros && sum(1) < sum(0)) {
        1
    } else {
        0
    }
}

/// Reference LOOCV accuracies (percent) on the prostate set: one row per ranking
/// method (FGF, t-test, Wilcoxon, ROC), one column per classifier.
pub const PROSTATE: [[f64; 4]; 4] = [
    [96.1, 95.0, 94.1, 95.0],
    [93.1, 94.1, 93.1, 93.1],
    [94.1, 94.1, 93.1, 94.1],
    [93.1, 95.0, 94.1, 94.1],
];
/// Same layout for the lymphoma set.
pub const LYMPHOMA: [[f64; 4]; 4] = [
    [100.0, 100.0, 97.4, 98.7],
    [97.4, 98.7, 97.4, 94.8],
    [94.8, 98.7, 97.4, 97.4],
    [98.7, 98.7, 97.4, 97.4],
];
/// scipy.stats.f_oneway over the rows above.
pub const PROSTATE_F: f64 = 4.593_794_076_163_618_5;
pub const PROSTATE_P: f64 = 0.023_093_204_261_982_508;
pub const LYMPHOMA_F: f64 = 1.867_924_528_301_883_3;
pub const LYMPHOMA_P: f64 = 0.188_824_383_366_276_4;
