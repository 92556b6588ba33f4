mod support;

use genefilter_core::classifiers::{
    knn_classify, mlp_gradient, mlp_loss, mlp_predict, mlp_train, nbc_predict, nbc_train, svm_predict, svm_train,
};
use genefilter_core::{seed, MlpModel, TrainSet};
use ndarray::{array, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use support::oracles;

/// Two Gaussian blobs far enough apart to be linearly separable.
fn blobs(rng: &mut impl Rng, n: usize, d: usize) -> TrainSet {
    let noise = Normal::new(0.0, 1.0).unwrap();
    loop {
        let dir: Vec<f64> = (0..d).map(|_| noise.sample(rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 1)).collect();
        let x = Array2::from_shape_fn((n, d), |(i, j)| {
            let sign = if labels[i] == 1 { 1.0 } else { -1.0 };
            sign * 4.0 * dir[j] / norm + 0.6 * noise.sample(rng)
        });
        let t = TrainSet::new(x, labels).unwrap();
        // keep only draws whose margin along the planted direction is positive
        let proj = |i: usize| t.sample(i).iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
        let max0 = (0..n).filter(|&i| t.labels[i] == 0).map(proj).fold(f64::MIN, f64::max);
        let min1 = (0..n).filter(|&i| t.labels[i] == 1).map(proj).fold(f64::MAX, f64::min);
        if max0 < min1 {
            return t;
        }
    }
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let mut rng = seed::rng(31);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = Array2::from_shape_fn((20, 3), |_| rng.random_range(-2.0..2.0));
        let t = TrainSet::new(x, (0..20).map(|i| (i % 2) as u8).collect()).unwrap();
        let mut m = MlpModel::zeros(3, 4, 0.01);
        let p: Vec<f64> = (0..m.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.set_params(&p);
        let g = mlp_gradient(&m, &t);
        // near the round-off/truncation optimum for a loss of order 1
        let h = 3e-5;
        for k in 0..p.len() {
            let shifted = |delta: f64| {
                let mut q = p.clone();
                q[k] += delta;
                let mut a = m.clone();
                a.set_params(&q);
                mlp_loss(&a, &t)
            };
            let num = (shifted(h) - shifted(-h)) / (2.0 * h);
            worst = worst.max((g[k] - num).abs() / g[k].abs().max(num.abs()));
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn mlp_learns_xor() {
    let t = TrainSet::new(array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], vec![0, 1, 1, 0]).unwrap();
    let solved = (0..10)
        .filter(|&s| {
            let m = mlp_train(&t, 2, 0.0, s).unwrap();
            (0..4).all(|i| mlp_predict(&m, t.sample(i).as_slice().unwrap()).unwrap().0 == t.labels[i])
        })
        .count();
    assert!(solved >= 8, "{solved}/10");
}

#[test]
fn mlp_is_deterministic_and_loss_never_rises() {
    let mut rng = seed::rng(32);
    let t = blobs(&mut rng, 30, 4);
    let a = mlp_train(&t, 3, 0.01, 9).unwrap();
    let b = mlp_train(&t, 3, 0.01, 9).unwrap();
    assert_eq!(a, b);
    assert!(a.training_loss.windows(2).all(|w| w[1] <= w[0]));
    for i in 0..t.n_samples() {
        let (_, p) = mlp_predict(&a, t.sample(i).as_slice().unwrap()).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}

#[test]
fn svm_solves_separable_problems() {
    let mut rng = seed::rng(33);
    for _ in 0..50 {
        let d = rng.random_range(2..6);
        let t = blobs(&mut rng, 30, d);
        let c = 100.0;
        let m = svm_train(&t, c).unwrap();
        assert!(m.kkt_violation < 1e-3);
        let mut balance = 0.0;
        for (&i, &a) in m.support_indices.iter().zip(&m.dual_coefficients) {
            assert!(a > 0.0 && a <= c);
            balance += if t.labels[i] == 1 { a } else { -a };
            let y = if t.labels[i] == 1 { 1.0 } else { -1.0 };
            if a < c {
                let margin = y * m.decision_value(t.sample(i).as_slice().unwrap());
                assert!((margin - 1.0).abs() < 1e-2, "{margin}");
            }
        }
        assert!(balance.abs() < 1e-6);
        for i in 0..t.n_samples() {
            assert_eq!(svm_predict(&m, t.sample(i).as_slice().unwrap()).unwrap(), t.labels[i]);
        }
    }
}

#[test]
fn knn_agrees_with_sorting_oracle() {
    let mut rng = seed::rng(34);
    let t = blobs(&mut rng, 25, 3);
    let pts: Vec<Vec<f64>> = t.features.outer_iter().map(|r| r.to_vec()).collect();
    for q in 0..100 {
        let query: Vec<f64> = (0..3).map(|_| rng.random_range(-6.0..6.0)).collect();
        let k = 1 + 2 * (q % 5);
        assert_eq!(knn_classify(&t, &query, k).unwrap(), oracles::knn_brute(&pts, &t.labels, &query, k));
    }
}

#[test]
fn knn_with_all_samples_votes_majority() {
    let t = TrainSet::new(array![[0.0], [1.0], [2.0], [9.0], [10.0]], vec![0, 0, 0, 1, 1]).unwrap();
    for q in [-5.0, 5.0, 9.5, 100.0] {
        assert_eq!(knn_classify(&t, &[q], 5).unwrap(), 0);
    }
}

#[test]
fn nbc_posteriors_are_normalized_far_from_data() {
    let mut rng = seed::rng(35);
    let t = blobs(&mut rng, 20, 2);
    let m = nbc_train(&t, 1.0).unwrap();
    let widest = m.bandwidths.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    for q in 0..100 {
        let scale = if q < 50 { 5.0 } else { 60.0 * widest };
        let query: Vec<f64> = (0..2).map(|_| rng.random_range(-scale..scale)).collect();
        let (_, post) = nbc_predict(&m, &query).unwrap();
        assert!(post.iter().all(|p| p.is_finite()));
        assert!((post[0] + post[1] - 1.0).abs() < 1e-12);
    }
}
