use super::TrainSet;
use crate::{Error, Result};

/// Majority vote among the `k` nearest training samples (Euclidean).
///
/// Equal distances are ordered by sample index. A tied vote goes to the class
/// with the smaller summed distance, then to class 0.
pub fn knn_classify(train: &TrainSet, query: &[f64], k: usize) -> Result<u8> {
    train.check_query(query)?;
    if k == 0 || k > train.n_samples() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            train.n_samples()
        )));
    }
    let mut dist: Vec<(f64, usize)> = (0..train.n_samples())
        .map(|i| {
            let d2: f64 = train
                .sample(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2.sqrt(), i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut votes = [0usize; 2];
    let mut summed = [0.0f64; 2];
    for &(d, i) in &dist[..k] {
        let c = train.labels[i] as usize;
        votes[c] += 1;
        summed[c] += d;
    }
    Ok(if votes[1] > votes[0] || (votes[1] == votes[0] && summed[1] < summed[0]) {
        1
    } else {
        0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line() -> TrainSet {
        TrainSet::new(array![[0.0], [1.0], [10.0], [11.0]], vec![0, 0, 1, 1]).unwrap()
    }

    #[test]
    fn exact_match_k1() {
        let t = line();
        for i in 0..4 {
            assert_eq!(knn_classify(&t, &[t.features[[i, 0]]], 1).unwrap(), t.labels[i]);
        }
    }

    #[test]
    fn hand_computed_vote() {
        // from 5.4 the nearest three are 1, 10, 0; from 5.6 they are 10, 1, 11
        assert_eq!(knn_classify(&line(), &[5.4], 3).unwrap(), 0);
        assert_eq!(knn_classify(&line(), &[5.6], 3).unwrap(), 1);
    }

    #[test]
    fn tied_vote_uses_summed_distance() {
        // k = 2 at 5.4: neighbours 1 (class 0, 4.4) and 10 (class 1, 4.6)
        assert_eq!(knn_classify(&line(), &[5.4], 2).unwrap(), 0);
        assert_eq!(knn_classify(&line(), &[5.6], 2).unwrap(), 1);
        // exact balance falls back to class 0
        assert_eq!(knn_classify(&line(), &[5.5], 4).unwrap(), 0);
    }

    #[test]
    fn errors() {
        assert!(knn_classify(&line(), &[1.0], 0).is_err());
        assert!(knn_classify(&line(), &[1.0], 5).is_err());
        assert!(knn_classify(&line(), &[1.0, 2.0], 1).is_err());
    }
}
