//! k-nearest-neighbour classification.
//!
//! Features are mapped onto a fixed-point grid of 1e-9 before distances are
//! taken, and squared Euclidean distances are computed exactly in integer
//! arithmetic. Neighbours are ranked by (squared distance, training index),
//! which is a strict total order, so exact ties are resolved the same way
//! however the features were scaled upstream.
//!
//! Votes are a plain majority among the k neighbours. A tied vote goes to
//! the label whose tied neighbours have the smallest mean Euclidean
//! distance, then to the lowest label.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Grid resolution per unit of (standardized) feature.
pub const GRID: f64 = 1e9;
const GRID_LIMIT: f64 = (1u64 << 52) as f64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Smallest mean neighbour distance, then lowest class.
    #[default]
    NearestMeanThenLowest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
    pub tie_policy: TiePolicy,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5, tie_policy: TiePolicy::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum KnnError {
    #[error("k must be a positive odd integer, got {0}")]
    BadK(usize),
    #[error("k = {k} exceeds the training set size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("{features} training rows but {labels} labels")]
    LabelMismatch { features: usize, labels: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Maps a feature value onto the distance grid (clamped to ±2^52 units).
pub fn quantize(x: f64) -> i128 {
    let q = libm::round(x * GRID);
    let q = if q.is_nan() { 0.0 } else { q.clamp(-GRID_LIMIT, GRID_LIMIT) };
    q as i128
}

pub fn quantize_row(row: &[f64]) -> Vec<i128> {
    row.iter().map(|&x| quantize(x)).collect()
}

fn squared_distance(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).fold(0i128, |acc, d| acc.saturating_add(d))
}

/// Majority vote among `(squared distance, label)` neighbours.
pub fn vote<L: Copy + Ord>(neighbours: &[(i128, L)]) -> L {
    // (label, count, summed Euclidean distance)
    let mut tally: Vec<(L, usize, f64)> = Vec::new();
    for &(d2, label) in neighbours {
        let d = libm::sqrt(d2 as f64);
        match tally.iter_mut().find(|(l, _, _)| *l == label) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 += d;
            }
            None => tally.push((label, 1, d)),
        }
    }
    let top = tally.iter().map(|t| t.1).max().expect("at least one neighbour");
    tally
        .into_iter()
        .filter(|t| t.1 == top)
        .min_by(|a, b| {
            let ma = a.2 / a.1 as f64;
            let mb = b.2 / b.1 as f64;
            ma.total_cmp(&mb).then(a.0.cmp(&b.0))
        })
        .map(|t| t.0)
        .expect("nonempty tally")
}

/// Predicts a label for every test row.
pub fn knn_classify<L: Copy + Ord>(
    train: &[Vec<f64>],
    labels: &[L],
    test: &[Vec<f64>],
    config: &KnnConfig,
) -> Result<Vec<L>, KnnError> {
    let k = config.k;
    if k == 0 || k.is_multiple_of(2) {
        return Err(KnnError::BadK(k));
    }
    if train.len() != labels.len() {
        return Err(KnnError::LabelMismatch { features: train.len(), labels: labels.len() });
    }
    if k > train.len() {
        return Err(KnnError::KTooLarge { k, n: train.len() });
    }
    let dims = train[0].len();
    if let Some(bad) = train.iter().chain(test).find(|r| r.len() != dims) {
        return Err(KnnError::Dimension { expected: dims, got: bad.len() });
    }

    let train_q: Vec<Vec<i128>> = train.iter().map(|r| quantize_row(r)).collect();
    let mut scratch: Vec<(i128, usize)> = Vec::with_capacity(train.len());
    let mut neighbours: Vec<(i128, L)> = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(test.len());
    for row in test {
        let q = quantize_row(row);
        scratch.clear();
        scratch.extend(train_q.iter().enumerate().map(|(i, t)| (squared_distance(&q, t), i)));
        if k < scratch.len() {
            scratch.select_nth_unstable(k - 1);
        }
        neighbours.clear();
        neighbours.extend(scratch[..k].iter().map(|&(d, i)| (d, labels[i])));
        out.push(vote(&neighbours));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    /// Brute force: sort every training point by distance, keep the first k.
    fn oracle(train: &[Vec<f64>], labels: &[u8], test: &[Vec<f64>], k: usize) -> Vec<u8> {
        test.iter()
            .map(|row| {
                let q: Vec<i128> = row.iter().map(|&x| quantize(x)).collect();
                let mut all: Vec<(i128, usize)> = train
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let d: i128 = t.iter().zip(&q).map(|(a, b)| (quantize(*a) - b).pow(2)).sum();
                        (d, i)
                    })
                    .collect();
                all.sort();
                let top: Vec<(i128, u8)> = all[..k].iter().map(|&(d, i)| (d, labels[i])).collect();
                let mut best: Option<(usize, f64, u8)> = None;
                for label in 0..=u8::MAX {
                    let mine: Vec<f64> =
                        top.iter().filter(|(_, l)| *l == label).map(|(d, _)| libm::sqrt(*d as f64)).collect();
                    if mine.is_empty() {
                        continue;
                    }
                    let mean = mine.iter().sum::<f64>() / mine.len() as f64;
                    let better = match best {
                        None => true,
                        Some((c, m, _)) => mine.len() > c || (mine.len() == c && mean < m),
                    };
                    if better {
                        best = Some((mine.len(), mean, label));
                    }
                }
                best.unwrap().2
            })
            .collect()
    }

    #[test]
    fn coincident_point_k1() {
        let train = vec![vec![0.3], vec![1.7], vec![-2.0]];
        let got = knn_classify(&train, &['a', 'b', 'c'], &[vec![1.7]], &KnnConfig { k: 1, ..Default::default() });
        assert_eq!(got.unwrap(), vec!['b']);
    }

    #[test]
    fn one_dimensional_nearest() {
        let train = vec![vec![-1.0], vec![0.0], vec![5.0]];
        let got = knn_classify(&train, &['A', 'A', 'B'], &[vec![4.9]], &KnnConfig { k: 1, ..Default::default() });
        assert_eq!(got.unwrap(), vec!['B']);
    }

    #[test]
    fn tie_goes_to_nearer_class_then_lower_label() {
        // k = 3 over three labels: one vote each, C is nearest.
        let train = vec![vec![0.0], vec![3.0], vec![-0.8]];
        let cfg = KnnConfig { k: 3, ..Default::default() };
        assert_eq!(knn_classify(&train, &[1, 2, 3], &[vec![-0.5]], &cfg).unwrap(), vec![3]);
        // Equal mean distances: the lower label wins.
        let train = vec![vec![-1.0], vec![1.0], vec![10.0]];
        assert_eq!(knn_classify(&train, &[5, 4, 4], &[vec![0.0]], &KnnConfig { k: 1, ..cfg }).unwrap(), vec![5]);
    }

    #[test]
    fn errors() {
        let train = vec![vec![0.0], vec![1.0]];
        assert_eq!(knn_classify(&train, &[0, 1], &[], &KnnConfig::default()), Err(KnnError::KTooLarge { k: 5, n: 2 }));
        assert_eq!(
            knn_classify(&train, &[0, 1], &[], &KnnConfig { k: 2, ..Default::default() }),
            Err(KnnError::BadK(2))
        );
        assert!(matches!(
            knn_classify(&train, &[0], &[], &KnnConfig { k: 1, ..Default::default() }),
            Err(KnnError::LabelMismatch { .. })
        ));
    }

    type Instance = (Vec<Vec<f64>>, Vec<u8>, Vec<Vec<f64>>, usize);

    fn instance() -> impl Strategy<Value = Instance> {
        (1usize..=3, 5usize..=50, prop::sample::select(vec![1usize, 3, 5])).prop_flat_map(|(dims, n, k)| {
            let row = prop::collection::vec(-3.0f64..3.0, dims);
            // Coarse values on half the rows force exact distance ties.
            let coarse = prop::collection::vec((-6i32..6).prop_map(|v| v as f64 * 0.5), dims);
            (
                prop::collection::vec(prop_oneof![row.clone(), coarse.clone()], n),
                prop::collection::vec(0u8..7, n),
                prop::collection::vec(prop_oneof![row, coarse], 1..20),
                Just(k),
            )
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((train, labels, test, k) in instance()) {
            let got = knn_classify(&train, &labels, &test, &KnnConfig { k, ..Default::default() }).unwrap();
            prop_assert_eq!(got, oracle(&train, &labels, &test, k));
        }

        #[test]
        fn permuting_test_rows_permutes_predictions((train, labels, test, k) in instance()) {
            let cfg = KnnConfig { k, ..Default::default() };
            let fwd = knn_classify(&train, &labels, &test, &cfg).unwrap();
            let rev: Vec<_> = test.iter().rev().cloned().collect();
            let mut back = knn_classify(&train, &labels, &rev, &cfg).unwrap();
            back.reverse();
            prop_assert_eq!(fwd, back);
        }
    }
}
