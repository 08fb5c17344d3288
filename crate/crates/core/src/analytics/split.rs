use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::record::PerformanceRecord;
use crate::rng::rng_from_seed;
use crate::tokens::TokenId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// One seeded uniform draw of `floor(ratio * N)` training records,
    /// ignoring labels.
    #[default]
    PooledRandom,
    /// Exact per-token (train, test) counts.
    FixedCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainTest {
    pub train: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub mode: SplitMode,
    /// Training fraction for pooled-random mode.
    pub ratio: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_counts: Option<BTreeMap<TokenId, TrainTest>>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { mode: SplitMode::PooledRandom, ratio: 0.7, seed: 0, fixed_counts: None }
    }
}

/// The per-token train/test table of the reference experiment (159/64).
pub fn reference_split_counts() -> BTreeMap<TokenId, TrainTest> {
    const TABLE: [(usize, usize); 7] = [(23, 7), (26, 9), (24, 7), (20, 10), (21, 9), (26, 8), (19, 14)];
    TokenId::ALL.iter().zip(TABLE).map(|(&id, (train, test))| (id, TrainTest { train, test })).collect()
}

impl SplitSpec {
    pub fn fixed(seed: u64, counts: BTreeMap<TokenId, TrainTest>) -> Self {
        SplitSpec { mode: SplitMode::FixedCounts, seed, fixed_counts: Some(counts), ..Default::default() }
    }

    pub fn pooled(seed: u64, ratio: f64) -> Self {
        SplitSpec { mode: SplitMode::PooledRandom, ratio, seed, fixed_counts: None }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("cannot split an empty record set")]
    Empty,
    #[error("train ratio must lie in (0, 1), got {0}")]
    BadRatio(f64),
    #[error("fixed-counts mode needs a per-token count table")]
    MissingCounts,
    #[error("token {token}: fixed counts sum to {expected} but the dataset has {actual} records")]
    CountMismatch { token: TokenId, expected: usize, actual: usize },
}

/// Index partition into training and test sets, each in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Partition {
    pub fn select(&self, records: &[PerformanceRecord]) -> (Vec<PerformanceRecord>, Vec<PerformanceRecord>) {
        let pick = |ix: &[usize]| ix.iter().map(|&i| records[i].clone()).collect();
        (pick(&self.train), pick(&self.test))
    }
}

/// Partitions `records` per `spec`. Disjoint and exhaustive.
pub fn partition(records: &[PerformanceRecord], spec: &SplitSpec) -> Result<Partition, SplitError> {
    if records.is_empty() {
        return Err(SplitError::Empty);
    }
    let mut rng = rng_from_seed(spec.seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match spec.mode {
        SplitMode::PooledRandom => {
            if !(spec.ratio > 0.0 && spec.ratio < 1.0) {
                return Err(SplitError::BadRatio(spec.ratio));
            }
            let n_train = libm::floor(spec.ratio * records.len() as f64 + 1e-9) as usize;
            let mut idx: Vec<usize> = (0..records.len()).collect();
            idx.shuffle(&mut rng);
            train.extend_from_slice(&idx[..n_train]);
            test.extend_from_slice(&idx[n_train..]);
        }
        SplitMode::FixedCounts => {
            let counts = spec.fixed_counts.as_ref().ok_or(SplitError::MissingCounts)?;
            let mut groups: BTreeMap<TokenId, Vec<usize>> = BTreeMap::new();
            for (i, r) in records.iter().enumerate() {
                groups.entry(r.token_label).or_default().push(i);
            }
            for (&token, tt) in counts {
                if !groups.contains_key(&token) && tt.train + tt.test > 0 {
                    return Err(SplitError::CountMismatch { token, expected: tt.train + tt.test, actual: 0 });
                }
            }
            for (token, mut idx) in groups {
                let tt = counts.get(&token).copied().unwrap_or(TrainTest { train: 0, test: 0 });
                if tt.train + tt.test != idx.len() {
                    return Err(SplitError::CountMismatch { token, expected: tt.train + tt.test, actual: idx.len() });
                }
                idx.shuffle(&mut rng);
                train.extend_from_slice(&idx[..tt.train]);
                test.extend_from_slice(&idx[tt.train..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}

/// Splits `records` into (train, test) per `spec`.
pub fn split(
    records: &[PerformanceRecord],
    spec: &SplitSpec,
) -> Result<(Vec<PerformanceRecord>, Vec<PerformanceRecord>), SplitError> {
    Ok(partition(records, spec)?.select(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(counts: &[usize]) -> Vec<PerformanceRecord> {
        let mut out = Vec::new();
        for (t, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                let id = out.len() as u64;
                out.push(PerformanceRecord::new(id, id, TokenId::from_index(t).unwrap(), id as f64, 0));
            }
        }
        out
    }

    #[test]
    fn reference_table_reproduces_159_64() {
        let data = records(&[30, 35, 31, 30, 30, 34, 33]);
        assert_eq!(data.len(), 223);
        let (train, test) = split(&data, &SplitSpec::fixed(4, reference_split_counts())).unwrap();
        assert_eq!((train.len(), test.len()), (159, 64));
        let t7 = |v: &[PerformanceRecord]| v.iter().filter(|r| r.token_label == TokenId::CONTROL).count();
        assert_eq!((t7(&train), t7(&test)), (19, 14));
        for (id, tt) in reference_split_counts() {
            assert_eq!(train.iter().filter(|r| r.token_label == id).count(), tt.train);
            assert_eq!(test.iter().filter(|r| r.token_label == id).count(), tt.test);
        }
    }

    #[test]
    fn pooled_floor_arithmetic() {
        let data = records(&[10]);
        let (train, test) = split(&data, &SplitSpec::pooled(1, 0.7)).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        let data = records(&[30, 35, 31, 30, 30, 34, 33]);
        let p = partition(&data, &SplitSpec::pooled(1, 0.7)).unwrap();
        assert_eq!((p.train.len(), p.test.len()), (156, 67));
    }

    #[test]
    fn partition_is_exact_and_deterministic() {
        let data = records(&[5, 9, 4]);
        for spec in [SplitSpec::pooled(3, 0.6), SplitSpec::pooled(4, 0.25)] {
            let a = partition(&data, &spec).unwrap();
            assert_eq!(a, partition(&data, &spec).unwrap());
            let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        }
        assert_ne!(partition(&data, &SplitSpec::pooled(3, 0.6)), partition(&data, &SplitSpec::pooled(5, 0.6)));
    }

    #[test]
    fn inconsistent_counts_name_the_token() {
        let data = records(&[30, 35, 31, 30, 30, 34, 32]);
        let err = split(&data, &SplitSpec::fixed(0, reference_split_counts())).unwrap_err();
        assert_eq!(err, SplitError::CountMismatch { token: TokenId::CONTROL, expected: 33, actual: 32 });
        assert!(alloc::format!("{err}").contains("T7"));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(split(&[], &SplitSpec::default()), Err(SplitError::Empty));
        assert_eq!(split(&records(&[3]), &SplitSpec::pooled(0, 1.0)), Err(SplitError::BadRatio(1.0)));
        let spec = SplitSpec { mode: SplitMode::FixedCounts, ..Default::default() };
        assert_eq!(split(&records(&[3]), &spec), Err(SplitError::MissingCounts));
    }
}
