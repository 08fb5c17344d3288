use alloc::string::String;
use alloc::vec::Vec;

use super::crosstable::{cross_table, success_summary, CrossTable, CrossTableError, SuccessSummary, SummaryScope};
use super::knn::{knn_classify, KnnConfig, KnnError};
use super::record::PerformanceRecord;
use super::split::{partition, Partition, SplitError, SplitSpec};
use super::standardize::{standardize, FeatureError, Standardizer};
use crate::tokens::TokenId;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    CrossTable(#[from] CrossTableError),
    #[error("record {0} has a different set of extra features")]
    InconsistentFeatures(u64),
}

/// Output of split → standardize → KNN → cross-table.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub partition: Partition,
    pub standardizer: Standardizer,
    pub actual: Vec<TokenId>,
    pub predicted: Vec<TokenId>,
    pub crosstable: CrossTable<TokenId>,
    /// All seven rows.
    pub all_tokens: SuccessSummary,
    /// Rows T1..T6.
    pub informed_tokens: SuccessSummary,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.crosstable.accuracy()
    }
}

fn feature_rows(records: &[PerformanceRecord]) -> Result<Vec<Vec<f64>>, PipelineError> {
    if let Some(first) = records.first() {
        let keys: Vec<&String> = first.extra_features.keys().collect();
        if let Some(bad) = records.iter().find(|r| !r.extra_features.keys().eq(keys.iter().copied())) {
            return Err(PipelineError::InconsistentFeatures(bad.record_id));
        }
    }
    Ok(records.iter().map(PerformanceRecord::features).collect())
}

/// Standardizes on `train`, then predicts a token for every test record.
pub fn classify(
    train: &[PerformanceRecord],
    test: &[PerformanceRecord],
    knn: &KnnConfig,
) -> Result<(Vec<TokenId>, Standardizer), PipelineError> {
    let mut both = Vec::with_capacity(train.len() + test.len());
    both.extend_from_slice(train);
    both.extend_from_slice(test);
    feature_rows(&both)?;
    let (train_x, test_x, params) = standardize(&feature_rows(train)?, &feature_rows(test)?)?;
    let labels: Vec<TokenId> = train.iter().map(|r| r.token_label).collect();
    Ok((knn_classify(&train_x, &labels, &test_x, knn)?, params))
}

/// Runs the full classification pipeline on a record set.
pub fn evaluate(
    records: &[PerformanceRecord],
    split: &SplitSpec,
    knn: &KnnConfig,
) -> Result<Evaluation, PipelineError> {
    let partition = partition(records, split)?;
    let (train, test) = partition.select(records);
    let (predicted, standardizer) = classify(&train, &test, knn)?;
    let actual: Vec<TokenId> = test.iter().map(|r| r.token_label).collect();
    let crosstable = cross_table(&actual, &predicted, &TokenId::ALL)?;
    let all_tokens = success_summary(&crosstable, &SummaryScope::AllClasses);
    let informed_tokens = success_summary(&crosstable, &SummaryScope::FirstRows(6));
    Ok(Evaluation { partition, standardizer, actual, predicted, crosstable, all_tokens, informed_tokens })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::split::reference_split_counts;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn clustered(seed: u64, counts: &[usize], spread: f64) -> Vec<PerformanceRecord> {
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::new();
        for (t, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                let id = out.len() as u64;
                let x = t as f64 * 1000.0 + rng.random_range(-spread..spread);
                out.push(PerformanceRecord::new(id, id, TokenId::from_index(t).unwrap(), x, seed));
            }
        }
        out
    }

    #[test]
    fn separated_clusters_classify_perfectly() {
        let data = clustered(1, &[30, 35, 31, 30, 30, 34, 33], 100.0);
        let ev = evaluate(&data, &SplitSpec::fixed(2, reference_split_counts()), &KnnConfig::default()).unwrap();
        assert_eq!(ev.crosstable.total(), 64);
        assert_eq!(ev.all_tokens.success_pct, 100);
        assert_eq!(ev.informed_tokens.scope, "T1:T6");
    }

    #[test]
    fn affine_transform_keeps_predictions() {
        let data = clustered(3, &[20; 7], 900.0);
        let spec = SplitSpec::pooled(5, 0.7);
        let base = evaluate(&data, &spec, &KnnConfig::default()).unwrap();
        for (a, b) in [(3.5, -7.0), (0.001, 1e6), (120.0, 0.25)] {
            let moved: Vec<_> =
                data.iter().map(|r| PerformanceRecord { net_profit: a * r.net_profit + b, ..r.clone() }).collect();
            assert_eq!(evaluate(&moved, &spec, &KnnConfig::default()).unwrap().predicted, base.predicted);
        }
    }

    #[test]
    fn k_larger_than_train_fails() {
        let data = clustered(1, &[1; 7], 1.0);
        let err = evaluate(&data, &SplitSpec::pooled(1, 0.7), &KnnConfig::default()).unwrap_err();
        assert_eq!(err, PipelineError::Knn(KnnError::KTooLarge { k: 5, n: 4 }));
    }

    #[test]
    fn mismatched_extras_are_rejected() {
        let mut data = clustered(1, &[5; 7], 1.0);
        data[0].extra_features.insert("volume".into(), 1.0);
        assert!(matches!(
            evaluate(&data, &SplitSpec::pooled(1, 0.7), &KnnConfig::default()),
            Err(PipelineError::InconsistentFeatures(_))
        ));
    }
}
