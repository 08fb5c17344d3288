//! Classification of token conditions from performance records.
//!
//! The pipeline is: split the records (pooled-random or fixed per-token
//! counts), z-score the features on the training half, label each test
//! record by KNN, then tabulate actual against predicted labels and
//! summarise the hit rate.

mod crosstable;
mod knn;
mod pipeline;
mod record;
mod split;
mod standardize;
mod stats;

pub use crosstable::{
    cross_table, percent_half_up, success_summary, CrossTable, CrossTableError, SuccessSummary, SummaryScope,
};
pub use knn::{knn_classify, quantize, quantize_row, vote, KnnConfig, KnnError, TiePolicy, GRID};
pub use pipeline::{classify, evaluate, Evaluation, PipelineError};
pub use record::PerformanceRecord;
pub use split::{partition, reference_split_counts, split, Partition, SplitError, SplitMode, SplitSpec, TrainTest};
pub use standardize::{standardize, FeatureError, Standardized, Standardizer};
pub use stats::{cohort_stats, kruskal_wallis, CohortStats, EmptyRecords, TokenStats};
