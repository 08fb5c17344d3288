//! End-to-end runs: tokens → cohorts → dataset → classification → reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokenlab_core::agents::{run_subject, run_subject_session, validate_cohort, CohortError, CohortSpec};
use tokenlab_core::analytics::{cohort_stats, evaluate, CohortStats, Evaluation, PipelineError, SplitSpec};
use tokenlab_core::rng::{derive_seed, Stream};
use tokenlab_core::tokens::{build_token_set, check_distinctness, InformationToken, TokenDistinctnessReport};
use tokenlab_core::PerformanceRecord;

use crate::config::ExperimentConfig;
use crate::dataset::{export_trade_log, write_records, DatasetError};
use crate::report::{
    render_cohort_stats, render_crosstable_text, render_distinctness, render_predictions, render_summary,
};

pub const DATASET_FILE: &str = "dataset.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRADES_DIR: &str = "trades";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("token encodings are not distinct enough (min distance {:.4} <= {}); rerun with --force to continue\n{}", .0.min_offdiagonal, .0.threshold, render_distinctness(.0))]
    Distinctness(Box<TokenDistinctnessReport>),
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    std::fs::write(path, bytes).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tokens built from the config, checked for distinctness.
pub fn prepare_tokens(
    config: &ExperimentConfig,
    force: bool,
) -> Result<(Vec<InformationToken>, TokenDistinctnessReport), ExperimentError> {
    config.validate()?;
    let tokens = build_token_set(&config.virtue, &config.templates).map_err(crate::config::ConfigError::from)?;
    let report = check_distinctness(&tokens, &config.distinctness);
    if !report.sufficient && !force {
        return Err(ExperimentError::Distinctness(Box::new(report)));
    }
    Ok((tokens, report))
}

/// Cohort specs in token order with consecutive subject ids.
pub fn cohort_specs(config: &ExperimentConfig) -> Vec<CohortSpec> {
    let mut first = 0;
    config
        .cohorts
        .iter()
        .map(|(&token_id, &n)| {
            let spec = CohortSpec {
                token_id,
                n_subjects: n,
                seed_base: derive_seed(config.master_seed, Stream::Cohort, token_id.index() as u64),
                first_subject_id: first,
            };
            first += n as u64;
            spec
        })
        .collect()
}

/// The split actually used: the configured spec re-seeded from the master seed.
pub fn effective_split(config: &ExperimentConfig) -> SplitSpec {
    SplitSpec { seed: derive_seed(config.master_seed, Stream::Split, config.split.seed), ..config.split.clone() }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Runs every cohort. Output order is by token, then subject index,
/// whatever the worker count.
pub fn generate_records(
    config: &ExperimentConfig,
    tokens: &[InformationToken],
) -> Result<Vec<PerformanceRecord>, ExperimentError> {
    run_subjects(config, tokens, None)
}

/// [`generate_records`], also writing each session's trades to
/// `dir/subject-<id>.csv`.
pub fn generate_with_trade_logs(
    config: &ExperimentConfig,
    tokens: &[InformationToken],
    dir: &Path,
) -> Result<Vec<PerformanceRecord>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io { path: dir.to_path_buf(), source })?;
    run_subjects(config, tokens, Some(dir))
}

pub fn trade_log_name(subject_id: u64) -> String {
    format!("subject-{subject_id:06}.csv")
}

fn run_subjects(
    config: &ExperimentConfig,
    tokens: &[InformationToken],
    trade_logs: Option<&Path>,
) -> Result<Vec<PerformanceRecord>, ExperimentError> {
    let specs = cohort_specs(config);
    let by_id: BTreeMap<_, _> = tokens.iter().map(|t| (t.id, t)).collect();
    for spec in &specs {
        validate_cohort(spec, by_id[&spec.token_id], &config.virtue, &config.market)?;
    }
    let jobs: Vec<(&CohortSpec, u32)> = specs.iter().flat_map(|s| (0..s.n_subjects).map(move |i| (s, i))).collect();
    let one = |spec: &CohortSpec, i: u32| -> Result<PerformanceRecord, ExperimentError> {
        let token = by_id[&spec.token_id];
        let Some(dir) = trade_logs else {
            return Ok(run_subject(spec, i, token, &config.behavior, &config.market)?);
        };
        let (record, session) = run_subject_session(spec, i, token, &config.behavior, &config.market)?;
        export_trade_log(&session.trades, &dir.join(trade_log_name(record.subject_id)))?;
        Ok(record)
    };
    pool(config.workers)?.install(|| jobs.par_iter().map(|(spec, i)| one(spec, *i)).collect())
}

/// Split, standardize, classify and tabulate.
pub fn classify_records(config: &ExperimentConfig, records: &[PerformanceRecord]) -> Result<Evaluation, PipelineError> {
    evaluate(records, &effective_split(config), &config.knn)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub master_seed: u64,
    pub versions: BTreeMap<String, String>,
    /// sha256 of every other file written by the run.
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct ReportBundle {
    pub output_dir: PathBuf,
    pub dataset_path: PathBuf,
    pub records: Vec<PerformanceRecord>,
    pub stats: CohortStats,
    pub distinctness: TokenDistinctnessReport,
    pub evaluation: Evaluation,
    pub manifest: Manifest,
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("tokenlab".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
        ("format".to_owned(), "1".to_owned()),
    ])
}

/// Runs the whole experiment and writes its artifacts to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, force: bool) -> Result<ReportBundle, ExperimentError> {
    let (tokens, distinctness) = prepare_tokens(config, force)?;
    let out = config.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|source| ExperimentError::Io { path: out.clone(), source })?;

    let records = generate_records(config, &tokens)?;
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut csv = Vec::new();
    write_records(&mut csv, &records)?;
    files.insert(DATASET_FILE.into(), csv);

    let stats = cohort_stats(&records).expect("cohorts are nonempty");
    let evaluation = classify_records(config, &records)?;
    let summaries = [evaluation.all_tokens.clone(), evaluation.informed_tokens.clone()];
    files.insert("crosstable.txt".into(), render_crosstable_text(&evaluation.crosstable).into_bytes());
    files.insert("summary.txt".into(), render_summary(&summaries).into_bytes());
    files.insert(
        "cohort_stats.txt".into(),
        render_cohort_stats(&stats, &records, Some(&evaluation.partition)).into_bytes(),
    );
    files.insert("distinctness.txt".into(), render_distinctness(&distinctness).into_bytes());
    files.insert(
        "predictions.csv".into(),
        render_predictions(&records, &evaluation.partition.test, &evaluation.predicted).into_bytes(),
    );
    let config_json = config.to_json();
    files.insert(CONFIG_FILE.into(), config_json.clone().into_bytes());

    let manifest = Manifest {
        config_sha256: sha256_hex(config_json.as_bytes()),
        master_seed: config.master_seed,
        versions: versions(),
        files: files.iter().map(|(k, v)| (k.clone(), sha256_hex(v))).collect(),
    };
    for (name, bytes) in &files {
        write_file(&out.join(name), bytes)?;
    }
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&out.join(MANIFEST_FILE), manifest_json.as_bytes())?;

    Ok(ReportBundle {
        dataset_path: out.join(DATASET_FILE),
        output_dir: out,
        records,
        stats,
        distinctness,
        evaluation,
        manifest,
    })
}
