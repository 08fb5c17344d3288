use std::collections::BTreeSet;
use std::path::Path;

use tokenlab::config::{ConfigError, ExperimentConfig, REFERENCE_COHORTS};
use tokenlab_core::TokenId;

const MANIFEST_DIR: &str = env!("CARGO_MANIFEST_DIR");

fn shipped(name: &str) -> std::path::PathBuf {
    Path::new(MANIFEST_DIR).join(name)
}

#[test]
fn shipped_default_matches_builtin() {
    let loaded = ExperimentConfig::load(&shipped("configs/default.json")).unwrap();
    assert_eq!(loaded, ExperimentConfig::default());
}

#[test]
fn default_describes_the_reference_experiment() {
    let c = ExperimentConfig::default();
    let sizes: Vec<u32> = TokenId::ALL.iter().map(|t| c.cohorts[t]).collect();
    assert_eq!(sizes, REFERENCE_COHORTS);
    assert_eq!(c.total_subjects(), 223);
    assert_eq!(c.knn.k, 5);
    c.validate().unwrap();
}

#[test]
fn json_round_trip() {
    let c = ExperimentConfig { master_seed: 99, workers: 3, ..ExperimentConfig::default() };
    assert_eq!(ExperimentConfig::from_json(&c.to_json(), Path::new("x")).unwrap(), c);
}

#[test]
fn missing_keys_take_defaults() {
    let c = ExperimentConfig::from_json(r#"{"master_seed": 5}"#, Path::new("partial.json")).unwrap();
    assert_eq!(c, ExperimentConfig { master_seed: 5, ..ExperimentConfig::default() });
}

#[test]
fn unknown_keys_are_rejected_with_the_path() {
    let err = ExperimentConfig::from_json(r#"{"master_sed": 5}"#, Path::new("typo.json")).unwrap_err();
    assert!(matches!(err, ConfigError::Parse { .. }));
    let msg = err.to_string();
    assert!(msg.contains("typo.json") && msg.contains("master_sed"), "{msg}");
}

#[test]
fn missing_file_names_the_path() {
    let err = ExperimentConfig::load(Path::new("/nonexistent/cfg.json")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/cfg.json"));
}

#[test]
fn semantic_checks() {
    let mut c = ExperimentConfig::default();
    c.knn.k = 4;
    assert!(matches!(c.validate(), Err(ConfigError::BadK(4))));

    let mut c = ExperimentConfig::default();
    c.cohorts.remove(&TokenId::ALL[2]);
    assert!(matches!(c.validate(), Err(ConfigError::MissingCohort(t)) if t == TokenId::ALL[2]));

    let mut c = ExperimentConfig::default();
    c.cohorts.insert(TokenId::ALL[1], 0);
    assert!(matches!(c.validate(), Err(ConfigError::EmptyCohort(t)) if t == TokenId::ALL[1]));

    // Fixed counts no longer cover the resized cohort.
    let mut c = ExperimentConfig::default();
    c.cohorts.insert(TokenId::ALL[0], 31);
    assert!(matches!(c.validate(), Err(ConfigError::SplitCohortMismatch { token, .. }) if token == TokenId::ALL[0]));

    let mut c = ExperimentConfig::default();
    c.market.fundamental.drift_target = 0.2;
    assert!(matches!(c.validate(), Err(ConfigError::DriftOutsideVirtue { .. })));
    c.market.fundamental.allow_out_of_band = true;
    c.validate().unwrap();
}

#[test]
fn schema_lists_exactly_the_config_keys() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(shipped("schemas/experiment-config.schema.json")).unwrap())
            .unwrap();
    assert_eq!(schema["additionalProperties"], false);
    let in_schema: BTreeSet<&str> = schema["properties"].as_object().unwrap().keys().map(String::as_str).collect();
    let value: serde_json::Value = serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
    let in_config: BTreeSet<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(in_schema, in_config);
}
