use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tokens::TokenId;

/// One subject's informational performance: net session profit under one
/// token condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub record_id: u64,
    pub subject_id: u64,
    pub token_label: TokenId,
    /// Currency units (ticks × shares).
    pub net_profit: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_features: BTreeMap<String, f64>,
}

impl PerformanceRecord {
    pub fn new(record_id: u64, subject_id: u64, token_label: TokenId, net_profit: f64, seed: u64) -> Self {
        PerformanceRecord { record_id, subject_id, token_label, net_profit, seed, extra_features: BTreeMap::new() }
    }

    /// Feature vector: net profit first, then extras in key order.
    pub fn features(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.extra_features.len());
        v.push(self.net_profit);
        v.extend(self.extra_features.values().copied());
        v
    }
}
