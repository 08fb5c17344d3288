use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::record::PerformanceRecord;
use crate::tokens::TokenId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub token: TokenId,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; `None` when `count < 2`.
    pub sd: Option<f64>,
}

/// Per-token empirical mean, sd and count of net profit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub tokens: Vec<TokenStats>,
}

impl CohortStats {
    pub fn get(&self, token: TokenId) -> Option<&TokenStats> {
        self.tokens.iter().find(|s| s.token == token)
    }

    pub fn total(&self) -> usize {
        self.tokens.iter().map(|s| s.count).sum()
    }

    /// True when no two tokens share the same mean.
    pub fn means_pairwise_distinct(&self) -> bool {
        self.tokens.iter().enumerate().all(|(i, a)| self.tokens[i + 1..].iter().all(|b| a.mean != b.mean))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no records to summarize")]
pub struct EmptyRecords;

pub fn cohort_stats(records: &[PerformanceRecord]) -> Result<CohortStats, EmptyRecords> {
    if records.is_empty() {
        return Err(EmptyRecords);
    }
    let mut groups: BTreeMap<TokenId, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.token_label).or_default().push(r.net_profit);
    }
    let tokens = groups
        .into_iter()
        .map(|(token, xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = (n > 1).then(|| {
                let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
                libm::sqrt(ss / (n - 1) as f64)
            });
            TokenStats { token, count: n, mean, sd }
        })
        .collect();
    Ok(CohortStats { tokens })
}

/// Kruskal-Wallis H statistic with the standard tie correction.
///
/// Returns `(H, degrees of freedom)`; `H` is 0 when every value is tied.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> (f64, usize) {
    let mut pooled: Vec<(f64, usize)> =
        groups.iter().enumerate().flat_map(|(g, xs)| xs.iter().map(move |&x| (x, g))).collect();
    let n = pooled.len();
    let k = groups.iter().filter(|g| !g.is_empty()).count();
    if n < 2 || k < 2 {
        return (0.0, k.saturating_sub(1));
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sums = alloc::vec![0.0; groups.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0;
        for p in &pooled[i..j] {
            rank_sums[p.1] += avg_rank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let nf = n as f64;
    let h: f64 =
        groups.iter().zip(&rank_sums).filter(|(g, _)| !g.is_empty()).map(|(g, r)| r * r / g.len() as f64).sum::<f64>()
            * 12.0
            / (nf * (nf + 1.0))
            - 3.0 * (nf + 1.0);
    let correction = 1.0 - tie_term / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return (0.0, k - 1);
    }
    (h / correction, k - 1)
}
