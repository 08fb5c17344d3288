use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::order::Price;
use crate::rng::rng_from_seed;

/// Bounds on the session drift: the virtue promises a 2-5% rise.
pub const DRIFT_MIN: f64 = 0.02;
pub const DRIFT_MAX: f64 = 0.05;
/// Allowed gap between realized terminal return and the drift target.
pub const DRIFT_TOLERANCE: f64 = 0.005;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FundamentalParams {
    /// Opening fundamental in ticks.
    pub start_price: Price,
    /// Terminal return the path is pinned to.
    pub drift_target: f64,
    /// Standard deviation of per-step log increments before bridging.
    pub volatility: f64,
    /// Permits drift targets outside the virtue band for what-if runs.
    pub allow_out_of_band: bool,
}

impl Default for FundamentalParams {
    fn default() -> Self {
        FundamentalParams { start_price: 10_000, drift_target: 0.035, volatility: 0.0001, allow_out_of_band: false }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FundamentalError {
    #[error("drift target {0} outside [0.02, 0.05]")]
    DriftOutOfBand(f64),
    #[error("a fundamental path needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("start price must be positive, got {0}")]
    NonPositiveStart(Price),
    #[error("volatility must be finite and non-negative, got {0}")]
    BadVolatility(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalPath {
    pub values: Vec<Price>,
    pub drift_target: f64,
}

impl FundamentalPath {
    pub fn at(&self, step: usize) -> Price {
        self.values[step.min(self.values.len() - 1)]
    }

    pub fn terminal_return(&self) -> f64 {
        let first = self.values[0] as f64;
        let last = *self.values.last().expect("nonempty path") as f64;
        last / first - 1.0
    }
}

/// Generates a positive fundamental path whose terminal return equals the
/// drift target up to tick rounding.
///
/// The path is a Gaussian random walk in log space turned into a bridge:
/// the walk's terminal displacement is removed linearly so both endpoints
/// are pinned, then the log drift `ln(1 + drift_target)` is added along the
/// session. With zero volatility the path is deterministic and monotone.
pub fn generate_fundamental(
    seed: u64,
    steps: usize,
    params: &FundamentalParams,
) -> Result<FundamentalPath, FundamentalError> {
    let drift = params.drift_target;
    if !drift.is_finite() || (!params.allow_out_of_band && !(DRIFT_MIN..=DRIFT_MAX).contains(&drift)) {
        return Err(FundamentalError::DriftOutOfBand(drift));
    }
    if steps < 2 {
        return Err(FundamentalError::TooFewSteps(steps));
    }
    if params.start_price <= 0 {
        return Err(FundamentalError::NonPositiveStart(params.start_price));
    }
    if !params.volatility.is_finite() || params.volatility < 0.0 {
        return Err(FundamentalError::BadVolatility(params.volatility));
    }

    let mut rng = rng_from_seed(seed);
    let mut walk = Vec::with_capacity(steps);
    walk.push(0.0);
    let mut w = 0.0;
    for _ in 1..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        w += params.volatility * z;
        walk.push(w);
    }
    let span = (steps - 1) as f64;
    let terminal = walk[steps - 1];
    let log_start = libm::log(params.start_price as f64);
    let log_drift = libm::log1p(drift);

    let values = walk
        .iter()
        .enumerate()
        .map(|(t, w)| {
            let frac = t as f64 / span;
            let bridge = w - frac * terminal;
            let p = libm::exp(log_start + frac * log_drift + bridge);
            (libm::round(p) as Price).max(1)
        })
        .collect();
    Ok(FundamentalPath { values, drift_target: drift })
}
