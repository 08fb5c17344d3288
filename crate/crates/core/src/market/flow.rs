use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fundamental::FundamentalPath;
use super::order::{OrderTicket, ParticipantId, Price, Qty, Side};
use crate::rng::rng_from_seed;

/// Background traders are numbered from here upward.
pub const BACKGROUND_BASE: u32 = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    /// Mean background orders per step (Poisson).
    pub arrival_rate: f64,
    /// Probability a background order is a market order.
    pub market_fraction: f64,
    /// Mean distance in ticks of a limit price from the fundamental, on the
    /// passive side. Negative draws produce marketable limits.
    pub placement_mean: f64,
    /// Dispersion in ticks of the limit-price offset.
    pub placement_sd: f64,
    pub min_qty: Qty,
    pub max_qty: Qty,
    /// Size of the background trader pool.
    pub participants: u32,
    /// Levels per side placed before the first step.
    pub opening_levels: u32,
    pub opening_level_qty: Qty,
    /// Tick distance between opening levels.
    pub opening_spacing: Price,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            arrival_rate: 2.0,
            market_fraction: 0.2,
            placement_mean: 4.0,
            placement_sd: 8.0,
            min_qty: 20,
            max_qty: 120,
            participants: 50,
            opening_levels: 10,
            opening_level_qty: 200,
            opening_spacing: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("arrival rate must be finite and non-negative, got {0}")]
    BadArrivalRate(f64),
    #[error("market fraction must lie in [0, 1], got {0}")]
    BadMarketFraction(f64),
    #[error("placement dispersion must be finite and non-negative, got {0}")]
    BadPlacement(f64),
    #[error("quantity range [{0}, {1}] is empty or starts at zero")]
    BadQuantityRange(Qty, Qty),
    #[error("background pool must have at least one participant")]
    NoParticipants,
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !self.arrival_rate.is_finite() || self.arrival_rate < 0.0 {
            return Err(FlowError::BadArrivalRate(self.arrival_rate));
        }
        if !(0.0..=1.0).contains(&self.market_fraction) {
            return Err(FlowError::BadMarketFraction(self.market_fraction));
        }
        if !self.placement_mean.is_finite() {
            return Err(FlowError::BadPlacement(self.placement_mean));
        }
        if !self.placement_sd.is_finite() || self.placement_sd < 0.0 {
            return Err(FlowError::BadPlacement(self.placement_sd));
        }
        if self.min_qty == 0 || self.min_qty > self.max_qty {
            return Err(FlowError::BadQuantityRange(self.min_qty, self.max_qty));
        }
        if self.participants == 0 {
            return Err(FlowError::NoParticipants);
        }
        Ok(())
    }
}

/// A background order scheduled for a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowOrder {
    pub step: u32,
    pub ticket: OrderTicket,
}

fn snap_to_tick(price: f64, tick: Price) -> Price {
    let p = libm::round(price / tick as f64) as Price * tick;
    p.max(tick)
}

/// Symmetric resting ladder around the opening price.
pub fn opening_ladder(params: &FlowParams, open: Price, tick: Price) -> Vec<OrderTicket> {
    let mut out = Vec::with_capacity(2 * params.opening_levels as usize);
    for level in 1..=params.opening_levels as i64 {
        let offset = level * params.opening_spacing.max(1) * tick;
        let owner = |i: i64| ParticipantId(BACKGROUND_BASE + (i as u32 % params.participants.max(1)));
        out.push(OrderTicket::limit(owner(2 * level), Side::Buy, (open - offset).max(tick), params.opening_level_qty));
        out.push(OrderTicket::limit(owner(2 * level + 1), Side::Sell, open + offset, params.opening_level_qty));
    }
    out
}

/// Poisson background flow anchored to the contemporaneous fundamental.
///
/// Per step, the number of orders is Poisson(`arrival_rate`). Each order
/// picks a side uniformly, is a market order with probability
/// `market_fraction`, and otherwise posts a limit at the fundamental offset
/// by a normal draw toward its own side.
pub fn generate_background_flow(
    seed: u64,
    params: &FlowParams,
    fundamental: &FundamentalPath,
    tick: Price,
) -> Result<Vec<FlowOrder>, FlowError> {
    params.validate()?;
    let mut out = Vec::new();
    if params.arrival_rate == 0.0 {
        return Ok(out);
    }
    let poisson = Poisson::new(params.arrival_rate).map_err(|_| FlowError::BadArrivalRate(params.arrival_rate))?;
    let mut rng = rng_from_seed(seed);
    for step in 0..fundamental.values.len() {
        let n = poisson.sample(&mut rng) as u64;
        let anchor = fundamental.values[step] as f64;
        for _ in 0..n {
            let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
            let quantity = rng.random_range(params.min_qty..=params.max_qty);
            let owner = ParticipantId(BACKGROUND_BASE + rng.random_range(0..params.participants));
            let is_market = rng.random_bool(params.market_fraction);
            let z: f64 = StandardNormal.sample(&mut rng);
            let ticket = if is_market {
                OrderTicket::market(owner, side, quantity)
            } else {
                let offset = params.placement_mean + params.placement_sd * z;
                let price = match side {
                    Side::Buy => anchor - offset,
                    Side::Sell => anchor + offset,
                };
                OrderTicket::limit(owner, side, snap_to_tick(price, tick), quantity)
            };
            out.push(FlowOrder { step: step as u32, ticket });
        }
    }
    Ok(out)
}
