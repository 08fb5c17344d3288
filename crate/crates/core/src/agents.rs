//! Token-conditioned synthetic subjects.
//!
//! A [`BehaviorMapping`] turns a token's encoding into a [`BehaviorProfile`]:
//! a conviction score built from determinism, stated probability and
//! specificity sets trading intensity, direction confidence and size, and the
//! number of items in the artifact delays the first action. The control token
//! has its own row. Every subject then gets a small jitter from its own
//! sub-seed and trades one session with market orders.
//!
//! The `separation` dial blends each token's row with a shared base profile:
//! at 1 the table is used as is, at 0 every token behaves like the base.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytics::PerformanceRecord;
use crate::market::{
    run_session, ConfigError, Controller, MarketConfig, MarketView, OrderTicket, SessionResult, Side, SUBJECT,
};
use crate::rng::{derive_seed, rng_from_seed, SimRng, Stream};
use crate::tokens::{InformationToken, InformationVirtue, TokenId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorProfile {
    /// Per-step probability of acting, also scales order size. In [0, 1].
    pub intensity: f64,
    /// Steps to wait before the first order.
    pub reaction_delay: u32,
    /// Shares per action at full intensity.
    pub size_factor: f64,
    /// Log-normal dispersion of order sizes.
    pub noise_sd: f64,
    /// Buy bias in [-1, 1]; a buy happens with probability (1 + c) / 2.
    pub direction_confidence: f64,
}

impl BehaviorProfile {
    pub const IDLE: BehaviorProfile = BehaviorProfile {
        intensity: 0.0,
        reaction_delay: 0,
        size_factor: 0.0,
        noise_sd: 0.0,
        direction_confidence: 0.0,
    };

    /// Clamps every field into its domain; `reaction_delay` stays below `steps`.
    pub fn clamped(self, steps: u32) -> BehaviorProfile {
        BehaviorProfile {
            intensity: unit(self.intensity),
            reaction_delay: self.reaction_delay.min(steps.saturating_sub(1)),
            size_factor: self.size_factor.max(0.0),
            noise_sd: self.noise_sd.max(0.0),
            direction_confidence: self.direction_confidence.clamp(-1.0, 1.0),
        }
    }
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Exact at both ends: `lerp(a, b, 0) == a`, `lerp(a, b, 1) == b`.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreWeights {
    pub determinism: f64,
    pub stated_probability: f64,
    pub specificity: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights { determinism: 1.0, stated_probability: 1.0, specificity: 1.0 }
    }
}

/// Standard deviations of the per-subject perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Jitter {
    pub intensity: f64,
    pub direction_confidence: f64,
    /// Relative (log-scale) jitter of `size_factor`.
    pub size: f64,
    /// In steps.
    pub reaction_delay: f64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter { intensity: 0.0, direction_confidence: 0.0, size: 0.0, reaction_delay: 0.0 };
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter { intensity: 0.01, direction_confidence: 0.01, size: 0.02, reaction_delay: 1.0 }
    }
}

/// The encoding → profile table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorMapping {
    /// 1 uses the table, 0 maps every token to `base`.
    pub separation: f64,
    pub weights: ScoreWeights,
    pub intensity_min: f64,
    pub intensity_max: f64,
    pub confidence_min: f64,
    pub confidence_max: f64,
    pub size_min: f64,
    pub size_max: f64,
    pub delay_min: u32,
    /// Extra delay for every artifact item beyond the first.
    pub delay_per_item: f64,
    pub noise_sd: f64,
    /// Row used for the control token.
    pub control: BehaviorProfile,
    /// Profile every token collapses to at separation 0.
    pub base: BehaviorProfile,
    pub jitter: Jitter,
}

impl Default for BehaviorMapping {
    fn default() -> Self {
        BehaviorMapping {
            separation: 1.0,
            weights: ScoreWeights::default(),
            intensity_min: 0.1,
            intensity_max: 0.9,
            confidence_min: 0.6,
            confidence_max: 1.0,
            size_min: 4.0,
            size_max: 12.0,
            delay_min: 0,
            delay_per_item: 16.0,
            noise_sd: 0.1,
            control: BehaviorProfile {
                intensity: 0.1,
                reaction_delay: 0,
                size_factor: 8.0,
                noise_sd: 0.1,
                direction_confidence: 0.0,
            },
            base: BehaviorProfile {
                intensity: 0.5,
                reaction_delay: 30,
                size_factor: 8.0,
                noise_sd: 0.1,
                direction_confidence: 0.5,
            },
            jitter: Jitter::default(),
        }
    }
}

impl BehaviorMapping {
    /// Conviction score in [0, 1] from the weighted encoding.
    pub fn score(&self, token: &InformationToken) -> f64 {
        let w = &self.weights;
        let e = &token.encoding;
        let total = w.determinism + w.stated_probability + w.specificity;
        if total <= 0.0 {
            return 0.0;
        }
        unit(
            (w.determinism * e.determinism
                + w.stated_probability * e.stated_probability
                + w.specificity * e.specificity)
                / total,
        )
    }

    /// The table row for `token` before blending and jitter.
    pub fn table_profile(&self, token: &InformationToken) -> BehaviorProfile {
        if token.id.is_control() {
            return self.control;
        }
        let s = self.score(token);
        let extra_items = (token.encoding.item_count - 1.0).max(0.0);
        BehaviorProfile {
            intensity: lerp(self.intensity_min, self.intensity_max, s),
            reaction_delay: self.delay_min + libm::round(self.delay_per_item * extra_items) as u32,
            size_factor: lerp(self.size_min, self.size_max, s),
            noise_sd: self.noise_sd,
            direction_confidence: lerp(self.confidence_min, self.confidence_max, s),
        }
    }

    /// `base + separation * (table - base)`, before jitter.
    pub fn blended_profile(&self, token: &InformationToken) -> BehaviorProfile {
        let t = self.table_profile(token);
        let b = self.base;
        let s = self.separation;
        BehaviorProfile {
            intensity: lerp(b.intensity, t.intensity, s),
            reaction_delay: libm::round(lerp(b.reaction_delay as f64, t.reaction_delay as f64, s)).max(0.0) as u32,
            size_factor: lerp(b.size_factor, t.size_factor, s),
            noise_sd: lerp(b.noise_sd, t.noise_sd, s),
            direction_confidence: lerp(b.direction_confidence, t.direction_confidence, s),
        }
    }
}

/// Profile of one subject holding `token`, with jitter drawn from `rng`.
pub fn derive_behavior(token: &InformationToken, mapping: &BehaviorMapping, rng: &mut SimRng) -> BehaviorProfile {
    let p = mapping.blended_profile(token);
    let j = &mapping.jitter;
    let mut z = || -> f64 { rng.sample(StandardNormal) };
    let (zi, zc, zs, zd) = (z(), z(), z(), z());
    let delay = p.reaction_delay as f64 + j.reaction_delay * zd;
    BehaviorProfile {
        intensity: unit(p.intensity + j.intensity * zi),
        reaction_delay: libm::round(delay).max(0.0) as u32,
        size_factor: p.size_factor * libm::exp(j.size * zs),
        noise_sd: p.noise_sd,
        direction_confidence: (p.direction_confidence + j.direction_confidence * zc).clamp(-1.0, 1.0),
    }
}

/// One decision: at most one market order for `step`.
pub fn agent_step(
    view: &MarketView<'_>,
    profile: &BehaviorProfile,
    step: u32,
    rng: &mut SimRng,
) -> Option<OrderTicket> {
    if profile.intensity <= 0.0 || step < profile.reaction_delay {
        return None;
    }
    let act: f64 = rng.random();
    let side_draw: f64 = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    if act >= profile.intensity {
        return None;
    }
    let side = if side_draw < (1.0 + profile.direction_confidence) / 2.0 { Side::Buy } else { Side::Sell };
    let size = libm::round(profile.size_factor * profile.intensity * libm::exp(profile.noise_sd * z));
    let qty = if size.is_finite() && size >= 1.0 { size as u64 } else { 1 };
    Some(OrderTicket::market(view.account.owner, side, qty))
}

/// A subject driven by a fixed profile.
#[derive(Clone, Debug)]
pub struct AgentController {
    pub profile: BehaviorProfile,
    rng: SimRng,
}

impl AgentController {
    pub fn new(profile: BehaviorProfile, seed: u64) -> Self {
        AgentController { profile, rng: rng_from_seed(seed) }
    }
}

impl Controller for AgentController {
    fn decide(&mut self, view: &MarketView<'_>, out: &mut Vec<OrderTicket>) {
        debug_assert_eq!(view.account.owner, SUBJECT);
        out.extend(agent_step(view, &self.profile, view.step, &mut self.rng));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub token_id: TokenId,
    pub n_subjects: u32,
    pub seed_base: u64,
    /// Id of the first subject; subjects are numbered consecutively.
    #[serde(default)]
    pub first_subject_id: u64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CohortError {
    #[error("cohort for {0} has no subjects")]
    EmptyCohort(TokenId),
    #[error("cohort is for {spec} but was given token {token}")]
    TokenMismatch { spec: TokenId, token: TokenId },
    #[error("fundamental drift {drift} lies outside the virtue band [{low}, {high}]")]
    DriftOutsideVirtue { drift: f64, low: f64, high: f64 },
    #[error(transparent)]
    Market(#[from] ConfigError),
}

/// Everything one subject's session is derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubjectSeeds {
    pub behavior: u64,
    pub controller: u64,
    pub session: u64,
}

impl SubjectSeeds {
    pub fn new(seed_base: u64, index: u64) -> Self {
        let subject = derive_seed(seed_base, Stream::Subject, index);
        SubjectSeeds {
            behavior: derive_seed(subject, Stream::Behavior, 0),
            controller: derive_seed(subject, Stream::Controller, 0),
            session: derive_seed(subject, Stream::Session, 0),
        }
    }
}

fn check_cohort(
    spec: &CohortSpec,
    token: &InformationToken,
    virtue: &InformationVirtue,
    config: &MarketConfig,
) -> Result<(), CohortError> {
    if spec.n_subjects == 0 {
        return Err(CohortError::EmptyCohort(spec.token_id));
    }
    if spec.token_id != token.id {
        return Err(CohortError::TokenMismatch { spec: spec.token_id, token: token.id });
    }
    let drift = config.fundamental.drift_target;
    if !token.id.is_control() && !config.fundamental.allow_out_of_band && !virtue.contains(drift) {
        return Err(CohortError::DriftOutsideVirtue { drift, low: virtue.magnitude_low, high: virtue.magnitude_high });
    }
    config.validate()?;
    Ok(())
}

/// Runs subject `index` of a cohort. Subjects are independent, so callers
/// may run them in any order or in parallel.
pub fn run_subject(
    spec: &CohortSpec,
    index: u32,
    token: &InformationToken,
    mapping: &BehaviorMapping,
    config: &MarketConfig,
) -> Result<PerformanceRecord, CohortError> {
    run_subject_session(spec, index, token, mapping, config).map(|(record, _)| record)
}

/// [`run_subject`] that also hands back the full session log.
pub fn run_subject_session(
    spec: &CohortSpec,
    index: u32,
    token: &InformationToken,
    mapping: &BehaviorMapping,
    config: &MarketConfig,
) -> Result<(PerformanceRecord, SessionResult), CohortError> {
    let seeds = SubjectSeeds::new(spec.seed_base, index as u64);
    let profile = derive_behavior(token, mapping, &mut rng_from_seed(seeds.behavior)).clamped(config.steps);
    let mut agent = AgentController::new(profile, seeds.controller);
    let result = run_session(config, &mut agent, seeds.session)?;
    let id = spec.first_subject_id + index as u64;
    Ok((PerformanceRecord::new(id, id, token.id, result.net_profit as f64, seeds.session), result))
}

/// Runs one independent session per subject and returns their records in
/// subject order.
pub fn run_cohort(
    spec: &CohortSpec,
    token: &InformationToken,
    virtue: &InformationVirtue,
    mapping: &BehaviorMapping,
    config: &MarketConfig,
) -> Result<Vec<PerformanceRecord>, CohortError> {
    check_cohort(spec, token, virtue, config)?;
    (0..spec.n_subjects).map(|i| run_subject(spec, i, token, mapping, config)).collect()
}

/// Validates a cohort without running it.
pub fn validate_cohort(
    spec: &CohortSpec,
    token: &InformationToken,
    virtue: &InformationVirtue,
    config: &MarketConfig,
) -> Result<(), CohortError> {
    check_cohort(spec, token, virtue, config)
}
