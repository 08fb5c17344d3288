//! A single-subject session driven one step at a time by an outside client.
//!
//! Client tickets are checked on arrival (state, validity, price band) and
//! queued; queued tickets enter the book at the next step boundary, ahead
//! of that step's background flow. That is the same ordering the engine
//! uses for a [`Controller`](crate::market::Controller), so a client that
//! sends an agent's tickets at the agent's steps ends with the agent's
//! profit.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::analytics::PerformanceRecord;
use crate::market::{
    mark_to_market, BookSnapshot, ConfigError, MarketConfig, OrderTicket, Price, RejectReason, SessionEngine,
    SessionResult, TicketOutcome, Trade, SUBJECT,
};
use crate::tokens::InformationToken;

/// Limit prices further than this fraction from the reference price are refused.
pub const PRICE_BAND: f64 = 0.20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiveState {
    Lobby,
    Running,
    Closed,
}

/// Result of one step boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiveStep {
    pub step: u32,
    /// `(ticket ref, order id)` for queued tickets that reached the book.
    pub accepted: Vec<(u64, u64)>,
    /// Queued tickets the engine refused.
    pub rejected: Vec<(u64, RejectReason)>,
    /// Trades this step involving the subject.
    pub fills: Vec<Trade>,
    pub finished: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LiveError {
    #[error("session has not started")]
    NotStarted,
    #[error("session is closed")]
    Closed,
    #[error("session clock is not exhausted ({step} of {steps} steps)")]
    NotFinished { step: u32, steps: u32 },
}

#[derive(Clone, Debug)]
pub struct LiveSession {
    token: InformationToken,
    subject_id: u64,
    seed: u64,
    state: LiveState,
    engine: SessionEngine,
    pending: Vec<(u64, OrderTicket)>,
    next_ref: u64,
    record: Option<PerformanceRecord>,
}

impl LiveSession {
    /// A session in the lobby. The token is fixed for its lifetime.
    pub fn new(
        token: InformationToken,
        config: &MarketConfig,
        seed: u64,
        subject_id: u64,
    ) -> Result<Self, ConfigError> {
        Ok(LiveSession {
            token,
            subject_id,
            seed,
            state: LiveState::Lobby,
            engine: SessionEngine::new(config, seed)?,
            pending: Vec::new(),
            next_ref: 0,
            record: None,
        })
    }

    pub fn token(&self) -> &InformationToken {
        &self.token
    }

    pub fn state(&self) -> LiveState {
        self.state
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn subject_id(&self) -> u64 {
        self.subject_id
    }

    pub fn step(&self) -> u32 {
        self.engine.step()
    }

    pub fn steps(&self) -> u32 {
        self.engine.config().steps
    }

    pub fn engine(&self) -> &SessionEngine {
        &self.engine
    }

    pub fn snapshot(&self) -> BookSnapshot {
        self.engine.snapshot()
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Lobby → running. A no-op once running.
    pub fn start(&mut self) -> Result<(), LiveError> {
        match self.state {
            LiveState::Lobby => {
                self.state = LiveState::Running;
                Ok(())
            }
            LiveState::Running => Ok(()),
            LiveState::Closed => Err(LiveError::Closed),
        }
    }

    /// Lowest and highest limit price currently allowed.
    pub fn price_band(&self) -> (Price, Price) {
        let r = self.engine.reference_price() as f64;
        (libm::ceil(r * (1.0 - PRICE_BAND)) as Price, libm::floor(r * (1.0 + PRICE_BAND)) as Price)
    }

    /// Checks a client ticket and queues it for the next step boundary.
    /// Returns the ticket's reference number.
    pub fn submit(&mut self, mut ticket: OrderTicket) -> Result<u64, RejectReason> {
        ticket.owner = SUBJECT;
        let verdict = match self.state {
            LiveState::Lobby => Err(RejectReason::NotStarted),
            LiveState::Closed => Err(RejectReason::Closed),
            LiveState::Running => ticket.validate().map_err(RejectReason::Invalid).and_then(|()| {
                let (lo, hi) = self.price_band();
                match ticket.price {
                    Some(p) if p < lo || p > hi => Err(RejectReason::PriceBand),
                    _ => Ok(()),
                }
            }),
        };
        match verdict {
            Ok(()) => {
                let r = self.next_ref;
                self.next_ref += 1;
                self.pending.push((r, ticket));
                Ok(r)
            }
            Err(reason) => {
                if self.state == LiveState::Running {
                    self.engine.reject(ticket, reason.clone());
                }
                Err(reason)
            }
        }
    }

    /// Runs one step with the queued tickets.
    pub fn advance(&mut self) -> Result<LiveStep, LiveError> {
        match self.state {
            LiveState::Lobby => return Err(LiveError::NotStarted),
            LiveState::Closed => return Err(LiveError::Closed),
            LiveState::Running => {}
        }
        let queued = core::mem::take(&mut self.pending);
        let tickets: Vec<OrderTicket> = queued.iter().map(|(_, t)| *t).collect();
        let report = self.engine.advance(&tickets);
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        for ((r, _), outcome) in queued.iter().zip(report.outcomes) {
            match outcome {
                TicketOutcome::Accepted { order_id, .. } => accepted.push((*r, order_id)),
                TicketOutcome::Rejected(reason) => rejected.push((*r, reason)),
            }
        }
        let finished = self.engine.is_finished();
        if finished {
            self.state = LiveState::Closed;
        }
        Ok(LiveStep { step: report.step, accepted, rejected, fills: report.subject_fills, finished })
    }

    /// Marks the subject to the closing price. Repeated calls return the
    /// same record.
    pub fn finalize(&mut self) -> Result<PerformanceRecord, LiveError> {
        if let Some(r) = &self.record {
            return Ok(r.clone());
        }
        if !self.engine.is_finished() {
            return Err(LiveError::NotFinished { step: self.engine.step(), steps: self.steps() });
        }
        self.state = LiveState::Closed;
        let profit = mark_to_market(&self.engine.subject_account(), self.engine.closing_price());
        let record = PerformanceRecord::new(self.subject_id, self.subject_id, self.token.id, profit as f64, self.seed);
        self.record = Some(record.clone());
        Ok(record)
    }

    pub fn is_finalized(&self) -> bool {
        self.record.is_some()
    }

    /// The full session log. Only meaningful once the clock is exhausted.
    pub fn result(&self) -> SessionResult {
        self.engine.clone().finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{derive_behavior, AgentController, BehaviorMapping};
    use crate::market::{run_session, OrderKind, ParticipantId, ScriptedFeed, Side};
    use crate::rng::rng_from_seed;
    use crate::tokens::{build_token_set, default_templates, InformationVirtue};

    fn token(i: usize) -> InformationToken {
        build_token_set(&InformationVirtue::default(), &default_templates()).unwrap().swap_remove(i)
    }

    fn config() -> MarketConfig {
        MarketConfig { steps: 60, ..MarketConfig::default() }
    }

    fn run_to_end(s: &mut LiveSession) {
        while s.state() == LiveState::Running {
            s.advance().unwrap();
        }
    }

    #[test]
    fn no_orders_means_zero_profit() {
        let mut s = LiveSession::new(token(6), &config(), 11, 1).unwrap();
        assert_eq!(s.token().artifact_text, "");
        s.start().unwrap();
        run_to_end(&mut s);
        assert_eq!(s.finalize().unwrap().net_profit, 0.0);
    }

    #[test]
    fn lifecycle_rejections() {
        let mut s = LiveSession::new(token(0), &config(), 3, 1).unwrap();
        let buy = OrderTicket::market(ParticipantId(99), Side::Buy, 10);
        assert_eq!(s.submit(buy), Err(RejectReason::NotStarted));
        assert_eq!(s.advance(), Err(LiveError::NotStarted));
        s.start().unwrap();
        assert!(matches!(s.submit(OrderTicket { quantity: 0, ..buy }), Err(RejectReason::Invalid(_))));
        let (lo, hi) = s.price_band();
        assert_eq!((lo, hi), (8000, 12000));
        assert_eq!(s.submit(OrderTicket::limit(SUBJECT, Side::Buy, hi + 1, 5)), Err(RejectReason::PriceBand));
        assert_eq!(s.submit(OrderTicket::limit(SUBJECT, Side::Sell, lo - 1, 5)), Err(RejectReason::PriceBand));
        assert_eq!(s.submit(OrderTicket::limit(SUBJECT, Side::Buy, hi, 5)), Ok(0));
        assert_eq!(s.finalize(), Err(LiveError::NotFinished { step: 0, steps: 60 }));
        run_to_end(&mut s);
        assert_eq!(s.submit(buy), Err(RejectReason::Closed));
        assert_eq!(s.advance(), Err(LiveError::Closed));
    }

    #[test]
    fn market_buy_is_accepted_then_filled() {
        let mut s = LiveSession::new(token(0), &config(), 5, 1).unwrap();
        s.start().unwrap();
        let r = s.submit(OrderTicket::market(SUBJECT, Side::Buy, 30)).unwrap();
        let step = s.advance().unwrap();
        assert_eq!(step.accepted.len(), 1);
        assert_eq!(step.accepted[0].0, r);
        assert_eq!(step.fills.iter().map(|t| t.quantity).sum::<u64>(), 30);
        assert!(step.fills.iter().all(|t| t.buyer == SUBJECT));
    }

    #[test]
    fn position_limit_rejects_at_boundary() {
        let cfg = MarketConfig { position_limit: Some(10), ..config() };
        let mut s = LiveSession::new(token(0), &cfg, 5, 1).unwrap();
        s.start().unwrap();
        s.submit(OrderTicket::market(SUBJECT, Side::Buy, 30)).unwrap();
        let step = s.advance().unwrap();
        assert_eq!(step.rejected, alloc::vec![(0, RejectReason::PositionLimit)]);
    }

    #[test]
    fn finalize_is_idempotent() {
        let mut s = LiveSession::new(token(1), &config(), 8, 42).unwrap();
        s.start().unwrap();
        s.submit(OrderTicket::market(SUBJECT, Side::Buy, 25)).unwrap();
        run_to_end(&mut s);
        let a = s.finalize().unwrap();
        assert_eq!(a, s.finalize().unwrap());
        assert_eq!(a.subject_id, 42);
        assert!(s.is_finalized());
    }

    #[test]
    fn replaying_an_agent_reproduces_its_profit() {
        let cfg = config();
        let t = token(0);
        for seed in 0..5 {
            let profile = derive_behavior(&t, &BehaviorMapping::default(), &mut rng_from_seed(seed));
            let mut agent = AgentController::new(profile, seed + 100);
            let sim = run_session(&cfg, &mut agent, seed).unwrap();
            let schedule = sim.subject_schedule();
            assert!(!schedule.is_empty());

            let mut live = LiveSession::new(t.clone(), &cfg, seed, 1).unwrap();
            live.start().unwrap();
            let mut cursor = 0;
            while live.state() == LiveState::Running {
                while cursor < schedule.len() && schedule[cursor].0 == live.step() {
                    live.submit(schedule[cursor].1).unwrap();
                    cursor += 1;
                }
                live.advance().unwrap();
            }
            let rec = live.finalize().unwrap();
            assert_eq!(rec.net_profit, sim.net_profit as f64);
            assert_eq!(live.result().trades, sim.trades);

            let fed = run_session(&cfg, &mut ScriptedFeed::new(schedule.clone()), seed).unwrap();
            assert_eq!(fed.net_profit, sim.net_profit);
        }
    }

    #[test]
    fn limit_orders_rest_and_snapshots_stay_uncrossed() {
        let mut s = LiveSession::new(token(2), &config(), 21, 1).unwrap();
        s.start().unwrap();
        let (lo, _) = s.price_band();
        s.submit(OrderTicket::limit(SUBJECT, Side::Buy, lo, 10)).unwrap();
        while s.state() == LiveState::Running {
            s.advance().unwrap();
            assert!(!s.snapshot().is_crossed());
        }
        let r = s.result();
        assert!(r.subject_schedule().iter().any(|(_, t)| t.kind == OrderKind::Limit));
    }
}
