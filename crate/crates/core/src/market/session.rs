use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::account::{mark_to_market, Ledger, ParticipantAccount};
use super::book::{BookSnapshot, Execution, OrderBook};
use super::flow::{generate_background_flow, opening_ladder, FlowError, FlowOrder, FlowParams};
use super::fundamental::{generate_fundamental, FundamentalError, FundamentalParams, FundamentalPath};
use super::order::{Money, Order, OrderError, OrderTicket, ParticipantId, Price, Trade};
use crate::rng::{derive_seed, Stream};

/// The one externally controlled participant of every session.
pub const SUBJECT: ParticipantId = ParticipantId(1);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    /// Session length in steps (one "minute" each).
    pub steps: u32,
    /// Price grid in ticks.
    pub tick_size: Price,
    pub fundamental: FundamentalParams,
    pub flow: FlowParams,
    pub subject_cash: Money,
    pub subject_inventory: i64,
    /// Caps the subject's absolute inventory. `None` allows any signed position.
    pub position_limit: Option<u64>,
    /// Closing price is the VWAP of trades in this many final steps
    /// (0 = last trade).
    pub closing_window: u32,
    /// Depth levels per side in book snapshots.
    pub snapshot_levels: usize,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            steps: 390,
            tick_size: 1,
            fundamental: FundamentalParams::default(),
            flow: FlowParams::default(),
            subject_cash: 100_000_000,
            subject_inventory: 0,
            position_limit: None,
            closing_window: 30,
            snapshot_levels: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Fundamental(#[from] FundamentalError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("tick size must be positive, got {0}")]
    TickSize(Price),
}

impl MarketConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tick_size <= 0 {
            return Err(ConfigError::TickSize(self.tick_size));
        }
        self.flow.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    Invalid(OrderError),
    PositionLimit,
    PriceBand,
    Closed,
    NotStarted,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Invalid(e) => write!(f, "invalid: {e}"),
            RejectReason::PositionLimit => f.write_str("position-limit"),
            RejectReason::PriceBand => f.write_str("price-band"),
            RejectReason::Closed => f.write_str("closed"),
            RejectReason::NotStarted => f.write_str("not-started"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub step: u32,
    pub ticket: OrderTicket,
    pub reason: RejectReason,
}

/// An order exactly as it reached the book.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedOrder {
    pub step: u32,
    pub order: Order,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TicketOutcome {
    Accepted { order_id: u64, execution: Execution },
    Rejected(RejectReason),
}

/// What happened in one step, from the subject's point of view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub step: u32,
    /// One outcome per submitted subject ticket, in submission order.
    pub outcomes: Vec<TicketOutcome>,
    /// Trades in this step in which the subject took part.
    pub subject_fills: Vec<Trade>,
}

/// Read-only state handed to a controller at a step boundary.
#[derive(Clone, Copy, Debug)]
pub struct MarketView<'a> {
    pub step: u32,
    pub steps: u32,
    pub book: &'a OrderBook,
    pub account: &'a ParticipantAccount,
}

/// A decision source for the subject: a policy or an external order feed.
pub trait Controller {
    /// Pushes the subject's orders for `view.step` onto `out`.
    fn decide(&mut self, view: &MarketView<'_>, out: &mut Vec<OrderTicket>);
}

/// Never trades.
#[derive(Clone, Copy, Debug, Default)]
pub struct Idle;

impl Controller for Idle {
    fn decide(&mut self, _view: &MarketView<'_>, _out: &mut Vec<OrderTicket>) {}
}

/// Replays a fixed schedule of `(step, ticket)` pairs.
#[derive(Clone, Debug, Default)]
pub struct ScriptedFeed {
    schedule: Vec<(u32, OrderTicket)>,
    cursor: usize,
}

impl ScriptedFeed {
    /// `schedule` must be sorted by step; ties keep their given order.
    pub fn new(mut schedule: Vec<(u32, OrderTicket)>) -> Self {
        schedule.sort_by_key(|(s, _)| *s);
        ScriptedFeed { schedule, cursor: 0 }
    }
}

impl Controller for ScriptedFeed {
    fn decide(&mut self, view: &MarketView<'_>, out: &mut Vec<OrderTicket>) {
        while let Some((step, ticket)) = self.schedule.get(self.cursor) {
            if *step > view.step {
                break;
            }
            if *step == view.step {
                out.push(*ticket);
            }
            self.cursor += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionResult {
    pub seed: u64,
    pub subject: ParticipantId,
    pub fundamental: FundamentalPath,
    pub orders: Vec<LoggedOrder>,
    pub trades: Vec<Trade>,
    pub initial_accounts: Vec<ParticipantAccount>,
    pub accounts: Vec<ParticipantAccount>,
    pub rejections: Vec<Rejection>,
    pub closing_price: Price,
    pub net_profit: Money,
    /// Subject tickets that reached the book.
    pub subject_orders: usize,
}

impl SessionResult {
    pub fn subject_account(&self) -> ParticipantAccount {
        self.accounts.iter().find(|a| a.owner == self.subject).copied().expect("subject account present")
    }

    /// Subject tickets in submission order, tagged with their step.
    pub fn subject_schedule(&self) -> Vec<(u32, OrderTicket)> {
        self.orders.iter().filter(|o| o.order.owner == self.subject).map(|o| (o.step, o.order.ticket())).collect()
    }
}

/// Sequential event loop for one session.
///
/// Step `t` first submits the subject's tickets (decided on the state at
/// the end of step `t - 1`), then the background flow scheduled for `t`.
/// The opening ladder is placed before step 0.
#[derive(Clone, Debug)]
pub struct SessionEngine {
    config: MarketConfig,
    seed: u64,
    book: OrderBook,
    ledger: Ledger,
    initial_accounts: Vec<ParticipantAccount>,
    fundamental: FundamentalPath,
    flow: Vec<FlowOrder>,
    flow_cursor: usize,
    step: u32,
    next_order_id: u64,
    orders: Vec<LoggedOrder>,
    trades: Vec<Trade>,
    rejections: Vec<Rejection>,
    subject_orders: usize,
}

impl SessionEngine {
    pub fn new(config: &MarketConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let fundamental = generate_fundamental(
            derive_seed(seed, Stream::Fundamental, 0),
            config.steps as usize,
            &config.fundamental,
        )?;
        let flow = generate_background_flow(
            derive_seed(seed, Stream::BackgroundFlow, 0),
            &config.flow,
            &fundamental,
            config.tick_size,
        )?;
        let mut ledger = Ledger::new();
        ledger.open(SUBJECT, config.subject_cash, config.subject_inventory);
        let mut engine = SessionEngine {
            config: config.clone(),
            seed,
            book: OrderBook::new(),
            initial_accounts: Vec::new(),
            ledger,
            fundamental,
            flow,
            flow_cursor: 0,
            step: 0,
            next_order_id: 1,
            orders: Vec::new(),
            trades: Vec::new(),
            rejections: Vec::new(),
            subject_orders: 0,
        };
        let open = engine.fundamental.values[0];
        for ticket in opening_ladder(&config.flow, open, config.tick_size) {
            engine.ledger_touch(ticket.owner);
            engine.place(ticket, 0).expect("opening ladder is valid");
        }
        engine.initial_accounts = engine.ledger.accounts();
        Ok(engine)
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.steps
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn fundamental(&self) -> &FundamentalPath {
        &self.fundamental
    }

    pub fn subject_account(&self) -> ParticipantAccount {
        self.ledger.account(SUBJECT)
    }

    pub fn snapshot(&self) -> BookSnapshot {
        self.book.snapshot(self.config.snapshot_levels)
    }

    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    /// Reference price for sanity bands: last trade, else the opening
    /// fundamental.
    pub fn reference_price(&self) -> Price {
        self.book.last_trade().unwrap_or(self.fundamental.values[0])
    }

    pub fn view(&self) -> MarketView<'_> {
        MarketView {
            step: self.step,
            steps: self.config.steps,
            book: &self.book,
            account: self.ledger.get(SUBJECT).expect("subject account"),
        }
    }

    fn ledger_touch(&mut self, owner: ParticipantId) {
        if self.ledger.get(owner).is_none() {
            self.ledger.open(owner, 0, 0);
        }
    }

    fn place(&mut self, ticket: OrderTicket, step: u32) -> Result<(u64, Execution), OrderError> {
        ticket.validate()?;
        if let Some(p) = ticket.price {
            if p % self.config.tick_size != 0 {
                return Err(OrderError::OffTick { price: p, tick: self.config.tick_size });
            }
        }
        let order_id = self.next_order_id;
        let order = ticket.stamp(order_id, self.book.next_seq());
        let exec = self.book.submit(order, step)?;
        self.next_order_id += 1;
        self.orders.push(LoggedOrder { step, order });
        for t in &exec.fills {
            self.ledger.apply(t);
        }
        self.trades.extend_from_slice(&exec.fills);
        Ok((order_id, exec))
    }

    fn check_subject(&self, ticket: &OrderTicket) -> Result<(), RejectReason> {
        ticket.validate().map_err(RejectReason::Invalid)?;
        if let Some(limit) = self.config.position_limit {
            let inv = self.ledger.account(SUBJECT).inventory;
            let projected = inv + ticket.side.sign() * ticket.quantity as i64;
            if projected.unsigned_abs() > limit {
                return Err(RejectReason::PositionLimit);
            }
        }
        Ok(())
    }

    /// Records a rejection decided outside the engine (e.g. a price band).
    pub fn reject(&mut self, ticket: OrderTicket, reason: RejectReason) {
        self.rejections.push(Rejection { step: self.step, ticket, reason });
    }

    /// Runs one step with the given subject tickets.
    ///
    /// # Panics
    ///
    /// If the session has already finished.
    pub fn advance(&mut self, subject_tickets: &[OrderTicket]) -> StepReport {
        assert!(!self.is_finished(), "session already finished");
        let step = self.step;
        let first_trade = self.trades.len();
        let mut outcomes = Vec::with_capacity(subject_tickets.len());
        for ticket in subject_tickets {
            let mut ticket = *ticket;
            ticket.owner = SUBJECT;
            let outcome = match self.check_subject(&ticket) {
                Ok(()) => match self.place(ticket, step) {
                    Ok((order_id, execution)) => {
                        self.subject_orders += 1;
                        TicketOutcome::Accepted { order_id, execution }
                    }
                    Err(e) => TicketOutcome::Rejected(RejectReason::Invalid(e)),
                },
                Err(reason) => TicketOutcome::Rejected(reason),
            };
            if let TicketOutcome::Rejected(reason) = &outcome {
                self.rejections.push(Rejection { step, ticket, reason: reason.clone() });
            }
            outcomes.push(outcome);
        }
        while let Some(fo) = self.flow.get(self.flow_cursor) {
            if fo.step != step {
                break;
            }
            let ticket = fo.ticket;
            self.flow_cursor += 1;
            self.ledger_touch(ticket.owner);
            self.place(ticket, step).expect("background flow is valid");
        }
        let subject_fills =
            self.trades[first_trade..].iter().filter(|t| t.buyer == SUBJECT || t.seller == SUBJECT).copied().collect();
        self.step += 1;
        StepReport { step, outcomes, subject_fills }
    }

    /// VWAP over the closing window, falling back to the last trade and
    /// then to the terminal fundamental.
    pub fn closing_price(&self) -> Price {
        let from = self.config.steps.saturating_sub(self.config.closing_window);
        let (mut notional, mut volume) = (0i128, 0i128);
        if self.config.closing_window > 0 {
            for t in self.trades.iter().rev().take_while(|t| t.step >= from) {
                notional += t.notional() as i128;
                volume += t.quantity as i128;
            }
        }
        if volume > 0 {
            ((2 * notional + volume) / (2 * volume)) as Price
        } else {
            self.book.last_trade().unwrap_or(*self.fundamental.values.last().expect("nonempty path"))
        }
    }

    pub fn finish(self) -> SessionResult {
        let closing_price = self.closing_price();
        let subject = self.ledger.account(SUBJECT);
        SessionResult {
            seed: self.seed,
            subject: SUBJECT,
            net_profit: mark_to_market(&subject, closing_price),
            closing_price,
            fundamental: self.fundamental,
            orders: self.orders,
            trades: self.trades,
            initial_accounts: self.initial_accounts,
            accounts: self.ledger.accounts(),
            rejections: self.rejections,
            subject_orders: self.subject_orders,
        }
    }
}

/// Runs a complete session with `controller` driving the subject.
pub fn run_session(
    config: &MarketConfig,
    controller: &mut dyn Controller,
    seed: u64,
) -> Result<SessionResult, ConfigError> {
    let mut engine = SessionEngine::new(config, seed)?;
    let mut tickets = Vec::new();
    while !engine.is_finished() {
        tickets.clear();
        controller.decide(&engine.view(), &mut tickets);
        engine.advance(&tickets);
    }
    Ok(engine.finish())
}

/// Feeds a logged order stream through a fresh book and ledger.
pub fn replay_orders(
    initial: &[ParticipantAccount],
    orders: &[LoggedOrder],
) -> Result<(Vec<Trade>, Vec<ParticipantAccount>), OrderError> {
    let mut book = OrderBook::new();
    let mut ledger = Ledger::from_accounts(initial);
    let mut trades = Vec::new();
    for logged in orders {
        let exec = book.submit(logged.order, logged.step)?;
        for t in &exec.fills {
            ledger.apply(t);
        }
        trades.extend(exec.fills);
    }
    Ok((trades, ledger.accounts()))
}

/// Total quantity the subject bought minus sold in `trades`.
pub fn net_subject_flow(trades: &[Trade]) -> i64 {
    trades
        .iter()
        .map(|t| {
            let q = t.quantity as i64;
            (if t.buyer == SUBJECT { q } else { 0 }) - (if t.seller == SUBJECT { q } else { 0 })
        })
        .sum()
}
