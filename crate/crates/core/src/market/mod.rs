//! Single-instrument order-driven market.
//!
//! Prices are integer ticks and money is ticks × shares, so every
//! conservation check is exact. A session is a sequential event loop over
//! a fixed number of steps; see [`SessionEngine`].

mod account;
mod book;
mod flow;
mod fundamental;
mod order;
mod session;

pub use account::{accounts_from_trades, mark_to_market, Ledger, ParticipantAccount};
pub use book::{BookSnapshot, Execution, OrderBook, RestingOrder};
pub use flow::{generate_background_flow, opening_ladder, FlowError, FlowOrder, FlowParams, BACKGROUND_BASE};
pub use fundamental::{
    generate_fundamental, FundamentalError, FundamentalParams, FundamentalPath, DRIFT_MAX, DRIFT_MIN, DRIFT_TOLERANCE,
};
pub use order::{Money, Order, OrderError, OrderKind, OrderTicket, ParticipantId, Price, Qty, Side, Trade};
pub use session::{
    net_subject_flow, replay_orders, run_session, ConfigError, Controller, Idle, LoggedOrder, MarketConfig, MarketView,
    RejectReason, Rejection, ScriptedFeed, SessionEngine, SessionResult, StepReport, TicketOutcome, SUBJECT,
};
