//! Simulation and analytics core for the information-token trading lab.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It covers:
//!
//! - [`market`]: a single-instrument limit order book with price-time
//!   priority, a drifting fundamental, Poisson background flow and a
//!   sequential session engine.
//! - [`tokens`]: the fixed information virtue, the seven token conditions,
//!   their numeric encodings and the pairwise distinctness check.
//! - [`agents`]: token-conditioned synthetic subjects that trade one session
//!   each and produce performance records.
//! - [`analytics`]: train/test splitting, standardization, KNN
//!   classification, cross-tables and success summaries.
//! - [`live`]: the step-driven session state machine used by the network
//!   server for human or scripted participants.
//!
//! All randomness flows through [`rng`], so every result is a pure function
//! of its configuration and seed.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agents;
pub mod analytics;
pub mod live;
pub mod market;
pub mod rng;
pub mod tokens;

pub use analytics::PerformanceRecord;
pub use tokens::TokenId;
