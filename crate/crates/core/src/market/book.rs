use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::order::{Order, OrderError, OrderKind, ParticipantId, Price, Qty, Side, Trade};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestingOrder {
    pub order_id: u64,
    pub owner: ParticipantId,
    pub quantity: Qty,
    pub seq: u64,
}

/// Result of submitting one order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Execution {
    pub fills: Vec<Trade>,
    /// Quantity left resting on the book (limit orders only).
    pub resting: Qty,
    /// Market-order quantity cancelled because the opposite side ran dry.
    pub cancelled: Qty,
    /// Resting orders of the same owner removed by self-trade prevention.
    pub self_trade_cancels: Vec<u64>,
}

impl Execution {
    pub fn filled(&self) -> Qty {
        self.fills.iter().map(|t| t.quantity).sum()
    }

    /// The "exhausted-liquidity" outcome: a market order that could not be
    /// filled in full.
    pub fn exhausted_liquidity(&self) -> bool {
        self.cancelled > 0
    }
}

/// Aggregated depth for one side, best level first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookSnapshot {
    pub bids: Vec<(Price, Qty)>,
    pub asks: Vec<(Price, Qty)>,
    pub last_trade: Option<Price>,
}

impl BookSnapshot {
    pub fn is_crossed(&self) -> bool {
        match (self.bids.first(), self.asks.first()) {
            (Some(b), Some(a)) => b.0 >= a.0,
            _ => false,
        }
    }
}

/// Single-instrument limit order book with strict price-time priority.
///
/// Trades execute at the resting order's price. An incoming order that meets
/// a resting order from the same owner cancels that resting order and keeps
/// matching (cancel-resting self-trade prevention), so a trade never has the
/// same buyer and seller.
#[derive(Clone, Debug, Default)]
pub struct OrderBook {
    bids: BTreeMap<Price, VecDeque<RestingOrder>>,
    asks: BTreeMap<Price, VecDeque<RestingOrder>>,
    last_seq: u64,
    last_trade: Option<Price>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// The sequence number the next submitted order must carry (or exceed).
    pub fn next_seq(&self) -> u64 {
        self.last_seq + 1
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.keys().next().copied()
    }

    pub fn last_trade(&self) -> Option<Price> {
        self.last_trade
    }

    pub fn mid(&self) -> Option<Price> {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => Some((b + a) / 2),
            _ => None,
        }
    }

    pub fn is_empty(&self, side: Side) -> bool {
        match side {
            Side::Buy => self.bids.is_empty(),
            Side::Sell => self.asks.is_empty(),
        }
    }

    /// Total resting quantity on one side.
    pub fn depth(&self, side: Side) -> Qty {
        let levels = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        levels.values().flat_map(|q| q.iter()).map(|o| o.quantity).sum()
    }

    /// Resting orders at one level in time priority.
    pub fn level(&self, side: Side, price: Price) -> impl Iterator<Item = &RestingOrder> {
        let levels = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        levels.get(&price).into_iter().flat_map(|q| q.iter())
    }

    /// Price levels of one side, best first.
    pub fn levels(&self, side: Side) -> Vec<(Price, Qty)> {
        let agg = |(p, q): (&Price, &VecDeque<RestingOrder>)| (*p, q.iter().map(|o| o.quantity).sum());
        match side {
            Side::Buy => self.bids.iter().rev().map(agg).collect(),
            Side::Sell => self.asks.iter().map(agg).collect(),
        }
    }

    pub fn snapshot(&self, levels: usize) -> BookSnapshot {
        let mut bids = self.levels(Side::Buy);
        let mut asks = self.levels(Side::Sell);
        bids.truncate(levels);
        asks.truncate(levels);
        BookSnapshot { bids, asks, last_trade: self.last_trade }
    }

    /// Checks the structural invariants: uncrossed, positive quantities,
    /// FIFO levels ordered by sequence number.
    pub fn check_invariants(&self) -> bool {
        if let (Some(b), Some(a)) = (self.best_bid(), self.best_ask()) {
            if b >= a {
                return false;
            }
        }
        self.bids.values().chain(self.asks.values()).all(|level| {
            !level.is_empty()
                && level.iter().all(|o| o.quantity > 0)
                && level.iter().zip(level.iter().skip(1)).all(|(a, b)| a.seq < b.seq)
        })
    }

    /// Matches `order` against the book and rests any limit remainder.
    ///
    /// `step` is recorded on the resulting trades. Trade sequence numbers
    /// continue from the order's own sequence number.
    pub fn submit(&mut self, order: Order, step: u32) -> Result<Execution, OrderError> {
        order.ticket().validate()?;
        if order.seq <= self.last_seq {
            return Err(OrderError::StaleSequence { got: order.seq, last: self.last_seq });
        }
        self.last_seq = order.seq;

        let mut exec = Execution::default();
        let mut remaining = order.quantity;
        let limit = order.price;

        while remaining > 0 {
            let opposite = match order.side {
                Side::Buy => &mut self.asks,
                Side::Sell => &mut self.bids,
            };
            let best = match order.side {
                Side::Buy => opposite.keys().next().copied(),
                Side::Sell => opposite.keys().next_back().copied(),
            };
            let Some(level_price) = best else { break };
            let crosses = match (order.side, limit) {
                (_, None) => true,
                (Side::Buy, Some(p)) => level_price <= p,
                (Side::Sell, Some(p)) => level_price >= p,
            };
            if !crosses {
                break;
            }

            let queue = opposite.get_mut(&level_price).expect("level exists");
            while remaining > 0 {
                let Some(front) = queue.front_mut() else { break };
                if front.owner == order.owner {
                    exec.self_trade_cancels.push(front.order_id);
                    queue.pop_front();
                    continue;
                }
                let qty = remaining.min(front.quantity);
                self.last_seq += 1;
                let (buyer, seller) = match order.side {
                    Side::Buy => (order.owner, front.owner),
                    Side::Sell => (front.owner, order.owner),
                };
                exec.fills.push(Trade {
                    seq: self.last_seq,
                    step,
                    price: level_price,
                    quantity: qty,
                    buyer,
                    seller,
                    maker_order_id: front.order_id,
                    taker_order_id: order.order_id,
                    aggressor: order.side,
                });
                self.last_trade = Some(level_price);
                remaining -= qty;
                front.quantity -= qty;
                if front.quantity == 0 {
                    queue.pop_front();
                }
            }
            if queue.is_empty() {
                opposite.remove(&level_price);
            }
        }

        if remaining > 0 {
            match order.kind {
                OrderKind::Limit => {
                    let price = limit.expect("validated limit price");
                    let own_side = match order.side {
                        Side::Buy => &mut self.bids,
                        Side::Sell => &mut self.asks,
                    };
                    own_side.entry(price).or_default().push_back(RestingOrder {
                        order_id: order.order_id,
                        owner: order.owner,
                        quantity: remaining,
                        seq: order.seq,
                    });
                    exec.resting = remaining;
                }
                OrderKind::Market => exec.cancelled = remaining,
            }
        }
        Ok(exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::order::OrderTicket;

    const A: ParticipantId = ParticipantId(1);
    const B: ParticipantId = ParticipantId(2);
    const C: ParticipantId = ParticipantId(3);

    fn submit(book: &mut OrderBook, id: u64, t: OrderTicket) -> Execution {
        let seq = book.next_seq();
        book.submit(t.stamp(id, seq), 0).unwrap()
    }

    #[test]
    fn limit_into_empty_book_rests() {
        let mut book = OrderBook::new();
        let ex = submit(&mut book, 1, OrderTicket::limit(A, Side::Buy, 102, 100));
        assert!(ex.fills.is_empty());
        assert_eq!(ex.resting, 100);
        assert_eq!(book.best_bid(), Some(102));
        assert_eq!(book.levels(Side::Buy), vec![(102, 100)]);
    }

    #[test]
    fn limit_buy_walks_two_ask_levels() {
        let mut book = OrderBook::new();
        submit(&mut book, 1, OrderTicket::limit(B, Side::Sell, 101, 60));
        submit(&mut book, 2, OrderTicket::limit(C, Side::Sell, 102, 50));
        let ex = submit(&mut book, 3, OrderTicket::limit(A, Side::Buy, 102, 100));
        let fills: Vec<_> = ex.fills.iter().map(|t| (t.quantity, t.price)).collect();
        assert_eq!(fills, vec![(60, 101), (40, 102)]);
        assert_eq!(ex.resting, 0);
        assert_eq!(book.levels(Side::Sell), vec![(102, 10)]);
        assert!(book.is_empty(Side::Buy));
    }

    #[test]
    fn market_sell_walks_bids() {
        let mut book = OrderBook::new();
        submit(&mut book, 1, OrderTicket::limit(B, Side::Buy, 99, 20));
        submit(&mut book, 2, OrderTicket::limit(C, Side::Buy, 98, 20));
        let ex = submit(&mut book, 3, OrderTicket::market(A, Side::Sell, 30));
        let fills: Vec<_> = ex.fills.iter().map(|t| (t.quantity, t.price)).collect();
        assert_eq!(fills, vec![(20, 99), (10, 98)]);
        assert!(!ex.exhausted_liquidity());
        assert_eq!(book.levels(Side::Buy), vec![(98, 10)]);
    }

    #[test]
    fn market_order_exhausts_liquidity() {
        let mut book = OrderBook::new();
        let ex = submit(&mut book, 1, OrderTicket::market(A, Side::Buy, 10));
        assert!(ex.fills.is_empty());
        assert_eq!(ex.cancelled, 10);
        assert!(ex.exhausted_liquidity());

        submit(&mut book, 2, OrderTicket::limit(B, Side::Sell, 100, 4));
        let ex = submit(&mut book, 3, OrderTicket::market(A, Side::Buy, 10));
        assert_eq!(ex.filled(), 4);
        assert_eq!(ex.cancelled, 6);
        assert!(book.is_empty(Side::Sell) && book.is_empty(Side::Buy));
    }

    #[test]
    fn time_priority_within_level() {
        let mut book = OrderBook::new();
        submit(&mut book, 1, OrderTicket::limit(B, Side::Sell, 100, 5));
        submit(&mut book, 2, OrderTicket::limit(C, Side::Sell, 100, 5));
        let ex = submit(&mut book, 3, OrderTicket::market(A, Side::Buy, 7));
        assert_eq!(ex.fills[0].seller, B);
        assert_eq!(ex.fills[0].quantity, 5);
        assert_eq!(ex.fills[1].seller, C);
        assert_eq!(ex.fills[1].quantity, 2);
        let rest: Vec<_> = book.level(Side::Sell, 100).map(|o| (o.order_id, o.quantity)).collect();
        assert_eq!(rest, vec![(2, 3)]);
    }

    #[test]
    fn self_trade_cancels_resting() {
        let mut book = OrderBook::new();
        submit(&mut book, 1, OrderTicket::limit(A, Side::Sell, 100, 5));
        submit(&mut book, 2, OrderTicket::limit(B, Side::Sell, 100, 5));
        let ex = submit(&mut book, 3, OrderTicket::market(A, Side::Buy, 5));
        assert_eq!(ex.self_trade_cancels, vec![1]);
        assert_eq!(ex.fills.len(), 1);
        assert_eq!(ex.fills[0].seller, B);
        assert!(ex.fills.iter().all(|t| t.buyer != t.seller));
    }

    #[test]
    fn rejects_invalid_and_stale_orders() {
        let mut book = OrderBook::new();
        let bad = OrderTicket::limit(A, Side::Buy, 0, 10).stamp(1, 1);
        assert_eq!(book.submit(bad, 0), Err(OrderError::NonPositivePrice(0)));
        let zero = OrderTicket::market(A, Side::Buy, 0).stamp(1, 1);
        assert_eq!(book.submit(zero, 0), Err(OrderError::ZeroQuantity));
        submit(&mut book, 1, OrderTicket::limit(A, Side::Buy, 10, 1));
        let stale = OrderTicket::limit(A, Side::Buy, 10, 1).stamp(2, 1);
        assert!(matches!(book.submit(stale, 0), Err(OrderError::StaleSequence { .. })));
    }

    #[test]
    fn sequence_numbers_strictly_increase() {
        let mut book = OrderBook::new();
        submit(&mut book, 1, OrderTicket::limit(B, Side::Sell, 100, 5));
        submit(&mut book, 2, OrderTicket::limit(C, Side::Sell, 101, 5));
        let seq = book.next_seq();
        let ex = book.submit(OrderTicket::market(A, Side::Buy, 8).stamp(3, seq), 0).unwrap();
        assert_eq!(ex.fills[0].seq, seq + 1);
        assert_eq!(ex.fills[1].seq, seq + 2);
        assert_eq!(book.next_seq(), seq + 3);
    }
}
