use core::fmt;

use serde::{Deserialize, Serialize};

/// Price in integer ticks.
pub type Price = i64;
/// Share quantity.
pub type Qty = u64;
/// Money in ticks × shares. Display dollars only at the reporting edge.
pub type Money = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub u32);

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    /// +1 for buys, -1 for sells.
    pub fn sign(self) -> i64 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Limit,
    Market,
}

/// An order before the market has stamped it with an id and sequence number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderTicket {
    pub owner: ParticipantId,
    pub side: Side,
    pub kind: OrderKind,
    pub price: Option<Price>,
    pub quantity: Qty,
}

impl OrderTicket {
    pub fn limit(owner: ParticipantId, side: Side, price: Price, quantity: Qty) -> Self {
        OrderTicket { owner, side, kind: OrderKind::Limit, price: Some(price), quantity }
    }

    pub fn market(owner: ParticipantId, side: Side, quantity: Qty) -> Self {
        OrderTicket { owner, side, kind: OrderKind::Market, price: None, quantity }
    }

    pub fn validate(&self) -> Result<(), OrderError> {
        if self.quantity == 0 {
            return Err(OrderError::ZeroQuantity);
        }
        match (self.kind, self.price) {
            (OrderKind::Limit, Some(p)) if p > 0 => Ok(()),
            (OrderKind::Limit, Some(p)) => Err(OrderError::NonPositivePrice(p)),
            (OrderKind::Limit, None) => Err(OrderError::MissingLimitPrice),
            (OrderKind::Market, None) => Ok(()),
            (OrderKind::Market, Some(_)) => Err(OrderError::PricedMarketOrder),
        }
    }

    pub fn stamp(self, order_id: u64, seq: u64) -> Order {
        Order {
            order_id,
            owner: self.owner,
            side: self.side,
            kind: self.kind,
            price: self.price,
            quantity: self.quantity,
            seq,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub order_id: u64,
    pub owner: ParticipantId,
    pub side: Side,
    pub kind: OrderKind,
    pub price: Option<Price>,
    pub quantity: Qty,
    pub seq: u64,
}

impl Order {
    pub fn ticket(&self) -> OrderTicket {
        OrderTicket { owner: self.owner, side: self.side, kind: self.kind, price: self.price, quantity: self.quantity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub seq: u64,
    /// Session step in which the trade printed.
    pub step: u32,
    pub price: Price,
    pub quantity: Qty,
    pub buyer: ParticipantId,
    pub seller: ParticipantId,
    pub maker_order_id: u64,
    pub taker_order_id: u64,
    pub aggressor: Side,
}

impl Trade {
    pub fn notional(&self) -> Money {
        self.price * self.quantity as Money
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OrderError {
    #[error("order quantity must be positive")]
    ZeroQuantity,
    #[error("limit price must be positive, got {0}")]
    NonPositivePrice(Price),
    #[error("limit order without a price")]
    MissingLimitPrice,
    #[error("market order carries a price")]
    PricedMarketOrder,
    #[error("price {price} is not a multiple of the tick size {tick}")]
    OffTick { price: Price, tick: Price },
    #[error("sequence number {got} does not follow {last}")]
    StaleSequence { got: u64, last: u64 },
}
