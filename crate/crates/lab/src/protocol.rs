//! Live-session message protocol.
//!
//! Every message is one JSON object per WebSocket text frame, tagged by
//! `type` and carrying the protocol version in `v`. Readers ignore fields
//! they do not know. The schema is published in
//! `schemas/protocol.schema.json`.

use serde::{Deserialize, Serialize};
use tokenlab_core::live::LiveState;
use tokenlab_core::market::{BookSnapshot, OrderKind, OrderTicket, Price, Qty, Side, SUBJECT};
use tokenlab_core::tokens::{Level, Modality};
use tokenlab_core::{PerformanceRecord, TokenId};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// One step per server tick.
    Realtime,
    /// Steps advance only on client `advance` messages.
    Manual,
}

/// Server → client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    TokenArtifact {
        session_id: u64,
        token_id: TokenId,
        modality: Modality,
        level: Level,
        artifact_text: String,
    },
    BookSnapshot {
        step: u32,
        /// `[price, quantity]`, best first.
        bids: Vec<(Price, Qty)>,
        asks: Vec<(Price, Qty)>,
        last_trade: Option<Price>,
    },
    ClockTick {
        step: u32,
        steps: u32,
        state: LiveState,
    },
    OrderAccepted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
        order_id: u64,
        step: u32,
    },
    OrderRejected {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
        reason: String,
    },
    Fill {
        price: Price,
        qty: Qty,
        side: Side,
        step: u32,
    },
    SessionEnd {
        net_profit: f64,
        record: PerformanceRecord,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn book(step: u32, snapshot: BookSnapshot) -> Self {
        ServerMessage::BookSnapshot { step, bids: snapshot.bids, asks: snapshot.asks, last_trade: snapshot.last_trade }
    }
}

#[derive(Serialize)]
struct Outgoing<'a> {
    v: u32,
    #[serde(flatten)]
    body: &'a ServerMessage,
}

#[derive(Deserialize)]
struct Incoming<T> {
    #[serde(default)]
    #[allow(dead_code)]
    v: Option<u32>,
    #[serde(flatten)]
    body: T,
}

pub fn encode(msg: &ServerMessage) -> String {
    serde_json::to_string(&Outgoing { v: PROTOCOL_VERSION, body: msg }).expect("message serializes")
}

pub fn decode_server(text: &str) -> Result<ServerMessage, serde_json::Error> {
    serde_json::from_str::<Incoming<ServerMessage>>(text).map(|m| m.body)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_ref: Option<u64>,
    pub side: Side,
    pub kind: OrderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<Price>,
    pub quantity: Qty,
}

impl OrderRequest {
    pub fn ticket(&self) -> OrderTicket {
        OrderTicket { owner: SUBJECT, side: self.side, kind: self.kind, price: self.price, quantity: self.quantity }
    }

    pub fn from_ticket(ticket: &OrderTicket, client_ref: Option<u64>) -> Self {
        OrderRequest {
            client_ref,
            side: ticket.side,
            kind: ticket.kind,
            price: ticket.price,
            quantity: ticket.quantity,
        }
    }
}

fn one() -> u32 {
    1
}

/// Client → server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Start {
        #[serde(default = "realtime")]
        mode: ClockMode,
    },
    Order(OrderRequest),
    /// Manual mode only.
    Advance {
        #[serde(default = "one")]
        steps: u32,
    },
}

fn realtime() -> ClockMode {
    ClockMode::Realtime
}

/// How an incoming frame was understood.
#[derive(Debug, PartialEq)]
pub enum Decoded {
    Message(ClientMessage),
    /// An `order` whose fields did not parse; still owed a rejection.
    BadOrder {
        client_ref: Option<u64>,
        error: String,
    },
    Invalid(String),
}

pub fn decode_client(text: &str) -> Decoded {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Decoded::Invalid(e.to_string()),
    };
    match serde_json::from_value::<Incoming<ClientMessage>>(value.clone()) {
        Ok(m) => Decoded::Message(m.body),
        Err(e) if value.get("type").and_then(|t| t.as_str()) == Some("order") => {
            Decoded::BadOrder { client_ref: value.get("client_ref").and_then(|r| r.as_u64()), error: e.to_string() }
        }
        Err(e) => Decoded::Invalid(e.to_string()),
    }
}

pub fn encode_client(msg: &ClientMessage) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        v: u32,
        #[serde(flatten)]
        body: &'a ClientMessage,
    }
    serde_json::to_string(&Out { v: PROTOCOL_VERSION, body: msg }).expect("message serializes")
}

/// Body of `POST /sessions`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub token_id: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: u64,
    pub token_id: TokenId,
    pub seed: u64,
    pub steps: u32,
    pub stream: String,
}
