use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::order::{Money, ParticipantId, Price, Trade};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantAccount {
    pub owner: ParticipantId,
    pub cash: Money,
    pub inventory: i64,
    pub initial_cash: Money,
    pub initial_inventory: i64,
}

impl ParticipantAccount {
    pub fn new(owner: ParticipantId, cash: Money, inventory: i64) -> Self {
        ParticipantAccount { owner, cash, inventory, initial_cash: cash, initial_inventory: inventory }
    }
}

/// Net session profit: realized cash change plus the inventory change
/// revalued at the closing price.
pub fn mark_to_market(account: &ParticipantAccount, closing_price: Price) -> Money {
    (account.cash - account.initial_cash) + (account.inventory - account.initial_inventory) * closing_price
}

/// All accounts of a session. Cash and inventory move only through
/// [`Ledger::apply`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ledger {
    accounts: BTreeMap<ParticipantId, ParticipantAccount>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_accounts(initial: &[ParticipantAccount]) -> Self {
        let mut ledger = Ledger::new();
        for a in initial {
            ledger.accounts.insert(a.owner, ParticipantAccount::new(a.owner, a.initial_cash, a.initial_inventory));
        }
        ledger
    }

    pub fn open(&mut self, owner: ParticipantId, cash: Money, inventory: i64) {
        self.accounts.insert(owner, ParticipantAccount::new(owner, cash, inventory));
    }

    pub fn get(&self, owner: ParticipantId) -> Option<&ParticipantAccount> {
        self.accounts.get(&owner)
    }

    /// Account for `owner`, opened flat if not yet known.
    pub fn account(&self, owner: ParticipantId) -> ParticipantAccount {
        self.accounts.get(&owner).copied().unwrap_or_else(|| ParticipantAccount::new(owner, 0, 0))
    }

    pub fn apply(&mut self, trade: &Trade) {
        let notional = trade.notional();
        let qty = trade.quantity as i64;
        let buyer = self.accounts.entry(trade.buyer).or_insert_with(|| ParticipantAccount::new(trade.buyer, 0, 0));
        buyer.cash -= notional;
        buyer.inventory += qty;
        let seller = self.accounts.entry(trade.seller).or_insert_with(|| ParticipantAccount::new(trade.seller, 0, 0));
        seller.cash += notional;
        seller.inventory -= qty;
    }

    /// Accounts in owner order.
    pub fn accounts(&self) -> Vec<ParticipantAccount> {
        self.accounts.values().copied().collect()
    }
}

/// Rebuilds final accounts from the initial state and a trade log.
pub fn accounts_from_trades(initial: &[ParticipantAccount], trades: &[Trade]) -> Vec<ParticipantAccount> {
    let mut ledger = Ledger::from_accounts(initial);
    for t in trades {
        ledger.apply(t);
    }
    ledger.accounts()
}
