//! In-process stand-in for the public chain: balances, a block-height clock,
//! an append-only event log and a gas meter.
//!
//! All mutation goes through `&mut Ledger`, so a single owner serializes the
//! command stream. Gas is metered for accounting only and never debited from
//! balances.

mod event;
mod gas;

pub use event::{EventKind, LedgerEvent};
pub use gas::{ops, GasReceipt, GasTable, PublishedTotals, PUBLISHED_TOTALS};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::primitives::Address;

/// Currency in its smallest denomination.
pub type Amount = u128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("account {0} already exists")]
    DuplicateAccount(Address),
    #[error("unknown account {0}")]
    UnknownAccount(Address),
    #[error("insufficient balance: need {need}, have {have}")]
    InsufficientBalance { need: Amount, have: Amount },
    #[error("balance overflow")]
    Overflow,
    #[error("operation {0:?} not in gas table")]
    UnknownOperation(String),
    #[error("call needs {gas} gas, above the limit of {limit}")]
    GasLimitExceeded { gas: u64, limit: u64 },
    #[error("gas table: {0}")]
    GasTableParse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Account {
    pub address: Address,
    pub balance: Amount,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    accounts: BTreeMap<Address, Amount>,
    minted: Amount,
    height: u64,
    next_seq: u64,
    events: Vec<LedgerEvent>,
    gas_table: GasTable,
    receipts: Vec<GasReceipt>,
    gas_by_actor: BTreeMap<Address, u64>,
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger::new(GasTable::default())
    }
}

impl Ledger {
    pub fn new(gas_table: GasTable) -> Self {
        Ledger {
            accounts: BTreeMap::new(),
            minted: 0,
            height: 0,
            next_seq: 0,
            events: Vec::new(),
            gas_table,
            receipts: Vec::new(),
            gas_by_actor: BTreeMap::new(),
        }
    }

    pub fn create_account(&mut self, address: Address) -> Result<Account, LedgerError> {
        if self.accounts.contains_key(&address) {
            return Err(LedgerError::DuplicateAccount(address));
        }
        self.accounts.insert(address, 0);
        self.emit(EventKind::AccountCreated, vec![("address", address.to_string())]);
        Ok(Account { address, balance: 0 })
    }

    pub fn has_account(&self, address: &Address) -> bool {
        self.accounts.contains_key(address)
    }

    pub fn account(&self, address: &Address) -> Option<Account> {
        self.accounts.get(address).map(|&balance| Account {
            address: *address,
            balance,
        })
    }

    pub fn balance(&self, address: &Address) -> Result<Amount, LedgerError> {
        self.accounts
            .get(address)
            .copied()
            .ok_or(LedgerError::UnknownAccount(*address))
    }

    pub fn mint(&mut self, address: &Address, amount: Amount) -> Result<Amount, LedgerError> {
        let minted = self.minted.checked_add(amount).ok_or(LedgerError::Overflow)?;
        let balance = self
            .accounts
            .get_mut(address)
            .ok_or(LedgerError::UnknownAccount(*address))?;
        *balance = balance.checked_add(amount).ok_or(LedgerError::Overflow)?;
        let new_balance = *balance;
        self.minted = minted;
        self.emit(
            EventKind::Minted,
            vec![("to", address.to_string()), ("amount", amount.to_string())],
        );
        Ok(new_balance)
    }

    /// Atomic debit/credit. Either both sides change or neither does.
    pub fn transfer(&mut self, from: &Address, to: &Address, amount: Amount) -> Result<(), LedgerError> {
        let have = self.balance(from)?;
        let to_balance = self.balance(to)?;
        if have < amount {
            return Err(LedgerError::InsufficientBalance { need: amount, have });
        }
        if amount == 0 {
            return Ok(());
        }
        if from != to {
            let credited = to_balance.checked_add(amount).ok_or(LedgerError::Overflow)?;
            self.accounts.insert(*from, have - amount);
            self.accounts.insert(*to, credited);
        }
        self.emit(
            EventKind::Transferred,
            vec![
                ("from", from.to_string()),
                ("to", to.to_string()),
                ("amount", amount.to_string()),
            ],
        );
        Ok(())
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn advance_blocks(&mut self, n: u64) -> u64 {
        self.height += n;
        self.height
    }

    pub fn total_minted(&self) -> Amount {
        self.minted
    }

    pub fn total_balances(&self) -> Amount {
        self.accounts.values().sum()
    }

    pub fn accounts(&self) -> impl Iterator<Item = Account> + '_ {
        self.accounts.iter().map(|(a, b)| Account {
            address: *a,
            balance: *b,
        })
    }

    pub fn emit(&mut self, kind: EventKind, fields: Vec<(&str, String)>) -> &LedgerEvent {
        let event = LedgerEvent {
            seq: self.next_seq,
            height: self.height,
            kind,
            fields: fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        };
        self.next_seq += 1;
        self.events.push(event);
        self.events.last().unwrap()
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn gas_table(&self) -> &GasTable {
        &self.gas_table
    }

    /// Gas a call would cost, failing if it would not fit under the limit.
    pub fn quote_gas(&self, operation: &str, payload_len: usize) -> Result<u64, LedgerError> {
        let gas = self.gas_table.cost(operation, payload_len)?;
        if gas > self.gas_table.block_gas_limit {
            return Err(LedgerError::GasLimitExceeded {
                gas,
                limit: self.gas_table.block_gas_limit,
            });
        }
        Ok(gas)
    }

    pub fn charge_gas(
        &mut self,
        actor: &Address,
        operation: &str,
        payload_len: usize,
    ) -> Result<GasReceipt, LedgerError> {
        let gas = self.quote_gas(operation, payload_len)?;
        let total = self.gas_by_actor.entry(*actor).or_insert(0);
        *total += gas;
        let receipt = GasReceipt {
            seq: self.receipts.len() as u64,
            height: self.height,
            actor: *actor,
            operation: operation.to_string(),
            payload_len,
            gas,
            cumulative: *total,
        };
        self.receipts.push(receipt.clone());
        Ok(receipt)
    }

    pub fn receipts(&self) -> &[GasReceipt] {
        &self.receipts
    }

    pub fn gas_used_by(&self, actor: &Address) -> u64 {
        self.gas_by_actor.get(actor).copied().unwrap_or(0)
    }

    pub fn total_gas(&self) -> u64 {
        self.receipts.iter().map(|r| r.gas).sum()
    }

    /// Full state as text: accounts, then events, then receipts.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "ledger height={} minted={}", self.height, self.minted).unwrap();
        for (a, b) in &self.accounts {
            writeln!(out, "account address={a} balance={b}").unwrap();
        }
        for e in &self.events {
            writeln!(out, "{}", e.to_line()).unwrap();
        }
        for r in &self.receipts {
            writeln!(out, "{}", r.to_line()).unwrap();
        }
        out
    }
}
