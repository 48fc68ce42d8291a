//! The relay-sharing contract as a deterministic state machine over a
//! [`Ledger`].
//!
//! The four tables are `userInfo`, `serverInfo`, `serviceList` and the report
//! pending list. Every entry point validates first, then charges gas, then
//! mutates, so a rejected call leaves both the contract and the ledger
//! untouched (no receipt is recorded for reverted calls).
//!
//! [`verify_delivery`] is a free function: relays call it off-ledger before
//! releasing a cover key and [`Contract::settle`] calls the very same function
//! on-ledger.

mod proof;
mod types;

pub use proof::{
    CoverKeyReveal, Encode, ProofTriple, ReceiverCommitment, SenderCommitment, Signed,
};
pub use types::{
    CallTrace, ContractConfig, PendingReport, Penalty, RebutOutcome, ServerInfo, ServiceRecord,
    ServiceStatus, Txn, UserInfo,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ledger::{ops, Amount, EventKind, Ledger, LedgerError};
use crate::primitives::{apply_cover, cover_byte_at, recover, Address, CommitmentBytes, CoverKey, IndexList, Signature};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("caller {0} has no ledger account")]
    NoAccount(Address),
    #[error("a party cannot pair with itself")]
    SelfPairing,
    #[error("pair already registered and confirmed")]
    AlreadyRegistered,
    #[error("pair registration is waiting for the other party")]
    AwaitingCounterparty,
    #[error("deposit {deposit} below minimum {min}")]
    DepositBelowMinimum { deposit: Amount, min: Amount },
    #[error("server {0} already registered")]
    ServerAlreadyRegistered(Address),
    #[error("device/controller pair is not confirmed")]
    UnconfirmedUser,
    #[error("server {0} is not registered")]
    UnknownServer(Address),
    #[error("no service record with txn {0}")]
    UnknownTxn(Txn),
    #[error("{caller} may not call {function}")]
    Unauthorized { caller: Address, function: &'static str },
    #[error("service already confirmed")]
    AlreadyConfirmed,
    #[error("service not confirmed")]
    NotConfirmed,
    #[error("decommission already in progress")]
    DecommissionInProgress,
    #[error("commitment lengths differ: b={b}, b'={b_prime}, indices={indices}")]
    LengthMismatch { b: usize, b_prime: usize, indices: usize },
    #[error("commitment length {got} differs from configured {expected}")]
    WrongCommitmentLength { got: usize, expected: usize },
    #[error("proof bodies disagree on txn or serial")]
    InconsistentProof,
    #[error("proof serial {proof} not above recorded serial {recorded}")]
    StaleSerial { proof: u64, recorded: u64 },
    #[error("{0} signature does not bind the expected party")]
    BadSignatureBinding(&'static str),
    #[error("delivery verification failed")]
    VerificationFailed,
    #[error("payment {need} exceeds prepaid balance {have}")]
    InsufficientPrepaid { need: Amount, have: Amount },
    #[error("relay signature does not recover to the accused server")]
    ForgedEvidence,
    #[error("report for txn {0} serial {1} already pending")]
    DuplicateReport(Txn, u64),
    #[error("no pending report for txn {0} serial {1}")]
    NoPendingReport(Txn, u64),
    #[error("grace period active: {elapsed} of {grace} blocks elapsed")]
    GracePeriodActive { elapsed: u64, grace: u64 },
}

/// Checks `b[i] ^ b_prime[i] == cover_byte_at(pn, ra[i])` for every `i`.
pub fn verify_delivery(
    b: &CommitmentBytes,
    b_prime: &CommitmentBytes,
    ra: &IndexList,
    pn: &CoverKey,
) -> Result<bool, ContractError> {
    if b.len() != b_prime.len() || b.len() != ra.len() {
        return Err(ContractError::LengthMismatch {
            b: b.len(),
            b_prime: b_prime.len(),
            indices: ra.len(),
        });
    }
    Ok(b.0
        .iter()
        .zip(&b_prime.0)
        .zip(ra.iter())
        .all(|((x, y), idx)| x ^ y == cover_byte_at(pn, idx as u64)))
}

fn pair_key(a: Address, b: Address) -> (Address, Address) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct Contract {
    address: Address,
    config: ContractConfig,
    users: BTreeMap<(Address, Address), UserInfo>,
    servers: BTreeMap<Address, ServerInfo>,
    services: BTreeMap<Txn, ServiceRecord>,
    pending: BTreeMap<(Txn, u64), PendingReport>,
    next_txn: Txn,
    trace: Vec<CallTrace>,
}

impl Contract {
    /// Creates the contract's escrow account on `ledger`.
    pub fn deploy(ledger: &mut Ledger, config: ContractConfig) -> Result<Self, ContractError> {
        let address = Address::from_label("rsiot.contract");
        ledger.create_account(address)?;
        Ok(Contract {
            address,
            config,
            users: BTreeMap::new(),
            servers: BTreeMap::new(),
            services: BTreeMap::new(),
            pending: BTreeMap::new(),
            next_txn: 1,
            trace: Vec::new(),
        })
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn config(&self) -> &ContractConfig {
        &self.config
    }

    pub fn user_info(&self, a: &Address, b: &Address) -> Option<&UserInfo> {
        self.users.get(&pair_key(*a, *b))
    }

    pub fn server_info(&self, server: &Address) -> Option<&ServerInfo> {
        self.servers.get(server)
    }

    pub fn service(&self, txn: Txn) -> Option<&ServiceRecord> {
        self.services.get(&txn)
    }

    pub fn services(&self) -> impl Iterator<Item = &ServiceRecord> {
        self.services.values()
    }

    pub fn pending_report(&self, txn: Txn, serial: u64) -> Option<&PendingReport> {
        self.pending.get(&(txn, serial))
    }

    pub fn pending_reports(&self) -> impl Iterator<Item = &PendingReport> {
        self.pending.values()
    }

    pub fn trace(&self) -> &[CallTrace] {
        &self.trace
    }

    /// Escrow held for prepaid balances and server deposits.
    pub fn expected_escrow(&self) -> Amount {
        let balances: Amount = self.services.values().map(|r| r.balance).sum();
        let deposits: Amount = self.servers.values().map(|s| s.deposit).sum();
        balances + deposits
    }

    pub fn escrow_consistent(&self, ledger: &Ledger) -> bool {
        ledger.balance(&self.address).ok() == Some(self.expected_escrow())
    }

    fn record<T, F>(&mut self, ledger: &Ledger, mark: usize, caller: Address, function: &'static str, result: &Result<T, ContractError>, detail: F)
    where
        F: FnOnce(&T) -> String,
    {
        let gas = ledger.receipts()[mark..].iter().map(|r| r.gas).sum();
        self.trace.push(CallTrace {
            height: ledger.height(),
            caller,
            function,
            outcome: match result {
                Ok(v) => Ok(detail(v)),
                Err(e) => Err(e.to_string()),
            },
            gas,
        });
    }

    fn require_account(ledger: &Ledger, who: &Address) -> Result<(), ContractError> {
        if ledger.has_account(who) {
            Ok(())
        } else {
            Err(ContractError::NoAccount(*who))
        }
    }

    // ---- registration -------------------------------------------------

    pub fn reg_user(&mut self, ledger: &mut Ledger, caller: Address, oppo_end: Address) -> Result<UserInfo, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.reg_user_inner(ledger, caller, oppo_end);
        self.record(ledger, mark, caller, "reg_user", &r, |u| format!("confirmed={}", u.confirmed));
        r
    }

    fn reg_user_inner(&mut self, ledger: &mut Ledger, caller: Address, oppo_end: Address) -> Result<UserInfo, ContractError> {
        Self::require_account(ledger, &caller)?;
        if caller == oppo_end {
            return Err(ContractError::SelfPairing);
        }
        let key = pair_key(caller, oppo_end);
        match self.users.get(&key) {
            Some(u) if u.confirmed => Err(ContractError::AlreadyRegistered),
            Some(u) if u.initiator == caller => Err(ContractError::AwaitingCounterparty),
            Some(_) => {
                ledger.charge_gas(&caller, ops::REG_USER_CONFIRM, 0)?;
                let u = self.users.get_mut(&key).unwrap();
                u.confirmed = true;
                let u = u.clone();
                ledger.emit(
                    EventKind::UserConfirmed,
                    vec![("initiator", u.initiator.to_string()), ("responder", u.responder.to_string())],
                );
                Ok(u)
            }
            None => {
                ledger.charge_gas(&caller, ops::REG_USER_CREATE, 0)?;
                let u = UserInfo {
                    initiator: caller,
                    responder: oppo_end,
                    confirmed: false,
                };
                self.users.insert(key, u.clone());
                ledger.emit(
                    EventKind::UserRegistered,
                    vec![("initiator", caller.to_string()), ("responder", oppo_end.to_string())],
                );
                Ok(u)
            }
        }
    }

    /// Escrows `deposit` from `caller` and lists it in `serverInfo`.
    pub fn reg_server(&mut self, ledger: &mut Ledger, caller: Address, deposit: Amount) -> Result<ServerInfo, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.reg_server_inner(ledger, caller, deposit);
        self.record(ledger, mark, caller, "reg_server", &r, |s| format!("deposit={}", s.deposit));
        r
    }

    fn reg_server_inner(&mut self, ledger: &mut Ledger, caller: Address, deposit: Amount) -> Result<ServerInfo, ContractError> {
        let have = ledger.balance(&caller).map_err(|_| ContractError::NoAccount(caller))?;
        if self.servers.contains_key(&caller) {
            return Err(ContractError::ServerAlreadyRegistered(caller));
        }
        if deposit == 0 || deposit < self.config.min_deposit {
            return Err(ContractError::DepositBelowMinimum {
                deposit,
                min: self.config.min_deposit,
            });
        }
        if have < deposit {
            return Err(LedgerError::InsufficientBalance { need: deposit, have }.into());
        }
        ledger.charge_gas(&caller, ops::REG_SERVER, 0)?;
        ledger.transfer(&caller, &self.address, deposit)?;
        let info = ServerInfo { server: caller, deposit };
        self.servers.insert(caller, info.clone());
        ledger.emit(
            EventKind::ServerRegistered,
            vec![("server", caller.to_string()), ("deposit", deposit.to_string())],
        );
        Ok(info)
    }

    // ---- commission ---------------------------------------------------

    /// Broadcasts the pair's registration so relays can quote.
    pub fn service_request(&mut self, ledger: &mut Ledger, caller: Address, device: Address, controller: Address) -> Result<u64, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.service_request_inner(ledger, caller, device, controller);
        self.record(ledger, mark, caller, "service_request", &r, |seq| format!("event={seq}"));
        r
    }

    fn service_request_inner(&mut self, ledger: &mut Ledger, caller: Address, device: Address, controller: Address) -> Result<u64, ContractError> {
        if caller != device && caller != controller {
            return Err(ContractError::Unauthorized { caller, function: "service_request" });
        }
        match self.users.get(&pair_key(device, controller)) {
            Some(u) if u.confirmed => {}
            _ => return Err(ContractError::UnconfirmedUser),
        }
        ledger.charge_gas(&caller, ops::SERVICE_REQUEST, 0)?;
        let ev = ledger.emit(
            EventKind::ServiceRequested,
            vec![("device", device.to_string()), ("controller", controller.to_string())],
        );
        Ok(ev.seq)
    }

    /// Relay's reply to a request. A plain ledger message: no contract state,
    /// zero contract gas.
    pub fn offer_quote(&mut self, ledger: &mut Ledger, server: Address, device: Address, price: Amount) -> Result<(), ContractError> {
        let mark = ledger.receipts().len();
        let r = (|| {
            Self::require_account(ledger, &server)?;
            ledger.charge_gas(&server, ops::QUOTE, 0)?;
            ledger.emit(
                EventKind::QuoteOffered,
                vec![
                    ("server", server.to_string()),
                    ("device", device.to_string()),
                    ("price", price.to_string()),
                ],
            );
            Ok(())
        })();
        self.record(ledger, mark, server, "quote", &r, |_| String::new());
        r
    }

    /// Opens a pending service record and escrows `prepaid` from `caller`.
    #[allow(clippy::too_many_arguments)]
    pub fn service_select(
        &mut self,
        ledger: &mut Ledger,
        caller: Address,
        device: Address,
        controller: Address,
        server: Address,
        price: Amount,
        prepaid: Amount,
    ) -> Result<ServiceRecord, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.service_select_inner(ledger, caller, device, controller, server, price, prepaid);
        self.record(ledger, mark, caller, "service_select", &r, |s| format!("txn={}", s.txn));
        r
    }

    #[allow(clippy::too_many_arguments)]
    #[allow(clippy::too_many_arguments)]
    fn service_select_inner(
        &mut self,
        ledger: &mut Ledger,
        caller: Address,
        device: Address,
        controller: Address,
        server: Address,
        price: Amount,
        prepaid: Amount,
    ) -> Result<ServiceRecord, ContractError> {
        if caller != device && caller != controller {
            return Err(ContractError::Unauthorized { caller, function: "service_select" });
        }
        match self.users.get(&pair_key(device, controller)) {
            Some(u) if u.confirmed => {}
            _ => return Err(ContractError::UnconfirmedUser),
        }
        if !self.servers.contains_key(&server) {
            return Err(ContractError::UnknownServer(server));
        }
        let have = ledger.balance(&caller)?;
        if have < prepaid {
            return Err(LedgerError::InsufficientBalance { need: prepaid, have }.into());
        }
        ledger.charge_gas(&caller, ops::SERVICE_SELECT, 0)?;
        ledger.transfer(&caller, &self.address, prepaid)?;
        let txn = self.next_txn;
        self.next_txn += 1;
        let record = ServiceRecord {
            txn,
            serial: 0,
            device,
            controller,
            server,
            price,
            balance: prepaid,
            status: ServiceStatus::Pending,
            decommissioned_at: None,
        };
        self.services.insert(txn, record.clone());
        ledger.emit(
            EventKind::ServiceSelected,
            vec![
                ("txn", txn.to_string()),
                ("device", device.to_string()),
                ("server", server.to_string()),
                ("price", price.to_string()),
                ("prepaid", prepaid.to_string()),
            ],
        );
        Ok(record)
    }

    pub fn service_confirm(&mut self, ledger: &mut Ledger, caller: Address, txn: Txn) -> Result<ServiceRecord, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.service_confirm_inner(ledger, caller, txn);
        self.record(ledger, mark, caller, "service_confirm", &r, |s| format!("txn={}", s.txn));
        r
    }

    fn service_confirm_inner(&mut self, ledger: &mut Ledger, caller: Address, txn: Txn) -> Result<ServiceRecord, ContractError> {
        let record = self.services.get(&txn).ok_or(ContractError::UnknownTxn(txn))?;
        if record.server != caller {
            return Err(ContractError::Unauthorized { caller, function: "service_confirm" });
        }
        if record.status == ServiceStatus::Confirmed {
            return Err(ContractError::AlreadyConfirmed);
        }
        if !self.servers.contains_key(&caller) {
            return Err(ContractError::UnknownServer(caller));
        }
        ledger.charge_gas(&caller, ops::SERVICE_CONFIRM, 0)?;
        let record = self.services.get_mut(&txn).unwrap();
        record.status = ServiceStatus::Confirmed;
        let record = record.clone();
        ledger.emit(
            EventKind::ServiceConfirmed,
            vec![
                ("txn", txn.to_string()),
                ("device", record.device.to_string()),
                ("controller", record.controller.to_string()),
                ("server", record.server.to_string()),
            ],
        );
        Ok(record)
    }

    // ---- billing ------------------------------------------------------

    /// Pays the server for every packet between the recorded serial and the
    /// proof's serial, checking only the newest proof.
    pub fn settle(&mut self, ledger: &mut Ledger, caller: Address, triple: &ProofTriple, txn: Txn) -> Result<Amount, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.settle_inner(ledger, caller, triple, txn);
        self.record(ledger, mark, caller, "settle", &r, |p| format!("serial={} payment={p}", triple.serial));
        r
    }

    fn settle_inner(&mut self, ledger: &mut Ledger, caller: Address, triple: &ProofTriple, txn: Txn) -> Result<Amount, ContractError> {
        let record = self.services.get(&txn).ok_or(ContractError::UnknownTxn(txn))?;
        if record.server != caller {
            return Err(ContractError::Unauthorized { caller, function: "settle" });
        }
        if record.status != ServiceStatus::Confirmed {
            return Err(ContractError::NotConfirmed);
        }
        if !triple.is_consistent(txn) {
            return Err(ContractError::InconsistentProof);
        }
        if triple.serial <= record.serial {
            return Err(ContractError::StaleSerial {
                proof: triple.serial,
                recorded: record.serial,
            });
        }
        let sender = triple.tx_b.signer().map_err(|_| ContractError::BadSignatureBinding("sender"))?;
        let receiver = triple
            .tx_b_prime
            .signer()
            .map_err(|_| ContractError::BadSignatureBinding("receiver"))?;
        let relay = triple.tx_pn.signer().map_err(|_| ContractError::BadSignatureBinding("relay"))?;
        let users_ok = (sender == record.controller && receiver == record.device)
            || (sender == record.device && receiver == record.controller);
        if !users_ok {
            return Err(ContractError::BadSignatureBinding(if sender == record.controller || sender == record.device {
                "receiver"
            } else {
                "sender"
            }));
        }
        if relay != record.server {
            return Err(ContractError::BadSignatureBinding("relay"));
        }
        let b = &triple.tx_b.body.bytes;
        if b.len() != self.config.commitment_len {
            return Err(ContractError::WrongCommitmentLength {
                got: b.len(),
                expected: self.config.commitment_len,
            });
        }
        let ok = verify_delivery(
            b,
            &triple.tx_b_prime.body.bytes,
            &triple.tx_b_prime.body.indices,
            &triple.tx_pn.body.pn,
        )?;
        if !ok {
            return Err(ContractError::VerificationFailed);
        }
        let packets = (triple.serial - record.serial) as Amount;
        let payment = packets.checked_mul(record.price).ok_or(LedgerError::Overflow)?;
        if payment > record.balance {
            return Err(ContractError::InsufficientPrepaid {
                need: payment,
                have: record.balance,
            });
        }
        // Each commitment transaction is paid for by its signer.
        let payload = b.len();
        for op in [ops::COMMITMENT_RECEIVER, ops::COMMITMENT_SENDER, ops::COMMITMENT_VERIFY] {
            ledger.quote_gas(op, payload)?;
        }
        ledger.charge_gas(&receiver, ops::COMMITMENT_RECEIVER, payload)?;
        ledger.charge_gas(&sender, ops::COMMITMENT_SENDER, payload)?;
        ledger.charge_gas(&relay, ops::COMMITMENT_VERIFY, payload)?;
        ledger.transfer(&self.address, &relay, payment)?;
        let record = self.services.get_mut(&txn).unwrap();
        record.balance -= payment;
        record.serial = triple.serial;
        ledger.emit(
            EventKind::Settled,
            vec![
                ("txn", txn.to_string()),
                ("serial", triple.serial.to_string()),
                ("payment", payment.to_string()),
                ("pn", triple.tx_pn.body.pn.to_string()),
            ],
        );
        Ok(payment)
    }

    /// Starts the billing window; the record is deleted and the residual
    /// balance refunded by [`Contract::process_expired`].
    pub fn decommission(&mut self, ledger: &mut Ledger, caller: Address, txn: Txn) -> Result<(), ContractError> {
        let mark = ledger.receipts().len();
        let r = self.decommission_inner(ledger, caller, txn);
        self.record(ledger, mark, caller, "decommission", &r, |_| format!("txn={txn}"));
        r
    }

    fn decommission_inner(&mut self, ledger: &mut Ledger, caller: Address, txn: Txn) -> Result<(), ContractError> {
        let record = self.services.get(&txn).ok_or(ContractError::UnknownTxn(txn))?;
        if !record.is_party(&caller) {
            return Err(ContractError::Unauthorized { caller, function: "decommission" });
        }
        if record.decommissioned_at.is_some() {
            return Err(ContractError::DecommissionInProgress);
        }
        ledger.charge_gas(&caller, ops::DECOMMISSION, 0)?;
        let height = ledger.height();
        self.services.get_mut(&txn).unwrap().decommissioned_at = Some(height);
        ledger.emit(
            EventKind::DecommissionStarted,
            vec![("txn", txn.to_string()), ("by", caller.to_string())],
        );
        Ok(())
    }

    /// Deletes every record whose billing window has elapsed and refunds its
    /// balance to the device. Returns the closed `(txn, refund)` pairs.
    pub fn process_expired(&mut self, ledger: &mut Ledger) -> Result<Vec<(Txn, Amount)>, ContractError> {
        let height = ledger.height();
        let window = self.config.billing_window;
        let due: Vec<Txn> = self
            .services
            .values()
            .filter(|r| matches!(r.decommissioned_at, Some(h) if height - h >= window))
            .map(|r| r.txn)
            .collect();
        let mut closed = Vec::with_capacity(due.len());
        for txn in due {
            let record = self.services.remove(&txn).unwrap();
            ledger.transfer(&self.address, &record.device, record.balance)?;
            ledger.emit(
                EventKind::ServiceClosed,
                vec![
                    ("txn", txn.to_string()),
                    ("refund", record.balance.to_string()),
                    ("device", record.device.to_string()),
                ],
            );
            closed.push((txn, record.balance));
        }
        Ok(closed)
    }

    // ---- arbitration --------------------------------------------------

    /// Files a report against the record's server. The relay's signature
    /// over the reported packet must recover to that server.
    pub fn reporting(
        &mut self,
        ledger: &mut Ledger,
        caller: Address,
        txn: Txn,
        serial: u64,
        packet: &[u8],
        relay_sig: &Signature,
    ) -> Result<PendingReport, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.reporting_inner(ledger, caller, txn, serial, packet, relay_sig);
        self.record(ledger, mark, caller, "reporting", &r, |p| {
            format!("txn={} serial={} bytes={}", p.txn, p.serial, p.packet.len())
        });
        r
    }

    fn reporting_inner(
        &mut self,
        ledger: &mut Ledger,
        caller: Address,
        txn: Txn,
        serial: u64,
        packet: &[u8],
        relay_sig: &Signature,
    ) -> Result<PendingReport, ContractError> {
        // A call that cannot fit in a block never reaches the contract.
        ledger.quote_gas(ops::REPORTING, packet.len())?;
        let record = self.services.get(&txn).ok_or(ContractError::UnknownTxn(txn))?;
        if record.status != ServiceStatus::Confirmed {
            return Err(ContractError::NotConfirmed);
        }
        if record.device != caller {
            return Err(ContractError::Unauthorized { caller, function: "reporting" });
        }
        if self.pending.contains_key(&(txn, serial)) {
            return Err(ContractError::DuplicateReport(txn, serial));
        }
        match recover(packet, relay_sig) {
            Ok(addr) if addr == record.server => {}
            _ => return Err(ContractError::ForgedEvidence),
        }
        let report = PendingReport {
            txn,
            serial,
            packet: packet.to_vec(),
            report_height: ledger.height(),
            reporter: caller,
            server: record.server,
            controller: record.controller,
        };
        ledger.charge_gas(&caller, ops::REPORTING, packet.len())?;
        self.pending.insert((txn, serial), report.clone());
        ledger.emit(
            EventKind::ReportFiled,
            vec![
                ("txn", txn.to_string()),
                ("serial", serial.to_string()),
                ("server", report.server.to_string()),
                ("bytes", packet.len().to_string()),
            ],
        );
        Ok(report)
    }

    /// The accused server uncovers the stored packet with `pn` and shows the
    /// controller's signature over it. Retries are allowed until `execute`.
    pub fn rebutting(
        &mut self,
        ledger: &mut Ledger,
        caller: Address,
        txn: Txn,
        serial: u64,
        controller_sig: &Signature,
        pn: &CoverKey,
    ) -> Result<RebutOutcome, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.rebutting_inner(ledger, caller, txn, serial, controller_sig, pn);
        self.record(ledger, mark, caller, "rebutting", &r, |o| format!("{o:?}"));
        r
    }

    fn rebutting_inner(
        &mut self,
        ledger: &mut Ledger,
        caller: Address,
        txn: Txn,
        serial: u64,
        controller_sig: &Signature,
        pn: &CoverKey,
    ) -> Result<RebutOutcome, ContractError> {
        let report = self
            .pending
            .get(&(txn, serial))
            .ok_or(ContractError::NoPendingReport(txn, serial))?;
        if report.server != caller {
            return Err(ContractError::Unauthorized { caller, function: "rebutting" });
        }
        ledger.charge_gas(&caller, ops::REBUTTING, report.packet.len())?;
        let uncovered = apply_cover(&report.packet, pn);
        let outcome = match recover(&uncovered, controller_sig) {
            Ok(addr) if addr == report.controller => RebutOutcome::Rebutted,
            _ => RebutOutcome::Failed,
        };
        let kind = match outcome {
            RebutOutcome::Rebutted => {
                self.pending.remove(&(txn, serial));
                EventKind::ReportRebutted
            }
            RebutOutcome::Failed => EventKind::RebutFailed,
        };
        ledger.emit(kind, vec![("txn", txn.to_string()), ("serial", serial.to_string())]);
        Ok(outcome)
    }

    /// Confiscates the server's deposit for the reporter once the grace
    /// period has strictly elapsed, and revokes the server's registration.
    pub fn execute(&mut self, ledger: &mut Ledger, caller: Address, txn: Txn, serial: u64) -> Result<Penalty, ContractError> {
        let mark = ledger.receipts().len();
        let r = self.execute_inner(ledger, caller, txn, serial);
        self.record(ledger, mark, caller, "execute", &r, |p| format!("amount={}", p.amount));
        r
    }

    fn execute_inner(&mut self, ledger: &mut Ledger, caller: Address, txn: Txn, serial: u64) -> Result<Penalty, ContractError> {
        let report = self
            .pending
            .get(&(txn, serial))
            .ok_or(ContractError::NoPendingReport(txn, serial))?;
        if report.reporter != caller {
            return Err(ContractError::Unauthorized { caller, function: "execute" });
        }
        let elapsed = ledger.height() - report.report_height;
        if elapsed <= self.config.grace_period {
            return Err(ContractError::GracePeriodActive {
                elapsed,
                grace: self.config.grace_period,
            });
        }
        let server = report.server;
        ledger.charge_gas(&caller, ops::EXECUTE, 0)?;
        let amount = self.servers.remove(&server).map(|s| s.deposit).unwrap_or(0);
        ledger.transfer(&self.address, &caller, amount)?;
        // The deposit is gone; other reports against this server are moot.
        self.pending.retain(|_, p| p.server != server);
        ledger.emit(
            EventKind::PenaltyExecuted,
            vec![
                ("txn", txn.to_string()),
                ("serial", serial.to_string()),
                ("server", server.to_string()),
                ("beneficiary", caller.to_string()),
                ("amount", amount.to_string()),
            ],
        );
        Ok(Penalty {
            server,
            beneficiary: caller,
            amount,
        })
    }

    /// All four tables as text, one row per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "contract address={} next_txn={}", self.address, self.next_txn).unwrap();
        for u in self.users.values() {
            writeln!(out, "user initiator={} responder={} confirmed={}", u.initiator, u.responder, u.confirmed).unwrap();
        }
        for s in self.servers.values() {
            writeln!(out, "server address={} deposit={}", s.server, s.deposit).unwrap();
        }
        for r in self.services.values() {
            writeln!(
                out,
                "service txn={} serial={} device={} controller={} server={} price={} balance={} status={:?} decommissioned_at={}",
                r.txn,
                r.serial,
                r.device,
                r.controller,
                r.server,
                r.price,
                r.balance,
                r.status,
                r.decommissioned_at.map_or("-".to_string(), |h| h.to_string())
            )
            .unwrap();
        }
        for p in self.pending.values() {
            writeln!(
                out,
                "pending txn={} serial={} height={} reporter={} server={} packet=0x{}",
                p.txn,
                p.serial,
                p.report_height,
                p.reporter,
                p.server,
                hex::encode(&p.packet)
            )
            .unwrap();
        }
        out
    }
}
