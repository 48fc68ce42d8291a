use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::actors::{
    AcceptAll, ActorError, CommandGrammar, Controller, CoveredFrame, Delivery, Device, Finalized,
    InspectionPredicate, OutboundPacket, PnRelease, ReceiverTx, Relay, RelayBehavior, Release,
    Session, SessionKeys, COMMAND_PREFIX,
};
use crate::contract::{Contract, ContractConfig, ContractError, RebutOutcome, Txn};
use crate::ledger::{Amount, GasTable, Ledger, LedgerError};
use crate::primitives::{select_indices, EncryptionKey, SecretKey, SelectorSeed};

use super::scenario::{PayloadClass, Phase, Scenario, ScenarioError};
use super::scheduler::Scheduler;

const CONTROLLER: u8 = 0;
const RELAY: u8 = 1;
const DEVICE: u8 = 2;
const TICKS_PER_PACKET: u64 = 8;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("gas table: {0}")]
    GasTable(#[from] LedgerError),
    #[error("setup call failed: {0}")]
    Setup(#[from] ContractError),
}

#[derive(Debug)]
enum Msg {
    Send,
    Forward(OutboundPacket),
    Deliver(CoveredFrame),
    Commit(ReceiverTx),
    Reveal(PnRelease),
    Rebut { serial: u64 },
    CashOut,
}

/// Measured end state of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub relay_revenue: Amount,
    pub device_refund: Amount,
    pub penalty: Amount,
    pub server_registered: bool,
    pub reselect_blocked: bool,
    pub settlements: u64,
    pub reports_filed: u64,
    pub rebutted: u64,
    pub rebut_failed: u64,
    pub delivered: u64,
    pub unattributed: u64,
    pub discarded: u64,
    pub withheld: u64,
    pub dropped: u64,
    pub plaintext_mismatches: u64,
    pub lockstep_violations: u64,
    pub escrow_violations: u64,
    pub total_gas: u64,
    pub commit_gas: u64,
    pub balance_deltas: Vec<(&'static str, i128)>,
    pub escrow_delta: i128,
}

impl Outcome {
    pub fn delta(&self, role: &str) -> Option<i128> {
        self.balance_deltas.iter().find(|(r, _)| *r == role).map(|(_, d)| *d)
    }

    /// Sum of every participant's balance change plus the escrow's.
    pub fn net_flow(&self) -> i128 {
        self.balance_deltas.iter().map(|(_, d)| d).sum::<i128>() + self.escrow_delta
    }

    fn lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "outcome relay_revenue={} device_refund={} penalty={} server_registered={} reselect_blocked={} settlements={}",
            self.relay_revenue, self.device_refund, self.penalty, self.server_registered, self.reselect_blocked, self.settlements
        )];
        out.push(format!(
            "outcome reports_filed={} rebutted={} rebut_failed={} delivered={} unattributed={} discarded={} withheld={} dropped={}",
            self.reports_filed, self.rebutted, self.rebut_failed, self.delivered, self.unattributed, self.discarded, self.withheld, self.dropped
        ));
        out.push(format!(
            "outcome plaintext_mismatches={} lockstep_violations={} escrow_violations={} total_gas={} commit_gas={} net_flow={}",
            self.plaintext_mismatches, self.lockstep_violations, self.escrow_violations, self.total_gas, self.commit_gas, self.net_flow()
        ));
        out
    }
}

/// Ordered record of one run plus its measured outcome and verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub scenario: String,
    pub seed: u64,
    pub lines: Vec<String>,
    pub outcome: Outcome,
    /// Expectations or invariants that did not hold; empty means pass.
    pub failures: Vec<String>,
}

impl Transcript {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for line in &self.lines {
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

struct Sim {
    ledger: Ledger,
    contract: Contract,
    controller: Controller,
    relay: Relay,
    device: Device,
    relay_behavior: RelayBehavior,
    session: Session,
    keys: SessionKeys,
    sched: Scheduler<Msg>,
    traffic_rng: ChaCha8Rng,
    sent: BTreeMap<u64, Vec<u8>>,
    lines: Vec<String>,
    marks: (usize, usize, usize),
    out: Outcome,
    scenario: Scenario,
}

/// Executes a scenario end to end and checks its expectations.
pub fn run(scenario: &Scenario) -> Result<Transcript, RunError> {
    scenario.validate()?;
    let gas_table = match &scenario.gas.table {
        Some(path) => GasTable::load(path)?,
        None => GasTable::default(),
    };
    let relay_behavior = scenario.actors.relay_behavior()?;
    let device_behavior = scenario.actors.device_behavior()?;
    let predicate: Arc<dyn InspectionPredicate> = match scenario.actors.predicate.as_str() {
        "accept_all" => Arc::new(AcceptAll),
        _ => Arc::new(CommandGrammar),
    };

    let mut master = ChaCha8Rng::seed_from_u64(scenario.seed);
    let d_sk = SecretKey::random(&mut master);
    let c_sk = SecretKey::random(&mut master);
    let r_sk = SecretKey::random(&mut master);
    let keys = SessionKeys {
        encryption: EncryptionKey(master.gen()),
        selector: SelectorSeed(master.gen()),
    };
    let relay_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let device_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let traffic_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let (da, ca, ra) = (d_sk.address(), c_sk.address(), r_sk.address());

    let mut ledger = Ledger::new(gas_table);
    let eco = &scenario.economics;
    let config = ContractConfig {
        min_deposit: eco.min_deposit.into(),
        grace_period: scenario.timing.grace_period,
        billing_window: scenario.timing.billing_window,
        commitment_len: scenario.traffic.commitment_len,
    };
    let contract = Contract::deploy(&mut ledger, config)?;
    for (a, amount) in [(da, eco.fund_device), (ca, eco.fund_controller), (ra, eco.fund_relay)] {
        ledger.create_account(a)?;
        ledger.mint(&a, amount.into())?;
    }

    let mut lines = vec![format!("scenario name={} seed={}", scenario.name, scenario.seed)];
    let gt = ledger.gas_table();
    lines.push(format!(
        "gas-table gas_price_wei={} ether_usd={} block_gas_limit={}",
        gt.gas_price_wei, gt.ether_usd, gt.block_gas_limit
    ));
    lines.push(format!("actor role=controller address={ca}"));
    lines.push(format!("actor role=relay address={ra} behavior={relay_behavior}"));
    lines.push(format!(
        "actor role=device address={da} behavior={device_behavior} predicate={}",
        predicate.name()
    ));
    lines.push(format!("actor role=contract address={}", contract.address()));

    let session = Session {
        txn: 0,
        device: da,
        controller: ca,
        relay: ra,
        commitment_len: scenario.traffic.commitment_len,
    };
    let mut sim = Sim {
        controller: Controller::new(c_sk, keys),
        relay: Relay::new(r_sk, relay_behavior, relay_rng),
        device: Device::new(d_sk, keys, device_behavior, predicate, device_rng).with_window(scenario.actors.window),
        relay_behavior,
        session,
        keys,
        sched: Scheduler::new(),
        traffic_rng,
        sent: BTreeMap::new(),
        lines,
        marks: (0, 0, 0),
        out: Outcome::default(),
        scenario: scenario.clone(),
        ledger,
        contract,
    };
    sim.sync();
    let start = sim.balances();
    sim.lines.extend(start.iter().map(|(role, b)| format!("balance role={role} start={b}")));

    sim.registration()?;
    if scenario.traffic.stop_after != Phase::Registration {
        sim.commission()?;
        if scenario.traffic.stop_after == Phase::Full {
            sim.traffic();
            sim.arbitration();
            sim.teardown();
        }
    }
    Ok(sim.finish(start))
}

impl Sim {
    fn txn(&self) -> Txn {
        self.session.txn
    }

    fn balances(&self) -> Vec<(&'static str, Amount)> {
        let s = &self.session;
        [
            ("controller", s.controller),
            ("relay", s.relay),
            ("device", s.device),
            ("contract", self.contract.address()),
        ]
        .into_iter()
        .map(|(role, a)| (role, self.ledger.balance(&a).unwrap_or(0)))
        .collect()
    }

    /// Appends new contract calls, receipts and ledger events to the
    /// transcript and checks escrow backing and supply conservation.
    fn sync(&mut self) {
        let (t, r, e) = self.marks;
        let trace = self.contract.trace();
        let receipts = self.ledger.receipts();
        let events = self.ledger.events();
        self.lines.extend(trace[t..].iter().map(|c| c.to_line()));
        self.lines.extend(receipts[r..].iter().map(|x| x.to_line()));
        self.lines.extend(events[e..].iter().map(|x| x.to_line()));
        self.marks = (trace.len(), receipts.len(), events.len());
        let conserved = self.ledger.total_balances() == self.ledger.total_minted();
        if !self.contract.escrow_consistent(&self.ledger) || !conserved {
            self.out.escrow_violations += 1;
            self.lines.push(format!("violation height={} escrow_or_supply", self.ledger.height()));
        }
    }

    fn msg(&mut self, from: &str, to: &str, kind: &str, serial: u64, detail: String) {
        let tick = self.sched.now();
        self.lines.push(format!("msg tick={tick} from={from} to={to} kind={kind} serial={serial} {detail}"));
    }

    fn registration(&mut self) -> Result<(), RunError> {
        let Session { device, controller, relay, .. } = self.session;
        let deposit = self.scenario.economics.deposit.into();
        let r = self.contract.reg_user(&mut self.ledger, device, controller);
        self.sync();
        r?;
        let r = self.contract.reg_user(&mut self.ledger, controller, device);
        self.sync();
        r?;
        let r = self.contract.reg_server(&mut self.ledger, relay, deposit);
        self.sync();
        r?;
        Ok(())
    }

    /// Request, quote round, select, confirm; then binds every actor.
    fn commission(&mut self) -> Result<(), RunError> {
        let Session { device, controller, relay, .. } = self.session;
        let eco = self.scenario.economics.clone();
        let r = self.contract.service_request(&mut self.ledger, device, device, controller);
        self.sync();
        r?;
        let r = self.contract.offer_quote(&mut self.ledger, relay, device, eco.price.into());
        self.sync();
        r?;
        let r = self.contract.service_select(&mut self.ledger, device, device, controller, relay, eco.price.into(), eco.prepaid.into());
        self.sync();
        let record = r?;
        let r = self.contract.service_confirm(&mut self.ledger, relay, record.txn);
        self.sync();
        r?;
        self.session.txn = record.txn;
        self.controller.bind(self.session);
        self.relay.bind(self.session);
        self.device.bind(self.session);
        Ok(())
    }

    fn message(&mut self) -> Vec<u8> {
        let t = &self.scenario.traffic;
        let len = self.traffic_rng.gen_range(t.min_size..=t.max_size);
        match t.payload {
            PayloadClass::Random => (0..len).map(|_| self.traffic_rng.gen()).collect(),
            PayloadClass::Command => {
                let mut m = COMMAND_PREFIX.to_vec();
                m.extend((COMMAND_PREFIX.len()..len).map(|_| self.traffic_rng.gen_range(0x20..0x7fu8)));
                m
            }
        }
    }

    fn traffic(&mut self) {
        for i in 0..self.scenario.traffic.packets {
            self.sched.schedule(i * TICKS_PER_PACKET, CONTROLLER, Msg::Send);
        }
        self.drain();
        self.sched.schedule(1, RELAY, Msg::CashOut);
        self.drain();
    }

    fn drain(&mut self) {
        while let Some((_, _, msg)) = self.sched.pop() {
            self.handle(msg);
        }
    }

    fn handle(&mut self, msg: Msg) {
        match msg {
            Msg::Send => {
                self.ledger.advance_blocks(self.scenario.timing.blocks_per_packet);
                let m = self.message();
                match self.controller.send(&m) {
                    Ok(pkt) => {
                        self.msg("controller", "relay", "packet", pkt.serial, format!("bytes={}", m.len()));
                        self.sent.insert(pkt.serial, m);
                        self.sched.schedule(1, RELAY, Msg::Forward(pkt));
                    }
                    Err(e) => self.refused("controller", 0, e),
                }
            }
            Msg::Forward(pkt) => {
                let serial = pkt.serial;
                match self.relay.forward(pkt) {
                    Ok(frame) => {
                        self.msg("relay", "device", "covered", serial, format!("bytes={}", frame.record.payload.len()));
                        self.sched.schedule(1, DEVICE, Msg::Deliver(frame));
                    }
                    Err(e) => self.refused("relay", serial, e),
                }
            }
            Msg::Deliver(frame) => {
                let serial = frame.serial;
                let len = frame.record.payload.len();
                match self.device.receive(frame) {
                    Ok(tx) => {
                        let expected = select_indices(&self.keys.selector, serial, self.session.commitment_len, len);
                        if expected.as_ref().ok() != Some(&tx.body.indices) {
                            self.out.lockstep_violations += 1;
                        }
                        self.msg("device", "relay", "commitment", serial, format!("n={}", tx.body.bytes.len()));
                        self.sched.schedule(1, RELAY, Msg::Commit(tx));
                    }
                    Err(e) => self.refused("device", serial, e),
                }
            }
            Msg::Commit(tx) => {
                let serial = tx.body.serial;
                match self.relay.verify_and_release(tx) {
                    Ok(Release::Released(rel)) => {
                        self.msg("relay", "device", "cover_key", serial, format!("pn={}", rel.reveal.body.pn));
                        self.sched.schedule(1, DEVICE, Msg::Reveal(rel));
                    }
                    Ok(Release::Withheld { serial }) => {
                        self.out.withheld += 1;
                        self.msg("relay", "device", "withheld", serial, String::new());
                    }
                    Err(e) => self.refused("relay", serial, e),
                }
                let every = self.scenario.traffic.settle_every;
                if every > 0 && serial % every == 0 {
                    self.sched.schedule(1, RELAY, Msg::CashOut);
                }
            }
            Msg::Reveal(rel) => {
                let serial = rel.serial();
                match self.device.finalize(rel) {
                    Ok(f) => self.finalized(f),
                    Err(e) => self.refused("device", serial, e),
                }
            }
            Msg::Rebut { serial } => self.rebut(serial),
            Msg::CashOut => self.cash_out(),
        }
    }

    fn refused(&mut self, who: &str, serial: u64, e: ActorError) {
        if matches!(e, ActorError::BadSender | ActorError::WindowFull | ActorError::SerialMismatch { .. }) {
            self.out.dropped += 1;
        }
        let tick = self.sched.now();
        self.lines.push(format!("drop tick={tick} actor={who} serial={serial} reason={:?}", e.to_string()));
    }

    fn finalized(&mut self, f: Finalized) {
        let verdict = f.verdict.map_or("-".to_string(), |v| format!("{v:?}").to_lowercase());
        let tick = self.sched.now();
        self.lines.push(format!(
            "deliver tick={tick} serial={} status={:?} verdict={verdict}",
            f.serial, f.delivery
        ));
        match f.delivery {
            Delivery::Delivered => {
                self.out.delivered += 1;
                if f.plaintext.as_ref() != self.sent.get(&f.serial) {
                    self.out.plaintext_mismatches += 1;
                }
            }
            Delivery::Unattributed => self.out.unattributed += 1,
            Delivery::Discarded => self.out.discarded += 1,
        }
        if let Some(report) = f.report {
            let device = self.session.device;
            let r = self.contract.reporting(
                &mut self.ledger,
                device,
                report.txn,
                report.serial,
                &report.packet,
                &report.relay_sig,
            );
            self.sync();
            if r.is_ok() {
                self.out.reports_filed += 1;
                self.sched.schedule(1, RELAY, Msg::Rebut { serial: report.serial });
            }
        }
    }

    /// The accused relay answers with whatever evidence it kept.
    fn rebut(&mut self, serial: u64) {
        let Some(ev) = self.relay.rebut_evidence(serial).cloned() else {
            return;
        };
        let (relay, txn) = (self.session.relay, self.txn());
        let r = self.contract.rebutting(&mut self.ledger, relay, txn, serial, &ev.sender_sig, &ev.pn);
        self.sync();
        match r {
            Ok(RebutOutcome::Rebutted) => self.out.rebutted += 1,
            Ok(RebutOutcome::Failed) => self.out.rebut_failed += 1,
            Err(_) => {}
        }
    }

    /// Settles the newest proof. The settlement publishes the cover key, so a
    /// device still holding that packet can open it from the ledger.
    fn cash_out(&mut self) {
        let proof = match self.relay.cash_out(self.txn()) {
            Ok(p) => p,
            Err(e) => {
                self.refused("relay", 0, e);
                return;
            }
        };
        let (relay, txn) = (self.session.relay, self.txn());
        let r = self.contract.settle(&mut self.ledger, relay, &proof, txn);
        self.sync();
        if let Ok(paid) = r {
            self.out.relay_revenue += paid;
            self.out.settlements += 1;
            self.relay.mark_settled(proof.serial);
            if self.device.plaintext_without_key(proof.serial).is_some() {
                let rel = PnRelease {
                    reveal: proof.tx_pn,
                    sender_commitment: Some(proof.tx_b),
                };
                self.msg("ledger", "device", "settled_key", proof.serial, String::new());
                self.sched.schedule(1, DEVICE, Msg::Reveal(rel));
            }
        }
    }

    /// Lets every standing report outlive the grace period, then executes it.
    fn arbitration(&mut self) {
        let device = self.session.device;
        let standing: Vec<(Txn, u64)> = self
            .contract
            .pending_reports()
            .filter(|p| p.reporter == device)
            .map(|p| (p.txn, p.serial))
            .collect();
        if standing.is_empty() {
            return;
        }
        self.ledger.advance_blocks(self.scenario.timing.grace_period + 1);
        for (txn, serial) in standing {
            if self.contract.pending_report(txn, serial).is_none() {
                continue;
            }
            let r = self.contract.execute(&mut self.ledger, device, txn, serial);
            self.sync();
            if let Ok(p) = r {
                self.out.penalty += p.amount;
            }
        }
    }

    fn teardown(&mut self) {
        let Session { device, controller, relay, .. } = self.session;
        self.out.server_registered = self.contract.server_info(&relay).is_some();
        if !self.out.server_registered {
            let price = self.scenario.economics.price.into();
            let r = self.contract.service_select(&mut self.ledger, device, device, controller, relay, price, 0);
            self.sync();
            self.out.reselect_blocked = r.is_err();
        }
        if self.scenario.timing.decommission {
            let txn = self.txn();
            let r = self.contract.decommission(&mut self.ledger, device, txn);
            self.sync();
            if r.is_ok() {
                self.ledger.advance_blocks(self.scenario.timing.billing_window);
                let closed = self.contract.process_expired(&mut self.ledger);
                self.sync();
                if let Ok(closed) = closed {
                    self.out.device_refund += closed.iter().filter(|(t, _)| *t == txn).map(|(_, a)| a).sum::<Amount>();
                }
            }
        }
    }

    fn finish(mut self, start: Vec<(&'static str, Amount)>) -> Transcript {
        if self.scenario.traffic.stop_after != Phase::Full {
            self.out.server_registered = self.contract.server_info(&self.session.relay).is_some();
        }
        self.out.total_gas = self.ledger.total_gas();
        self.out.commit_gas = self
            .ledger
            .receipts()
            .iter()
            .filter(|r| r.operation.starts_with("commitment."))
            .map(|r| r.gas)
            .sum();
        let end = self.balances();
        for ((role, a), (_, b)) in start.iter().zip(&end) {
            let delta = *b as i128 - *a as i128;
            if *role == "contract" {
                self.out.escrow_delta = delta;
            } else {
                self.out.balance_deltas.push((role, delta));
            }
            self.lines.push(format!("balance role={role} end={b} delta={delta}"));
        }
        self.lines.push(format!("ledger height={} total_gas={}", self.ledger.height(), self.out.total_gas));
        self.lines.extend(self.contract.dump().lines().map(|l| format!("state {l}")));
        self.lines.extend(self.out.lines());

        let failures = check(&self.scenario, self.relay_behavior, &self.out);
        let verdict = if failures.is_empty() { "pass".to_string() } else { format!("fail {}", failures.join("; ")) };
        self.lines.push(format!("verdict {verdict}"));
        Transcript {
            scenario: self.scenario.name.clone(),
            seed: self.scenario.seed,
            lines: self.lines,
            outcome: self.out,
            failures,
        }
    }
}

fn check(scenario: &Scenario, relay: RelayBehavior, out: &Outcome) -> Vec<String> {
    let mut failures = Vec::new();
    let mut want = |name: &str, expected: Option<String>, got: String| {
        if let Some(e) = expected {
            if e != got {
                failures.push(format!("{name}: expected {e}, got {got}"));
            }
        }
    };
    let x = &scenario.expect;
    want("relay_revenue", x.relay_revenue.map(|v| v.to_string()), out.relay_revenue.to_string());
    want("device_refund", x.device_refund.map(|v| v.to_string()), out.device_refund.to_string());
    want("penalty", x.penalty.map(|v| v.to_string()), out.penalty.to_string());
    want("server_registered", x.server_registered.map(|v| v.to_string()), out.server_registered.to_string());
    want("reselect_blocked", x.reselect_blocked.map(|v| v.to_string()), out.reselect_blocked.to_string());
    want("reports_filed", x.reports_filed.map(|v| v.to_string()), out.reports_filed.to_string());
    want("rebutted", x.rebutted.map(|v| v.to_string()), out.rebutted.to_string());
    want("delivered", x.delivered.map(|v| v.to_string()), out.delivered.to_string());
    want("total_gas", x.total_gas.map(|v| v.to_string()), out.total_gas.to_string());
    want("commit_gas", x.commit_gas.map(|v| v.to_string()), out.commit_gas.to_string());
    want(
        "relay_balance_delta",
        x.relay_balance_delta.map(|v| v.to_string()),
        out.delta("relay").unwrap_or(0).to_string(),
    );
    if let Some(min) = x.min_withheld {
        if out.withheld < min {
            failures.push(format!("withheld: expected at least {min}, got {}", out.withheld));
        }
    }
    if out.escrow_violations > 0 {
        failures.push(format!("escrow or supply mismatch at {} steps", out.escrow_violations));
    }
    if out.net_flow() != 0 {
        failures.push(format!("balance deltas do not net to zero: {}", out.net_flow()));
    }
    if out.lockstep_violations > 0 {
        failures.push(format!("selector lockstep broken {} times", out.lockstep_violations));
    }
    if !matches!(relay, RelayBehavior::Tamper(_)) && out.plaintext_mismatches > 0 {
        failures.push(format!("{} delivered plaintexts differ from what was sent", out.plaintext_mismatches));
    }
    failures
}
