use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::contract::{Contract, ContractConfig, ContractError, Signed, CoverKeyReveal};
use crate::ledger::Ledger;
use crate::primitives::{EncryptionKey, SecretKey, SelectorSeed};

const PRICE: u128 = 2;

struct World {
    ledger: Ledger,
    contract: Contract,
    controller: Controller,
    relay: Relay,
    device: Device,
    txn: u64,
}

fn keys() -> SessionKeys {
    SessionKeys {
        encryption: EncryptionKey([7; 32]),
        selector: SelectorSeed([9; 32]),
    }
}

fn world_with(relay_behavior: RelayBehavior, device_behavior: DeviceBehavior) -> World {
    let d = SecretKey::from_bytes(&[1; 32]).unwrap();
    let c = SecretKey::from_bytes(&[2; 32]).unwrap();
    let r = SecretKey::from_bytes(&[3; 32]).unwrap();
    let (da, ca, ra) = (d.address(), c.address(), r.address());

    let mut ledger = Ledger::default();
    let mut contract = Contract::deploy(&mut ledger, ContractConfig::default()).unwrap();
    for (a, amount) in [(da, 100_000), (ca, 1_000), (ra, 2_000_000)] {
        ledger.create_account(a).unwrap();
        ledger.mint(&a, amount).unwrap();
    }
    contract.reg_user(&mut ledger, da, ca).unwrap();
    contract.reg_user(&mut ledger, ca, da).unwrap();
    contract.reg_server(&mut ledger, ra, 1_000_000).unwrap();
    let rec = contract.service_select(&mut ledger, da, da, ca, ra, PRICE, 50_000).unwrap();
    contract.service_confirm(&mut ledger, ra, rec.txn).unwrap();

    let session = Session {
        txn: rec.txn,
        device: da,
        controller: ca,
        relay: ra,
        commitment_len: 32,
    };
    let mut controller = Controller::new(c, keys());
    let mut relay = Relay::new(r, relay_behavior, ChaCha8Rng::seed_from_u64(11));
    let mut device = Device::new(
        d,
        keys(),
        device_behavior,
        Arc::new(CommandGrammar),
        ChaCha8Rng::seed_from_u64(12),
    );
    controller.bind(session);
    relay.bind(session);
    device.bind(session);
    World {
        ledger,
        contract,
        controller,
        relay,
        device,
        txn: rec.txn,
    }
}

fn world() -> World {
    world_with(RelayBehavior::Honest, DeviceBehavior::Honest)
}

fn command(i: u64) -> Vec<u8> {
    format!("CMD set-level {i:06} padding-to-make-the-packet-long-enough").into_bytes()
}

impl World {
    fn exchange(&mut self, msg: &[u8]) -> Result<Finalized, ActorError> {
        let out = self.controller.send(msg)?;
        let frame = self.relay.forward(out)?;
        let tx = self.device.receive(frame)?;
        match self.relay.verify_and_release(tx)? {
            Release::Released(rel) => self.device.finalize(rel),
            Release::Withheld { serial } => Err(ActorError::UnknownSerial(serial)),
        }
    }

    fn settle(&mut self) -> Result<u128, ContractError> {
        let proof = self.relay.cash_out(self.txn).expect("cashable proof");
        let paid = self.contract.settle(&mut self.ledger, self.relay.address(), &proof, self.txn)?;
        self.relay.mark_settled(proof.serial);
        Ok(paid)
    }
}

#[test]
fn controller_refuses_empty_message() {
    let mut w = world();
    assert_eq!(w.controller.send(b""), Err(ActorError::EmptyMessage));
    assert_eq!(w.controller.next_serial(), 1);
}

#[test]
fn unbound_controller_has_no_session() {
    let mut c = Controller::new(SecretKey::from_bytes(&[2; 32]).unwrap(), keys());
    assert_eq!(c.send(b"CMD x"), Err(ActorError::NoSession));
}

#[test]
fn hundred_byte_message_commits_thirty_two_bytes() {
    let mut w = world();
    let out = w.controller.send(&[b'a'; 100]).unwrap();
    assert_eq!(out.record.payload.len(), 100);
    assert_eq!(out.tx_b.body.bytes.len(), 32);
    assert_eq!(out.serial, 1);
    assert_eq!(w.controller.next_serial(), 2);
}

#[test]
fn same_message_differs_across_serials() {
    let mut w = world();
    let a = w.controller.send(b"CMD identical").unwrap();
    let b = w.controller.send(b"CMD identical").unwrap();
    assert_ne!(a.record.payload, b.record.payload);
    assert_eq!((a.serial, b.serial), (1, 2));
}

#[test]
fn honest_exchange_delivers_plaintext() {
    let mut w = world();
    let f = w.exchange(&command(1)).unwrap();
    assert_eq!(f.delivery, Delivery::Delivered);
    assert_eq!(f.plaintext.as_deref(), Some(command(1).as_slice()));
    assert_eq!(f.verdict, Some(Verdict::Benign));
    assert!(f.report.is_none());
    assert_eq!(w.device.inspected(), 1);
}

#[test]
fn device_drops_frames_not_signed_by_relay() {
    let mut w = world();
    let out = w.controller.send(&command(1)).unwrap();
    let stranger = SecretKey::from_bytes(&[44; 32]).unwrap();
    let forged = CoveredFrame {
        serial: out.serial,
        record: SignedRecord::sign(&stranger, out.record.payload.clone()),
    };
    assert_eq!(w.device.receive(forged), Err(ActorError::BadSender));
    assert_eq!(w.device.dropped(), 1);
    assert_eq!(w.device.inspected(), 0);
    assert_eq!(w.device.awaiting_key(), 0);
}

#[test]
fn relay_drops_packets_not_signed_by_controller() {
    let mut w = world();
    let mut out = w.controller.send(&command(1)).unwrap();
    let stranger = SecretKey::from_bytes(&[44; 32]).unwrap();
    out.record = SignedRecord::sign(&stranger, out.record.payload.clone());
    assert_eq!(w.relay.forward(out), Err(ActorError::BadSender));
    assert_eq!(w.relay.dropped(), 1);
}

#[test]
fn wrong_cover_key_is_discarded_uninspected() {
    let mut w = world();
    let out = w.controller.send(&command(1)).unwrap();
    let frame = w.relay.forward(out).unwrap();
    let tx = w.device.receive(frame).unwrap();
    let Release::Released(mut rel) = w.relay.verify_and_release(tx).unwrap() else {
        panic!("honest relay withheld");
    };
    let wrong = rel.reveal.body.pn.wrapping_add(1);
    rel.reveal = Signed::sign(
        &SecretKey::from_bytes(&[3; 32]).unwrap(),
        CoverKeyReveal { pn: wrong, ..rel.reveal.body.clone() },
    );
    let f = w.device.finalize(rel).unwrap();
    assert_eq!(f.delivery, Delivery::Discarded);
    assert!(f.plaintext.is_none());
    assert_eq!(w.device.inspected(), 0);
}

#[test]
fn window_full_refuses_new_packets() {
    let mut w = world();
    w.device = std::mem::replace(
        &mut w.device,
        Device::new(
            SecretKey::from_bytes(&[1; 32]).unwrap(),
            keys(),
            DeviceBehavior::Honest,
            Arc::new(AcceptAll),
            ChaCha8Rng::seed_from_u64(0),
        ),
    )
    .with_window(2);
    for i in 1..=2 {
        let out = w.controller.send(&command(i)).unwrap();
        let frame = w.relay.forward(out).unwrap();
        w.device.receive(frame).unwrap();
    }
    let out = w.controller.send(&command(3)).unwrap();
    let frame = w.relay.forward(out).unwrap();
    assert_eq!(w.device.receive(frame), Err(ActorError::WindowFull));
    assert!(w.device.abandon(1));
    assert_eq!(w.device.awaiting_key(), 1);
}

#[test]
fn cash_out_after_thousand_packets_pays_thousand_times_price() {
    let mut w = world();
    for i in 1..=1000 {
        w.exchange(&command(i)).unwrap();
    }
    let device_before = w.ledger.balance(&w.device.address()).unwrap();
    let relay_before = w.ledger.balance(&w.relay.address()).unwrap();
    assert_eq!(w.settle().unwrap(), 1000 * PRICE);
    assert_eq!(w.ledger.balance(&w.relay.address()).unwrap(), relay_before + 2000);
    assert_eq!(w.ledger.balance(&w.device.address()).unwrap(), device_before);
    assert_eq!(w.contract.service(w.txn).unwrap().balance, 50_000 - 2000);
    assert!(w.contract.escrow_consistent(&w.ledger));
}

#[test]
fn replaying_a_settled_proof_is_stale() {
    let mut w = world();
    for i in 1..=5 {
        w.exchange(&command(i)).unwrap();
    }
    let proof = w.relay.cash_out(w.txn).unwrap();
    let ra = w.relay.address();
    assert_eq!(w.contract.settle(&mut w.ledger, ra, &proof, w.txn), Ok(10));
    let again = w.contract.settle(&mut w.ledger, ra, &proof, w.txn);
    assert!(matches!(again, Err(ContractError::StaleSerial { .. })));
    w.relay.mark_settled(proof.serial);
    assert_eq!(w.relay.cash_out(w.txn), Err(ActorError::NothingToCash));
}

#[test]
fn interleaved_settlements_pay_for_the_difference() {
    let mut w = world();
    for i in 1..=10 {
        w.exchange(&command(i)).unwrap();
    }
    assert_eq!(w.settle().unwrap(), 10 * PRICE);
    for i in 11..=25 {
        w.exchange(&command(i)).unwrap();
    }
    assert_eq!(w.settle().unwrap(), 15 * PRICE);
    assert_eq!(w.contract.service(w.txn).unwrap().serial, 25);
}

#[test]
fn relay_verdict_matches_contract_across_random_exchanges() {
    let mut w = world();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ra = w.relay.address();
    for i in 1..=1000u64 {
        let len = rng.gen_range(1..=300);
        let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let out = w.controller.send(&msg).unwrap();
        let frame = w.relay.forward(out).unwrap();
        let tx = w.device.receive(frame).unwrap();
        let released = matches!(w.relay.verify_and_release(tx).unwrap(), Release::Released(_));
        assert!(released);
        w.device.abandon(i);
        if i % 100 == 0 {
            let proof = w.relay.cash_out(w.txn).unwrap();
            assert_eq!(w.contract.settle(&mut w.ledger, ra, &proof, w.txn), Ok(100 * PRICE));
            w.relay.mark_settled(proof.serial);
        }
    }
}

#[test]
fn serials_stay_in_lockstep() {
    let mut w = world();
    for i in 1..=20 {
        let f = w.exchange(&command(i)).unwrap();
        assert_eq!(f.serial, i);
        assert_eq!(w.controller.next_serial(), i + 1);
    }
}

#[test]
fn cheating_device_gets_nothing_and_pays_nothing() {
    let mut w = world_with(RelayBehavior::Honest, DeviceBehavior::CheatUser);
    let out = w.controller.send(&command(1)).unwrap();
    let frame = w.relay.forward(out).unwrap();
    let tx = w.device.receive(frame).unwrap();
    assert_eq!(
        w.relay.verify_and_release(tx).unwrap(),
        Release::Withheld { serial: 1 }
    );
    assert_eq!(w.relay.cash_out(w.txn), Err(ActorError::NothingToCash));
    let garbled = w.device.plaintext_without_key(1).unwrap();
    assert_ne!(garbled, command(1));
}

#[test]
fn withholding_relay_never_releases() {
    let mut w = world_with(RelayBehavior::WithholdPn, DeviceBehavior::Honest);
    let out = w.controller.send(&command(1)).unwrap();
    let frame = w.relay.forward(out).unwrap();
    let tx = w.device.receive(frame).unwrap();
    assert_eq!(
        w.relay.verify_and_release(tx).unwrap(),
        Release::Withheld { serial: 1 }
    );
    assert_eq!(w.relay.cashable_serial(), Some(1));
}

#[test]
fn injected_payload_is_unattributed_and_reported() {
    let mut w = world_with(RelayBehavior::Inject { at_serial: 2 }, DeviceBehavior::Honest);
    assert_eq!(w.exchange(&command(1)).unwrap().delivery, Delivery::Delivered);
    let f = w.exchange(&command(2)).unwrap();
    assert_eq!(f.delivery, Delivery::Unattributed);
    assert_eq!(f.verdict, Some(Verdict::Malicious));
    let report = f.report.unwrap();
    assert_eq!(report.serial, 2);
    let da = w.device.address();
    w.contract
        .reporting(&mut w.ledger, da, report.txn, report.serial, &report.packet, &report.relay_sig)
        .unwrap();
    let ev = w.relay.rebut_evidence(2).unwrap().clone();
    let ra = w.relay.address();
    let outcome = w.contract.rebutting(&mut w.ledger, ra, w.txn, 2, &ev.sender_sig, &ev.pn).unwrap();
    assert_eq!(outcome, crate::contract::RebutOutcome::Failed);
}

#[test]
fn benign_report_is_rebutted() {
    let mut w = world_with(RelayBehavior::Honest, DeviceBehavior::ReportBenign);
    let f = w.exchange(&command(1)).unwrap();
    assert_eq!(f.verdict, Some(Verdict::Benign));
    let report = f.report.unwrap();
    let da = w.device.address();
    w.contract
        .reporting(&mut w.ledger, da, report.txn, report.serial, &report.packet, &report.relay_sig)
        .unwrap();
    let ev = w.relay.rebut_evidence(1).unwrap().clone();
    let ra = w.relay.address();
    let outcome = w.contract.rebutting(&mut w.ledger, ra, w.txn, 1, &ev.sender_sig, &ev.pn).unwrap();
    assert_eq!(outcome, crate::contract::RebutOutcome::Rebutted);
    assert!(w.exchange(&command(2)).unwrap().report.is_none());
}

#[test]
fn behavior_profiles_parse_and_print() {
    for s in ["honest", "tamper(3)", "inject(7)", "withhold_pn"] {
        let b: RelayBehavior = s.parse().unwrap();
        assert_eq!(b.to_string(), s);
    }
    assert_eq!("inject".parse::<RelayBehavior>(), Ok(RelayBehavior::Inject { at_serial: 1 }));
    assert!("tamper(x)".parse::<RelayBehavior>().is_err());
    assert!("sneaky".parse::<RelayBehavior>().is_err());
    for s in ["honest", "cheat_user", "report_benign"] {
        let b: DeviceBehavior = s.parse().unwrap();
        assert_eq!(b.to_string(), s);
    }
}

#[test]
fn tamper_flips_exactly_m_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in [0, 1, 3, 50] {
        let orig: Vec<u8> = (0..100).map(|_| rng.gen()).collect();
        let mut p = orig.clone();
        tamper(&mut p, m, &mut rng);
        assert_eq!(orig.iter().zip(&p).filter(|(a, b)| a != b).count(), m);
    }
}
