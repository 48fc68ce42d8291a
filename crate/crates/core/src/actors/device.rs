use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::contract::{verify_delivery, ReceiverCommitment, Signed};
use crate::primitives::{
    apply_cover, extract_bytes, select_indices, stream_decrypt, Address, CommitmentBytes,
    IndexList, SecretKey, Signature,
};

use super::{
    ActorError, CoveredFrame, DeviceBehavior, InspectionPredicate, PnRelease, ReceiverTx, Session,
    SessionKeys, Verdict,
};

#[derive(Debug, Clone)]
struct PendingPacket {
    covered: Vec<u8>,
    relay_sig: Signature,
    indices: IndexList,
    b_prime: CommitmentBytes,
}

/// Evidence the device hands to the contract's `reporting` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRequest {
    pub txn: u64,
    pub serial: u64,
    pub packet: Vec<u8>,
    pub relay_sig: Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    /// Cover key matched the sender's commitment; plaintext passed up.
    Delivered,
    /// No controller commitment accompanied the key; the middleware still
    /// sees the payload.
    Unattributed,
    /// Cover key inconsistent with the commitments; packet thrown away.
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finalized {
    pub serial: u64,
    pub delivery: Delivery,
    pub plaintext: Option<Vec<u8>>,
    pub verdict: Option<Verdict>,
    pub report: Option<ReportRequest>,
}

/// IoT device: filters by relay signature, commits on the covered packet,
/// uncovers with the released key, decrypts and inspects.
#[derive(Debug)]
pub struct Device {
    sk: SecretKey,
    keys: SessionKeys,
    session: Option<Session>,
    behavior: DeviceBehavior,
    predicate: Arc<dyn InspectionPredicate>,
    rng: ChaCha8Rng,
    window: usize,
    pending: BTreeMap<u64, PendingPacket>,
    last_serial: u64,
    dropped: usize,
    inspected: usize,
    reported_benign: bool,
}

impl Device {
    pub fn new(
        sk: SecretKey,
        keys: SessionKeys,
        behavior: DeviceBehavior,
        predicate: Arc<dyn InspectionPredicate>,
        rng: ChaCha8Rng,
    ) -> Self {
        Device {
            sk,
            keys,
            session: None,
            behavior,
            predicate,
            rng,
            window: 4,
            pending: BTreeMap::new(),
            last_serial: 0,
            dropped: 0,
            inspected: 0,
            reported_benign: false,
        }
    }

    /// Maximum number of covered packets awaiting a key. When full the device
    /// stops acknowledging new packets.
    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }

    pub fn address(&self) -> Address {
        self.sk.address()
    }

    pub fn bind(&mut self, session: Session) {
        self.session = Some(session);
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn inspected(&self) -> usize {
        self.inspected
    }

    pub fn awaiting_key(&self) -> usize {
        self.pending.len()
    }

    /// Accepts a covered frame from the commissioned relay and answers with
    /// `Tx(B′, Ra′)`. Frames from anyone else are dropped before any parsing.
    pub fn receive(&mut self, frame: CoveredFrame) -> Result<ReceiverTx, ActorError> {
        let session = self.session.ok_or(ActorError::NoSession)?;
        if frame.record.sender().ok() != Some(session.relay) {
            self.dropped += 1;
            return Err(ActorError::BadSender);
        }
        if frame.serial <= self.last_serial {
            self.dropped += 1;
            return Err(ActorError::SerialMismatch {
                expected: self.last_serial + 1,
                got: frame.serial,
            });
        }
        if self.pending.len() >= self.window {
            self.dropped += 1;
            return Err(ActorError::WindowFull);
        }
        let covered = frame.record.payload;
        let indices = select_indices(&self.keys.selector, frame.serial, session.commitment_len, covered.len())?;
        let mut b_prime = extract_bytes(&covered, &indices)?;
        if self.behavior == DeviceBehavior::CheatUser {
            b_prime = CommitmentBytes((0..b_prime.len()).map(|_| self.rng.gen()).collect());
        }
        self.last_serial = frame.serial;
        self.pending.insert(
            frame.serial,
            PendingPacket {
                covered,
                relay_sig: frame.record.sender_sig,
                indices: indices.clone(),
                b_prime: b_prime.clone(),
            },
        );
        Ok(Signed::sign(
            &self.sk,
            ReceiverCommitment {
                txn: session.txn,
                serial: frame.serial,
                bytes: b_prime,
                indices,
            },
        ))
    }

    /// Uncovers and decrypts with the released key, then inspects. Reports the
    /// relay when the middleware flags the payload.
    pub fn finalize(&mut self, release: PnRelease) -> Result<Finalized, ActorError> {
        let session = self.session.ok_or(ActorError::NoSession)?;
        let serial = release.serial();
        if release.reveal.signer().ok() != Some(session.relay) {
            self.dropped += 1;
            return Err(ActorError::BadSender);
        }
        let pending = self.pending.remove(&serial).ok_or(ActorError::UnknownSerial(serial))?;
        let pn = release.reveal.body.pn;

        let attributed = release
            .sender_commitment
            .as_ref()
            .filter(|tx| tx.body.serial == serial && tx.signer().ok() == Some(session.controller));
        let delivery = match attributed {
            Some(tx_b) => {
                let consistent = verify_delivery(&tx_b.body.bytes, &pending.b_prime, &pending.indices, &pn)
                    .unwrap_or(false);
                if consistent {
                    Delivery::Delivered
                } else {
                    Delivery::Discarded
                }
            }
            None => Delivery::Unattributed,
        };
        if delivery == Delivery::Discarded {
            return Ok(Finalized {
                serial,
                delivery,
                plaintext: None,
                verdict: None,
                report: None,
            });
        }

        let plaintext = stream_decrypt(&self.keys.encryption, serial, &apply_cover(&pending.covered, &pn));
        self.inspected += 1;
        let verdict = self.predicate.inspect(&plaintext);
        let false_accusation = self.behavior == DeviceBehavior::ReportBenign && !self.reported_benign;
        let report = if verdict == Verdict::Malicious || false_accusation {
            if false_accusation {
                self.reported_benign = true;
            }
            Some(ReportRequest {
                txn: session.txn,
                serial,
                packet: pending.covered.clone(),
                relay_sig: pending.relay_sig,
            })
        } else {
            None
        };
        Ok(Finalized {
            serial,
            delivery,
            plaintext: Some(plaintext),
            verdict: Some(verdict),
            report,
        })
    }

    /// What a device that never got the key could read: the covered bytes
    /// run through its own decryption.
    pub fn plaintext_without_key(&self, serial: u64) -> Option<Vec<u8>> {
        self.pending
            .get(&serial)
            .map(|p| stream_decrypt(&self.keys.encryption, serial, &p.covered))
    }

    /// Forgets a packet whose key never arrived.
    pub fn abandon(&mut self, serial: u64) -> bool {
        self.pending.remove(&serial).is_some()
    }
}
