use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::contract::{verify_delivery, CoverKeyReveal, ProofTriple, SenderCommitment, Signed};
use crate::primitives::{apply_cover, Address, CoverKey, SecretKey, Signature};

use super::{ActorError, CoveredFrame, OutboundPacket, PnRelease, ReceiverTx, RelayBehavior, Session, SignedRecord};

#[derive(Debug, Clone)]
struct CacheEntry {
    pn: CoverKey,
    tx_b: Option<Signed<SenderCommitment>>,
    tx_b_prime: Option<ReceiverTx>,
    verified: bool,
}

/// What the relay can show in its defence for one serial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RebutEvidence {
    pub sender_sig: Signature,
    pub pn: CoverKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Release {
    Released(PnRelease),
    Withheld { serial: u64 },
}

/// Relay server: covers packets, caches commitments, releases cover keys and
/// cashes out the newest proof.
#[derive(Debug)]
pub struct Relay {
    sk: SecretKey,
    behavior: RelayBehavior,
    session: Option<Session>,
    rng: ChaCha8Rng,
    cache: BTreeMap<u64, CacheEntry>,
    evidence: BTreeMap<u64, RebutEvidence>,
    settled: u64,
    dropped: usize,
}

impl Relay {
    pub fn new(sk: SecretKey, behavior: RelayBehavior, rng: ChaCha8Rng) -> Self {
        Relay {
            sk,
            behavior,
            session: None,
            rng,
            cache: BTreeMap::new(),
            evidence: BTreeMap::new(),
            settled: 0,
            dropped: 0,
        }
    }

    pub fn address(&self) -> Address {
        self.sk.address()
    }

    pub fn behavior(&self) -> RelayBehavior {
        self.behavior
    }

    pub fn bind(&mut self, session: Session) {
        self.session = Some(session);
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn settled_watermark(&self) -> u64 {
        self.settled
    }

    fn session(&self) -> Result<Session, ActorError> {
        self.session.ok_or(ActorError::NoSession)
    }

    fn cover_and_sign(&mut self, serial: u64, packet: &[u8], pn: CoverKey) -> CoveredFrame {
        let covered = apply_cover(packet, &pn);
        CoveredFrame {
            serial,
            record: SignedRecord::sign(&self.sk, covered),
        }
    }

    /// Checks the controller's signatures, draws a fresh cover key, covers
    /// the packet and caches `(Tx(B), PN)` under its serial.
    pub fn forward(&mut self, pkt: OutboundPacket) -> Result<CoveredFrame, ActorError> {
        let session = self.session()?;
        let from = pkt.record.sender().ok();
        let committed_by = pkt.tx_b.signer().ok();
        if from != Some(session.controller) || committed_by != Some(session.controller) {
            self.dropped += 1;
            return Err(ActorError::BadSender);
        }
        if pkt.tx_b.body.serial != pkt.serial || pkt.tx_b.body.txn != session.txn {
            self.dropped += 1;
            return Err(ActorError::SerialMismatch {
                expected: pkt.serial,
                got: pkt.tx_b.body.serial,
            });
        }
        let pn = CoverKey::random(&mut self.rng);
        if let RelayBehavior::Inject { at_serial } = self.behavior {
            if pkt.serial == at_serial {
                return Ok(self.inject(pkt.serial, pn));
            }
        }
        let mut packet = pkt.record.payload.clone();
        if let RelayBehavior::Tamper(m) = self.behavior {
            tamper(&mut packet, m, &mut self.rng);
        }
        self.evidence.insert(
            pkt.serial,
            RebutEvidence {
                sender_sig: pkt.record.sender_sig,
                pn,
            },
        );
        self.cache.insert(
            pkt.serial,
            CacheEntry {
                pn,
                tx_b: Some(pkt.tx_b),
                tx_b_prime: None,
                verified: false,
            },
        );
        Ok(self.cover_and_sign(pkt.serial, &packet, pn))
    }

    /// Substitutes a fabricated payload for the controller's packet. There is
    /// no controller signature for it, so the only evidence the relay can
    /// offer later is its own.
    fn inject(&mut self, serial: u64, pn: CoverKey) -> CoveredFrame {
        let len = self.rng.gen_range(48..96);
        let mut payload = b"\x7fELF/bin/busybox MIRAI ".to_vec();
        payload.extend((payload.len()..len).map(|_| self.rng.gen::<u8>()));
        self.evidence.insert(
            serial,
            RebutEvidence {
                sender_sig: crate::primitives::sign(&self.sk, &payload),
                pn,
            },
        );
        self.cache.insert(
            serial,
            CacheEntry {
                pn,
                tx_b: None,
                tx_b_prime: None,
                verified: false,
            },
        );
        self.cover_and_sign(serial, &payload, pn)
    }

    /// Verifies `Tx(B)` against `Tx(B′, Ra′)` with the cached cover key and
    /// releases the key only if the check passes.
    pub fn verify_and_release(&mut self, tx_b_prime: ReceiverTx) -> Result<Release, ActorError> {
        let session = self.session()?;
        let serial = tx_b_prime.body.serial;
        if tx_b_prime.signer().ok() != Some(session.device) {
            self.dropped += 1;
            return Err(ActorError::BadSender);
        }
        let entry = self.cache.get_mut(&serial).ok_or(ActorError::UnknownSerial(serial))?;
        let verified = match &entry.tx_b {
            Some(tx_b) => verify_delivery(
                &tx_b.body.bytes,
                &tx_b_prime.body.bytes,
                &tx_b_prime.body.indices,
                &entry.pn,
            )
            .unwrap_or(false),
            None => false,
        };
        entry.verified = verified;
        entry.tx_b_prime = Some(tx_b_prime);
        let pn = entry.pn;
        let tx_b = entry.tx_b.clone();

        let release = match self.behavior {
            RelayBehavior::WithholdPn => false,
            // The injecting relay wants its payload read, proof or not.
            RelayBehavior::Inject { at_serial } if at_serial == serial => true,
            _ => verified,
        };
        if !release {
            return Ok(Release::Withheld { serial });
        }
        let reveal = Signed::sign(
            &self.sk,
            CoverKeyReveal {
                txn: session.txn,
                serial,
                pn,
            },
        );
        Ok(Release::Released(PnRelease {
            reveal,
            sender_commitment: tx_b,
        }))
    }

    /// Serial of the newest verified proof above the settled watermark.
    pub fn cashable_serial(&self) -> Option<u64> {
        self.cache
            .iter()
            .rev()
            .find(|(s, e)| **s > self.settled && e.verified)
            .map(|(s, _)| *s)
    }

    /// Builds the proof for the newest verified packet. Older proofs are
    /// implied by the serial difference and never submitted.
    pub fn cash_out(&self, txn: u64) -> Result<ProofTriple, ActorError> {
        let session = self.session()?;
        if txn != session.txn {
            return Err(ActorError::NoSession);
        }
        let serial = self.cashable_serial().ok_or(ActorError::NothingToCash)?;
        let entry = &self.cache[&serial];
        let tx_b = entry.tx_b.clone().expect("verified entries carry Tx(B)");
        let tx_b_prime = entry.tx_b_prime.clone().expect("verified entries carry Tx(B')");
        Ok(ProofTriple {
            serial,
            tx_b,
            tx_b_prime,
            tx_pn: Signed::sign(
                &self.sk,
                CoverKeyReveal {
                    txn,
                    serial,
                    pn: entry.pn,
                },
            ),
        })
    }

    /// Records a successful settlement and prunes proofs at or below it,
    /// keeping the newest.
    pub fn mark_settled(&mut self, serial: u64) {
        self.settled = self.settled.max(serial);
        let newest = self.cache.keys().next_back().copied();
        self.cache.retain(|s, _| *s > serial || Some(*s) == newest);
    }

    pub fn rebut_evidence(&self, serial: u64) -> Option<&RebutEvidence> {
        self.evidence.get(&serial)
    }
}

/// XORs `m` distinct random positions of `packet` with nonzero masks.
pub fn tamper<R: Rng + ?Sized>(packet: &mut [u8], m: usize, rng: &mut R) {
    let m = m.min(packet.len());
    for i in rand::seq::index::sample(rng, packet.len(), m).iter() {
        packet[i] ^= rng.gen_range(1..=255u8);
    }
}
