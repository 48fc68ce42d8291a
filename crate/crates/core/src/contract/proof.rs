use crate::primitives::{
    recover, sign, Address, CommitmentBytes, CoverKey, IndexList, PrimitiveError, SecretKey,
    Signature,
};

/// Canonical byte encoding of a transaction body, the exact bytes that get
/// signed.
pub trait Encode {
    fn encode(&self) -> Vec<u8>;
}

/// A body plus its signer's recoverable signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signed<T> {
    pub body: T,
    pub sig: Signature,
}

impl<T: Encode> Signed<T> {
    pub fn sign(sk: &SecretKey, body: T) -> Self {
        let sig = sign(sk, &body.encode());
        Signed { body, sig }
    }

    pub fn signer(&self) -> Result<Address, PrimitiveError> {
        recover(&self.body.encode(), &self.sig)
    }
}

fn header(tag: &[u8], txn: u64, serial: u64, cap: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(tag.len() + 16 + cap);
    out.extend_from_slice(tag);
    out.extend_from_slice(&txn.to_be_bytes());
    out.extend_from_slice(&serial.to_be_bytes());
    out
}

/// `Tx(B)`: the sender's selected bytes of the uncovered packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderCommitment {
    pub txn: u64,
    pub serial: u64,
    pub bytes: CommitmentBytes,
}

impl Encode for SenderCommitment {
    fn encode(&self) -> Vec<u8> {
        let mut out = header(b"rsiot/commit-sender\0", self.txn, self.serial, 4 + self.bytes.len());
        out.extend_from_slice(&(self.bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.bytes.0);
        out
    }
}

/// `Tx(B′, Ra′)`: the receiver's selected bytes of the covered packet and the
/// index list it used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverCommitment {
    pub txn: u64,
    pub serial: u64,
    pub bytes: CommitmentBytes,
    pub indices: IndexList,
}

impl Encode for ReceiverCommitment {
    fn encode(&self) -> Vec<u8> {
        let mut out = header(
            b"rsiot/commit-receiver\0",
            self.txn,
            self.serial,
            8 + self.bytes.len() + 2 * self.indices.len(),
        );
        out.extend_from_slice(&(self.bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.bytes.0);
        out.extend_from_slice(&(self.indices.len() as u32).to_be_bytes());
        for i in &self.indices.0 {
            out.extend_from_slice(&i.to_be_bytes());
        }
        out
    }
}

/// `Tx(PN)`: the relay's revelation of the cover key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverKeyReveal {
    pub txn: u64,
    pub serial: u64,
    pub pn: CoverKey,
}

impl Encode for CoverKeyReveal {
    fn encode(&self) -> Vec<u8> {
        let mut out = header(b"rsiot/cover-key\0", self.txn, self.serial, 32);
        out.extend_from_slice(&self.pn.0);
        out
    }
}

/// The three signed commitments that prove delivery of packet `serial`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTriple {
    pub serial: u64,
    pub tx_b: Signed<SenderCommitment>,
    pub tx_b_prime: Signed<ReceiverCommitment>,
    pub tx_pn: Signed<CoverKeyReveal>,
}

impl ProofTriple {
    /// True when all three bodies name the same `txn` and `serial`.
    pub fn is_consistent(&self, txn: u64) -> bool {
        let s = self.serial;
        self.tx_b.body.txn == txn
            && self.tx_b_prime.body.txn == txn
            && self.tx_pn.body.txn == txn
            && self.tx_b.body.serial == s
            && self.tx_b_prime.body.serial == s
            && self.tx_pn.body.serial == s
    }
}
