use crate::contract::{ReceiverCommitment, SenderCommitment, Signed, CoverKeyReveal};
use crate::primitives::{recover, sign, Address, EncryptionKey, PrimitiveError, SecretKey, SelectorSeed, Signature};

/// A relayed packet plus its sender's signature over the exact payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRecord {
    pub payload: Vec<u8>,
    pub sender_sig: Signature,
}

impl SignedRecord {
    pub fn sign(sk: &SecretKey, payload: Vec<u8>) -> Self {
        let sender_sig = sign(sk, &payload);
        SignedRecord { payload, sender_sig }
    }

    pub fn sender(&self) -> Result<Address, PrimitiveError> {
        recover(&self.payload, &self.sender_sig)
    }
}

/// Secrets shared by controller and device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionKeys {
    pub encryption: EncryptionKey,
    pub selector: SelectorSeed,
}

/// The commissioned relationship every actor is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Session {
    pub txn: u64,
    pub device: Address,
    pub controller: Address,
    pub relay: Address,
    pub commitment_len: usize,
}

/// Controller → relay: the encrypted packet and `Tx(B)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutboundPacket {
    pub serial: u64,
    pub record: SignedRecord,
    pub tx_b: Signed<SenderCommitment>,
}

/// Relay → device: the covered packet, signed by the relay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveredFrame {
    pub serial: u64,
    pub record: SignedRecord,
}

/// Relay → device: the revealed cover key. Honest relays attach the sender's
/// commitment so the device can check the key before using it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnRelease {
    pub reveal: Signed<CoverKeyReveal>,
    pub sender_commitment: Option<Signed<SenderCommitment>>,
}

impl PnRelease {
    pub fn serial(&self) -> u64 {
        self.reveal.body.serial
    }
}

/// Device → relay.
pub type ReceiverTx = Signed<ReceiverCommitment>;
