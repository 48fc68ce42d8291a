use crate::contract::{SenderCommitment, Signed};
use crate::primitives::{extract_bytes, select_indices, stream_encrypt, Address, SecretKey};

use super::{ActorError, OutboundPacket, Session, SessionKeys, SignedRecord};

/// Sender side of the proof-of-delivery exchange.
#[derive(Debug)]
pub struct Controller {
    sk: SecretKey,
    keys: SessionKeys,
    session: Option<Session>,
    next_serial: u64,
}

impl Controller {
    pub fn new(sk: SecretKey, keys: SessionKeys) -> Self {
        Controller {
            sk,
            keys,
            session: None,
            next_serial: 1,
        }
    }

    pub fn address(&self) -> Address {
        self.sk.address()
    }

    pub fn bind(&mut self, session: Session) {
        self.session = Some(session);
    }

    pub fn next_serial(&self) -> u64 {
        self.next_serial
    }

    /// Encrypts `msg` for the next serial, commits to the selected bytes of
    /// the ciphertext, and signs both.
    pub fn send(&mut self, msg: &[u8]) -> Result<OutboundPacket, ActorError> {
        let session = self.session.ok_or(ActorError::NoSession)?;
        if msg.is_empty() {
            return Err(ActorError::EmptyMessage);
        }
        let serial = self.next_serial;
        let packet = stream_encrypt(&self.keys.encryption, serial, msg);
        let ra = select_indices(&self.keys.selector, serial, session.commitment_len, packet.len())?;
        let bytes = extract_bytes(&packet, &ra)?;
        let tx_b = Signed::sign(
            &self.sk,
            SenderCommitment {
                txn: session.txn,
                serial,
                bytes,
            },
        );
        self.next_serial += 1;
        Ok(OutboundPacket {
            serial,
            record: SignedRecord::sign(&self.sk, packet),
            tx_b,
        })
    }
}
