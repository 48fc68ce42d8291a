use std::fmt;
use std::str::FromStr;

use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};

use super::{hash, PrimitiveError};

pub const ADDRESS_BYTES: usize = 20;
pub const SIGNATURE_BYTES: usize = 65;

/// 20-byte account identifier: the last 20 bytes of the hash of the
/// uncompressed public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub [u8; ADDRESS_BYTES]);

impl Address {
    /// Fixed address for a named system account (e.g. the contract).
    pub fn from_label(label: &str) -> Self {
        let digest = hash(label.as_bytes());
        let mut out = [0u8; ADDRESS_BYTES];
        out.copy_from_slice(&digest.0[32 - ADDRESS_BYTES..]);
        Address(out)
    }

    pub fn short(&self) -> String {
        format!("0x{}", hex::encode(&self.0[..4]))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = PrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(raw).map_err(|_| PrimitiveError::MalformedAddress)?;
        let arr: [u8; ADDRESS_BYTES] =
            bytes.try_into().map_err(|_| PrimitiveError::MalformedAddress)?;
        Ok(Address(arr))
    }
}

/// A secp256k1 signing key.
#[derive(Clone)]
pub struct SecretKey(SigningKey);

impl SecretKey {
    /// Rejects the zero scalar and scalars at or above the group order.
    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, PrimitiveError> {
        SigningKey::from_bytes(bytes.into())
            .map(SecretKey)
            .map_err(|_| PrimitiveError::InvalidSecretKey)
    }

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        SecretKey(SigningKey::random(rng))
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes().into()
    }

    pub fn address(&self) -> Address {
        address_of(self.0.verifying_key())
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({})", self.address())
    }
}

/// Address owned by `sk`.
pub fn derive_address(sk: &SecretKey) -> Address {
    sk.address()
}

fn address_of(vk: &VerifyingKey) -> Address {
    let point = vk.to_encoded_point(false);
    // Skip the 0x04 SEC1 tag.
    let digest = hash(&point.as_bytes()[1..]);
    let mut out = [0u8; ADDRESS_BYTES];
    out.copy_from_slice(&digest.0[32 - ADDRESS_BYTES..]);
    Address(out)
}

/// Recoverable signature laid out as `r ‖ s ‖ v` with `v ∈ {0, 1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIGNATURE_BYTES]);

impl Signature {
    pub fn from_slice(bytes: &[u8]) -> Result<Self, PrimitiveError> {
        let arr: [u8; SIGNATURE_BYTES] =
            bytes.try_into().map_err(|_| PrimitiveError::MalformedSignature)?;
        Ok(Signature(arr))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature(0x{}..)", hex::encode(&self.0[..6]))
    }
}

impl FromStr for Signature {
    type Err = PrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(raw).map_err(|_| PrimitiveError::MalformedSignature)?;
        Signature::from_slice(&bytes)
    }
}

/// Deterministic (RFC 6979) recoverable signature over `hash(message)`.
pub fn sign(sk: &SecretKey, message: &[u8]) -> Signature {
    let prehash = hash(message);
    let (sig, recid) = sk
        .0
        .sign_prehash_recoverable(prehash.as_bytes())
        .expect("prehash is exactly 32 bytes");
    let mut out = [0u8; SIGNATURE_BYTES];
    out[..64].copy_from_slice(&sig.to_bytes());
    out[64] = recid.to_byte();
    Signature(out)
}

/// Address of whoever produced `sig` over `message`.
///
/// A tampered message or signature recovers some unrelated key or fails
/// outright; both outcomes mean the evidence does not bind the claimed signer.
pub fn recover(message: &[u8], sig: &Signature) -> Result<Address, PrimitiveError> {
    let prehash = hash(message);
    let ecdsa = EcdsaSignature::from_slice(&sig.0[..64])
        .map_err(|_| PrimitiveError::MalformedSignature)?;
    let recid = RecoveryId::from_byte(sig.0[64]).ok_or(PrimitiveError::MalformedSignature)?;
    let vk = VerifyingKey::recover_from_prehash(prehash.as_bytes(), &ecdsa, recid)
        .map_err(|_| PrimitiveError::RecoveryFailed)?;
    Ok(address_of(&vk))
}
