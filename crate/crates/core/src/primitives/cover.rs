use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{hash, PrimitiveError};

/// 256-bit cover-stream key, stored big-endian. Counter arithmetic wraps
/// modulo 2^256.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CoverKey(pub [u8; 32]);

impl CoverKey {
    pub fn from_u64(v: u64) -> Self {
        let mut out = [0u8; 32];
        out[24..].copy_from_slice(&v.to_be_bytes());
        CoverKey(out)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        CoverKey(rng.gen())
    }

    /// `self + k mod 2^256`.
    pub fn wrapping_add(&self, k: u64) -> Self {
        let mut out = self.0;
        let mut carry = k as u128;
        for chunk in (0..4).rev() {
            if carry == 0 {
                break;
            }
            let range = chunk * 8..chunk * 8 + 8;
            let limb = u64::from_be_bytes(out[range.clone()].try_into().unwrap()) as u128;
            let sum = limb + carry;
            out[range].copy_from_slice(&(sum as u64).to_be_bytes());
            carry = sum >> 64;
        }
        CoverKey(out)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for CoverKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoverKey(0x{})", self.to_hex())
    }
}

impl fmt::Display for CoverKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl FromStr for CoverKey {
    type Err = PrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(raw).map_err(|_| PrimitiveError::MalformedKey)?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| PrimitiveError::MalformedKey)?;
        Ok(CoverKey(arr))
    }
}

/// Byte at zero-based position `k` of the cover stream: the first byte of
/// `hash(pn + k)`, with `pn + k` encoded as a 32-byte big-endian word.
pub fn cover_byte_at(pn: &CoverKey, k: u64) -> u8 {
    hash(&pn.wrapping_add(k).0).0[0]
}

/// `len` bytes of the cover stream starting at position `offset`.
pub fn cover_stream(pn: &CoverKey, offset: u64, len: usize) -> Vec<u8> {
    (0..len as u64).map(|i| cover_byte_at(pn, offset + i)).collect()
}

/// XOR `packet` with the cover stream of `pn`. Self-inverse.
pub fn apply_cover(packet: &[u8], pn: &CoverKey) -> Vec<u8> {
    packet
        .iter()
        .enumerate()
        .map(|(i, b)| b ^ cover_byte_at(pn, i as u64))
        .collect()
}
