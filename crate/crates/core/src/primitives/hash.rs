use std::fmt;

use sha3::{Digest as _, Keccak256};

/// A 32-byte Keccak-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

/// Keccak-256 of `data` (the EVM's `keccak256`, which Solidity calls `sha3`).
pub fn hash(data: &[u8]) -> Digest {
    Digest(Keccak256::digest(data).into())
}

/// Keccak-256 over the concatenation of `parts` without allocating.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    let mut hasher = Keccak256::new();
    for part in parts {
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_keccak(data: &[u8]) -> [u8; 32] {
        use tiny_keccak::{Hasher, Keccak};
        let mut k = Keccak::v256();
        k.update(data);
        let mut out = [0u8; 32];
        k.finalize(&mut out);
        out
    }

    #[test]
    fn empty_input_matches_reference() {
        let expected = reference_keccak(&[]);
        assert_eq!(hash(&[]).0, expected);
        assert_eq!(
            hash(&[]).to_hex(),
            "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
        );
    }

    #[test]
    fn random_inputs_match_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let len = rng.gen_range(0..300);
            let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            assert_eq!(hash(&data).0, reference_keccak(&data));
        }
    }

    #[test]
    fn parts_equal_concatenation() {
        assert_eq!(hash_parts(&[b"ab", b"", b"cd"]), hash(b"abcd"));
    }

    #[test]
    fn single_bit_flip_changes_digest() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let len = rng.gen_range(1..128);
            let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let mut flipped = data.clone();
            let bit = rng.gen_range(0..len * 8);
            flipped[bit / 8] ^= 1 << (bit % 8);
            assert_eq!(hash(&data), hash(&data));
            assert_ne!(hash(&data), hash(&flipped));
        }
    }
}
