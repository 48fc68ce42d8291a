//! Byte-exact building blocks shared by every participant and by the
//! contract: Keccak-256, recoverable signatures, the hash-chain cover stream,
//! the seeded byte selector and the user-side stream cipher.
//!
//! Everything here is a pure function.

mod cipher;
mod cover;
mod hash;
mod keys;
mod selector;

pub use cipher::{stream_decrypt, stream_encrypt, EncryptionKey};
pub use cover::{apply_cover, cover_byte_at, cover_stream, CoverKey};
pub use hash::{hash, hash_parts, Digest};
pub use keys::{
    derive_address, recover, sign, Address, SecretKey, Signature, ADDRESS_BYTES, SIGNATURE_BYTES,
};
pub use selector::{
    extract_bytes, select_indices, selector_word, CommitmentBytes, IndexList, SelectorSeed,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrimitiveError {
    #[error("secret key is zero or not below the group order")]
    InvalidSecretKey,
    #[error("malformed signature bytes")]
    MalformedSignature,
    #[error("public key recovery failed")]
    RecoveryFailed,
    #[error("malformed address")]
    MalformedAddress,
    #[error("malformed 256-bit key")]
    MalformedKey,
    #[error("packet length must be at least 1")]
    EmptyPacket,
    #[error("commitment length must be at least 1")]
    EmptyCommitment,
    #[error("index {index} out of range for packet of {len} bytes")]
    IndexOutOfRange { index: usize, len: usize },
}
