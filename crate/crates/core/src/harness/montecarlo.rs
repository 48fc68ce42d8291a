use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::actors::tamper;
use crate::contract::verify_delivery;
use crate::primitives::{cover_stream, extract_bytes, select_indices, CommitmentBytes, CoverKey, SelectorSeed};

/// Trials per independently seeded chunk. Fixed so results do not depend on
/// the worker count.
const CHUNK: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TamperMcError {
    #[error("packet length must be at least 1")]
    EmptyPacket,
    #[error("commitment length must be at least 1")]
    EmptyCommitment,
    #[error("cannot tamper {m} bytes of a {l}-byte packet")]
    TooManyTampered { m: usize, l: usize },
    #[error("packet length {0} exceeds the selector range")]
    PacketTooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TamperEstimate {
    pub l: usize,
    pub n: usize,
    pub m: usize,
    pub trials: u64,
    pub detected: u64,
}

impl TamperEstimate {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.detected as f64 / self.trials as f64
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "tamper-mc l={} n={} m={} trials={} detected={} rate={:.6}",
            self.l,
            self.n,
            self.m,
            self.trials,
            self.detected,
            self.rate()
        )
    }
}

/// Estimates how often `verify_delivery` rejects when a relay flips `m`
/// random bytes of an `l`-byte packet before covering it.
///
/// Each trial draws a fresh packet, selector seed, serial and tampering. A
/// chunk of trials shares one cover key, whose stream is computed once; the
/// device's commitment reads the covered tampered packet at the selected
/// positions from it.
pub fn monte_carlo_tamper(l: usize, n: usize, m: usize, trials: u64, seed: u64) -> Result<TamperEstimate, TamperMcError> {
    if l == 0 {
        return Err(TamperMcError::EmptyPacket);
    }
    if n == 0 {
        return Err(TamperMcError::EmptyCommitment);
    }
    if m > l {
        return Err(TamperMcError::TooManyTampered { m, l });
    }
    if l > 1 << 16 {
        return Err(TamperMcError::PacketTooLong(l));
    }
    let chunks = trials.div_ceil(CHUNK);
    let detected = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let pn = CoverKey::random(&mut rng);
            let cover = cover_stream(&pn, 0, l);
            let count = CHUNK.min(trials - c * CHUNK);
            (0..count).filter(|_| trial(&mut rng, &pn, &cover, n, m)).count() as u64
        })
        .sum();
    Ok(TamperEstimate { l, n, m, trials, detected })
}

fn trial(rng: &mut ChaCha8Rng, pn: &CoverKey, cover: &[u8], n: usize, m: usize) -> bool {
    let l = cover.len();
    let mut packet = vec![0u8; l];
    rng.fill(packet.as_mut_slice());
    let seed = SelectorSeed(rng.gen());
    let serial = rng.gen();
    let ra = select_indices(&seed, serial, n, l).expect("sizes validated");
    let b = extract_bytes(&packet, &ra).expect("indices in range");
    let mut tampered = packet;
    tamper(&mut tampered, m, rng);
    let b_prime = CommitmentBytes(
        ra.iter()
            .map(|i| tampered[i] ^ cover[i])
            .collect(),
    );
    !verify_delivery(&b, &b_prime, &ra, pn).expect("lengths agree")
}
