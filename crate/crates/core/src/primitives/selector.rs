use super::{hash_parts, PrimitiveError};

/// Secret shared by controller and device that drives the byte selector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SelectorSeed(pub [u8; 32]);

/// Ordered byte positions chosen for one packet. Duplicates are allowed.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct IndexList(pub Vec<u16>);

impl IndexList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }
}

/// The `n` bytes picked out of a packet by an [`IndexList`].
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct CommitmentBytes(pub Vec<u8>);

impl CommitmentBytes {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Raw 16-bit selector output `j` for packet `serial`.
pub fn selector_word(seed: &SelectorSeed, serial: u64, j: u32) -> u16 {
    let d = hash_parts(&[&seed.0, &serial.to_be_bytes(), &j.to_be_bytes()]);
    u16::from_be_bytes([d.0[0], d.0[1]])
}

/// `n` positions for a packet of length `l`: each is a 16-bit word from the
/// seeded generator reduced modulo `l`.
pub fn select_indices(
    seed: &SelectorSeed,
    serial: u64,
    n: usize,
    l: usize,
) -> Result<IndexList, PrimitiveError> {
    if l == 0 {
        return Err(PrimitiveError::EmptyPacket);
    }
    if n == 0 {
        return Err(PrimitiveError::EmptyCommitment);
    }
    let indices = (0..n as u32)
        .map(|j| {
            let word = selector_word(seed, serial, j) as usize;
            (word % l) as u16
        })
        .collect();
    Ok(IndexList(indices))
}

/// Bytes of `packet` at each position of `ra`, in list order.
pub fn extract_bytes(packet: &[u8], ra: &IndexList) -> Result<CommitmentBytes, PrimitiveError> {
    ra.iter()
        .map(|i| {
            packet.get(i).copied().ok_or(PrimitiveError::IndexOutOfRange {
                index: i,
                len: packet.len(),
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(CommitmentBytes)
}
