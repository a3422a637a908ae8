//! Co-association matrices restricted to k-NN pairs.
//!
//! A peer's local matrix holds one bit per (item, neighbor slot): whether the
//! peer gave both items the same label. The ensemble matrix accumulates the
//! bits received from peers as a weight sum plus a message count per pair, and
//! averages lazily on lookup, so missing or partial messages only shrink the
//! denominator of the pairs they touch.

use crate::error::{Error, Result};
use crate::learner::Prediction;
use crate::neighbors::NeighborIndex;

/// Source of per-pair vote weights, addressed by (item, neighbor slot).
pub trait PairWeights {
    /// `(items, slots per item)`.
    fn shape(&self) -> (usize, usize);

    fn weight(&self, item: usize, slot: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCAMatrix {
    pub peer_id: usize,
    n: usize,
    k: usize,
    entries: Vec<bool>,
}

impl LocalCAMatrix {
    pub fn from_entries(peer_id: usize, n: usize, k: usize, entries: Vec<bool>) -> Result<Self> {
        if entries.len() != n * k {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {n}x{k} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            peer_id,
            n,
            k,
            entries,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    pub fn get(&self, item: usize, slot: usize) -> bool {
        self.entries[item * self.k + slot]
    }

    /// Entries in item-major, slot-minor order.
    pub fn entries(&self) -> &[bool] {
        &self.entries
    }
}

impl PairWeights for LocalCAMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    fn weight(&self, item: usize, slot: usize) -> f64 {
        if self.get(item, slot) {
            1.0
        } else {
            0.0
        }
    }
}

/// Marks each neighbor pair whose two items share a label in `pred`.
pub fn build_local_ca(pred: &Prediction, index: &NeighborIndex) -> Result<LocalCAMatrix> {
    if pred.len() != index.len() {
        return Err(Error::ShapeMismatch(format!(
            "prediction covers {} items, index has {}",
            pred.len(),
            index.len()
        )));
    }
    let k = index.k();
    let labels = &pred.labels;
    let entries = index
        .flat()
        .iter()
        .enumerate()
        .map(|(pos, &nb)| labels[pos / k] == labels[nb])
        .collect();
    LocalCAMatrix::from_entries(pred.peer_id, index.len(), k, entries)
}

/// Per-pair weight sums and message counts received by one peer.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCAMatrix {
    n: usize,
    k: usize,
    weight_sum: Vec<f64>,
    received: Vec<u32>,
    fallback: Option<Vec<bool>>,
}

impl EnsembleCAMatrix {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            weight_sum: vec![0.0; n * k],
            received: vec![0; n * k],
            fallback: None,
        }
    }

    /// An empty accumulator that answers pairs nobody reported with the
    /// owner's own entry.
    pub fn for_owner(own: &LocalCAMatrix) -> Self {
        let mut acc = Self::new(own.n, own.k);
        acc.fallback = Some(own.entries.clone());
        acc
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    /// Adds `local` on every pair where `delivered` is set.
    pub fn accumulate(&mut self, local: &LocalCAMatrix, delivered: &[bool]) -> Result<()> {
        if local.shape() != self.shape() {
            return Err(Error::ShapeMismatch(format!(
                "local {:?} vs ensemble {:?}",
                local.shape(),
                self.shape()
            )));
        }
        if delivered.len() != self.received.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask of {} entries for {} pairs",
                delivered.len(),
                self.received.len()
            )));
        }
        for (pos, (&bit, &ok)) in local.entries.iter().zip(delivered).enumerate() {
            if ok {
                self.received[pos] += 1;
                if bit {
                    self.weight_sum[pos] += 1.0;
                }
            }
        }
        Ok(())
    }

    pub fn accumulate_full(&mut self, local: &LocalCAMatrix) -> Result<()> {
        let all = vec![true; self.received.len()];
        self.accumulate(local, &all)
    }

    /// Averaged co-association of `item` with its `slot`-th neighbor.
    pub fn value(&self, item: usize, slot: usize) -> Result<f64> {
        if item >= self.n || slot >= self.k {
            return Err(Error::OutOfRange {
                index: item * self.k + slot,
                len: self.n * self.k,
            });
        }
        Ok(self.value_at(item * self.k + slot))
    }

    fn value_at(&self, pos: usize) -> f64 {
        match self.received[pos] {
            0 => match &self.fallback {
                Some(own) if own[pos] => 1.0,
                _ => 0.0,
            },
            count => self.weight_sum[pos] / count as f64,
        }
    }

    pub fn weight_sum(&self, item: usize, slot: usize) -> f64 {
        self.weight_sum[item * self.k + slot]
    }

    pub fn received_count(&self, item: usize, slot: usize) -> u32 {
        self.received[item * self.k + slot]
    }

    /// Message counts in item-major order.
    pub fn received_counts(&self) -> &[u32] {
        &self.received
    }

    pub fn weight_sums(&self) -> &[f64] {
        &self.weight_sum
    }
}

impl PairWeights for EnsembleCAMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    fn weight(&self, item: usize, slot: usize) -> f64 {
        self.value_at(item * self.k + slot)
    }
}

pub const WIRE_MAGIC: [u8; 4] = *b"LCAM";
pub const WIRE_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

/// Payload bytes needed for an `n x k` bit matrix.
pub fn payload_len(n: usize, k: usize) -> usize {
    (n * k).div_ceil(8)
}

/// Encodes a local matrix as a 16-byte header followed by a packed bitset.
///
/// Header (little-endian): magic `LCAM`, version `u16`, k `u16`, n `u32`,
/// peer id `u32`. Bit `i * k + j` sits in byte `(i * k + j) / 8` at bit
/// position `(i * k + j) % 8`, least significant bit first; unused trailing
/// bits are zero.
pub fn serialize(local: &LocalCAMatrix) -> Result<Vec<u8>> {
    let k = u16::try_from(local.k)
        .map_err(|_| Error::InvalidParameter(format!("k = {} does not fit the header", local.k)))?;
    let n = u32::try_from(local.n)
        .map_err(|_| Error::InvalidParameter(format!("n = {} does not fit the header", local.n)))?;
    let peer = u32::try_from(local.peer_id).map_err(|_| {
        Error::InvalidParameter(format!("peer id {} does not fit the header", local.peer_id))
    })?;

    let mut out = Vec::with_capacity(HEADER_LEN + payload_len(local.n, local.k));
    out.extend_from_slice(&WIRE_MAGIC);
    out.extend_from_slice(&WIRE_VERSION.to_le_bytes());
    out.extend_from_slice(&k.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&peer.to_le_bytes());
    for chunk in local.entries.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |b, (bit, &set)| b | ((set as u8) << bit));
        out.push(byte);
    }
    Ok(out)
}

/// Decodes a message produced by [`serialize`] for an `n x k` batch.
pub fn deserialize(bytes: &[u8], n: usize, k: usize) -> Result<LocalCAMatrix> {
    let expected = HEADER_LEN + payload_len(n, k);
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    if bytes[0..4] != WIRE_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != WIRE_VERSION {
        return Err(Error::BadVersion(version));
    }
    let hk = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let hn = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let peer_id = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if hk != k || hn != n {
        return Err(Error::HeaderMismatch(format!(
            "message is {hn}x{hk}, expected {n}x{k}"
        )));
    }
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::HeaderMismatch(format!(
            "{} trailing bytes",
            bytes.len() - expected
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    let entries = (0..n * k)
        .map(|b| payload[b / 8] >> (b % 8) & 1 == 1)
        .collect();
    LocalCAMatrix::from_entries(peer_id, n, k, entries)
}
