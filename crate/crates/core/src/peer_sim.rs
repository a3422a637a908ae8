//! Simulated peer ensemble: label corruption, lossy channels and the
//! co-association exchange.
//!
//! Every random draw is taken from a stream keyed by the model's seed and the
//! peer ids involved, so peers can be simulated in any order or in parallel
//! and still produce bit-identical results.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::coassoc::{build_local_ca, EnsembleCAMatrix, LocalCAMatrix};
use crate::error::{Error, Result};
use crate::learner::{KnnClassifier, Prediction};
use crate::neighbors::NeighborIndex;
use crate::seed;

/// Replaces a fraction `alpha` of a peer's output labels with random ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub alpha: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "noise level {alpha} outside [0, 1]"
            )));
        }
        Ok(Self { alpha, seed })
    }

    /// Number of positions rewritten in an `n`-item prediction.
    pub fn corrupted_count(&self, n: usize) -> usize {
        ((self.alpha * n as f64).round() as usize).min(n)
    }
}

/// Message loss between peers: a whole message is lost with
/// `peer_drop_prob`, otherwise each pair is lost with `pair_drop_prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub pair_drop_prob: f64,
    pub peer_drop_prob: f64,
    pub seed: u64,
}

impl ChannelModel {
    pub fn new(pair_drop_prob: f64, peer_drop_prob: f64, seed: u64) -> Result<Self> {
        for p in [pair_drop_prob, peer_drop_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "drop probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            pair_drop_prob,
            peer_drop_prob,
            seed,
        })
    }

    pub fn lossless() -> Self {
        Self {
            pair_drop_prob: 0.0,
            peer_drop_prob: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Peer {
    /// Absent for peers whose prediction was supplied directly.
    pub classifier: Option<KnnClassifier>,
    pub prediction: Prediction,
    pub local: LocalCAMatrix,
}

#[derive(Debug, Clone)]
pub struct PeerNetwork {
    pub peers: Vec<Peer>,
    pub channel: ChannelModel,
}

impl PeerNetwork {
    pub fn new(peers: Vec<Peer>, channel: ChannelModel) -> Result<Self> {
        let Some(first) = peers.first() else {
            return Err(Error::InvalidParameter(
                "a network needs at least one peer".into(),
            ));
        };
        let shape = first.local.shape();
        if let Some(p) = peers.iter().find(|p| p.local.shape() != shape) {
            return Err(Error::ShapeMismatch(format!(
                "peer {} matrix is {:?}, expected {:?}",
                p.prediction.peer_id,
                p.local.shape(),
                shape
            )));
        }
        Ok(Self { peers, channel })
    }

    /// Builds each peer's local matrix from its prediction over `index`.
    pub fn from_predictions(
        predictions: Vec<Prediction>,
        index: &NeighborIndex,
        channel: ChannelModel,
    ) -> Result<Self> {
        let peers = predictions
            .into_iter()
            .map(|prediction| {
                let local = build_local_ca(&prediction, index)?;
                Ok(Peer {
                    classifier: None,
                    prediction,
                    local,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(peers, channel)
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }
}

/// Overwrites exactly `round(alpha * n)` positions, chosen without
/// replacement, with labels drawn uniformly from `0..label_space`. A draw may
/// repeat the original label.
pub fn corrupt_labels(
    pred: &Prediction,
    noise: &NoiseModel,
    label_space: usize,
) -> Result<Prediction> {
    if label_space == 0 {
        return Err(Error::InvalidParameter("empty label space".into()));
    }
    if !(0.0..=1.0).contains(&noise.alpha) {
        return Err(Error::InvalidParameter(format!(
            "noise level {} outside [0, 1]",
            noise.alpha
        )));
    }
    let n = pred.len();
    let mut rng = seed::rng(noise.seed, &[seed::tag("noise"), pred.peer_id as u64]);
    let mut labels = pred.labels.clone();
    for pos in index::sample(&mut rng, n, noise.corrupted_count(n)) {
        labels[pos] = rng.random_range(0..label_space);
    }
    Prediction::new(pred.peer_id, labels, label_space.max(pred.label_space))
}

/// Which pairs of `sender`'s message reach `receiver`; `None` when the whole
/// message is lost.
pub fn delivery_mask(
    channel: &ChannelModel,
    receiver: usize,
    sender: usize,
    pairs: usize,
) -> Option<Vec<bool>> {
    if receiver == sender {
        return Some(vec![true; pairs]);
    }
    let mut rng = seed::rng(
        channel.seed,
        &[seed::tag("channel"), receiver as u64, sender as u64],
    );
    if channel.peer_drop_prob > 0.0 && rng.random_bool(channel.peer_drop_prob) {
        return None;
    }
    if channel.pair_drop_prob == 0.0 {
        return Some(vec![true; pairs]);
    }
    Some(
        (0..pairs)
            .map(|_| !rng.random_bool(channel.pair_drop_prob))
            .collect(),
    )
}

/// Every peer's view of the ensemble matrix after one exchange round.
///
/// Entry `r` of the result is what peer `r` assembled: its own matrix in full
/// plus whatever the channel let through from each other peer. Pairs nobody
/// delivered fall back to the receiver's own entry.
pub fn exchange(net: &PeerNetwork) -> Result<Vec<EnsembleCAMatrix>> {
    net.peers
        .par_iter()
        .enumerate()
        .map(|(r, receiver)| {
            let (n, k) = receiver.local.shape();
            let mut acc = EnsembleCAMatrix::for_owner(&receiver.local);
            for (s, sender) in net.peers.iter().enumerate() {
                if let Some(mask) = delivery_mask(&net.channel, r, s, n * k) {
                    acc.accumulate(&sender.local, &mask)?;
                }
            }
            Ok(acc)
        })
        .collect()
}
