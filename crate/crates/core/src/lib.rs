//! Noise-resilient ensemble classification through co-association label refinement.
//!
//! A group of weak classifiers ("peers") labels the same batch of items. Each
//! peer turns its prediction into a binary co-association matrix restricted to
//! the k nearest neighbors of every item, the peers exchange those matrices,
//! and each peer averages what it received into an ensemble matrix. A peer then
//! refines its own labels with a weighted vote over each item's neighbors,
//! using the ensemble matrix as vote weights. Because only weights travel
//! between peers, corrupted or mismatched label spaces cannot contaminate
//! another peer's labels directly.
//!
//! Module map:
//!
//! * [`dataset`]: CSV loading, z-normalization, stratified disjoint sampling.
//! * [`neighbors`]: exact k-NN index over the test batch.
//! * [`learner`]: k-NN weak learners, predictions and label fusion.
//! * [`coassoc`]: local and ensemble co-association matrices, wire format.
//! * [`peer_sim`]: label corruption, lossy channels and matrix exchange.
//! * [`refine`]: the weighted-vote refinement and the VM / LR+VM aggregators.

pub mod coassoc;
pub mod dataset;
mod error;
pub mod learner;
pub mod neighbors;
pub mod peer_sim;
pub mod refine;
pub mod seed;

pub use coassoc::{build_local_ca, EnsembleCAMatrix, LocalCAMatrix, PairWeights};
pub use dataset::{Dataset, RawDataset, SamplingConfig};
pub use error::{Error, Result};
pub use learner::{fuse_labels, KnnClassifier, LabelMapping, Prediction};
pub use neighbors::NeighborIndex;
pub use peer_sim::{corrupt_labels, exchange, ChannelModel, NoiseModel, Peer, PeerNetwork};
pub use refine::{lr_vm, refine, voter_model, Refinement, RefinementConfig};

/// Fraction of positions where `predicted` equals `truth`.
///
/// Returns 0 for empty inputs; panics if the lengths differ.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "accuracy: length mismatch");
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
