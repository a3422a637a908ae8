//! Label refinement by co-association weighted voting, plus the plain
//! voter-model aggregators it is compared against.
//!
//! Each refinement sweep relabels every item with the label that collects the
//! largest total weight among its k nearest neighbors, where a neighbor's vote
//! counts with the ensemble co-association of the pair. All items read the
//! labels of the previous sweep (synchronous update). When the current label
//! is among the maximizers it is kept, which also covers items whose
//! neighbors all carry zero weight; otherwise the lowest tied label id wins.
//! Scores within a relative [`TIE_TOLERANCE`] of the maximum count as tied,
//! so sums that agree in exact arithmetic (1/3 + 1/3 against 2/3) tie.

use crate::coassoc::PairWeights;
use crate::error::{Error, Result};
use crate::learner::Prediction;
use crate::neighbors::NeighborIndex;

pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementConfig {
    /// Upper bound on sweeps.
    pub max_iters: usize,
    /// Stop once a sweep changes less than this fraction of labels.
    pub convergence_epsilon: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            convergence_epsilon: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub prediction: Prediction,
    /// Sweeps performed.
    pub iterations: usize,
    /// Fraction of labels changed by the last sweep.
    pub changed_fraction: f64,
}

fn check_shapes<W: PairWeights + ?Sized>(
    n: usize,
    weights: &W,
    index: &NeighborIndex,
) -> Result<()> {
    if n != index.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n} labels for an index of {} items",
            index.len()
        )));
    }
    if weights.shape() != (index.len(), index.k()) {
        return Err(Error::ShapeMismatch(format!(
            "weights {:?} vs index ({}, {})",
            weights.shape(),
            index.len(),
            index.k()
        )));
    }
    Ok(())
}

/// One synchronous sweep. `labels` must lie in `0..label_space`.
pub fn sweep<W: PairWeights + ?Sized>(
    labels: &[usize],
    label_space: usize,
    weights: &W,
    index: &NeighborIndex,
) -> Result<Vec<usize>> {
    check_shapes(labels.len(), weights, index)?;
    let mut scores = vec![0.0f64; label_space];
    let mut touched: Vec<usize> = Vec::with_capacity(index.k());
    let mut next = Vec::with_capacity(labels.len());

    for (item, &current) in labels.iter().enumerate() {
        for (slot, &nb) in index.row(item).iter().enumerate() {
            let l = labels[nb];
            if !touched.contains(&l) {
                touched.push(l);
            }
            scores[l] += weights.weight(item, slot);
        }
        let best = touched.iter().map(|&l| scores[l]).fold(0.0, f64::max);
        let floor = best - best * TIE_TOLERANCE;
        let chosen = if scores[current] >= floor {
            current
        } else {
            touched
                .iter()
                .copied()
                .filter(|&l| scores[l] >= floor)
                .min()
                .expect("a maximizer exists")
        };
        next.push(chosen);
        for l in touched.drain(..) {
            scores[l] = 0.0;
        }
    }
    Ok(next)
}

/// Iterates [`sweep`] from `y0` until fewer than
/// `convergence_epsilon * n` labels change or `max_iters` sweeps ran.
pub fn refine<W: PairWeights + ?Sized>(
    y0: &Prediction,
    weights: &W,
    index: &NeighborIndex,
    cfg: &RefinementConfig,
) -> Result<Refinement> {
    if y0.is_empty() {
        return Err(Error::InvalidParameter("nothing to refine".into()));
    }
    if cfg.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "max_iters must be at least 1".into(),
        ));
    }
    check_shapes(y0.len(), weights, index)?;

    let n = y0.len() as f64;
    let mut labels = y0.labels.clone();
    let mut iterations = 0;
    let mut changed_fraction = 0.0;
    while iterations < cfg.max_iters {
        let next = sweep(&labels, y0.label_space, weights, index)?;
        let changed = next.iter().zip(&labels).filter(|(a, b)| a != b).count();
        labels = next;
        iterations += 1;
        changed_fraction = changed as f64 / n;
        if changed_fraction < cfg.convergence_epsilon {
            break;
        }
    }
    Ok(Refinement {
        prediction: Prediction {
            peer_id: y0.peer_id,
            labels,
            label_space: y0.label_space,
        },
        iterations,
        changed_fraction,
    })
}

/// Per-item plurality across predictions; ties go to the lowest label id.
/// The result carries the first prediction's peer id.
pub fn voter_model(preds: &[Prediction]) -> Result<Prediction> {
    let Some(first) = preds.first() else {
        return Err(Error::InvalidParameter("no predictions to vote on".into()));
    };
    for p in preds {
        if p.label_space != first.label_space {
            return Err(Error::LabelSpaceMismatch(first.label_space, p.label_space));
        }
        if p.len() != first.len() {
            return Err(Error::ShapeMismatch(format!(
                "predictions of {} and {} items",
                first.len(),
                p.len()
            )));
        }
    }
    let mut counts = vec![0usize; first.label_space];
    let labels = (0..first.len())
        .map(|i| {
            counts.iter_mut().for_each(|c| *c = 0);
            for p in preds {
                counts[p.labels[i]] += 1;
            }
            let best = *counts.iter().max().expect("nonempty label space");
            counts.iter().position(|&c| c == best).expect("max exists")
        })
        .collect();
    Ok(Prediction {
        peer_id: first.peer_id,
        labels,
        label_space: first.label_space,
    })
}

/// Voter model over the peers' refined predictions.
pub fn lr_vm(refined: &[Prediction]) -> Result<Prediction> {
    voter_model(refined)
}
