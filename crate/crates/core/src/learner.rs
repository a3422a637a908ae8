//! k-NN weak learners and their predictions.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::squared_distance;

/// Default number of training neighbors consulted per query.
pub const DEFAULT_VOTE_K: usize = 3;

/// A peer's labeling of the batch.
///
/// Label ids range over `0..label_space`; peers with heterogeneous label
/// definitions simply carry different `label_space` sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub peer_id: usize,
    pub labels: Vec<usize>,
    pub label_space: usize,
}

impl Prediction {
    pub fn new(peer_id: usize, labels: Vec<usize>, label_space: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_space) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside label space of size {label_space}"
            )));
        }
        Ok(Self {
            peer_id,
            labels,
            label_space,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Plurality-vote k-NN classifier over a small stored training set.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    train_features: Array2<f64>,
    train_labels: Vec<usize>,
    vote_k: usize,
    num_labels: usize,
}

impl KnnClassifier {
    /// Stores the rows of `ds` listed in `train_ids`.
    pub fn train(ds: &Dataset, train_ids: &[usize], vote_k: usize) -> Result<Self> {
        if let Some(&bad) = train_ids.iter().find(|&&i| i >= ds.len()) {
            return Err(Error::OutOfRange {
                index: bad,
                len: ds.len(),
            });
        }
        Self::from_parts(
            ds.rows(train_ids),
            ds.labels_of(train_ids),
            vote_k,
            ds.num_classes(),
        )
    }

    pub fn from_parts(
        train_features: Array2<f64>,
        train_labels: Vec<usize>,
        vote_k: usize,
        num_labels: usize,
    ) -> Result<Self> {
        let m = train_labels.len();
        if train_features.nrows() != m {
            return Err(Error::ShapeMismatch(format!(
                "{} training rows vs {m} labels",
                train_features.nrows()
            )));
        }
        if vote_k == 0 || vote_k > m {
            return Err(Error::InvalidParameter(format!(
                "vote_k = {vote_k} outside 1..={m}"
            )));
        }
        if let Some(&bad) = train_labels.iter().find(|&&l| l >= num_labels) {
            return Err(Error::InvalidParameter(format!(
                "training label {bad} >= {num_labels}"
            )));
        }
        Ok(Self {
            train_features: train_features.as_standard_layout().into_owned(),
            train_labels,
            vote_k,
            num_labels,
        })
    }

    pub fn train_len(&self) -> usize {
        self.train_labels.len()
    }

    pub fn train_labels(&self) -> &[usize] {
        &self.train_labels
    }

    pub fn vote_k(&self) -> usize {
        self.vote_k
    }

    /// Distinct labels seen during training, ascending.
    pub fn label_space(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_labels];
        for &l in &self.train_labels {
            seen[l] = true;
        }
        (0..self.num_labels).filter(|&l| seen[l]).collect()
    }

    /// Plurality label among the `vote_k` nearest training items. Count ties
    /// go to the tied class whose member is nearest.
    pub fn predict(&self, batch: ArrayView2<'_, f64>, peer_id: usize) -> Result<Prediction> {
        let dim = self.train_features.ncols();
        if batch.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} features, classifier expects {dim}",
                batch.ncols()
            )));
        }
        let batch = batch.as_standard_layout();
        let queries = batch.as_slice().expect("standard layout");
        let train = self.train_features.as_slice().expect("standard layout");
        let labels: Vec<usize> = (0..batch.nrows())
            .into_par_iter()
            .map(|i| self.vote(&queries[i * dim..(i + 1) * dim], train, dim))
            .collect();
        Prediction::new(peer_id, labels, self.num_labels)
    }

    fn vote(&self, query: &[f64], train: &[f64], dim: usize) -> usize {
        let mut dists: Vec<(f64, usize)> = (0..self.train_labels.len())
            .map(|t| (squared_distance(query, &train[t * dim..(t + 1) * dim]), t))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if dists.len() > self.vote_k {
            dists.select_nth_unstable_by(self.vote_k - 1, by_dist);
            dists.truncate(self.vote_k);
        }
        dists.sort_unstable_by(by_dist);

        let mut counts = vec![0usize; self.num_labels];
        for &(_, t) in &dists {
            counts[self.train_labels[t]] += 1;
        }
        let best = counts.iter().copied().max().unwrap_or(0);
        dists
            .iter()
            .map(|&(_, t)| self.train_labels[t])
            .find(|&l| counts[l] == best)
            .expect("vote_k >= 1")
    }
}

/// A surjective map from `source_len` source labels onto `0..target_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    targets: Vec<usize>,
    target_len: usize,
}

impl LabelMapping {
    /// `targets[s]` is the image of source label `s`. Every target in
    /// `0..=max(targets)` must be hit.
    pub fn new(targets: Vec<usize>) -> Result<Self> {
        let Some(&max) = targets.iter().max() else {
            return Err(Error::InvalidParameter("empty label mapping".into()));
        };
        let mut hit = vec![false; max + 1];
        for &t in &targets {
            hit[t] = true;
        }
        if let Some(missing) = hit.iter().position(|&h| !h) {
            return Err(Error::InvalidParameter(format!(
                "label mapping is not surjective: target {missing} unused"
            )));
        }
        Ok(Self {
            target_len: max + 1,
            targets,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            targets: (0..n).collect(),
            target_len: n,
        }
    }

    /// Random grouping of `source_len` labels into `target_len` groups whose
    /// sizes differ by at most one.
    pub fn random_balanced<R: Rng + ?Sized>(
        source_len: usize,
        target_len: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if target_len == 0 || target_len > source_len {
            return Err(Error::InvalidParameter(format!(
                "cannot fuse {source_len} labels into {target_len}"
            )));
        }
        let mut order: Vec<usize> = (0..source_len).collect();
        order.shuffle(rng);
        let mut targets = vec![0; source_len];
        for (pos, &src) in order.iter().enumerate() {
            targets[src] = pos % target_len;
        }
        Self::new(targets)
    }

    pub fn source_len(&self) -> usize {
        self.targets.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn get(&self, source: usize) -> Option<usize> {
        self.targets.get(source).copied()
    }
}

/// Applies `mapping` to every label of `pred`.
pub fn fuse_labels(pred: &Prediction, mapping: &LabelMapping) -> Result<Prediction> {
    let labels = pred
        .labels
        .iter()
        .map(|&l| mapping.get(l).ok_or(Error::UnmappedLabel { label: l }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prediction {
        peer_id: pred.peer_id,
        labels,
        label_space: mapping.target_len(),
    })
}
