//! Exact k-nearest-neighbor index over a batch of items.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// For every item, its `k` nearest other items under Euclidean distance.
///
/// Neighbor lists are stored flat (item-major, slot-minor) so that slot
/// `j` of item `i` lives at `i * k + j`; co-association matrices share this
/// layout. Equal distances are ordered by the lower item id.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    k: usize,
    n: usize,
    neighbors: Vec<usize>,
    distances: Vec<f64>,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl NeighborIndex {
    /// Exhaustive search; each item scans all others.
    pub fn build(features: ArrayView2<'_, f64>, k: usize) -> Result<Self> {
        let n = features.nrows();
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if k >= n {
            return Err(Error::InvalidParameter(format!(
                "k = {k} needs more than {k} items, have {n}"
            )));
        }
        let owned;
        let rows = match features.as_slice() {
            Some(s) => s,
            None => {
                owned = features.as_standard_layout().into_owned();
                owned.as_slice().expect("standard layout")
            }
        };
        let dim = features.ncols();
        let row = |i: usize| &rows[i * dim..(i + 1) * dim];

        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        // one candidate buffer per worker; only the k nearest are kept
        let lists: Vec<Vec<(f64, usize)>> = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |cand: &mut Vec<(f64, usize)>, i| {
                let xi = row(i);
                cand.clear();
                cand.extend(
                    (0..n)
                        .filter(|&j| j != i)
                        .map(|j| (squared_distance(xi, row(j)), j)),
                );
                if cand.len() > k {
                    cand.select_nth_unstable_by(k - 1, by_dist);
                }
                let mut top = cand[..k].to_vec();
                top.sort_unstable_by(by_dist);
                top
            })
            .collect();

        let mut neighbors = Vec::with_capacity(n * k);
        let mut distances = Vec::with_capacity(n * k);
        for list in lists {
            for (d2, j) in list {
                neighbors.push(j);
                distances.push(d2.sqrt());
            }
        }
        Ok(Self {
            k,
            n,
            neighbors,
            distances,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of indexed items.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.check(i)?;
        Ok(self.row(i))
    }

    pub fn distances(&self, i: usize) -> Result<&[f64]> {
        self.check(i)?;
        Ok(&self.distances[i * self.k..(i + 1) * self.k])
    }

    /// All neighbor ids in flat item-major order.
    pub fn flat(&self) -> &[usize] {
        &self.neighbors
    }

    pub(crate) fn row(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::OutOfRange {
                index: i,
                len: self.n,
            })
        } else {
            Ok(())
        }
    }
}
