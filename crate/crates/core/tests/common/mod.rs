//! Brute-force reference implementations used by the tests. None of these
//! call into the library code paths they are compared against.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;

/// All-pairs k-NN scan: sort every other item by (distance, id).
pub fn knn_all_pairs(x: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = x
                        .row(i)
                        .iter()
                        .zip(x.row(j).iter())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    (d.sqrt(), j)
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Local co-association straight from the definition, evaluated for every
/// ordered pair and then read off at the neighbor pairs.
pub fn local_ca_all_pairs(labels: &[usize], neighbors: &[Vec<usize>]) -> Vec<bool> {
    let n = labels.len();
    let full: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| labels[a] == labels[b]).collect())
        .collect();
    neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, nbs)| nbs.iter().map(|&j| full[i][j]).collect::<Vec<_>>())
        .collect()
}

/// One refinement step per item: score every label in the label space,
/// summing neighbor weights in slot order, then apply the tie rule (scores
/// within a relative 1e-9 of the best are tied).
pub fn weighted_vote_step(
    labels: &[usize],
    label_space: usize,
    neighbors: &[Vec<usize>],
    weight: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    (0..labels.len())
        .map(|i| {
            let scores: Vec<f64> = (0..label_space)
                .map(|l| {
                    let mut s = 0.0;
                    for (j, &nb) in neighbors[i].iter().enumerate() {
                        if labels[nb] == l {
                            s += weight(i, j);
                        }
                    }
                    s
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let tied = |s: f64| max - s <= 1e-9 * max;
            if tied(scores[labels[i]]) {
                labels[i]
            } else {
                (0..label_space).find(|&l| tied(scores[l])).unwrap()
            }
        })
        .collect()
}

/// Plurality over the `vote_k` nearest training rows (full sort), ties to
/// the class of the nearest tied member.
pub fn knn_vote(
    train: &Array2<f64>,
    train_labels: &[usize],
    query: &Array2<f64>,
    vote_k: usize,
    label_space: usize,
) -> Vec<usize> {
    (0..query.nrows())
        .map(|q| {
            let mut d: Vec<(f64, usize)> = (0..train.nrows())
                .map(|t| {
                    let s: f64 = query
                        .row(q)
                        .iter()
                        .zip(train.row(t).iter())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    (s, t)
                })
                .collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let top = &d[..vote_k];
            let mut counts = vec![0; label_space];
            for &(_, t) in top {
                counts[train_labels[t]] += 1;
            }
            let best = *counts.iter().max().unwrap();
            top.iter()
                .map(|&(_, t)| train_labels[t])
                .find(|&l| counts[l] == best)
                .unwrap()
        })
        .collect()
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, f: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, f), |_| rng.random_range(-1.0..1.0))
}

/// Grid points make exact distance ties common.
pub fn random_grid_matrix<R: Rng>(rng: &mut R, n: usize, f: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, f), |_| rng.random_range(0..4) as f64)
}

pub fn random_labels<R: Rng>(rng: &mut R, n: usize, space: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..space)).collect()
}

pub fn neighbor_lists(index: &coassoc_refine::NeighborIndex) -> Vec<Vec<usize>> {
    (0..index.len())
        .map(|i| index.neighbors(i).unwrap().to_vec())
        .collect()
}
