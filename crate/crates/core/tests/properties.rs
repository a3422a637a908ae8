mod common;

use std::cell::Cell;
use std::collections::HashSet;

use coassoc_refine::coassoc::{deserialize, serialize, PairWeights};
use coassoc_refine::dataset::{self, z_normalize, RawDataset, SamplingConfig};
use coassoc_refine::refine::sweep;
use coassoc_refine::{
    accuracy, build_local_ca, corrupt_labels, fuse_labels, refine, EnsembleCAMatrix, KnnClassifier,
    LabelMapping, LocalCAMatrix, NeighborIndex, NoiseModel, Prediction, RefinementConfig,
};
use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Scaled<'a>(&'a EnsembleCAMatrix, f64);

impl PairWeights for Scaled<'_> {
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    fn weight(&self, i: usize, j: usize) -> f64 {
        self.0.weight(i, j) * self.1
    }
}

struct Counting<'a> {
    inner: &'a EnsembleCAMatrix,
    calls: Cell<usize>,
}

impl PairWeights for Counting<'_> {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }
    fn weight(&self, i: usize, j: usize) -> f64 {
        self.calls.set(self.calls.get() + 1);
        self.inner.weight(i, j)
    }
}

struct Instance {
    index: NeighborIndex,
    preds: Vec<Prediction>,
}

fn instance(seed: u64, n: usize, k: usize, space: usize, peers: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_matrix(&mut rng, n, 3);
    let index = NeighborIndex::build(x.view(), k).unwrap();
    let preds = (0..peers)
        .map(|p| Prediction::new(p, random_labels(&mut rng, n, space), space).unwrap())
        .collect();
    Instance { index, preds }
}

fn ensemble(inst: &Instance, order: &[usize]) -> EnsembleCAMatrix {
    let mut acc = EnsembleCAMatrix::new(inst.index.len(), inst.index.k());
    for &p in order {
        acc.accumulate_full(&build_local_ca(&inst.preds[p], &inst.index).unwrap())
            .unwrap();
    }
    acc
}

fn relabel(pred: &Prediction, perm: &[usize]) -> Prediction {
    Prediction::new(
        pred.peer_id,
        pred.labels.iter().map(|&l| perm[l]).collect(),
        pred.label_space,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn index_matches_exhaustive(seed in any::<u64>(), n in 2usize..120, k in 1usize..12, grid in any::<bool>()) {
        prop_assume!(k < n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = if grid { random_grid_matrix(&mut rng, n, 2) } else { random_matrix(&mut rng, n, 3) };
        let index = NeighborIndex::build(x.view(), k).unwrap();
        prop_assert_eq!(neighbor_lists(&index), knn_all_pairs(&x, k));
    }

    #[test]
    fn peer_order_does_not_matter(seed in any::<u64>(), peers in 1usize..7) {
        let inst = instance(seed, 60, 5, 4, peers);
        let forward: Vec<usize> = (0..peers).collect();
        let mut shuffled = forward.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        prop_assert_eq!(ensemble(&inst, &forward), ensemble(&inst, &shuffled));
    }

    #[test]
    fn local_ca_ignores_label_names(seed in any::<u64>(), space in 1usize..8) {
        let inst = instance(seed, 50, 4, space, 1);
        let mut perm: Vec<usize> = (0..space).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = build_local_ca(&inst.preds[0], &inst.index).unwrap();
        let b = build_local_ca(&relabel(&inst.preds[0], &perm), &inst.index).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fusion_only_adds_co_associations(seed in any::<u64>(), space in 2usize..10, target in 1usize..5) {
        prop_assume!(target <= space);
        let inst = instance(seed, 50, 5, space, 1);
        let map = LabelMapping::random_balanced(space, target, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let fused = fuse_labels(&inst.preds[0], &map).unwrap();
        let before = build_local_ca(&inst.preds[0], &inst.index).unwrap();
        let after = build_local_ca(&fused, &inst.index).unwrap();
        for (b, a) in before.entries().iter().zip(after.entries()) {
            prop_assert!(!b || *a);
        }
    }

    #[test]
    fn positive_scaling_keeps_refined_labels(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let inst = instance(seed, 80, 6, 4, 5);
        let acc = ensemble(&inst, &[0, 1, 2, 3, 4]);
        let y0 = &inst.preds[0];
        let cfg = RefinementConfig::default();
        let a = refine(y0, &acc, &inst.index, &cfg).unwrap();
        let b = refine(y0, &Scaled(&acc, scale), &inst.index, &cfg).unwrap();
        prop_assert_eq!(a.prediction, b.prediction);
    }

    #[test]
    fn own_matrix_fixed_point(seed in any::<u64>(), space in 1usize..6) {
        let inst = instance(seed, 70, 5, space, 1);
        let own = build_local_ca(&inst.preds[0], &inst.index).unwrap();
        let out = refine(&inst.preds[0], &own, &inst.index, &RefinementConfig::default()).unwrap();
        prop_assert_eq!(&out.prediction, &inst.preds[0]);
        prop_assert_eq!(out.iterations, 1);
        let mut acc = EnsembleCAMatrix::for_owner(&own);
        acc.accumulate_full(&own).unwrap();
        let out = refine(&inst.preds[0], &acc, &inst.index, &RefinementConfig::default()).unwrap();
        prop_assert_eq!(&out.prediction, &inst.preds[0]);
    }

    #[test]
    fn single_class_fixed_point(seed in any::<u64>()) {
        let inst = instance(seed, 70, 5, 5, 4);
        let acc = ensemble(&inst, &[0, 1, 2, 3]);
        let y0 = Prediction::new(0, vec![2; 70], 5).unwrap();
        let out = refine(&y0, &acc, &inst.index, &RefinementConfig::default()).unwrap();
        prop_assert_eq!(out.prediction, y0);
    }

    #[test]
    fn refined_labels_come_from_the_start(seed in any::<u64>()) {
        let mut inst = instance(seed, 90, 6, 8, 4);
        // restrict the starting labels to a few classes
        inst.preds[0].labels.iter_mut().for_each(|l| *l = (*l % 3) * 2);
        let acc = ensemble(&inst, &[0, 1, 2, 3]);
        let start: HashSet<usize> = inst.preds[0].labels.iter().copied().collect();
        let out = refine(&inst.preds[0], &acc, &inst.index, &RefinementConfig::default()).unwrap();
        prop_assert!(out.prediction.labels.iter().all(|l| start.contains(l)));
    }

    #[test]
    fn uniform_neighborhoods_are_untouched(seed in any::<u64>()) {
        let inst = instance(seed, 90, 6, 4, 4);
        let acc = ensemble(&inst, &[0, 1, 2, 3]);
        let y0 = &inst.preds[1];
        let next = sweep(&y0.labels, y0.label_space, &acc, &inst.index).unwrap();
        for (i, &label) in next.iter().enumerate() {
            let nbs = inst.index.neighbors(i).unwrap();
            if nbs.iter().all(|&j| y0.labels[j] == y0.labels[i]) {
                prop_assert_eq!(label, y0.labels[i]);
            }
        }
    }

    #[test]
    fn sweep_reads_each_pair_once(seed in any::<u64>(), k in 1usize..10) {
        let inst = instance(seed, 64, k, 3, 3);
        let acc = ensemble(&inst, &[0, 1, 2]);
        let counting = Counting { inner: &acc, calls: Cell::new(0) };
        sweep(&inst.preds[0].labels, 3, &counting, &inst.index).unwrap();
        prop_assert_eq!(counting.calls.get(), 64 * k);
    }

    #[test]
    fn predict_commutes_with_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = random_matrix(&mut rng, 24, 3);
        let labels = random_labels(&mut rng, 24, 6);
        let batch = random_matrix(&mut rng, 40, 3);
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut rng);
        let mut inverse = [0; 6];
        for (a, &b) in perm.iter().enumerate() {
            inverse[b] = a;
        }
        let plain = KnnClassifier::from_parts(train.clone(), labels.clone(), 3, 6).unwrap();
        let permuted = KnnClassifier::from_parts(train, labels.iter().map(|&l| perm[l]).collect(), 3, 6).unwrap();
        let a = plain.predict(batch.view(), 0).unwrap();
        let b = permuted.predict(batch.view(), 0).unwrap();
        prop_assert_eq!(a.labels, b.labels.iter().map(|&l| inverse[l]).collect::<Vec<_>>());
    }

    #[test]
    fn wire_round_trip(seed in any::<u64>(), n in 1usize..300, k in 1usize..20, peer in 0usize..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..n * k).map(|_| rng.random_bool(0.5)).collect();
        let local = LocalCAMatrix::from_entries(peer, n, k, entries).unwrap();
        let bytes = serialize(&local).unwrap();
        prop_assert_eq!(bytes.len(), 16 + (n * k).div_ceil(8));
        prop_assert_eq!(deserialize(&bytes, n, k).unwrap(), local);
    }

    #[test]
    fn z_normalize_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random_range(-100.0..100.0));
        let once = z_normalize(RawDataset::new(x, vec![0; 40], vec!["a".into()]).unwrap()).unwrap();
        let twice = z_normalize(RawDataset::new(once.features.clone(), vec![0; 40], vec!["a".into()]).unwrap()).unwrap();
        for (a, b) in once.features.iter().zip(twice.features.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stratified_sample_is_balanced(seed in any::<u64>(), d in 1usize..5, excluded_n in 0usize..40) {
        let n = 150;
        let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let labels: Vec<usize> = (0..n).map(|i| (i * 7) % 5).collect();
        let names = (0..5).map(|c| c.to_string()).collect();
        let ds = z_normalize(RawDataset::new(features, labels, names).unwrap()).unwrap();
        let excluded: HashSet<usize> = (0..excluded_n).map(|i| i * 3).collect();
        let ids = dataset::stratified_sample(&ds, SamplingConfig { d, seed }, &excluded).unwrap();
        prop_assert_eq!(ids.len(), 5 * d);
        let unique: HashSet<usize> = ids.iter().copied().collect();
        prop_assert_eq!(unique.len(), ids.len());
        prop_assert!(ids.iter().all(|i| !excluded.contains(i)));
        for c in 0..5 {
            prop_assert_eq!(ids.iter().filter(|&&i| ds.labels[i] == c).count(), d);
        }
        let again = dataset::stratified_sample(&ds, SamplingConfig { d, seed }, &excluded).unwrap();
        prop_assert_eq!(ids, again);
    }

    #[test]
    fn corruption_count_and_range(seed in any::<u64>(), alpha in 0.0f64..=1.0, n in 1usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = Prediction::new(3, random_labels(&mut rng, n, 4), 4).unwrap();
        let noise = NoiseModel::new(alpha, seed).unwrap();
        let out = corrupt_labels(&pred, &noise, 6).unwrap();
        let changed = out.labels.iter().zip(&pred.labels).filter(|(a, b)| a != b).count();
        prop_assert!(changed <= (alpha * n as f64).round() as usize);
        prop_assert!(out.labels.iter().all(|&l| l < 6));
        prop_assert_eq!(out, corrupt_labels(&pred, &noise, 6).unwrap());
    }
}

#[test]
fn corruption_rewrites_exactly_the_rounded_count() {
    // labels drawn from a space disjoint from the originals make every
    // rewritten position observable
    let pred = Prediction::new(0, vec![9; 1000], 10).unwrap();
    for (alpha, expected) in [(0.0, 0), (0.5, 500), (0.2345, 235), (1.0, 1000)] {
        let noise = NoiseModel::new(alpha, 42).unwrap();
        let out = corrupt_labels(&pred, &noise, 9).unwrap();
        let changed = out.labels.iter().filter(|&&l| l != 9).count();
        assert_eq!(changed, expected, "alpha {alpha}");
    }
}

#[test]
fn full_noise_gives_chance_accuracy() {
    let classes = 10;
    let n = 5000;
    let truth: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let pred = Prediction::new(0, truth.clone(), classes).unwrap();
    let out = corrupt_labels(&pred, &NoiseModel::new(1.0, 7).unwrap(), classes).unwrap();
    let acc = accuracy(&out.labels, &truth);
    let p = 1.0 / classes as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((acc - p).abs() <= 3.0 * sigma, "accuracy {acc}");
}

#[test]
fn balanced_fusion_preserves_expected_boundary_fraction() {
    // A boundary pair has distinct source labels; it survives fusion when the
    // two labels land in different groups. For a balanced split of d0 labels
    // into d1 groups that probability is 1 - (d0/d1 - 1)/(d0 - 1), which
    // tends to 1 - 1/d1 as d0 grows.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (d0, d1) in [(10usize, 2usize), (100, 2), (120, 4)] {
        let exact = 1.0 - (d0 as f64 / d1 as f64 - 1.0) / (d0 as f64 - 1.0);
        let n = 400;
        let a: Vec<usize> = random_labels(&mut rng, n, d0);
        let b: Vec<usize> = random_labels(&mut rng, n, d0);
        let boundary: Vec<(usize, usize)> = a.into_iter().zip(b).filter(|(x, y)| x != y).collect();
        let trials = 2000;
        let mut total = 0.0;
        for _ in 0..trials {
            let map = LabelMapping::random_balanced(d0, d1, &mut rng).unwrap();
            let kept = boundary
                .iter()
                .filter(|(x, y)| map.get(*x) != map.get(*y))
                .count();
            total += kept as f64 / boundary.len() as f64;
        }
        let mean = total / trials as f64;
        assert!(
            (mean - exact).abs() < 0.01,
            "d0={d0} d1={d1}: {mean} vs {exact}"
        );
        if d0 >= 100 {
            assert!((mean - (1.0 - 1.0 / d1 as f64)).abs() < 0.02);
        }
    }
}

#[test]
fn single_group_fusion_gives_all_ones() {
    let inst = instance(21, 40, 4, 6, 1);
    let map = LabelMapping::new(vec![0; 6]).unwrap();
    let fused = fuse_labels(&inst.preds[0], &map).unwrap();
    let local = build_local_ca(&fused, &inst.index).unwrap();
    assert!(local.entries().iter().all(|&b| b));
}

#[test]
fn partition_is_reproducible() {
    let n = 500;
    let features = Array2::from_shape_fn((n, 2), |(i, j)| (i * (j + 3)) as f64);
    let labels: Vec<usize> = (0..n).map(|i| i % 7).collect();
    let names = (0..7).map(|c| c.to_string()).collect();
    let ds = z_normalize(RawDataset::new(features, labels, names).unwrap()).unwrap();
    assert_eq!(
        dataset::partition(&ds, 10, 3, 5).unwrap(),
        dataset::partition(&ds, 10, 3, 5).unwrap()
    );
    assert_ne!(
        dataset::partition(&ds, 10, 3, 5).unwrap(),
        dataset::partition(&ds, 10, 3, 6).unwrap()
    );
}
