use std::collections::BTreeSet;
use std::time::Instant;

use coassoc_harness::experiment::{
    aggregate_path, evaluate, run_trial, PipelineParams, TrialSetup, CSV_HEADER,
};
use coassoc_harness::fixtures::{self, FixtureSpec};
use coassoc_harness::{run_experiment_to_files, ExperimentConfig, ExperimentKind, Method};
use coassoc_refine::dataset::{self, Dataset};
use coassoc_refine::{
    refine, EnsembleCAMatrix, LocalCAMatrix, NeighborIndex, Prediction, RefinementConfig,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(name: &str, n: usize) -> Dataset {
    let spec = FixtureSpec {
        n,
        ..fixtures::fixture(name).unwrap().clone()
    };
    dataset::z_normalize(fixtures::generate(&spec, 7)).unwrap()
}

#[test]
fn perfect_peers_score_one_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batch = Array2::from_shape_fn((150, 4), |_| rng.random_range(-1.0..1.0));
    let truth: Vec<usize> = (0..150).map(|_| rng.random_range(0..5)).collect();
    let preds: Vec<Prediction> = (0..4)
        .map(|p| Prediction::new(p, truth.clone(), 5).unwrap())
        .collect();
    let params = PipelineParams {
        k: 8,
        alpha: 0.0,
        label_space: 5,
        seed: 3,
        refine: RefinementConfig::default(),
        pair_drop_prob: 0.3,
        peer_drop_prob: 0.2,
    };
    let m = evaluate(&batch, &truth, preds, vec![None, None, None, None], &params).unwrap();
    for method in Method::ALL {
        assert_eq!(m.get(method), 1.0, "{method}");
    }
}

#[test]
fn single_peer_without_noise_votes_its_own_prediction() {
    let ds = small("pendigit", 600);
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::AccVsPeers, "p");
    cfg.seed = 11;
    for trial in 0..3 {
        let setup = TrialSetup::new(&cfg, 1, 10, 0.0, trial, None);
        let rows = run_trial(&ds, &cfg, &setup).unwrap();
        let acc = |m: Method| rows.iter().find(|r| r.method == m).unwrap().accuracy;
        assert_eq!(acc(Method::Vm), acc(Method::Baseline));
        assert_eq!(acc(Method::LrVm), acc(Method::Lr));
        // a lone peer refines with its own matrix, which changes nothing
        assert_eq!(acc(Method::Lr), acc(Method::Baseline));
    }
}

#[test]
fn one_record_per_method_with_grid_coordinates() {
    let ds = small("statlog", 500);
    let cfg = ExperimentConfig::defaults(ExperimentKind::Noise, "s");
    let setup = TrialSetup::new(&cfg, 3, 5, 0.3, 2, None);
    let rows = run_trial(&ds, &cfg, &setup).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.method).collect::<Vec<_>>(),
        Method::ALL
    );
    for r in &rows {
        assert_eq!(
            (r.k_p, r.k, r.alpha, r.trial, r.seed),
            (3, 5, 0.3, 2, setup.seed)
        );
        assert!((0.0..=1.0).contains(&r.accuracy));
        assert_eq!(r.wall_ms, 0);
    }
}

#[test]
fn too_many_peers_is_an_error() {
    let ds = small("drybean", 200);
    let cfg = ExperimentConfig::defaults(ExperimentKind::AccVsPeers, "d");
    // the smallest class has 8 items, enough for 2 peers with d=3 but not 3
    let setup = TrialSetup::new(&cfg, 3, 5, 0.0, 0, None);
    assert!(run_trial(&ds, &cfg, &setup).is_err());
}

#[test]
fn reruns_are_byte_identical() {
    let ds = small("usps", 500);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::BoundaryK, "u");
    cfg.ks = vec![3, 5];
    cfg.trials = 2;
    cfg.seed = 99;
    cfg.noise = "0:1:0.5".parse().unwrap();
    cfg.pair_drop_prob = 0.1;
    let a = run_experiment_to_files(&ds, &cfg, &dir.path().join("a.csv")).unwrap();
    let b = run_experiment_to_files(&ds, &cfg, &dir.path().join("b.csv")).unwrap();
    for (x, y) in [
        (&a.rows, &b.rows),
        (&a.summary, &b.summary),
        (&a.plot, &b.plot),
    ] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    cfg.seed = 100;
    let c = run_experiment_to_files(&ds, &cfg, &dir.path().join("c.csv")).unwrap();
    assert_ne!(
        std::fs::read(&a.rows).unwrap(),
        std::fs::read(&c.rows).unwrap()
    );
}

#[test]
fn summary_is_recomputable_from_rows() {
    let ds = small("drybean", 500);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::AccVsPeers, "d");
    cfg.peers = vec![1, 2];
    cfg.trials = 3;
    let out = dir.path().join("rows.csv");
    run_experiment_to_files(&ds, &cfg, &out).unwrap();

    let mut rows = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        CSV_HEADER
    );
    let mut groups: Vec<(Vec<String>, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in rows.records() {
        let rec = rec.unwrap();
        let key: Vec<String> = [0, 1, 2, 3, 4]
            .iter()
            .map(|&i| rec[i].to_string())
            .collect();
        let acc: f64 = rec[7].parse().unwrap();
        let it: f64 = rec[8].parse().unwrap();
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => {
                g.1.push(acc);
                g.2.push(it);
            }
            None => groups.push((key, vec![acc], vec![it])),
        }
    }

    let mut summary = csv::Reader::from_path(aggregate_path(&out)).unwrap();
    let summary: Vec<csv::StringRecord> = summary.records().map(Result::unwrap).collect();
    assert_eq!(summary.len(), groups.len());
    for (rec, (key, accs, its)) in summary.iter().zip(&groups) {
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert_eq!(&rec.iter().take(5).collect::<Vec<_>>(), key);
        assert_eq!(rec[5].parse::<usize>().unwrap(), accs.len());
        assert_eq!(rec[6].parse::<f64>().unwrap(), mean);
        assert_eq!(rec[7].parse::<f64>().unwrap(), var.sqrt());
        assert_eq!(rec[8].parse::<f64>().unwrap(), its.iter().sum::<f64>() / n);
    }
}

#[test]
fn noise_grid_has_fifty_one_points_per_curve() {
    let ds = small("pendigit", 400);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Noise, "p");
    cfg.peers = vec![2];
    cfg.trials = 1;
    let out = dir.path().join("noise.csv");
    let files = run_experiment_to_files(&ds, &cfg, &out).unwrap();
    let mut reader = csv::Reader::from_path(&files.summary).unwrap();
    for method in Method::ALL {
        let alphas: BTreeSet<String> = reader
            .records()
            .map(Result::unwrap)
            .filter(|r| &r[1] == method.as_str())
            .map(|r| r[4].to_string())
            .collect();
        assert_eq!(alphas.len(), 51, "{method}");
        reader = csv::Reader::from_path(&files.summary).unwrap();
    }
    let plot = std::fs::read_to_string(&files.plot).unwrap();
    assert_eq!(
        plot.lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .count(),
        51
    );
}

#[test]
fn small_batches_refine_worse_and_less_stably() {
    let ds =
        dataset::z_normalize(fixtures::generate(fixtures::fixture("drybean").unwrap(), 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::BatchSize, "drybean");
    cfg.batch_sizes = vec![100, 500];
    let files = run_experiment_to_files(&ds, &cfg, &dir.path().join("b.csv")).unwrap();
    let lr: Vec<(f64, f64)> = csv::Reader::from_path(&files.summary)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .filter(|r| &r[1] == "LR")
        .map(|r| (r[6].parse().unwrap(), r[7].parse().unwrap()))
        .collect();
    assert_eq!(lr.len(), 2);
    let (small_mean, small_std) = lr[0];
    let (large_mean, large_std) = lr[1];
    assert!(small_mean < large_mean, "{small_mean} vs {large_mean}");
    assert!(small_std > large_std, "{small_std} vs {large_std}");
}

/// Median wall time of refining a random instance of `n` items.
fn refine_time(n: usize, k: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
    let index = NeighborIndex::build(x.view(), k).unwrap();
    let mut ca = EnsembleCAMatrix::new(n, k);
    for p in 0..5 {
        let entries = (0..n * k).map(|_| rng.random_bool(0.7)).collect();
        ca.accumulate_full(&LocalCAMatrix::from_entries(p, n, k, entries).unwrap())
            .unwrap();
    }
    let y0 = Prediction::new(0, (0..n).map(|_| rng.random_range(0..10)).collect(), 10).unwrap();
    let cfg = RefinementConfig {
        max_iters: 5,
        convergence_epsilon: 0.0,
    };
    let mut times: Vec<f64> = (0..5)
        .map(|_| {
            let t = Instant::now();
            let out = refine(&y0, &ca, &index, &cfg).unwrap();
            assert_eq!(out.iterations, 5);
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[2]
}

#[test]
fn refinement_time_is_near_linear_in_n() {
    let t1 = refine_time(20_000, 10);
    let t2 = refine_time(40_000, 10);
    assert!(t2 < 3.0 * t1, "n=20000: {t1:.4}s, n=40000: {t2:.4}s");
}
