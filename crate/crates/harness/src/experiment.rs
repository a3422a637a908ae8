//! Experiment grids, single trials and CSV persistence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use coassoc_refine::dataset::{self, Dataset};
use coassoc_refine::seed::{derive_seed, tag};
use coassoc_refine::{
    accuracy, build_local_ca, corrupt_labels, exchange, lr_vm, refine, voter_model, ChannelModel,
    KnnClassifier, NeighborIndex, NoiseModel, Peer, PeerNetwork, Prediction, RefinementConfig,
};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] coassoc_refine::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub const CSV_HEADER: [&str; 10] = [
    "dataset",
    "method",
    "k_p",
    "k",
    "alpha",
    "trial",
    "seed",
    "accuracy",
    "iterations",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 9] = [
    "dataset",
    "method",
    "k_p",
    "k",
    "alpha",
    "trials",
    "mean_accuracy",
    "std_accuracy",
    "mean_iterations",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    AccVsPeers,
    Noise,
    BoundaryK,
    BatchSize,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AccVsPeers => "acc-vs-peers",
            Self::Noise => "noise",
            Self::BoundaryK => "boundary-k",
            Self::BatchSize => "batch-size",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acc-vs-peers" => Ok(Self::AccVsPeers),
            "noise" => Ok(Self::Noise),
            "boundary-k" => Ok(Self::BoundaryK),
            "batch-size" => Ok(Self::BatchSize),
            other => Err(HarnessError::Config(format!(
                "unknown experiment {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Mean accuracy of the individual (possibly corrupted) peers.
    Baseline,
    Vm,
    Lr,
    LrVm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Vm, Method::Lr, Method::LrVm];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Vm => "VM",
            Self::Lr => "LR",
            Self::LrVm => "LR+VM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive `start:stop:step` range of noise levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl NoiseGrid {
    pub fn single(alpha: f64) -> Self {
        Self {
            start: alpha,
            stop: alpha,
            step: 1.0,
        }
    }

    /// Grid points, rounded to 1e-9 so that `0:1:0.1` yields `0.3`, not
    /// `0.30000000000000004`.
    pub fn points(&self) -> Result<Vec<f64>> {
        let valid = |a: f64| (0.0..=1.0).contains(&a);
        if !valid(self.start) || !valid(self.stop) || self.stop < self.start || self.step <= 0.0 {
            return Err(HarnessError::Config(format!(
                "bad noise grid {}:{}:{}",
                self.start, self.stop, self.step
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| {
                let a = self.start + i as f64 * self.step;
                ((a * 1e9).round() / 1e9).min(1.0)
            })
            .collect())
    }
}

impl FromStr for NoiseGrid {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("bad noise value {p:?}")))
        };
        let grid = match parts.as_slice() {
            [a] => Self::single(num(a)?),
            [a, b, c] => Self {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => {
                return Err(HarnessError::Config(format!(
                    "noise grid must be start:stop:step, got {s:?}"
                )))
            }
        };
        grid.points()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_name: String,
    pub kind: ExperimentKind,
    pub peers: Vec<usize>,
    pub ks: Vec<usize>,
    pub noise: NoiseGrid,
    /// Test-batch sizes; only read by the batch-size experiment.
    pub batch_sizes: Vec<usize>,
    pub trials: usize,
    pub d: usize,
    pub vote_k: usize,
    pub seed: u64,
    pub refine: RefinementConfig,
    pub pair_drop_prob: f64,
    pub peer_drop_prob: f64,
    /// Wall-clock timings make output non-reproducible, so they are opt-in;
    /// otherwise `wall_ms` is written as 0.
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(kind: ExperimentKind, dataset_name: impl Into<String>) -> Self {
        let (peers, ks, noise, batch_sizes) = match kind {
            ExperimentKind::AccVsPeers => (
                vec![1, 2, 5, 10, 15, 20],
                vec![10],
                NoiseGrid::single(0.0),
                vec![],
            ),
            ExperimentKind::Noise => (
                vec![1, 2, 5, 10, 20],
                vec![10],
                NoiseGrid {
                    start: 0.0,
                    stop: 1.0,
                    step: 0.02,
                },
                vec![],
            ),
            ExperimentKind::BoundaryK => (
                vec![10],
                vec![1, 3, 5, 10, 20],
                NoiseGrid {
                    start: 0.0,
                    stop: 1.0,
                    step: 0.1,
                },
                vec![],
            ),
            ExperimentKind::BatchSize => (
                vec![10],
                vec![10],
                NoiseGrid::single(0.0),
                vec![50, 100, 150, 200, 300, 500, 1000],
            ),
        };
        Self {
            dataset_name: dataset_name.into(),
            kind,
            peers,
            ks,
            noise,
            batch_sizes,
            trials: 10,
            d: 3,
            vote_k: coassoc_refine::learner::DEFAULT_VOTE_K,
            seed: 0,
            refine: RefinementConfig::default(),
            pair_drop_prob: 0.0,
            peer_drop_prob: 0.0,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.peers.is_empty() || self.peers.contains(&0) {
            return bad("peer counts must be a nonempty list of positive integers");
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("boundary k must be a nonempty list of positive integers");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.d == 0 || self.vote_k == 0 {
            return bad("d and vote_k must be positive");
        }
        if self.kind == ExperimentKind::BatchSize
            && (self.batch_sizes.is_empty() || self.batch_sizes.contains(&0))
        {
            return bad("batch-size experiment needs positive batch sizes");
        }
        self.noise.points()?;
        Ok(())
    }
}

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSetup {
    pub k_p: usize,
    pub k: usize,
    pub alpha: f64,
    pub trial: usize,
    /// Subsample the test batch to this many items.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl TrialSetup {
    /// Seeds depend on the master seed and every grid coordinate, so each
    /// grid point reproduces on its own.
    pub fn new(
        cfg: &ExperimentConfig,
        k_p: usize,
        k: usize,
        alpha: f64,
        trial: usize,
        batch_size: Option<usize>,
    ) -> Self {
        let seed = derive_seed(
            cfg.seed,
            &[
                tag(cfg.kind.as_str()),
                k_p as u64,
                k as u64,
                alpha.to_bits(),
                trial as u64,
                batch_size.map_or(u64::MAX, |b| b as u64),
            ],
        );
        Self {
            k_p,
            k,
            alpha,
            trial,
            batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub dataset: String,
    pub method: Method,
    pub k_p: usize,
    pub k: usize,
    pub alpha: f64,
    pub trial: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub iterations: usize,
    pub wall_ms: u64,
    /// Test-batch size of batch-size runs; also encoded in `dataset`.
    pub batch: Option<usize>,
}

/// Per-method accuracies of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub baseline: f64,
    pub vm: f64,
    pub lr: f64,
    pub lr_vm: f64,
    /// Largest sweep count over the peers' refinements.
    pub iterations: usize,
    pub wall_ms: u64,
}

impl TrialMetrics {
    pub fn get(&self, method: Method) -> f64 {
        match method {
            Method::Baseline => self.baseline,
            Method::Vm => self.vm,
            Method::Lr => self.lr,
            Method::LrVm => self.lr_vm,
        }
    }
}

/// Settings for [`evaluate`] beyond the predictions themselves.
#[derive(Debug, Clone, Copy)]
pub struct PipelineParams {
    pub k: usize,
    pub alpha: f64,
    pub label_space: usize,
    pub seed: u64,
    pub refine: RefinementConfig,
    pub pair_drop_prob: f64,
    pub peer_drop_prob: f64,
}

/// Corrupts the peers' predictions, builds and exchanges co-association
/// matrices over the k-NN index of `batch`, refines every peer and scores
/// all methods against `truth`.
pub fn evaluate(
    batch: &ndarray::Array2<f64>,
    truth: &[usize],
    predictions: Vec<Prediction>,
    classifiers: Vec<Option<KnnClassifier>>,
    params: &PipelineParams,
) -> Result<TrialMetrics> {
    let started = Instant::now();
    let index = NeighborIndex::build(batch.view(), params.k)?;
    let noise = NoiseModel::new(params.alpha, derive_seed(params.seed, &[tag("noise")]))?;
    let channel = ChannelModel::new(
        params.pair_drop_prob,
        params.peer_drop_prob,
        derive_seed(params.seed, &[tag("channel")]),
    )?;

    let corrupted: Vec<Prediction> = predictions
        .par_iter()
        .map(|p| corrupt_labels(p, &noise, params.label_space))
        .collect::<coassoc_refine::Result<_>>()?;
    let peers = corrupted
        .into_iter()
        .zip(classifiers)
        .map(|(prediction, classifier)| {
            let local = build_local_ca(&prediction, &index)?;
            Ok(Peer {
                classifier,
                prediction,
                local,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = PeerNetwork::new(peers, channel)?;
    let views = exchange(&net)?;

    let refined = net
        .peers
        .par_iter()
        .zip(&views)
        .map(|(peer, view)| refine(&peer.prediction, view, &index, &params.refine))
        .collect::<coassoc_refine::Result<Vec<_>>>()?;

    let corrupted: Vec<Prediction> = net.peers.iter().map(|p| p.prediction.clone()).collect();
    let refined_preds: Vec<Prediction> = refined.iter().map(|r| r.prediction.clone()).collect();
    let mean = |preds: &[Prediction]| {
        preds
            .iter()
            .map(|p| accuracy(&p.labels, truth))
            .sum::<f64>()
            / preds.len() as f64
    };
    let metrics = TrialMetrics {
        baseline: mean(&corrupted),
        vm: accuracy(&voter_model(&corrupted)?.labels, truth),
        lr: mean(&refined_preds),
        lr_vm: accuracy(&lr_vm(&refined_preds)?.labels, truth),
        iterations: refined.iter().map(|r| r.iterations).max().unwrap_or(0),
        wall_ms: started.elapsed().as_millis() as u64,
    };
    Ok(metrics)
}

/// Trains `k_p` peers on disjoint stratified samples, predicts the items
/// nobody trained on and runs [`evaluate`].
pub fn run_trial_metrics(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    setup: &TrialSetup,
) -> Result<TrialMetrics> {
    let part = dataset::partition(
        ds,
        setup.k_p,
        cfg.d,
        derive_seed(setup.seed, &[tag("partition")]),
    )?;
    let mut test = part.test;
    if let Some(b) = setup.batch_size {
        if b > test.len() {
            return Err(HarnessError::Config(format!(
                "batch of {b} items requested, only {} left for testing",
                test.len()
            )));
        }
        let sub = dataset::stratified_subsample(
            &ds.subset(&test),
            b,
            derive_seed(setup.seed, &[tag("batch")]),
        )?;
        test = sub.into_iter().map(|i| test[i]).collect();
    }
    let batch = ds.rows(&test);
    let truth = ds.labels_of(&test);

    let classifiers = part
        .train
        .iter()
        .map(|ids| KnnClassifier::train(ds, ids, cfg.vote_k))
        .collect::<coassoc_refine::Result<Vec<_>>>()?;
    let predictions = classifiers
        .par_iter()
        .enumerate()
        .map(|(p, clf)| clf.predict(batch.view(), p))
        .collect::<coassoc_refine::Result<Vec<_>>>()?;

    let params = PipelineParams {
        k: setup.k,
        alpha: setup.alpha,
        label_space: ds.num_classes(),
        seed: setup.seed,
        refine: cfg.refine,
        pair_drop_prob: cfg.pair_drop_prob,
        peer_drop_prob: cfg.peer_drop_prob,
    };
    evaluate(
        &batch,
        &truth,
        predictions,
        classifiers.into_iter().map(Some).collect(),
        &params,
    )
}

/// One record per method for a single grid point.
pub fn run_trial(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    setup: &TrialSetup,
) -> Result<Vec<ResultRecord>> {
    let m = run_trial_metrics(ds, cfg, setup)?;
    let dataset = match setup.batch_size {
        Some(b) => format!("{}[batch={b}]", cfg.dataset_name),
        None => cfg.dataset_name.clone(),
    };
    Ok(Method::ALL
        .iter()
        .map(|&method| ResultRecord {
            dataset: dataset.clone(),
            method,
            k_p: setup.k_p,
            k: setup.k,
            alpha: setup.alpha,
            trial: setup.trial,
            seed: setup.seed,
            accuracy: m.get(method),
            iterations: match method {
                Method::Lr | Method::LrVm => m.iterations,
                _ => 0,
            },
            wall_ms: if cfg.record_timing { m.wall_ms } else { 0 },
            batch: setup.batch_size,
        })
        .collect())
}

/// The full cross product of the configured grid, in output order.
pub fn grid(cfg: &ExperimentConfig) -> Result<Vec<TrialSetup>> {
    cfg.validate()?;
    let alphas = cfg.noise.points()?;
    let batches: Vec<Option<usize>> = if cfg.kind == ExperimentKind::BatchSize {
        cfg.batch_sizes.iter().map(|&b| Some(b)).collect()
    } else {
        vec![None]
    };
    let mut out = Vec::new();
    for &batch in &batches {
        for &k_p in &cfg.peers {
            for &k in &cfg.ks {
                for &alpha in &alphas {
                    for trial in 0..cfg.trials {
                        out.push(TrialSetup::new(cfg, k_p, k, alpha, trial, batch));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs every grid point (in parallel) and returns records in grid order.
pub fn run_experiment(ds: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let setups = grid(cfg)?;
    let per_trial = setups
        .par_iter()
        .map(|s| run_trial(ds, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub dataset: String,
    pub method: Method,
    pub k_p: usize,
    pub k: usize,
    pub alpha: f64,
    pub trials: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation across trials (0 for a single trial).
    pub std_accuracy: f64,
    pub mean_iterations: f64,
    pub batch: Option<usize>,
}

/// Mean and standard deviation per (dataset, method, k_p, k, alpha), in
/// order of first appearance.
pub fn aggregate(records: &[ResultRecord]) -> Vec<AggregateRow> {
    let mut groups: Vec<(AggregateKey, Vec<&ResultRecord>)> = Vec::new();
    for r in records {
        let key = AggregateKey::of(r);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let first = members[0];
            let n = members.len() as f64;
            let mean = members.iter().map(|r| r.accuracy).sum::<f64>() / n;
            let var = if members.len() > 1 {
                members
                    .iter()
                    .map(|r| (r.accuracy - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            AggregateRow {
                dataset: first.dataset.clone(),
                method: first.method,
                k_p: first.k_p,
                k: first.k,
                alpha: first.alpha,
                trials: members.len(),
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                mean_iterations: members.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                batch: first.batch,
            }
        })
        .collect()
}

#[derive(Debug, PartialEq)]
struct AggregateKey {
    dataset: String,
    method: Method,
    k_p: usize,
    k: usize,
    alpha_bits: u64,
    batch: Option<usize>,
}

impl AggregateKey {
    fn of(r: &ResultRecord) -> Self {
        Self {
            dataset: r.dataset.clone(),
            method: r.method,
            k_p: r.k_p,
            k: r.k,
            alpha_bits: r.alpha.to_bits(),
            batch: r.batch,
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_records(records: &[ResultRecord], path: &Path) -> Result<()> {
    let wrap = |source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            r.k_p.to_string(),
            r.k.to_string(),
            r.alpha.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.accuracy.to_string(),
            r.iterations.to_string(),
            r.wall_ms.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))?;
    Ok(())
}

pub fn write_aggregates(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let wrap = |source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(wrap)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            r.k_p.to_string(),
            r.k.to_string(),
            r.alpha.to_string(),
            r.trials.to_string(),
            r.mean_accuracy.to_string(),
            r.std_accuracy.to_string(),
            r.mean_iterations.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))?;
    Ok(())
}

/// `results.csv` -> `results.<suffix>`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// `results.csv` -> `results.summary.csv`.
pub fn aggregate_path(out: &Path) -> PathBuf {
    sibling(out, "summary.csv")
}

/// `results.csv` -> `results.plot.dat`.
pub fn plot_path(out: &Path) -> PathBuf {
    sibling(out, "plot.dat")
}

/// Whitespace-separated plot data: one block per curve family, blocks
/// separated by two blank lines, one line per x value with the mean and
/// standard deviation of every method. The x axis is the peer count for
/// `acc-vs-peers`, the batch size for `batch-size` and the noise level
/// otherwise.
pub fn plot_data(kind: ExperimentKind, rows: &[AggregateRow]) -> String {
    let x_of = |r: &AggregateRow| -> String {
        match kind {
            ExperimentKind::AccVsPeers => r.k_p.to_string(),
            ExperimentKind::BatchSize => r.batch.map_or_else(|| "0".into(), |b| b.to_string()),
            ExperimentKind::Noise | ExperimentKind::BoundaryK => r.alpha.to_string(),
        }
    };
    let (x_name, series_of): (&str, fn(&AggregateRow) -> String) = match kind {
        ExperimentKind::AccVsPeers => ("k_p", |r| format!("k={} alpha={}", r.k, r.alpha)),
        ExperimentKind::BatchSize => ("batch", |r| {
            format!("k_p={} k={} alpha={}", r.k_p, r.k, r.alpha)
        }),
        ExperimentKind::Noise | ExperimentKind::BoundaryK => {
            ("alpha", |r| format!("k_p={} k={}", r.k_p, r.k))
        }
    };
    let base_name = |r: &AggregateRow| match r.batch {
        Some(_) => r
            .dataset
            .split('[')
            .next()
            .unwrap_or(&r.dataset)
            .to_string(),
        None => r.dataset.clone(),
    };

    // series -> x -> per-method (mean, std), all in first-appearance order
    type Point = (String, [Option<(f64, f64)>; 4]);
    let mut series: Vec<(String, Vec<Point>)> = Vec::new();
    for r in rows {
        let name = format!("dataset={} {}", base_name(r), series_of(r));
        let pos = match series.iter().position(|(n, _)| *n == name) {
            Some(p) => p,
            None => {
                series.push((name, Vec::new()));
                series.len() - 1
            }
        };
        let points = &mut series[pos].1;
        let x = x_of(r);
        let slot = match points.iter().position(|(px, _)| *px == x) {
            Some(p) => p,
            None => {
                points.push((x, [None; 4]));
                points.len() - 1
            }
        };
        let m = Method::ALL
            .iter()
            .position(|&m| m == r.method)
            .expect("known method");
        points[slot].1[m] = Some((r.mean_accuracy, r.std_accuracy));
    }

    let mut out = String::new();
    for (i, (name, points)) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {name}\n# {x_name}"));
        for m in Method::ALL {
            out.push_str(&format!(" {m} {m}_std"));
        }
        out.push('\n');
        for (x, cells) in points {
            out.push_str(x);
            for cell in cells {
                match cell {
                    Some((mean, std)) => out.push_str(&format!(" {mean} {std}")),
                    None => out.push_str(" nan nan"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Paths written by [`run_experiment_to_files`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Runs the experiment and writes the row file to `out`, plus the
/// aggregate and plot files next to it.
pub fn run_experiment_to_files(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<OutputFiles> {
    let records = run_experiment(ds, cfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Write {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
    }
    write_records(&records, out)?;
    let rows = aggregate(&records);
    let summary = aggregate_path(out);
    write_aggregates(&rows, &summary)?;
    let plot = plot_path(out);
    std::fs::write(&plot, plot_data(cfg.kind, &rows)).map_err(|e| HarnessError::Write {
        path: plot.clone(),
        source: e.into(),
    })?;
    Ok(OutputFiles {
        rows: out.to_path_buf(),
        summary,
        plot,
    })
}
