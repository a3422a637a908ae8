//! Dataset loading, z-normalization and stratified sampling.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Features and dense label ids as read from disk.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    /// Original label strings, indexed by label id.
    pub class_names: Vec<String>,
}

/// A z-normalized dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_counts: Vec<usize>,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label_column: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label_column: LabelColumn::Last,
        }
    }
}

/// How many items per class each peer draws, and from which seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub d: usize,
    pub seed: u64,
}

/// Disjoint per-peer training sets plus the shared test batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<Vec<usize>>,
    pub test: Vec<usize>,
}

impl RawDataset {
    /// Builds a dataset from in-memory parts, checking shapes and label ids.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

/// Reads a CSV file whose feature columns are numeric and whose label column
/// holds categorical values.
///
/// Labels are re-encoded densely in order of first appearance; rows keep
/// their file order.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let label_idx = match &opts.label_column {
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Last => None,
        LabelColumn::Name(name) => {
            if !opts.has_header {
                return Err(Error::MissingLabelColumn(name.clone()));
            }
            let idx = reader
                .headers()?
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?;
            Some(idx)
        }
    };

    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut encoding: HashMap<String, usize> = HashMap::new();

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        let label_col = label_idx.unwrap_or(expected - 1);
        if label_col >= expected {
            return Err(Error::MissingLabelColumn(label_col.to_string()));
        }
        for (column, cell) in record.iter().enumerate() {
            if column == label_col {
                let next = encoding.len();
                let id = *encoding.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row,
                    column,
                    value: cell.to_string(),
                })?;
                values.push(v);
            }
        }
    }

    let Some(width) = width else {
        return Err(Error::EmptyDataset);
    };
    let n = labels.len();
    let features = Array2::from_shape_vec((n, width - 1), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    RawDataset::new(features, labels, class_names)
}

/// Per-feature z-scores using population statistics over every item.
/// Constant features map to zero.
pub fn z_normalize(raw: RawDataset) -> Result<Dataset> {
    let n = raw.len();
    if n < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            found: n,
        });
    }
    let mut features = raw.features;
    for mut column in features.axis_iter_mut(Axis(1)) {
        let mean = column.iter().sum::<f64>() / n as f64;
        let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std <= f64::EPSILON * mean.abs().max(1.0) {
            column.fill(0.0);
        } else {
            column.mapv_inplace(|v| (v - mean) / std);
        }
    }
    let mut class_counts = vec![0; raw.class_names.len()];
    for &l in &raw.labels {
        class_counts[l] += 1;
    }
    Ok(Dataset {
        features,
        labels: raw.labels,
        class_counts,
        class_names: raw.class_names,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    /// Feature rows for `ids`, in that order.
    pub fn rows(&self, ids: &[usize]) -> Array2<f64> {
        self.features.select(Axis(0), ids)
    }

    pub fn labels_of(&self, ids: &[usize]) -> Vec<usize> {
        ids.iter().map(|&i| self.labels[i]).collect()
    }

    /// Keeps only `ids` (in order); class ids and names are preserved,
    /// counts are recomputed. No renormalization happens.
    pub fn subset(&self, ids: &[usize]) -> Dataset {
        let labels = self.labels_of(ids);
        let mut class_counts = vec![0; self.num_classes()];
        for &l in &labels {
            class_counts[l] += 1;
        }
        Dataset {
            features: self.rows(ids),
            labels,
            class_counts,
            class_names: self.class_names.clone(),
        }
    }
}

/// Draws `d` items from every class, avoiding `excluded`.
///
/// Ids come out grouped by class in ascending class order.
pub fn stratified_sample(
    ds: &Dataset,
    cfg: SamplingConfig,
    excluded: &HashSet<usize>,
) -> Result<Vec<usize>> {
    if cfg.d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes()];
    for (id, &label) in ds.labels.iter().enumerate() {
        if !excluded.contains(&id) {
            by_class[label].push(id);
        }
    }
    let mut out = Vec::with_capacity(cfg.d * by_class.len());
    for (class, mut pool) in by_class.into_iter().enumerate() {
        if pool.len() < cfg.d {
            return Err(Error::InsufficientClass {
                class,
                available: pool.len(),
                needed: cfg.d,
            });
        }
        let mut rng = seed::rng(cfg.seed, &[class as u64]);
        let (chosen, _) = pool.partial_shuffle(&mut rng, cfg.d);
        out.extend_from_slice(chosen);
    }
    Ok(out)
}

/// Gives each of `peers` a disjoint stratified training set of `d` items per
/// class; every remaining item goes to the test batch (ascending id order).
pub fn partition(ds: &Dataset, peers: usize, d: usize, seed: u64) -> Result<Partition> {
    if peers == 0 {
        return Err(Error::InvalidParameter("need at least one peer".into()));
    }
    let mut excluded = HashSet::new();
    let mut train = Vec::with_capacity(peers);
    for p in 0..peers {
        let cfg = SamplingConfig {
            d,
            seed: seed::derive_seed(seed, &[p as u64]),
        };
        let ids = stratified_sample(ds, cfg, &excluded)?;
        excluded.extend(ids.iter().copied());
        train.push(ids);
    }
    let test: Vec<usize> = (0..ds.len()).filter(|i| !excluded.contains(i)).collect();
    if test.is_empty() {
        return Err(Error::TooFewItems {
            needed: excluded.len() + 1,
            found: ds.len(),
        });
    }
    Ok(Partition { train, test })
}

/// A class-proportional random subset of `n` items, ids ascending.
///
/// Each class keeps `round(n * count / total)` items (at least one), with the
/// rounding remainder given to the largest classes.
pub fn stratified_subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Vec<usize>> {
    let total = ds.len();
    if n == 0 || n > total {
        return Err(Error::InvalidParameter(format!(
            "subsample size {n} outside 1..={total}"
        )));
    }
    let classes = ds.num_classes();
    let mut quota: Vec<usize> = ds
        .class_counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0
            } else {
                ((n as f64 * c as f64 / total as f64).round() as usize).clamp(1, c)
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..classes).collect();
    order.sort_by(|&a, &b| ds.class_counts[b].cmp(&ds.class_counts[a]).then(a.cmp(&b)));
    let mut assigned: usize = quota.iter().sum();
    let mut cursor = 0;
    while assigned != n {
        let c = order[cursor % classes];
        if assigned < n && quota[c] < ds.class_counts[c] {
            quota[c] += 1;
            assigned += 1;
        } else if assigned > n && quota[c] > 1 {
            quota[c] -= 1;
            assigned -= 1;
        }
        cursor += 1;
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (id, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(id);
    }
    let mut out = Vec::with_capacity(n);
    for (class, mut pool) in by_class.into_iter().enumerate() {
        let mut rng = seed::rng(seed, &[class as u64]);
        let (chosen, _) = pool.partial_shuffle(&mut rng, quota[class]);
        out.extend_from_slice(chosen);
    }
    out.sort_unstable();
    Ok(out)
}
