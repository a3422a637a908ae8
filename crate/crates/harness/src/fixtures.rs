//! Synthetic stand-ins for the benchmark datasets.
//!
//! Each class is an isotropic Gaussian blob around a random centre. Centres
//! sit close enough that blobs overlap, so k-NN weak learners trained on a
//! handful of labelled points per class are clearly imperfect while a dense
//! unlabelled batch still reveals the class structure. Class sizes follow
//! the smallest and largest class shares of the dataset being imitated.

use coassoc_refine::RawDataset;
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use coassoc_refine::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub name: &'static str,
    pub classes: usize,
    pub features: usize,
    pub n: usize,
    pub min_class_frac: f64,
    pub max_class_frac: f64,
    /// Per-coordinate standard deviation of class centres around the origin.
    pub centre_spread: f64,
    /// Expected norm of the per-item noise vector.
    pub noise: f64,
}

/// Shapes modelled on the four benchmark datasets, scaled down in size.
/// Spreads are tuned so single weak learners land between 80% and 90%.
pub const FIXTURES: [FixtureSpec; 4] = [
    FixtureSpec {
        name: "drybean",
        classes: 7,
        features: 16,
        n: 4000,
        min_class_frac: 0.0383,
        max_class_frac: 0.2605,
        centre_spread: 0.36,
        noise: 1.5,
    },
    FixtureSpec {
        name: "pendigit",
        classes: 10,
        features: 16,
        n: 4000,
        min_class_frac: 0.0959,
        max_class_frac: 0.1040,
        centre_spread: 0.4,
        noise: 1.5,
    },
    FixtureSpec {
        name: "statlog",
        classes: 6,
        features: 36,
        n: 4000,
        min_class_frac: 0.0973,
        max_class_frac: 0.2382,
        centre_spread: 0.2,
        noise: 1.5,
    },
    FixtureSpec {
        name: "usps",
        classes: 10,
        features: 32,
        n: 4000,
        min_class_frac: 0.0761,
        max_class_frac: 0.1670,
        centre_spread: 0.21,
        noise: 1.5,
    },
];

pub fn fixture(name: &str) -> Option<&'static FixtureSpec> {
    FIXTURES.iter().find(|f| f.name.eq_ignore_ascii_case(name))
}

/// Items per class: the first class gets the minimum share, the last the
/// maximum, the rest split what remains evenly. Rounding slack goes to the
/// middle classes.
pub fn class_sizes(spec: &FixtureSpec) -> Vec<usize> {
    let c = spec.classes;
    if c == 1 {
        return vec![spec.n];
    }
    let mut fracs = vec![0.0; c];
    fracs[0] = spec.min_class_frac;
    fracs[c - 1] = spec.max_class_frac;
    if c > 2 {
        let middle = (1.0 - spec.min_class_frac - spec.max_class_frac) / (c - 2) as f64;
        fracs[1..c - 1].iter_mut().for_each(|f| *f = middle);
    }
    let mut sizes: Vec<usize> = fracs
        .iter()
        .map(|f| (f * spec.n as f64).round() as usize)
        .collect();
    let mut total: usize = sizes.iter().sum();
    let mut i = 0;
    while total != spec.n {
        let slot = if c > 2 { 1 + i % (c - 2) } else { i % c };
        if total < spec.n {
            sizes[slot] += 1;
            total += 1;
        } else if sizes[slot] > 1 {
            sizes[slot] -= 1;
            total -= 1;
        }
        i += 1;
    }
    sizes
}

/// Draws the fixture deterministically from `seed_value`. Rows are
/// interleaved across classes in a seeded random order.
pub fn generate(spec: &FixtureSpec, seed_value: u64) -> RawDataset {
    let mut rng = seed::rng(seed_value, &[seed::tag(spec.name)]);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let f = spec.features;

    let centres: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..f)
                .map(|_| unit.sample(&mut rng) * spec.centre_spread)
                .collect()
        })
        .collect();

    let sizes = class_sizes(spec);
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);

    let noise_scale = spec.noise / (f as f64).sqrt();
    let mut features = Array2::zeros((spec.n, f));
    for (i, &c) in labels.iter().enumerate() {
        for (d, &centre) in centres[c].iter().enumerate() {
            features[[i, d]] = centre + unit.sample(&mut rng) * noise_scale;
        }
    }
    let names = (0..spec.classes).map(|c| format!("c{c}")).collect();
    RawDataset::new(features, labels, names).expect("consistent fixture")
}

/// Writes a fixture as CSV with a header and the label in the last column.
pub fn write_csv(raw: &RawDataset, path: &std::path::Path) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..raw.features.ncols()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &label) in raw.features.rows().into_iter().zip(&raw.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(raw.class_names[label].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
