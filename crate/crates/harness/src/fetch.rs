//! Download and conversion of the four benchmark datasets into the loader's
//! CSV shape: a header row, numeric feature columns and the class label in
//! the last column, with the published train and test files merged.
//!
//! Downloads shell out to `curl` (and `bunzip2` for USPS) so the library
//! needs no HTTP stack. The converters are plain functions over text and
//! are usable on files fetched by other means.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("unknown dataset {0:?} (expected drybean, pendigit, statlog or usps)")]
    UnknownDataset(String),
    #[error("download of {url} failed: {message}")]
    Download { url: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}, line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("zip archive: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FetchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    DryBean,
    PenDigit,
    StatLog,
    Usps,
}

impl Source {
    pub const ALL: [Source; 4] = [
        Source::DryBean,
        Source::PenDigit,
        Source::StatLog,
        Source::Usps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DryBean => "drybean",
            Self::PenDigit => "pendigit",
            Self::StatLog => "statlog",
            Self::Usps => "usps",
        }
    }

    /// Files to download, in merge order (train before test).
    pub fn urls(self) -> &'static [&'static str] {
        match self {
            Self::DryBean => &["https://archive.ics.uci.edu/static/public/602/dry+bean+dataset.zip"],
            Self::PenDigit => &[
                "https://archive.ics.uci.edu/ml/machine-learning-databases/pendigits/pendigits.tra",
                "https://archive.ics.uci.edu/ml/machine-learning-databases/pendigits/pendigits.tes",
            ],
            Self::StatLog => &[
                "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/satimage/sat.trn",
                "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/satimage/sat.tst",
            ],
            Self::Usps => &[
                "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/multiclass/usps.bz2",
                "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/multiclass/usps.t.bz2",
            ],
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = FetchError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "drybean" => Ok(Self::DryBean),
            "pendigit" | "pendigits" => Ok(Self::PenDigit),
            "statlog" | "satimage" | "landsat" => Ok(Self::StatLog),
            "usps" => Ok(Self::Usps),
            _ => Err(FetchError::UnknownDataset(s.to_string())),
        }
    }
}

/// Feature names plus rows of (feature values, label), kept as text so
/// conversion never reformats numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub rows: Vec<(Vec<String>, String)>,
}

impl Table {
    fn append(&mut self, other: Table, file: &str) -> Result<()> {
        if self.feature_names.is_empty() {
            self.feature_names = other.feature_names;
        } else if self.feature_names.len() != other.feature_names.len() {
            return Err(parse_err(
                file,
                0,
                format!(
                    "{} features, earlier files had {}",
                    other.feature_names.len(),
                    self.feature_names.len()
                ),
            ));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header)?;
        for (features, label) in &self.rows {
            w.write_record(features.iter().chain(std::iter::once(label)))?;
        }
        w.flush().map_err(|source| FetchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> FetchError {
    FetchError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn check_number(v: &str, file: &str, line: usize) -> Result<()> {
    v.parse::<f64>()
        .map(|_| ())
        .map_err(|_| parse_err(file, line, format!("non-numeric value {v:?}")))
}

/// Rows of numbers split by `sep` (or by whitespace when `sep` is `None`),
/// label last. Blank lines are skipped.
pub fn parse_delimited(text: &str, sep: Option<char>, file: &str) -> Result<Table> {
    let mut table = Table::default();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = match sep {
            Some(c) => line.split(c).map(str::trim).collect(),
            None => line.split_whitespace().collect(),
        };
        if fields.len() < 2 {
            return Err(parse_err(
                file,
                i + 1,
                "need at least one feature and a label",
            ));
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(parse_err(
                file,
                i + 1,
                format!("expected {} fields", width.unwrap_or(0)),
            ));
        }
        let (label, features) = fields.split_last().expect("nonempty");
        for v in features {
            check_number(v, file, i + 1)?;
        }
        table.rows.push((
            features.iter().map(|s| s.to_string()).collect(),
            label.to_string(),
        ));
    }
    let width = width.ok_or_else(|| parse_err(file, 0, "no data rows"))?;
    table.feature_names = (0..width - 1).map(|j| format!("f{j}")).collect();
    Ok(table)
}

/// ARFF with numeric attributes and a nominal class as the last attribute.
pub fn parse_arff(text: &str, file: &str) -> Result<Table> {
    let mut names = Vec::new();
    let mut table = Table::default();
    let mut in_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@attribute") {
                let rest = line["@attribute".len()..].trim();
                let name = match rest.strip_prefix('\'') {
                    Some(quoted) => quoted.split('\'').next().unwrap_or_default(),
                    None => rest.split_whitespace().next().unwrap_or_default(),
                };
                if name.is_empty() {
                    return Err(parse_err(file, i + 1, "attribute without a name"));
                }
                names.push(name.to_string());
            } else if lower.starts_with("@data") {
                if names.len() < 2 {
                    return Err(parse_err(
                        file,
                        i + 1,
                        "need at least one feature and a class attribute",
                    ));
                }
                in_data = true;
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(',')
            .map(|f| f.trim().trim_matches('\''))
            .collect();
        if fields.len() != names.len() {
            return Err(parse_err(
                file,
                i + 1,
                format!("expected {} fields", names.len()),
            ));
        }
        let (label, features) = fields.split_last().expect("nonempty");
        for v in features {
            check_number(v, file, i + 1)?;
        }
        table.rows.push((
            features.iter().map(|s| s.to_string()).collect(),
            label.to_string(),
        ));
    }
    if !in_data {
        return Err(parse_err(file, 0, "no @DATA section"));
    }
    names.pop();
    table.feature_names = names;
    Ok(table)
}

/// Sparse `label idx:value ...` lines (1-based indices) densified to
/// `dims` features; absent entries are 0.
pub fn parse_libsvm(text: &str, dims: usize, file: &str) -> Result<Table> {
    let mut table = Table {
        feature_names: (0..dims).map(|j| format!("f{j}")).collect(),
        rows: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(label) = parts.next() else { continue };
        let mut features = vec!["0".to_string(); dims];
        for entry in parts {
            let (idx, value) = entry
                .split_once(':')
                .ok_or_else(|| parse_err(file, i + 1, format!("bad entry {entry:?}")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&j| (1..=dims).contains(&j))
                .ok_or_else(|| {
                    parse_err(file, i + 1, format!("index {idx:?} outside 1..={dims}"))
                })?;
            check_number(value, file, i + 1)?;
            features[idx - 1] = value.to_string();
        }
        table.rows.push((features, label.to_string()));
    }
    if table.rows.is_empty() {
        return Err(parse_err(file, 0, "no data rows"));
    }
    Ok(table)
}

/// Reads the first `.arff` member of a zip archive.
pub fn arff_from_zip(bytes: &[u8]) -> Result<String> {
    let mut archive = zip::ZipArchive::new(std::io::Cursor::new(bytes))?;
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i)?;
        if entry.name().to_ascii_lowercase().ends_with(".arff") {
            let mut text = String::new();
            entry
                .read_to_string(&mut text)
                .map_err(|source| FetchError::Io {
                    path: PathBuf::from(entry.name()),
                    source,
                })?;
            return Ok(text);
        }
    }
    Err(FetchError::Zip(zip::result::ZipError::FileNotFound))
}

const USPS_DIMS: usize = 256;

/// Converts already-downloaded files (as listed by [`Source::urls`]) into a
/// merged table.
pub fn convert(source: Source, files: &[PathBuf]) -> Result<Table> {
    let mut merged = Table::default();
    for path in files {
        let file = path.display().to_string();
        let bytes = std::fs::read(path).map_err(|e| FetchError::Io {
            path: path.clone(),
            source: e,
        })?;
        let text = || -> Result<String> {
            String::from_utf8(bytes.clone()).map_err(|_| parse_err(&file, 0, "not UTF-8"))
        };
        let table = match source {
            Source::DryBean => parse_arff(&arff_from_zip(&bytes)?, &file)?,
            Source::PenDigit => parse_delimited(&text()?, Some(','), &file)?,
            Source::StatLog => parse_delimited(&text()?, None, &file)?,
            Source::Usps => parse_libsvm(&text()?, USPS_DIMS, &file)?,
        };
        merged.append(table, &file)?;
    }
    Ok(merged)
}

fn run(cmd: &mut Command, what: &str) -> Result<std::process::Output> {
    let out = cmd.output().map_err(|e| FetchError::Download {
        url: what.to_string(),
        message: format!("cannot run {:?}: {e}", cmd.get_program()),
    })?;
    if !out.status.success() {
        return Err(FetchError::Download {
            url: what.to_string(),
            message: String::from_utf8_lossy(&out.stderr)
                .lines()
                .rev()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("exited with an error")
                .trim()
                .to_string(),
        });
    }
    Ok(out)
}

fn download(url: &str, dest: &Path) -> Result<()> {
    if dest.exists() {
        return Ok(());
    }
    let partial = dest.with_extension("part");
    run(
        Command::new("curl")
            .args(["-fsSL", "--retry", "3", "-o"])
            .arg(&partial)
            .arg(url),
        url,
    )?;
    std::fs::rename(&partial, dest).map_err(|source| FetchError::Io {
        path: dest.to_path_buf(),
        source,
    })
}

fn bunzip(src: &Path) -> Result<PathBuf> {
    let dest = src.with_extension("");
    if !dest.exists() {
        let out = run(
            Command::new("bunzip2").arg("-c").arg(src),
            &src.display().to_string(),
        )?;
        std::fs::write(&dest, out.stdout).map_err(|source| FetchError::Io {
            path: dest.clone(),
            source,
        })?;
    }
    Ok(dest)
}

/// Downloads `source` into `out_dir/raw/<name>/` (skipping files already
/// present) and writes `out_dir/<name>.csv`. Returns the CSV path.
pub fn fetch(source: Source, out_dir: &Path) -> Result<PathBuf> {
    let raw_dir = out_dir.join("raw").join(source.name());
    std::fs::create_dir_all(&raw_dir).map_err(|e| FetchError::Io {
        path: raw_dir.clone(),
        source: e,
    })?;
    let mut files = Vec::new();
    for url in source.urls() {
        let file_name = url.rsplit('/').next().expect("url has a path");
        let dest = raw_dir.join(file_name.replace('+', "_"));
        download(url, &dest)?;
        files.push(if source == Source::Usps {
            bunzip(&dest)?
        } else {
            dest
        });
    }
    let table = convert(source, &files)?;
    let csv_path = out_dir.join(format!("{}.csv", source.name()));
    table.write_csv(&csv_path)?;
    Ok(csv_path)
}
