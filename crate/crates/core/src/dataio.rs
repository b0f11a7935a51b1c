//! Dataset ingestion and the fixed train/test split.
//!
//! Features are stored column-major and min-max normalized to `[0, 1]` at load
//! time. Labels are re-encoded to `0..C` in order of first appearance, so the
//! same file always produces the same encoding.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default fraction of rows assigned to the training side.
pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column {0} not found in header")]
    MissingLabel(String),
    #[error("non-numeric feature value {value:?} in column {column:?} (data row {row})")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("need at least 2 distinct labels, found {0}")]
    TooFewClasses(usize),
    #[error("no rows left after dropping {0} incomplete rows")]
    NoRows(usize),
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("column length {found} does not match label count {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("split ratio {0} outside (0, 1)")]
    BadRatio(f64),
    #[error("split gives {train} train / {test} test rows; each side needs at least 2")]
    SplitTooSmall { train: usize, test: usize },
    #[error("dataset has not been split yet")]
    NotSplit,
    #[error("feature index {index} out of range for {n_features} features")]
    FeatureOutOfRange { index: usize, n_features: usize },
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Last
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last` selects the final column, a bare integer is a zero-based index and
    /// anything else is a header name. A header literally named like an integer
    /// still wins over the index reading, see [`LabelColumn::resolve`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("last") {
            return Ok(LabelColumn::Last);
        }
        match s.parse::<usize>() {
            Ok(i) => Ok(LabelColumn::Index(i)),
            Err(_) => Ok(LabelColumn::Name(s.to_string())),
        }
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "{n}"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Last => write!(f, "last"),
        }
    }
}

impl LabelColumn {
    fn resolve(&self, header: &[String]) -> Result<usize, DataError> {
        let by_name = |name: &str| header.iter().position(|h| h == name);
        match self {
            LabelColumn::Last => header
                .len()
                .checked_sub(1)
                .ok_or_else(|| DataError::MissingLabel("last".into())),
            LabelColumn::Name(n) => by_name(n).ok_or_else(|| DataError::MissingLabel(n.clone())),
            LabelColumn::Index(i) => match by_name(&i.to_string()) {
                Some(p) => Ok(p),
                None if *i < header.len() => Ok(*i),
                None => Err(DataError::MissingLabel(i.to_string())),
            },
        }
    }
}

/// One side of the split with its columns materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub indices: Vec<usize>,
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl Partition {
    fn gather(indices: Vec<usize>, columns: &[Vec<f64>], labels: &[usize]) -> Self {
        let cols = columns
            .iter()
            .map(|c| indices.iter().map(|&r| c[r]).collect())
            .collect();
        let labels = indices.iter().map(|&r| labels[r]).collect();
        Partition {
            indices,
            columns: cols,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Column views for a feature subset, in the given order.
    pub fn select(&self, features: &[usize]) -> Vec<&[f64]> {
        features.iter().map(|&f| self.columns[f].as_slice()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Split {
    seed: u64,
    ratio: f64,
    train: Partition,
    test: Partition,
}

/// Normalized feature matrix with integer labels and an optional train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    dropped_rows: usize,
    split: Option<Split>,
}

impl Dataset {
    /// Builds a dataset from raw columns. Columns are min-max normalized and labels
    /// re-encoded by first appearance.
    pub fn from_columns<L: ToString>(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        labels: &[L],
    ) -> Result<Self, DataError> {
        if columns.is_empty() {
            return Err(DataError::NoFeatures);
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != labels.len() {
                return Err(DataError::ShapeMismatch {
                    expected: labels.len(),
                    found: c.len(),
                });
            }
            if let Some(r) = c.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonNumeric {
                    column: feature_names.get(j).cloned().unwrap_or_default(),
                    row: r,
                    value: c[r].to_string(),
                });
            }
        }
        if labels.is_empty() {
            return Err(DataError::NoRows(0));
        }
        let raw: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        let (labels, class_names) = encode_labels(&raw);
        if class_names.len() < 2 {
            return Err(DataError::TooFewClasses(class_names.len()));
        }
        let names = if feature_names.len() == columns.len() {
            feature_names
        } else {
            (0..columns.len()).map(|j| format!("f{j}")).collect()
        };
        Ok(Dataset {
            feature_names: names,
            columns: columns.into_iter().map(min_max_normalize).collect(),
            labels,
            class_names,
            dropped_rows: 0,
            split: None,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Original label values, indexed by encoded class id.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Rows discarded at load time because of a missing cell.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_split(&self) -> bool {
        self.split.is_some()
    }

    pub fn train(&self) -> Result<&Partition, DataError> {
        self.split.as_ref().map(|s| &s.train).ok_or(DataError::NotSplit)
    }

    pub fn test(&self) -> Result<&Partition, DataError> {
        self.split.as_ref().map(|s| &s.test).ok_or(DataError::NotSplit)
    }

    pub fn split_seed(&self) -> Option<u64> {
        self.split.as_ref().map(|s| s.seed)
    }

    pub fn check_feature(&self, index: usize) -> Result<(), DataError> {
        if index < self.n_features() {
            Ok(())
        } else {
            Err(DataError::FeatureOutOfRange {
                index,
                n_features: self.n_features(),
            })
        }
    }

    /// Shuffles row indices under `seed` and assigns `round(ratio * n)` rows to
    /// the training side. Both sides are returned in ascending row order.
    pub fn split(mut self, ratio: f64, seed: u64) -> Result<Self, DataError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(DataError::BadRatio(ratio));
        }
        let n = self.n_samples();
        let n_train = (ratio * n as f64).round() as usize;
        let n_test = n - n_train.min(n);
        if n_train < 2 || n_test < 2 {
            return Err(DataError::SplitTooSmall {
                train: n_train.min(n),
                test: n_test,
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut train = order[..n_train].to_vec();
        let mut test = order[n_train..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        self.split = Some(Split {
            seed,
            ratio,
            train: Partition::gather(train, &self.columns, &self.labels),
            test: Partition::gather(test, &self.columns, &self.labels),
        });
        Ok(self)
    }
}

fn encode_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let labels = raw
        .iter()
        .map(|v| {
            *ids.entry(v.as_str()).or_insert_with(|| {
                names.push(v.clone());
                names.len() - 1
            })
        })
        .collect();
    (labels, names)
}

fn min_max_normalize(mut column: Vec<f64>) -> Vec<f64> {
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    for v in column.iter_mut() {
        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
    }
    column
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "N/A" | "NaN" | "nan" | "null")
}

/// Reads a headed CSV file. Rows with any missing cell are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, label: &LabelColumn) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_col = label.resolve(&header)?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != label_col).collect();
    if feature_cols.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feature_cols.len()];
    let mut labels = Vec::new();
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(feature_cols.len());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        if record.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        row_buf.clear();
        for &c in &feature_cols {
            let cell = &record[c];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row_buf.push(v),
                _ => {
                    return Err(DataError::NonNumeric {
                        column: header[c].clone(),
                        row,
                        value: cell.to_string(),
                    })
                }
            }
        }
        for (col, &v) in columns.iter_mut().zip(&row_buf) {
            col.push(v);
        }
        labels.push(record[label_col].to_string());
    }
    if labels.is_empty() {
        return Err(DataError::NoRows(dropped));
    }
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing values");
    }
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    let mut ds = Dataset::from_columns(names, columns, &labels)?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// Synthetic six-feature set whose label is fully determined by features 0 and 1.
///
/// Features 0 and 1 are fair coin flips and the label is `2 * x0 + x1`; features
/// 2..6 are uniform noise. Any subset containing both planted features can be
/// classified perfectly.
pub fn planted_dataset(n_samples: usize, seed: u64) -> Result<Dataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![Vec::with_capacity(n_samples); 6];
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let a = rng.gen_bool(0.5) as u8;
        let b = rng.gen_bool(0.5) as u8;
        columns[0].push(a as f64);
        columns[1].push(b as f64);
        for col in columns.iter_mut().skip(2) {
            col.push(rng.gen::<f64>());
        }
        labels.push(2 * a + b);
    }
    let names = (0..6).map(|j| format!("x{j}")).collect();
    Dataset::from_columns(names, columns, &labels)
}

/// Path of the bundled spam-classification CSV (57 features, label column `class`).
pub fn bundled_spambase_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("spambase.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_text(rows: &[&str]) -> String {
        let mut s = String::from("a,b,c,label\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn ten_clean_rows() -> Vec<String> {
        (0..10)
            .map(|i| format!("{},{},{},{}", i, i * 2, 10 - i, if i % 2 == 0 { "yes" } else { "no" }))
            .collect()
    }

    #[test]
    fn loads_clean_file() {
        let rows = ten_clean_rows();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = read_csv(csv_text(&refs).as_bytes(), &LabelColumn::Last).unwrap();
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.n_samples(), 10);
        assert_eq!(ds.dropped_rows(), 0);
        assert_eq!(ds.class_names(), &["yes".to_string(), "no".to_string()]);
        assert_eq!(&ds.labels()[..3], &[0, 1, 0]);
        // min-max normalized
        assert_eq!(ds.column(0)[0], 0.0);
        assert_eq!(ds.column(0)[9], 1.0);
        assert_eq!(ds.column(2)[0], 1.0);
    }

    #[test]
    fn drops_row_with_empty_cell() {
        let mut rows = ten_clean_rows();
        rows[4] = "4,,6,yes".into();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = read_csv(csv_text(&refs).as_bytes(), &LabelColumn::Last).unwrap();
        assert_eq!(ds.n_samples(), 9);
        assert_eq!(ds.dropped_rows(), 1);
    }

    #[test]
    fn rejects_non_numeric_feature() {
        let mut rows = ten_clean_rows();
        rows[2] = "2,abc,8,yes".into();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let err = read_csv(csv_text(&refs).as_bytes(), &LabelColumn::Last).unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { ref column, .. } if column == "b"), "{err}");
    }

    #[test]
    fn label_column_by_name_and_index() {
        let text = "label,x,y\n0,1,2\n1,3,4\n0,5,6\n";
        let a = read_csv(text.as_bytes(), &"label".parse().unwrap()).unwrap();
        let b = read_csv(text.as_bytes(), &LabelColumn::Index(0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.feature_names(), &["x".to_string(), "y".to_string()]);
        let err = read_csv(text.as_bytes(), &LabelColumn::Name("nope".into())).unwrap_err();
        assert!(matches!(err, DataError::MissingLabel(_)));
    }

    #[test]
    fn single_class_is_rejected() {
        let text = "x,y\n1,a\n2,a\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &LabelColumn::Last),
            Err(DataError::TooFewClasses(1))
        ));
    }

    #[test]
    fn all_rows_dropped_is_an_error() {
        let text = "x,y\n,a\n2,\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &LabelColumn::Last),
            Err(DataError::NoRows(2))
        ));
    }

    #[test]
    fn unreadable_file() {
        let err = load_csv("/definitely/not/here.csv", &LabelColumn::Last).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }

    fn toy(n: usize) -> Dataset {
        let col: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        Dataset::from_columns(vec!["x".into()], vec![col], &labels).unwrap()
    }

    #[test]
    fn split_sizes_follow_ratio() {
        let ds = toy(100).split(DEFAULT_TRAIN_RATIO, 7).unwrap();
        assert_eq!(ds.train().unwrap().len(), 80);
        assert_eq!(ds.test().unwrap().len(), 20);
    }

    #[test]
    fn split_is_deterministic() {
        let a = toy(50).split(0.8, 3).unwrap();
        let b = toy(50).split(0.8, 3).unwrap();
        assert_eq!(a.train().unwrap().indices, b.train().unwrap().indices);
        assert_eq!(a.test().unwrap().indices, b.test().unwrap().indices);
        let c = toy(50).split(0.8, 4).unwrap();
        assert_ne!(a.train().unwrap().indices, c.train().unwrap().indices);
    }

    #[test]
    fn split_rejects_tiny_sides_and_bad_ratio() {
        assert!(matches!(toy(5).split(0.9, 0), Err(DataError::SplitTooSmall { .. })));
        assert!(matches!(toy(10).split(1.0, 0), Err(DataError::BadRatio(_))));
        assert!(matches!(toy(10).split(0.0, 0), Err(DataError::BadRatio(_))));
        assert!(matches!(toy(10).train(), Err(DataError::NotSplit)));
    }

    #[test]
    fn planted_dataset_shape() {
        let ds = planted_dataset(200, 1).unwrap();
        assert_eq!(ds.n_features(), 6);
        assert_eq!(ds.n_classes(), 4);
        for r in 0..ds.n_samples() {
            let want = 2.0 * ds.column(0)[r] + ds.column(1)[r];
            let class: f64 = ds.class_names()[ds.labels()[r]].parse().unwrap();
            assert_eq!(want, class);
        }
    }

    proptest::proptest! {
        #[test]
        fn split_partitions_rows(n in 10usize..200, seed in proptest::prelude::any::<u64>()) {
            let ds = toy(n).split(0.8, seed).unwrap();
            let train = &ds.train().unwrap().indices;
            let test = &ds.test().unwrap().indices;
            let mut all: Vec<usize> = train.iter().chain(test).copied().collect();
            all.sort_unstable();
            proptest::prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            proptest::prop_assert_eq!(train.len(), (0.8 * n as f64).round() as usize);
        }
    }
}
