//! Datasets: CSV ingestion, column standardization and stratified splitting.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::{Array1, Array2, ArrayView1, Axis, ShapeBuilder};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column `{0}` not found in header")]
    UnknownLabelColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("non-numeric cell at (row {row}, col `{column}`): `{value}`")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("label at row {row} is `{value}`, expected 0 or 1")]
    BadLabel { row: usize, value: String },
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("dataset needs at least 2 samples and 1 descriptor, got n={n}, p={p}")]
    TooSmall { n: usize, p: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dataset is already standardized")]
    AlreadyStandardized,
    #[error("every descriptor column is constant")]
    AllConstant,
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("class {label} has {size} samples, too few to stratify")]
    ClassTooSmall { label: u8, size: usize },
    #[error("reference dataset is not standardized")]
    NotStandardized,
    #[error("descriptor `{0}` is missing")]
    MissingDescriptor(String),
}

/// Column means and population standard deviations used to standardize a
/// dataset, retained for de-standardizing coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Descriptors removed by [`Dataset::standardize`] because they were constant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub dropped: Vec<String>,
}

/// A design matrix (samples × descriptors) with binary labels.
///
/// The matrix is kept in column-major layout so that coordinate-wise solvers
/// can walk each descriptor as a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    names: Vec<String>,
    label_name: String,
    standardization: Option<Standardization>,
}

fn column_major(x: Array2<f64>) -> Array2<f64> {
    if x.t().is_standard_layout() {
        return x;
    }
    let mut out = Array2::zeros(x.raw_dim().f());
    out.assign(&x);
    out
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<f64>, names: Vec<String>) -> Result<Self, DataError> {
        let (n, p) = x.dim();
        if n < 2 || p < 1 {
            return Err(DataError::TooSmall { n, p });
        }
        if y.len() != n {
            return Err(DataError::Shape(format!("{} labels for {n} rows", y.len())));
        }
        if names.len() != p {
            return Err(DataError::Shape(format!("{} names for {p} columns", names.len())));
        }
        if let Some((row, v)) = y.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
            return Err(DataError::BadLabel { row: row + 1, value: v.to_string() });
        }
        let mut seen = HashSet::with_capacity(p);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateColumn(name.clone()));
            }
        }
        if let Some(((row, col), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(DataError::NonNumeric { row: row + 1, column: names[col].clone(), value: v.to_string() });
        }
        Ok(Self {
            x: column_major(x),
            y: Array1::from(y),
            names,
            label_name: "label".to_string(),
            standardization: None,
        })
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    /// Contiguous view of descriptor `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        self.x.column(j).to_slice().expect("column-major storage")
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v == 1.0).count();
        (self.n() - pos, pos)
    }

    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        let target = f64::from(label);
        self.y.iter().enumerate().filter(|(_, &v)| v == target).map(|(i, _)| i).collect()
    }

    /// Rows `rows` in the given order; standardization metadata is kept.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: column_major(self.x.select(Axis(0), rows)),
            y: self.y.select(Axis(0), rows),
            names: self.names.clone(),
            label_name: self.label_name.clone(),
            standardization: self.standardization.clone(),
        }
    }

    /// Centers and scales every column to zero mean and unit population
    /// standard deviation, dropping constant columns.
    pub fn standardize(&self) -> Result<(Dataset, DropReport), DataError> {
        if self.is_standardized() {
            return Err(DataError::AlreadyStandardized);
        }
        let n = self.n() as f64;
        let mut keep = Vec::new();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        let mut report = DropReport::default();
        for j in 0..self.p() {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            if std <= 1e-12 * (1.0 + mean.abs()) {
                report.dropped.push(self.names[j].clone());
            } else {
                keep.push(j);
                means.push(mean);
                stds.push(std);
            }
        }
        if keep.is_empty() {
            return Err(DataError::AllConstant);
        }
        let names = keep.iter().map(|&j| self.names[j].clone()).collect();
        let scale = Standardization { means, stds };
        let x = self.scaled_columns(&keep, &scale);
        Ok((
            Dataset {
                x,
                y: self.y.clone(),
                names,
                label_name: self.label_name.clone(),
                standardization: Some(scale),
            },
            report,
        ))
    }

    /// Applies `reference`'s column selection, means and scales to this
    /// (raw) dataset, e.g. to bring a test split onto the training scale.
    pub fn standardize_like(&self, reference: &Dataset) -> Result<Dataset, DataError> {
        if self.is_standardized() {
            return Err(DataError::AlreadyStandardized);
        }
        let scale = reference.standardization.as_ref().ok_or(DataError::NotStandardized)?;
        let index: BTreeMap<&str, usize> = self.names.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
        let cols = reference
            .names
            .iter()
            .map(|name| index.get(name.as_str()).copied().ok_or_else(|| DataError::MissingDescriptor(name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            x: self.scaled_columns(&cols, scale),
            y: self.y.clone(),
            names: reference.names.clone(),
            label_name: self.label_name.clone(),
            standardization: Some(scale.clone()),
        })
    }

    fn scaled_columns(&self, cols: &[usize], scale: &Standardization) -> Array2<f64> {
        let mut x = Array2::zeros((self.n(), cols.len()).f());
        for (k, &j) in cols.iter().enumerate() {
            let (m, s) = (scale.means[k], scale.stds[k]);
            x.column_mut(k).iter_mut().zip(self.column(j)).for_each(|(dst, &v)| *dst = (v - m) / s);
        }
        x
    }
}

/// How label cells are turned into classes.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum LabelMapping {
    /// Cells must read `0` or `1` (numerically).
    #[default]
    Numeric,
    /// Cells equal to this string are class 1; any other non-empty value is class 0.
    Positive(String),
}

fn open_reader(path: &Path) -> Result<Box<dyn Read>, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    let reader = BufReader::new(file);
    if is_gz(path) {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

/// Reads a header-first, comma-separated file (gzip when the name ends in
/// `.gz`). Every column other than `label_column` is a descriptor.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, mapping: &LabelMapping) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(open_reader(path)?);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateColumn(h.clone()));
        }
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::UnknownLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = header.iter().enumerate().filter(|&(j, _)| j != label_idx).map(|(_, h)| h.clone()).collect();
    let p = names.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow { row, found: record.len(), expected: header.len() });
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if j == label_idx {
                labels.push(parse_label(cell, row, mapping)?);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(DataError::NonNumeric { row, column: header[j].clone(), value: cell.to_string() })
                }
            }
        }
    }
    let n = labels.len();
    if n < 2 || p < 1 {
        return Err(DataError::TooSmall { n, p });
    }
    let x = Array2::from_shape_vec((n, p), values).map_err(|e| DataError::Shape(e.to_string()))?;
    Ok(Dataset::new(x, labels, names)?.with_label_name(label_column))
}

fn parse_label(cell: &str, row: usize, mapping: &LabelMapping) -> Result<f64, DataError> {
    let bad = || DataError::BadLabel { row, value: cell.to_string() };
    match mapping {
        LabelMapping::Numeric => match cell.parse::<f64>() {
            Ok(v) if v == 0.0 || v == 1.0 => Ok(v),
            _ => Err(bad()),
        },
        LabelMapping::Positive(_) if cell.is_empty() => Err(bad()),
        LabelMapping::Positive(pos) => Ok(if cell == pos { 1.0 } else { 0.0 }),
    }
}

/// Writes the label column first, then descriptors, using the shortest
/// round-trip representation of every value.
pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    let sink: Box<dyn Write> = if is_gz(path) {
        Box::new(GzEncoder::new(BufWriter::new(file), Compression::default()))
    } else {
        Box::new(BufWriter::new(file))
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(std::iter::once(d.label_name()).chain(d.names().iter().map(String::as_str)))?;
    let mut record = Vec::with_capacity(d.p() + 1);
    for i in 0..d.n() {
        record.clear();
        record.push(format!("{}", d.y[i] as u8));
        record.extend(d.row(i).iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    Ok(())
}

/// Train/test partition of a parent dataset.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Per-class training counts: `round(fraction·n)` rows overall, apportioned
/// to classes by largest remainder with random tie-breaking.
fn stratified_counts(sizes: &[usize], fraction: f64, rng: &mut seeding::Rng) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|&e| (e + 1e-9).floor() as usize).collect();
    let mut order: Vec<(f64, f64, usize)> =
        exact.iter().enumerate().map(|(c, &e)| (e - counts[c] as f64, rng.random::<f64>(), c)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let assigned: usize = counts.iter().sum();
    for &(_, _, c) in order.iter().take(target.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Stratified random split. Deterministic given `seed`; row order inside each
/// part follows the parent.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair, DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadFraction(train_fraction));
    }
    let mut rng = seeding::rng(seed);
    let classes = [d.class_indices(0), d.class_indices(1)];
    for (label, members) in classes.iter().enumerate() {
        if members.len() < 2 {
            return Err(DataError::ClassTooSmall { label: label as u8, size: members.len() });
        }
    }
    let counts = stratified_counts(&[classes[0].len(), classes[1].len()], train_fraction, &mut rng);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (label, (members, &k)) in classes.iter().zip(&counts).enumerate() {
        if k == 0 || k == members.len() {
            return Err(DataError::ClassTooSmall { label: label as u8, size: members.len() });
        }
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        train_rows.extend_from_slice(&shuffled[..k]);
        test_rows.extend_from_slice(&shuffled[k..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitPair {
        train: d.subset(&train_rows),
        test: d.subset(&test_rows),
        train_rows,
        test_rows,
        seed,
        train_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("d{j}")).collect()
    }

    fn labelled(n_pos: usize, n_neg: usize) -> Dataset {
        let n = n_pos + n_neg;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 3 + j) as f64);
        let y = (0..n).map(|i| if i < n_pos { 1.0 } else { 0.0 }).collect();
        Dataset::new(x, y, names(2)).unwrap()
    }

    #[test]
    fn reads_small_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,y,b\n1.5,0,2\n3,1,4\n-1,1,0.25\n").unwrap();
        let d = load_csv(&path, "y", &LabelMapping::Numeric).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.names(), ["a", "b"]);
        assert_eq!(d.y().to_vec(), vec![0.0, 1.0, 1.0]);
        assert_eq!(d.x()[[2, 1]], 0.25);
        assert!(!d.is_standardized());
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,y\n1,0\nNA,1\n").unwrap();
        let err = load_csv(&path, "y", &LabelMapping::Numeric).unwrap_err();
        assert!(err.to_string().starts_with("non-numeric cell at (row 2, col `a`)"), "{err}");

        std::fs::write(&path, "a,y\n1,0\n2,2\n").unwrap();
        assert!(matches!(load_csv(&path, "y", &LabelMapping::Numeric), Err(DataError::BadLabel { row: 2, .. })));
        assert!(matches!(load_csv(&path, "class", &LabelMapping::Numeric), Err(DataError::UnknownLabelColumn(_))));

        std::fs::write(&path, "a,a,y\n1,1,0\n2,2,1\n").unwrap();
        assert!(matches!(load_csv(&path, "y", &LabelMapping::Numeric), Err(DataError::DuplicateColumn(_))));

        assert!(matches!(
            load_csv(dir.path().join("missing.csv"), "y", &LabelMapping::Numeric),
            Err(DataError::Io { .. })
        ));
    }

    #[test]
    fn text_labels_need_explicit_positive_class() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,activity\n1,ACTIVE\n2,INACTIVE\n3,ACTIVE\n").unwrap();
        assert!(load_csv(&path, "activity", &LabelMapping::Numeric).is_err());
        let d = load_csv(&path, "activity", &LabelMapping::Positive("ACTIVE".into())).unwrap();
        assert_eq!(d.y().to_vec(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv.gz");
        let d = labelled(3, 3);
        save_csv(&d, &path).unwrap();
        assert_eq!(load_csv(&path, "label", &LabelMapping::Numeric).unwrap(), d);
    }

    #[test]
    fn standardize_column() {
        let x = array![[1.0, 5.0, 0.0], [2.0, 5.0, 1.0], [3.0, 5.0, 0.0]];
        let d = Dataset::new(x, vec![0.0, 1.0, 1.0], names(3)).unwrap();
        let (s, report) = d.standardize().unwrap();
        assert_eq!(report.dropped, vec!["d1".to_string()]);
        assert_eq!(s.names(), ["d0", "d2"]);
        let expected = [-1.2247, 0.0, 1.2247];
        for (a, b) in s.column(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-4);
        }
        let scale = s.standardization().unwrap();
        assert!((scale.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(matches!(s.standardize(), Err(DataError::AlreadyStandardized)));
    }

    #[test]
    fn all_constant_is_an_error() {
        let x = array![[5.0], [5.0], [5.0]];
        let d = Dataset::new(x, vec![0.0, 1.0, 1.0], names(1)).unwrap();
        assert!(matches!(d.standardize(), Err(DataError::AllConstant)));
    }

    #[test]
    fn standardize_like_uses_reference_scale() {
        let x = array![[1.0, 2.0], [3.0, 2.0], [5.0, 2.0], [7.0, 2.0]];
        let d = Dataset::new(x, vec![0.0, 1.0, 0.0, 1.0], names(2)).unwrap();
        let (s, _) = d.standardize().unwrap();
        let test = Dataset::new(array![[4.0, 9.0], [0.0, 1.0]], vec![1.0, 0.0], names(2)).unwrap();
        let t = test.standardize_like(&s).unwrap();
        assert_eq!(t.p(), 1);
        assert!((t.x()[[0, 0]] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn split_totals_match_table_shape() {
        let d = labelled(58, 142);
        for seed in 0..20 {
            let pair = split(&d, 0.7, seed).unwrap();
            assert_eq!((pair.train.n(), pair.test.n()), (140, 60));
        }
        let a = split(&d, 0.7, 3).unwrap();
        let b = split(&d, 0.7, 3).unwrap();
        assert_eq!(a.train_rows, b.train_rows);
        assert_eq!(a.train, b.train);
    }

    #[test]
    fn half_split_of_ten_balanced() {
        // Enumerating the admissible stratified splits: total 5 in train and
        // each class contributing 2 or 3.
        let d = labelled(5, 5);
        let mut seen_counts = HashSet::new();
        for seed in 0..100 {
            let pair = split(&d, 0.5, seed).unwrap();
            assert_eq!(pair.train.n(), 5);
            let (neg, pos) = pair.train.class_counts();
            assert!((2..=3).contains(&neg) && (2..=3).contains(&pos));
            seen_counts.insert(pos);
        }
        assert_eq!(seen_counts.len(), 2);
    }

    #[test]
    fn split_errors() {
        let d = labelled(1, 9);
        assert!(matches!(split(&d, 0.7, 0), Err(DataError::ClassTooSmall { label: 1, .. })));
        assert!(matches!(split(&labelled(4, 4), 1.0, 0), Err(DataError::BadFraction(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn csv_round_trip(n in 2usize..12, p in 1usize..6, seed in any::<u64>()) {
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = seeding::rng(seed);
            let x = Array2::from_shape_fn((n, p), |_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v * 1e3
            });
            let y = (0..n).map(|i| (i % 2) as f64).collect();
            let d = Dataset::new(x, y, names(p)).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("r.csv");
            save_csv(&d, &path).unwrap();
            let back = load_csv(&path, "label", &LabelMapping::Numeric).unwrap();
            prop_assert_eq!(back.y(), d.y());
            for (a, b) in back.x().iter().zip(d.x().iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn standardize_is_idempotent(seed in any::<u64>()) {
            use rand_distr::{Distribution, Normal};
            let mut rng = seeding::rng(seed);
            let normal = Normal::new(3.0, 2.0).unwrap();
            let x = Array2::from_shape_fn((15, 4), |_| normal.sample(&mut rng));
            let y = (0..15).map(|i| (i % 2) as f64).collect();
            let (s, _) = Dataset::new(x, y, names(4)).unwrap().standardize().unwrap();
            for j in 0..s.p() {
                let c = s.column(j);
                let mean = c.iter().sum::<f64>() / 15.0;
                let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 15.0).sqrt();
                prop_assert!(mean.abs() < 1e-8 && (sd - 1.0).abs() < 1e-8);
            }
            let raw = Dataset::new(s.x().clone(), s.y().to_vec(), s.names().to_vec()).unwrap();
            let (again, report) = raw.standardize().unwrap();
            prop_assert!(report.dropped.is_empty());
            for (a, b) in again.x().iter().zip(s.x().iter()) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn split_partitions_and_stratifies(seed in 0u64..100, n_pos in 2usize..40, n_neg in 2usize..40) {
            let d = labelled(n_pos, n_neg);
            if let Ok(pair) = split(&d, 0.7, seed) {
                let mut all: Vec<usize> = pair.train_rows.iter().chain(&pair.test_rows).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..d.n()).collect::<Vec<_>>());
                let (neg, pos) = pair.train.class_counts();
                for (k, size) in [(neg, n_neg), (pos, n_pos)] {
                    let exact = 0.7 * size as f64;
                    prop_assert!(k as f64 >= (exact + 1e-9).floor() && k as f64 <= exact.ceil() + 1e-9);
                }
                prop_assert_eq!(pair.train.n(), (0.7 * d.n() as f64).round() as usize);
            }
        }
    }
}
