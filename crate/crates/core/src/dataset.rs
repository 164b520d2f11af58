//! Tabular data: loading, validation, standardization and hold-out splits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "matrix of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension {
                expected: cols,
                got: bad.len(),
            });
        }
        let data = rows.iter().flatten().copied().collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" | "regress" => Ok(Task::Regression),
            "classification" | "classify" => Ok(Task::Classification),
            other => Err(Error::Config(format!(
                "unknown task {other:?} (expected regress or classify)"
            ))),
        }
    }
}

/// Outcome vector: real values or class codes `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Numeric(Vec<f64>),
    Classes(Vec<usize>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Numeric(v) => v.len(),
            Target::Classes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Target::Numeric(_) => Task::Regression,
            Target::Classes(_) => Task::Classification,
        }
    }

    /// Value of row `i` as a real (class codes are cast).
    pub fn value(&self, i: usize) -> f64 {
        match self {
            Target::Numeric(v) => v[i],
            Target::Classes(v) => v[i] as f64,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Target {
        match self {
            Target::Numeric(v) => Target::Numeric(indices.iter().map(|&i| v[i]).collect()),
            Target::Classes(v) => Target::Classes(indices.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    target: Target,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset after checking every invariant: finite entries,
    /// matching lengths, unique feature names, and for classification at
    /// least two classes with every code in range.
    pub fn new(
        features: Matrix,
        target: Target,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidData("dataset has no feature columns".into()));
        }
        if target.len() != n {
            return Err(Error::InvalidData(format!(
                "{n} feature rows but {} target values",
                target.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::InvalidData(format!(
                "{} feature columns but {} names",
                features.ncols(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::InvalidData(format!(
                "duplicate feature name {dup:?}"
            )));
        }
        if let Some(pos) = features.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature value at row {}, column {:?}",
                pos / features.ncols() + 1,
                feature_names[pos % features.ncols()]
            )));
        }
        match &target {
            Target::Numeric(y) => {
                if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidData(format!(
                        "non-finite target at row {}",
                        i + 1
                    )));
                }
                if !class_names.is_empty() {
                    return Err(Error::InvalidData(
                        "regression data cannot carry class names".into(),
                    ));
                }
            }
            Target::Classes(codes) => {
                if class_names.len() < 2 {
                    return Err(Error::InvalidData(format!(
                        "classification needs at least 2 classes, found {}",
                        class_names.len()
                    )));
                }
                if let Some(c) = codes.iter().find(|&&c| c >= class_names.len()) {
                    return Err(Error::InvalidData(format!(
                        "class code {c} out of range for {} classes",
                        class_names.len()
                    )));
                }
            }
        }
        Ok(Dataset {
            features,
            target,
            feature_names,
            class_names,
        })
    }

    /// Regression dataset with generated feature names `x1..xp`.
    pub fn regression(features: Matrix, y: Vec<f64>) -> Result<Self> {
        let names = default_names(features.ncols());
        Dataset::new(features, Target::Numeric(y), names, Vec::new())
    }

    /// Classification dataset with generated names; `n_classes` fixes C.
    pub fn classification(features: Matrix, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let names = default_names(features.ncols());
        let classes = (0..n_classes).map(|c| c.to_string()).collect();
        Dataset::new(features, Target::Classes(labels), names, classes)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn task(&self) -> Task {
        self.target.task()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Rows at `indices` in the given order; names and classes carry over.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            target: self.target.select(indices),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same rows with a replacement target of the same task and length.
    pub fn with_target(&self, target: Target) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            target,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }
}

fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// A CSV file held as header plus raw string cells.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        CsvTable::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::Csv("missing header row".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            rows.push(record.iter().map(|c| c.trim().to_string()).collect());
        }
        if rows.is_empty() {
            return Err(Error::InvalidData("CSV has no data rows".into()));
        }
        Ok(CsvTable { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn cell(&self, row: usize, col: usize) -> Result<&str> {
        let value = self.rows[row][col].as_str();
        if value.is_empty() {
            return Err(Error::EmptyCell {
                row: row + 1,
                column: self.header[col].clone(),
            });
        }
        Ok(value)
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let text = self.cell(row, col)?;
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::BadNumber {
                row: row + 1,
                column: self.header[col].clone(),
                value: text.to_string(),
            })
    }

    /// Feature matrix from every column except `exclude`, in header order.
    pub fn feature_matrix(&self, exclude: Option<usize>) -> Result<(Matrix, Vec<String>)> {
        let cols: Vec<usize> = (0..self.header.len())
            .filter(|&c| Some(c) != exclude)
            .collect();
        let mut data = Vec::with_capacity(cols.len() * self.rows.len());
        for r in 0..self.rows.len() {
            for &c in &cols {
                data.push(self.number(r, c)?);
            }
        }
        let names = cols.iter().map(|&c| self.header[c].clone()).collect();
        Ok((Matrix::new(self.rows.len(), cols.len(), data)?, names))
    }

    pub fn numeric_column(&self, col: usize) -> Result<Vec<f64>> {
        (0..self.rows.len()).map(|r| self.number(r, col)).collect()
    }

    pub fn text_column(&self, col: usize) -> Result<Vec<String>> {
        (0..self.rows.len())
            .map(|r| self.cell(r, col).map(str::to_string))
            .collect()
    }

    /// Converts the table into a dataset with `target` as outcome.
    /// Classification labels are coded in lexicographic label order.
    pub fn into_dataset(self, target: &str, task: Task) -> Result<Dataset> {
        let t = self.column_index(target)?;
        let (features, names) = self.feature_matrix(Some(t))?;
        let (target, classes) = match task {
            Task::Regression => (Target::Numeric(self.numeric_column(t)?), Vec::new()),
            Task::Classification => {
                let labels = self.text_column(t)?;
                let coding: BTreeMap<&str, usize> = labels
                    .iter()
                    .map(String::as_str)
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .enumerate()
                    .map(|(code, label)| (label, code))
                    .collect();
                let codes = labels.iter().map(|l| coding[l.as_str()]).collect();
                let names = coding.keys().map(|s| s.to_string()).collect();
                (Target::Classes(codes), names)
            }
        };
        Dataset::new(features, target, names, classes)
    }
}

/// Reads `path` and builds a dataset with `target_column` as the outcome.
pub fn load_csv(path: &Path, target_column: &str, task: Task) -> Result<Dataset> {
    CsvTable::read(path)?.into_dataset(target_column, task)
}

/// Per-column centering and scaling fitted on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    stddevs: Vec<f64>,
}

impl Standardizer {
    pub fn new(means: Vec<f64>, stddevs: Vec<f64>) -> Result<Self> {
        if means.len() != stddevs.len() {
            return Err(Error::Dimension {
                expected: means.len(),
                got: stddevs.len(),
            });
        }
        if stddevs.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidData(
                "standard deviations must be finite and >= 0".into(),
            ));
        }
        Ok(Standardizer { means, stddevs })
    }

    /// Column means and population standard deviations (divisor n).
    /// A column whose entries are all equal gets its value as mean and sd 0.
    pub fn fit(x: &Matrix) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut stddevs = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let first = x.get(0, j);
            if x.column(j).all(|v| v == first) {
                means.push(first);
                stddevs.push(0.0);
                continue;
            }
            let mean = x.column(j).sum::<f64>() / n;
            let var = x.column(j).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stddevs.push(var.sqrt());
        }
        Standardizer { means, stddevs }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stddevs(&self) -> &[f64] {
        &self.stddevs
    }

    pub fn p(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, (v, o)) in row.iter().zip(out.iter_mut()).enumerate() {
            let centered = v - self.means[j];
            *o = if self.stddevs[j] > 0.0 {
                centered / self.stddevs[j]
            } else {
                centered
            };
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.p() {
            return Err(Error::Dimension {
                expected: self.p(),
                got: x.ncols(),
            });
        }
        let mut out = Matrix::zeros(x.nrows(), x.ncols());
        for i in 0..x.nrows() {
            self.transform_row(x.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

pub fn standardize_fit(train: &Dataset) -> Standardizer {
    Standardizer::fit(train.features())
}

/// Applies `s` to the features of `data`; the target is untouched.
/// Applying twice is not idempotent: each call centers and scales again.
pub fn standardize_apply(s: &Standardizer, data: &Dataset) -> Result<Dataset> {
    let features = s.transform(data.features())?;
    Ok(Dataset {
        features,
        ..data.clone()
    })
}

/// Seeded hold-out split; the test part gets `floor(n * test_fraction)` rows.
/// Both parts keep the original row order.
pub fn train_test_split(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let n = data.n();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n_test = (n as f64 * test_fraction).floor() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} on {n} rows leaves an empty part"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::rng_for(seed, "train-test-split", &[]));
    let mut test_rows = order[..n_test].to_vec();
    let mut train_rows = order[n_test..].to_vec();
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    Ok((data.subset(&train_rows), data.subset(&test_rows)))
}
