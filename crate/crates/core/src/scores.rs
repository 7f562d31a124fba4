//! Calibration scores, embeddings, score constructors and CSV ingestion.
//!
//! Scores are negatively oriented: lower means the label fits the input
//! better. All score entries are finite and nonnegative.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{BcpError, Result};
use crate::fmt::fmt_f64;

/// Default probability clamp used by the cross-entropy constructors.
pub const DEFAULT_CLAMP: f64 = 1e-12;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Row-major `n x K` matrix of nonnegative candidate-label scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    values: Vec<f64>,
    n: usize,
    num_labels: usize,
}

impl ScoreMatrix {
    pub fn new(values: Vec<f64>, n: usize, num_labels: usize) -> Result<Self> {
        if num_labels < 2 {
            return Err(BcpError::TooFewLabels(num_labels));
        }
        if n < 1 {
            return Err(BcpError::TooFewPoints {
                required: 1,
                found: n,
            });
        }
        if values.len() != n * num_labels {
            return Err(BcpError::Shape(format!(
                "{} values for a {n}x{num_labels} matrix",
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(BcpError::NonFinite(format!(
                    "score at row {}, column {}",
                    idx / num_labels,
                    idx % num_labels
                )));
            }
            if v < 0.0 {
                return Err(BcpError::NegativeScore {
                    row: idx / num_labels,
                    column: idx % num_labels,
                    value: v,
                });
            }
        }
        Ok(Self {
            values,
            n,
            num_labels,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let num_labels = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * num_labels);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != num_labels {
                return Err(BcpError::Shape(format!(
                    "row {i} has {} entries, expected {num_labels}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), num_labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn get(&self, i: usize, label: usize) -> f64 {
        self.values[i * self.num_labels + label]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_labels)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Calibration points: a score matrix paired with observed labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    scores: ScoreMatrix,
    labels: Vec<usize>,
}

impl CalibrationSet {
    pub fn new(scores: ScoreMatrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != scores.n() {
            return Err(BcpError::Shape(format!(
                "{} labels for {} score rows",
                labels.len(),
                scores.n()
            )));
        }
        if let Some((row, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= scores.num_labels())
        {
            return Err(BcpError::LabelOutOfRange {
                row,
                label: label as i64,
                num_labels: scores.num_labels(),
            });
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.scores.n()
    }

    pub fn num_labels(&self) -> usize {
        self.scores.num_labels()
    }

    /// Score of calibration point `i` at its observed label.
    pub fn observed(&self, i: usize) -> f64 {
        self.scores.get(i, self.labels[i])
    }

    pub fn observed_scores(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.observed(i)).collect()
    }

    /// Sum of observed scores, accumulated in ascending index order.
    pub fn observed_sum(&self) -> f64 {
        (0..self.n()).map(|i| self.observed(i)).sum()
    }

    /// Empirical `(min, max)` of the observed scores, a starting point for
    /// choosing the score bounds of the finite-sample bound.
    pub fn observed_range(&self) -> (f64, f64) {
        (0..self.n())
            .map(|i| self.observed(i))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            })
    }

    /// New set made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let k = self.num_labels();
        let mut values = Vec::with_capacity(indices.len() * k);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n() {
                return Err(BcpError::IndexOutOfRange {
                    index: i,
                    len: self.n(),
                });
            }
            values.extend_from_slice(self.scores.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(ScoreMatrix::new(values, indices.len(), k)?, labels)
    }
}

/// Row-major `n x d` matrix of feature embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Vec<f64>,
    n: usize,
    dim: usize,
}

impl EmbeddingMatrix {
    pub fn new(values: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if values.len() != n * dim {
            return Err(BcpError::Shape(format!(
                "{} values for a {n}x{dim} embedding matrix",
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(BcpError::NonFinite(format!(
                "embedding at row {}, column {}",
                idx / dim.max(1),
                idx % dim.max(1)
            )));
        }
        Ok(Self { values, n, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(BcpError::Shape(format!(
                    "embedding row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), dim)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim.max(1))
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n {
                return Err(BcpError::IndexOutOfRange {
                    index: i,
                    len: self.n,
                });
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, indices.len(), self.dim)
    }
}

fn validate_clamp(clamp: f64) -> Result<()> {
    if !(clamp > 0.0 && clamp < 0.5) {
        return Err(BcpError::InvalidParameter(format!(
            "clamp {clamp} outside (0, 0.5)"
        )));
    }
    Ok(())
}

fn clamped_neg_ln(p: f64, clamp: f64) -> f64 {
    -p.clamp(clamp, 1.0 - clamp).ln()
}

/// Writes `-ln p` for each probability of one row, after clamping to
/// `[clamp, 1 - clamp]`. No validation; used on generator hot paths.
pub(crate) fn cross_entropy_row(probabilities: &[f64], clamp: f64, out: &mut [f64]) {
    for (o, &p) in out.iter_mut().zip(probabilities) {
        *o = clamped_neg_ln(p, clamp);
    }
}

/// Cross-entropy scores `S(x, y) = -ln p(y | x)` from rows of predicted
/// probabilities.
///
/// Probabilities are clamped to `[clamp, 1 - clamp]`, so every score lies in
/// `[-ln(1 - clamp), -ln(clamp)]`: strictly positive and bounded.
pub fn cross_entropy_scores<R: AsRef<[f64]>>(probabilities: &[R], clamp: f64) -> Result<ScoreMatrix> {
    validate_clamp(clamp)?;
    let num_labels = probabilities.first().map_or(0, |r| r.as_ref().len());
    let mut values = vec![0.0; probabilities.len() * num_labels];
    for (i, row) in probabilities.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != num_labels {
            return Err(BcpError::Shape(format!(
                "probability row {i} has {} entries, expected {num_labels}",
                row.len()
            )));
        }
        if let Some(p) = row.iter().find(|p| !p.is_finite()) {
            return Err(BcpError::NonFinite(format!("probability {p} in row {i}")));
        }
        if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BcpError::InvalidParameter(format!(
                "probability {p} in row {i} outside [0, 1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(BcpError::RowSum { row: i, sum });
        }
        cross_entropy_row(row, clamp, &mut values[i * num_labels..(i + 1) * num_labels]);
    }
    ScoreMatrix::new(values, probabilities.len(), num_labels)
}

/// Binary cross-entropy scores from predicted positive-class probabilities:
/// row `i` is `[-ln(1 - f_i), -ln(f_i)]` after clamping.
pub fn binary_cross_entropy_scores(positive_probability: &[f64], clamp: f64) -> Result<ScoreMatrix> {
    validate_clamp(clamp)?;
    let mut values = Vec::with_capacity(positive_probability.len() * 2);
    for (i, &f) in positive_probability.iter().enumerate() {
        if !f.is_finite() {
            return Err(BcpError::NonFinite(format!("probability {f} at index {i}")));
        }
        let f = f.clamp(clamp, 1.0 - clamp);
        values.push(-(1.0 - f).ln());
        values.push(-f.ln());
    }
    ScoreMatrix::new(values, positive_probability.len(), 2)
}

fn csv_err(source: &str, e: csv::Error) -> BcpError {
    BcpError::Csv {
        path: source.into(),
        message: e.to_string(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| BcpError::io(path, e))
}

/// Loads a score CSV with header `label,s0,...,s{K-1}`.
pub fn load_scores_csv(path: impl AsRef<Path>) -> Result<CalibrationSet> {
    let path = path.as_ref();
    read_scores_csv(open(path)?, &path.display().to_string())
}

/// Parses score CSV text. `source` names the input in diagnostics. Row
/// numbers in errors count data rows from 1, excluding the header.
pub fn read_scores_csv<R: Read>(reader: R, source: &str) -> Result<CalibrationSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let num_labels = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("label".to_string())
        .chain((0..num_labels).map(|y| format!("s{y}")))
        .collect();
    let found: Vec<&str> = header.iter().collect();
    if header.is_empty() || found != expected {
        return Err(BcpError::BadHeader {
            path: source.into(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    if num_labels < 2 {
        return Err(BcpError::TooFewLabels(num_labels));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| csv_err(source, e))?;
        if record.len() != num_labels + 1 {
            return Err(BcpError::MalformedRow {
                row,
                message: format!("{} fields, expected {}", record.len(), num_labels + 1),
            });
        }
        let label: i64 = record[0].parse().map_err(|_| BcpError::MalformedRow {
            row,
            message: format!("label `{}` is not an integer", &record[0]),
        })?;
        if label < 0 || label as usize >= num_labels {
            return Err(BcpError::LabelOutOfRange {
                row,
                label,
                num_labels,
            });
        }
        labels.push(label as usize);
        for (column, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| BcpError::MalformedRow {
                row,
                message: format!("score `{field}` in column s{column} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(BcpError::MalformedRow {
                    row,
                    message: format!("score `{field}` in column s{column} is not finite"),
                });
            }
            if v < 0.0 {
                return Err(BcpError::NegativeScore { row, column, value: v });
            }
            values.push(v);
        }
    }
    let n = labels.len();
    CalibrationSet::new(ScoreMatrix::new(values, n, num_labels)?, labels)
}

/// Loads an embedding CSV with header `e0,...,e{d-1}`.
pub fn load_embeddings_csv(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    read_embeddings_csv(open(path)?, &path.display().to_string())
}

pub fn read_embeddings_csv<R: Read>(reader: R, source: &str) -> Result<EmbeddingMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let dim = header.len();
    let expected: Vec<String> = (0..dim).map(|c| format!("e{c}")).collect();
    let found: Vec<&str> = header.iter().collect();
    if dim == 0 || found != expected {
        return Err(BcpError::BadHeader {
            path: source.into(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    let mut values = Vec::new();
    let mut n = 0;
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| csv_err(source, e))?;
        if record.len() != dim {
            return Err(BcpError::MalformedRow {
                row,
                message: format!("{} fields, expected {dim}", record.len()),
            });
        }
        for (column, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| BcpError::MalformedRow {
                row,
                message: format!("value `{field}` in column e{column} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(BcpError::MalformedRow {
                    row,
                    message: format!("value `{field}` in column e{column} is not finite"),
                });
            }
            values.push(v);
        }
        n += 1;
    }
    EmbeddingMatrix::new(values, n, dim)
}

pub fn write_scores<W: Write>(mut out: W, cal: &CalibrationSet) -> std::io::Result<()> {
    write!(out, "label")?;
    for y in 0..cal.num_labels() {
        write!(out, ",s{y}")?;
    }
    writeln!(out)?;
    for (i, row) in cal.scores().rows().enumerate() {
        write!(out, "{}", cal.labels()[i])?;
        for &s in row {
            write!(out, ",{}", fmt_f64(s))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a score CSV readable by [`load_scores_csv`], 17 significant digits.
pub fn write_scores_csv(path: impl AsRef<Path>, cal: &CalibrationSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| BcpError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_scores(&mut out, cal)
        .and_then(|_| out.flush())
        .map_err(|e| BcpError::io(path, e))
}

pub fn write_embeddings<W: Write>(mut out: W, emb: &EmbeddingMatrix) -> std::io::Result<()> {
    let header: Vec<String> = (0..emb.dim()).map(|c| format!("e{c}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in emb.rows() {
        let fields: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_embeddings_csv(path: impl AsRef<Path>, emb: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| BcpError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_embeddings(&mut out, emb)
        .and_then(|_| out.flush())
        .map_err(|e| BcpError::io(path, e))
}
