//! E-value ratio vectors.
//!
//! For candidate label `y`, the test ratio compares the test score with the
//! average of all `n + 1` observed scores (calibration plus the test score at
//! `y`):
//!
//! ```text
//! E_test[y] = S_test[y] / ((sum_i S_i + S_test[y]) / (n + 1))
//! ```
//!
//! At the true label this is a nonnegative variable with mean exactly one
//! under exchangeability. The leave-one-out variant treats calibration point
//! `j` as a pseudo-test point against the other `n - 1` observed scores.

use serde::Serialize;

use crate::error::{BcpError, Result};
use crate::scores::CalibrationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    Test,
    Loo(usize),
    Normalized,
}

/// One ratio per candidate label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioVector {
    ratios: Vec<f64>,
    kind: RatioKind,
}

impl RatioVector {
    /// Wraps raw ratios; entries must be finite and nonnegative.
    pub fn new(ratios: Vec<f64>, kind: RatioKind) -> Result<Self> {
        if let Some(r) = ratios.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(BcpError::InvalidParameter(format!(
                "ratio {r} is not a finite nonnegative number"
            )));
        }
        Ok(Self { ratios, kind })
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn kind(&self) -> RatioKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }
}

/// Writes `s * count / (others + s)` for each score `s`.
///
/// `others` is the sum of the observed scores that are not the candidate,
/// `count` the number of scores in the average (including the candidate).
pub(crate) fn ratios_into(scores: &[f64], others: f64, count: f64, out: &mut [f64]) -> Result<()> {
    for (o, &s) in out.iter_mut().zip(scores) {
        let denom = others + s;
        if denom <= 0.0 {
            return Err(BcpError::Degenerate(
                "all scores are zero, the ratio denominator vanishes".into(),
            ));
        }
        *o = s / (denom / count);
    }
    Ok(())
}

/// Ratio vector of a test point against the full calibration set.
pub fn test_ratio_vector(cal: &CalibrationSet, test_scores: &[f64]) -> Result<RatioVector> {
    if test_scores.len() != cal.num_labels() {
        return Err(BcpError::Shape(format!(
            "test scores have {} entries, expected {}",
            test_scores.len(),
            cal.num_labels()
        )));
    }
    if let Some(s) = test_scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(BcpError::InvalidParameter(format!(
            "test score {s} is not a finite nonnegative number"
        )));
    }
    let mut ratios = vec![0.0; test_scores.len()];
    ratios_into(
        test_scores,
        cal.observed_sum(),
        (cal.n() + 1) as f64,
        &mut ratios,
    )?;
    Ok(RatioVector {
        ratios,
        kind: RatioKind::Test,
    })
}

/// Pseudo-ratio vector treating calibration point `j` as the test point.
///
/// When computing all `n` vectors, prefer [`LooRatios`], which reuses one
/// running total instead of re-summing per point.
pub fn loo_ratio_vector(cal: &CalibrationSet, j: usize) -> Result<RatioVector> {
    LooRatios::new(cal)?.vector(j)
}

/// Shared state for the `n` leave-one-out ratio vectors of a calibration set.
#[derive(Debug, Clone)]
pub struct LooRatios<'a> {
    cal: &'a CalibrationSet,
    total: f64,
}

impl<'a> LooRatios<'a> {
    pub fn new(cal: &'a CalibrationSet) -> Result<Self> {
        if cal.n() < 2 {
            return Err(BcpError::TooFewPoints {
                required: 2,
                found: cal.n(),
            });
        }
        Ok(Self {
            cal,
            total: cal.observed_sum(),
        })
    }

    pub fn vector(&self, j: usize) -> Result<RatioVector> {
        let mut ratios = vec![0.0; self.cal.num_labels()];
        self.write(j, &mut ratios)?;
        Ok(RatioVector {
            ratios,
            kind: RatioKind::Loo(j),
        })
    }

    pub(crate) fn write(&self, j: usize, out: &mut [f64]) -> Result<()> {
        if j >= self.cal.n() {
            return Err(BcpError::IndexOutOfRange {
                index: j,
                len: self.cal.n(),
            });
        }
        let others = self.total - self.cal.observed(j);
        ratios_into(
            self.cal.scores().row(j),
            others,
            self.cal.n() as f64,
            out,
        )
    }
}

/// Scores divided by the expected score `mu`. Only meaningful when `mu` is
/// known, e.g. in simulation.
pub fn normalized_ratio_vector(point_scores: &[f64], mu: f64) -> Result<RatioVector> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(BcpError::InvalidParameter(format!(
            "expected score mu = {mu} must be positive"
        )));
    }
    RatioVector::new(
        point_scores.iter().map(|s| s / mu).collect(),
        RatioKind::Normalized,
    )
}
