//! Empirical stability ratio of a size rule.
//!
//! For a calibration set, compares the aggregate deviation of the
//! pseudo-miscoverages from the marginal miscoverage with the largest
//! aggregate deviation of the leave-one-out ratios from the mean normalized
//! test ratio:
//!
//! ```text
//! |sum_j (alpha_j - E[alpha~])| / max_y |sum_j (E^j[y] - E[S_test[y] / mu])|
//! ```
//!
//! A rule is stable when this stays bounded as `n` grows. The expectations
//! come from a separate long simulation ([`ReferenceEstimate`]).

use rayon::prelude::*;
use serde::Serialize;

use super::Experiment;
use crate::backward::{adaptive_alpha, loo_estimator};
use crate::error::{BcpError, Result};
use crate::evalues::{test_ratio_vector, LooRatios};
use crate::rules::SizeRule;
use crate::scores::{CalibrationSet, EmbeddingMatrix};

const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceEstimate {
    pub draws: usize,
    pub mean_alpha_tilde: f64,
    /// Mean score at the true label.
    pub mu: f64,
    /// Mean test score per label divided by `mu`.
    pub mean_normalized_test_ratio: Vec<f64>,
}

pub(super) fn reference_from(exp: &Experiment, draws: usize) -> Result<ReferenceEstimate> {
    if draws == 0 {
        return Err(BcpError::InvalidParameter("need at least one draw".into()));
    }
    let per_draw = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let data = exp.trial_data(i)?;
            let rule = exp.config.rule.fit(&data.cal, data.embeddings.as_ref())?;
            let cap = rule.cap(data.test_embedding.as_deref())?;
            let alpha = adaptive_alpha(&test_ratio_vector(&data.cal, &data.test_scores)?, cap)?.alpha;
            let observed = data.test_scores[data.test_label];
            Ok((alpha, observed, data.test_scores))
        })
        .collect::<Result<Vec<_>>>()?;

    let m = draws as f64;
    let num_labels = per_draw[0].2.len();
    let mut alpha_sum = 0.0;
    let mut observed_sum = 0.0;
    let mut label_sums = vec![0.0; num_labels];
    for (alpha, observed, scores) in &per_draw {
        alpha_sum += alpha;
        observed_sum += observed;
        for (acc, s) in label_sums.iter_mut().zip(scores) {
            *acc += s;
        }
    }
    let mu = observed_sum / m;
    if !(mu > 0.0) {
        return Err(BcpError::Degenerate("mean observed score is zero".into()));
    }
    Ok(ReferenceEstimate {
        draws,
        mean_alpha_tilde: alpha_sum / m,
        mu,
        mean_normalized_test_ratio: label_sums.iter().map(|s| s / m / mu).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityDiagnostic {
    pub numerator: f64,
    pub denominator: f64,
    /// `+inf` when the denominator is below `1e-12`.
    pub ratio: f64,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn stability_diagnostic(
    cal: &CalibrationSet,
    rule: &SizeRule,
    embeddings: Option<&EmbeddingMatrix>,
    reference: &ReferenceEstimate,
) -> Result<StabilityDiagnostic> {
    let k = cal.num_labels();
    if reference.mean_normalized_test_ratio.len() != k {
        return Err(BcpError::Shape(format!(
            "reference has {} labels, calibration set has {k}",
            reference.mean_normalized_test_ratio.len()
        )));
    }
    let est = loo_estimator(cal, rule, embeddings)?;
    let numerator = est
        .per_j
        .iter()
        .map(|a| a - reference.mean_alpha_tilde)
        .sum::<f64>()
        .abs();

    let loo = LooRatios::new(cal)?;
    let mut sums = vec![0.0; k];
    let mut ratios = vec![0.0; k];
    for j in 0..cal.n() {
        loo.write(j, &mut ratios)?;
        for ((acc, e), mean) in sums.iter_mut().zip(&ratios).zip(&reference.mean_normalized_test_ratio) {
            *acc += e - mean;
        }
    }
    let denominator = sums.iter().fold(0.0_f64, |m, s| m.max(s.abs()));

    if denominator < DENOMINATOR_FLOOR {
        return Ok(StabilityDiagnostic {
            numerator,
            denominator,
            ratio: f64::INFINITY,
            degenerate: true,
            note: Some(format!(
                "ratio deviations sum to {denominator:e}; stability constant undefined"
            )),
        });
    }
    Ok(StabilityDiagnostic {
        numerator,
        denominator,
        ratio: numerator / denominator,
        degenerate: false,
        note: None,
    })
}
