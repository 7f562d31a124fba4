//! Fixed-level checks of the e-variable itself.

use rayon::prelude::*;

use super::synthetic::{gen_synthetic_scores, trial_stream};
use crate::error::{BcpError, Result};
use crate::evalues::test_ratio_vector;

fn true_label_ratios(n: usize, num_labels: usize, signal: f64, draws: usize, seed: u64) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(BcpError::InvalidParameter("need at least one draw".into()));
    }
    (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let d = gen_synthetic_scores(n, num_labels, signal, &mut trial_stream(seed, i))?;
            let e = test_ratio_vector(&d.cal, &d.test_scores)?;
            Ok(e.ratios()[d.test_label])
        })
        .collect()
}

/// Monte Carlo mean of the test ratio at the true label (one under
/// exchangeability).
pub fn mean_true_label_ratio(n: usize, num_labels: usize, signal: f64, draws: usize, seed: u64) -> Result<f64> {
    let r = true_label_ratios(n, num_labels, signal, draws, seed)?;
    Ok(r.iter().sum::<f64>() / r.len() as f64)
}

/// Empirical coverage of the fixed-level sets `{y : E[y] < 1/alpha}`; at
/// least `1 - alpha` by Markov's inequality.
pub fn markov_coverage(
    n: usize,
    num_labels: usize,
    signal: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BcpError::AlphaOutOfRange(alpha));
    }
    let r = true_label_ratios(n, num_labels, signal, trials, seed)?;
    Ok(r.iter().filter(|&&e| e < 1.0 / alpha).count() as f64 / r.len() as f64)
}
