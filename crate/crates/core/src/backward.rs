//! Adaptive miscoverage, size-capped conformal sets and the leave-one-out
//! estimate of marginal miscoverage.
//!
//! Given a ratio vector `E` and a size cap `T`, the adaptive miscoverage is
//! the smallest level whose set `{y : E[y] < 1/alpha}` has at most `T`
//! labels:
//!
//! ```text
//! alpha~ = inf { alpha in (0, 1) : #{y : E[y] < 1/alpha} <= T }
//! ```
//!
//! The count is non-increasing in `alpha` and drops to at most `T` exactly
//! when `1/alpha <= E_(T+1)`, the `(T+1)`-th smallest ratio. Hence
//! `alpha~ = 1 / E_(T+1)` whenever `E_(T+1) > 1`. Otherwise no level in
//! `(0, 1)` is feasible; we then report `alpha~ = 1` with the set
//! `{y : E[y] < 1}` and flag the result as degenerate.

use serde::Serialize;

use crate::error::{BcpError, Result};
use crate::evalues::{LooRatios, RatioVector};
use crate::rules::SizeRule;
use crate::scores::{CalibrationSet, EmbeddingMatrix};

/// Stopping tolerance of the bisection search.
pub const DEFAULT_BISECT_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiscoverageResult {
    pub alpha: f64,
    pub set_indices: Vec<usize>,
    pub degenerate: bool,
    pub cap: usize,
}

impl MiscoverageResult {
    pub fn set_size(&self) -> usize {
        self.set_indices.len()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.set_indices.binary_search(&label).is_ok()
    }
}

fn check_cap(num_labels: usize, cap: usize) -> Result<()> {
    if num_labels == 0 {
        return Err(BcpError::InvalidParameter("empty ratio vector".into()));
    }
    if cap < 1 || cap >= num_labels {
        return Err(BcpError::InvalidCap { cap, num_labels });
    }
    Ok(())
}

/// Closed-form adaptive level and the set threshold `1/alpha`. The threshold
/// is returned as the order statistic itself: `1.0 / (1.0 / x)` need not
/// round back to `x`, which would let the pivot into the set.
fn closed_form(ratios: &[f64], cap: usize, scratch: &mut Vec<f64>) -> (f64, f64, bool) {
    scratch.clear();
    scratch.extend_from_slice(ratios);
    let (_, pivot, _) = scratch.select_nth_unstable_by(cap, f64::total_cmp);
    let pivot = *pivot;
    if pivot > 1.0 {
        (1.0 / pivot, pivot, false)
    } else {
        (1.0, 1.0, true)
    }
}

/// Adaptive miscoverage and its conformal set for one ratio vector.
pub fn adaptive_alpha(e: &RatioVector, cap: usize) -> Result<MiscoverageResult> {
    check_cap(e.len(), cap)?;
    let (alpha, threshold, degenerate) = closed_form(e.ratios(), cap, &mut Vec::with_capacity(e.len()));
    Ok(MiscoverageResult {
        alpha,
        set_indices: members_below(e.ratios(), threshold),
        degenerate,
        cap,
    })
}

/// Bisection search for the adaptive level, stopping once the bracket is
/// narrower than `tol`.
///
/// The lower end is always infeasible (it starts at 0, where every label
/// enters the set) and the upper end always feasible (it starts at 1, the
/// degenerate convention). The returned upper end is within `tol` of the
/// closed form.
pub fn adaptive_alpha_bisect(e: &RatioVector, cap: usize, tol: f64) -> Result<f64> {
    check_cap(e.len(), cap)?;
    if !(tol > 0.0) {
        return Err(BcpError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let feasible = |alpha: f64| e.ratios().iter().filter(|&&r| r < 1.0 / alpha).count() <= cap;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn members_below(ratios: &[f64], threshold: f64) -> Vec<usize> {
    ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| r < threshold)
        .map(|(y, _)| y)
        .collect()
}

/// Labels whose ratio is strictly below `1/alpha`, ascending.
pub fn conformal_set(e: &RatioVector, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BcpError::AlphaOutOfRange(alpha));
    }
    Ok(members_below(e.ratios(), 1.0 / alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooEstimate {
    pub per_j: Vec<f64>,
    pub alpha_loo: f64,
    pub per_j_caps: Vec<usize>,
}

/// Leave-one-out estimate of the marginal miscoverage.
///
/// Each calibration point `j` plays the test point against the other
/// `n - 1`: its pseudo-miscoverage is the adaptive level of its
/// leave-one-out ratio vector under the cap the rule assigns to it. The
/// estimate is their mean, summed in ascending `j`.
pub fn loo_estimator(
    cal: &CalibrationSet,
    rule: &SizeRule,
    embeddings: Option<&EmbeddingMatrix>,
) -> Result<LooEstimate> {
    let loo = LooRatios::new(cal)?;
    if rule.needs_embeddings() {
        match embeddings {
            None => return Err(BcpError::MissingEmbeddings),
            Some(emb) if emb.n() != cal.n() => {
                return Err(BcpError::Shape(format!(
                    "{} embeddings for {} calibration points",
                    emb.n(),
                    cal.n()
                )))
            }
            Some(_) => {}
        }
    }

    let k = cal.num_labels();
    let mut ratios = vec![0.0; k];
    let mut scratch = Vec::with_capacity(k);
    let mut per_j = Vec::with_capacity(cal.n());
    let mut per_j_caps = Vec::with_capacity(cal.n());
    for j in 0..cal.n() {
        let cap = rule.loo_cap(j, embeddings)?;
        check_cap(k, cap)?;
        loo.write(j, &mut ratios)?;
        let (alpha, _, _) = closed_form(&ratios, cap, &mut scratch);
        per_j.push(alpha);
        per_j_caps.push(cap);
    }
    let alpha_loo = per_j.iter().sum::<f64>() / per_j.len() as f64;
    Ok(LooEstimate {
        per_j,
        alpha_loo,
        per_j_caps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalues::RatioKind;
    use crate::scores::ScoreMatrix;
    use approx::assert_abs_diff_eq;

    fn rv(r: &[f64]) -> RatioVector {
        RatioVector::new(r.to_vec(), RatioKind::Test).unwrap()
    }

    const E: [f64; 3] = [0.30769, 1.0, 1.6];

    #[test]
    fn pivot_excluded_when_reciprocal_rounds_up() {
        let x = 3.5072953117596093;
        assert!(1.0 / (1.0 / x) > x);
        let r = adaptive_alpha(&RatioVector::new(vec![0.5, x, x], RatioKind::Test).unwrap(), 1).unwrap();
        assert_eq!(r.set_indices, vec![0]);
        assert_eq!(r.alpha, 1.0 / x);
    }

    #[test]
    fn closed_form_examples() {
        let r = adaptive_alpha(&rv(&E), 2).unwrap();
        assert_abs_diff_eq!(r.alpha, 0.625, epsilon = 1e-15);
        assert_eq!(r.set_indices, vec![0, 1]);
        assert!(!r.degenerate);
        assert_eq!(r.cap, 2);

        let r = adaptive_alpha(&rv(&E), 1).unwrap();
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.set_indices, vec![0]);
        assert!(r.degenerate);

        let r = adaptive_alpha(&rv(&[1.0, 1.0, 1.0]), 1).unwrap();
        assert_eq!(r.alpha, 1.0);
        assert!(r.set_indices.is_empty());
        assert!(r.degenerate);
    }

    #[test]
    fn invalid_caps() {
        assert!(matches!(
            adaptive_alpha(&rv(&E), 3),
            Err(BcpError::InvalidCap { cap: 3, num_labels: 3 })
        ));
        assert!(matches!(adaptive_alpha(&rv(&E), 0), Err(BcpError::InvalidCap { .. })));
        assert!(adaptive_alpha(&rv(&[]), 1).is_err());
        assert!(adaptive_alpha_bisect(&rv(&E), 3, 0.005).is_err());
        assert!(adaptive_alpha_bisect(&rv(&E), 1, 0.0).is_err());
    }

    #[test]
    fn ties_at_pivot_stay_within_cap() {
        // E_(2) = E_(3) = 2: alpha = 0.5 and both tied labels sit on the boundary
        let r = adaptive_alpha(&rv(&[0.5, 2.0, 2.0, 3.0]), 1).unwrap();
        assert_eq!(r.alpha, 0.5);
        assert_eq!(r.set_indices, vec![0]);
        let r = adaptive_alpha(&rv(&[2.0, 2.0, 2.0, 0.1]), 2).unwrap();
        assert_eq!(r.alpha, 0.5);
        assert_eq!(r.set_indices, vec![3]);
    }

    #[test]
    fn bisection_examples() {
        let a = adaptive_alpha_bisect(&rv(&E), 2, DEFAULT_BISECT_TOLERANCE).unwrap();
        assert!((0.620..=0.630).contains(&a), "{a}");
        let a = adaptive_alpha_bisect(&rv(&E), 1, DEFAULT_BISECT_TOLERANCE).unwrap();
        assert!((0.995..=1.0).contains(&a), "{a}");
        let a = adaptive_alpha_bisect(&rv(&E), 2, 0.5).unwrap();
        assert!((a - 0.625).abs() <= 0.5);
    }

    #[test]
    fn conformal_set_examples() {
        assert_eq!(conformal_set(&rv(&E), 0.625).unwrap(), vec![0, 1]);
        assert_eq!(conformal_set(&rv(&E), 1.0).unwrap(), vec![0]);
        assert_eq!(conformal_set(&rv(&E), 0.1).unwrap(), vec![0, 1, 2]);
        assert!(matches!(conformal_set(&rv(&E), 0.0), Err(BcpError::AlphaOutOfRange(_))));
        assert!(conformal_set(&rv(&E), 1.5).is_err());
    }

    fn three_point() -> CalibrationSet {
        CalibrationSet::new(
            ScoreMatrix::from_rows(&[[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]]).unwrap(),
            vec![0, 0, 0],
        )
        .unwrap()
    }

    #[test]
    fn loo_hand_arithmetic() {
        let est = loo_estimator(&three_point(), &SizeRule::constant(1).unwrap(), None).unwrap();
        let want = [0.75, 0.6, 0.5];
        for (a, b) in est.per_j.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(est.alpha_loo, 0.616_67, epsilon = 1e-5);
        assert_eq!(est.per_j_caps, vec![1, 1, 1]);
    }

    #[test]
    fn loo_constant_scores_degenerate() {
        let cal = CalibrationSet::new(ScoreMatrix::new(vec![0.7; 8], 4, 2).unwrap(), vec![0, 1, 1, 0]).unwrap();
        let est = loo_estimator(&cal, &SizeRule::constant(1).unwrap(), None).unwrap();
        assert!(est.per_j.iter().all(|&a| a == 1.0));
        assert_eq!(est.alpha_loo, 1.0);
    }

    /// Direct recomputation of one pseudo-miscoverage from the definition:
    /// re-sum the other observed scores and scan candidate levels 1/E_y.
    fn oracle_pseudo_alpha(cal: &CalibrationSet, j: usize, cap: usize) -> f64 {
        let n = cal.n();
        let others: f64 = (0..n).filter(|&i| i != j).map(|i| cal.observed(i)).sum();
        let e: Vec<f64> = cal.scores().row(j).iter().map(|&s| s / ((others + s) / n as f64)).collect();
        let count = |alpha: f64| e.iter().filter(|&&r| r < 1.0 / alpha).count();
        e.iter()
            .map(|&r| 1.0 / r)
            .filter(|&a| a > 0.0 && a < 1.0 && count(a) <= cap)
            .fold(1.0, f64::min)
    }

    #[test]
    fn loo_duplicated_rows_match_direct_recomputation() {
        let cal = three_point();
        let doubled = cal.select(&[0, 1, 2, 0, 1, 2]).unwrap();
        let est = loo_estimator(&doubled, &SizeRule::constant(1).unwrap(), None).unwrap();
        for j in 0..6 {
            assert_abs_diff_eq!(est.per_j[j], oracle_pseudo_alpha(&doubled, j, 1), epsilon = 1e-12);
        }
        // the leave-one-out denominator changes with n, so the estimate does too
        assert_abs_diff_eq!(est.per_j[0], 0.625, epsilon = 1e-12);
        assert!(est.alpha_loo < 0.616);
    }

    #[test]
    fn loo_errors() {
        let single = three_point().select(&[0]).unwrap();
        assert!(matches!(
            loo_estimator(&single, &SizeRule::constant(1).unwrap(), None),
            Err(BcpError::TooFewPoints { .. })
        ));
        assert!(matches!(
            loo_estimator(&three_point(), &SizeRule::constant(2).unwrap(), None),
            Err(BcpError::InvalidCap { cap: 2, num_labels: 2 })
        ));
    }

    #[test]
    fn cap_monotone_on_example() {
        let e = rv(&[0.2, 3.0, 1.7, 0.9, 2.4]);
        let alphas: Vec<f64> = (1..5).map(|c| adaptive_alpha(&e, c).unwrap().alpha).collect();
        assert!(alphas.windows(2).all(|w| w[1] <= w[0]), "{alphas:?}");
    }
}
