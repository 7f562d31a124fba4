//! Backward conformal prediction.
//!
//! Classical conformal prediction fixes a miscoverage level and accepts
//! whatever prediction-set size results. This crate works the other way
//! round: a *size rule* fixes the largest acceptable set for each test point,
//! and the miscoverage level is chosen adaptively so the set respects it.
//! The resulting level is data dependent, so coverage holds through the
//! post-hoc validity of e-values. Because that level depends on the unseen
//! test label's score, the crate also provides a leave-one-out estimate of
//! the marginal miscoverage computed from calibration data alone, together
//! with an explicit finite-sample error bound and a trust/reject rule.
//!
//! Modules:
//!
//! - [`scores`]: calibration data, cross-entropy scores, CSV ingestion.
//! - [`evalues`]: test, leave-one-out and normalized ratio vectors.
//! - [`backward`]: adaptive miscoverage, capped sets, leave-one-out estimate.
//! - [`rules`]: constant and entropy-adaptive size rules.
//! - [`bounds`]: the finite-sample bound and the trust decision.
//! - [`harness`]: Monte Carlo experiments and their output files.
//!
//! ```
//! use backward_cp::prelude::*;
//!
//! let scores = ScoreMatrix::from_rows(&[[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]]).unwrap();
//! let cal = CalibrationSet::new(scores, vec![0, 0, 0]).unwrap();
//! let rule = SizeRule::constant(1).unwrap();
//!
//! let e = test_ratio_vector(&cal, &[1.5, 5.0]).unwrap();
//! let result = adaptive_alpha(&e, rule.cap(None).unwrap()).unwrap();
//! assert!(result.set_size() <= 1);
//!
//! let loo = loo_estimator(&cal, &rule, None).unwrap();
//! assert!((loo.alpha_loo - 0.616_666).abs() < 1e-5);
//! ```

pub mod backward;
pub mod bounds;
pub mod commands;
pub mod error;
pub mod evalues;
pub mod fmt;
pub mod harness;
pub mod rules;
pub mod scores;

pub use error::{BcpError, Result};

pub mod prelude {
    pub use crate::backward::{
        adaptive_alpha, adaptive_alpha_bisect, conformal_set, loo_estimator, LooEstimate, MiscoverageResult,
        DEFAULT_BISECT_TOLERANCE,
    };
    pub use crate::bounds::{explicit_bound_with_mu, r_delta, trust_decision, BoundParams, Decision, TrustReport};
    pub use crate::error::{BcpError, Result};
    pub use crate::evalues::{loo_ratio_vector, normalized_ratio_vector, test_ratio_vector, RatioVector};
    pub use crate::rules::{apply_rule, fit_entropy_rule, RuleConfig, SizeRule};
    pub use crate::scores::{CalibrationSet, EmbeddingMatrix, ScoreMatrix};
}
