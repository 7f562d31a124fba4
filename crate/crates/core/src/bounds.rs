//! Finite-sample error bounds for the leave-one-out estimate and the
//! resulting trust decision.
//!
//! With scores in `[s_min, s_max]`, `n > s_max / s_min` and `c = ln(4/delta)`,
//! the estimate is within
//!
//! ```text
//! (s_max/mu) (sqrt(c/2n) + 2/n) / (s_min/s_max - 1/n)
//!     + sqrt(c/2n)
//!     + 2 s_max^2 / (mu s_min) * ((n+1)/n) * sqrt(pi / (2(n+1)))
//! ```
//!
//! of the marginal miscoverage with probability at least `1 - delta`, where
//! `mu` is the expected score. `mu` is unobservable; replacing it by `s_min`
//! gives the computable majorant `R_delta(n)`.
//!
//! Both bounds only translate into a coverage statement when the first-order
//! Taylor approximation linking the post-hoc guarantee to marginal coverage
//! holds; see [`TAYLOR_CAVEAT`].

use serde::{Deserialize, Serialize};

use crate::error::{BcpError, Result};

/// Attached to every trust report.
pub const TAYLOR_CAVEAT: &str = "coverage lower bound assumes P(Y_test in C) >= 1 - E[alpha~], \
which holds only up to a first-order Taylor approximation";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub n: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl BoundParams {
    pub fn new(n: usize, s_min: f64, s_max: f64, delta: f64) -> Result<Self> {
        let p = Self {
            n,
            s_min,
            s_max,
            delta,
            mu: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = Some(mu);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.s_min, self.s_max, self.delta].iter().all(|x| x.is_finite());
        if !finite || !(self.s_min > 0.0) || self.s_max < self.s_min {
            return Err(BcpError::InvalidParameter(format!(
                "score bounds need 0 < s_min <= s_max, got s_min = {}, s_max = {}",
                self.s_min, self.s_max
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BcpError::InvalidParameter(format!(
                "delta = {} outside (0, 1)",
                self.delta
            )));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(BcpError::InvalidParameter(format!("mu = {mu} must be positive")));
            }
        }
        let ratio = self.s_max / self.s_min;
        if !(self.n as f64 > ratio) {
            return Err(BcpError::BoundPrecondition { n: self.n, ratio });
        }
        Ok(())
    }
}

fn bound_with_scale(p: &BoundParams, mu: f64) -> f64 {
    let n = p.n as f64;
    let hoeffding = ((4.0 / p.delta).ln() / (2.0 * n)).sqrt();
    let first = (p.s_max / mu) * (hoeffding + 2.0 / n) / (p.s_min / p.s_max - 1.0 / n);
    let third = 2.0 * p.s_max * p.s_max / (mu * p.s_min)
        * ((n + 1.0) / n)
        * (std::f64::consts::PI / (2.0 * (n + 1.0))).sqrt();
    first + hoeffding + third
}

/// The observable bound `R_delta(n)`.
pub fn r_delta(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    Ok(bound_with_scale(params, params.s_min))
}

/// The bound with the true expected score `mu`. Equals [`r_delta`] at
/// `mu = s_min` and is smaller for any `mu > s_min`.
pub fn explicit_bound_with_mu(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    let mu = params.mu.ok_or(BcpError::MissingMu)?;
    Ok(bound_with_scale(params, mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Trust,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrustReport {
    pub alpha_loo: f64,
    pub r_delta: f64,
    pub tau: f64,
    pub lower_coverage: f64,
    pub decision: Decision,
    pub caveat: &'static str,
}

/// Trust when `1 - alpha_loo - r >= tau` (inclusive).
pub fn trust_decision(alpha_loo: f64, r: f64, tau: f64) -> Result<TrustReport> {
    for (name, v) in [("alpha_loo", alpha_loo), ("r_delta", r), ("tau", tau)] {
        if !v.is_finite() {
            return Err(BcpError::NonFinite(format!("{name} = {v}")));
        }
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(BcpError::InvalidParameter(format!("tau = {tau} outside (0, 1)")));
    }
    let lower_coverage = 1.0 - (alpha_loo + r);
    Ok(TrustReport {
        alpha_loo,
        r_delta: r,
        tau,
        lower_coverage,
        decision: if lower_coverage >= tau {
            Decision::Trust
        } else {
            Decision::Reject
        },
        caveat: TAYLOR_CAVEAT,
    })
}
