//! Library side of the `bcp` command line tool. Each function returns a
//! serializable report; the binary only parses arguments and prints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backward::{adaptive_alpha, adaptive_alpha_bisect, loo_estimator, DEFAULT_BISECT_TOLERANCE};
use crate::bounds::{explicit_bound_with_mu, r_delta, trust_decision, BoundParams, TrustReport};
use crate::error::{BcpError, Result};
use crate::evalues::test_ratio_vector;
use crate::harness::{write_outputs, Experiment, ExperimentSummary, TrialConfig};
use crate::rules::RuleConfig;
use crate::scores::{load_embeddings_csv, load_scores_csv, CalibrationSet, EmbeddingMatrix};

/// Parses a rule given inline (`{"kind": ...}`) or as a path to a JSON file.
/// Both the bare rule and a `{"rule": {...}}` wrapper are accepted.
pub fn parse_rule(arg: &str) -> Result<RuleConfig> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| BcpError::io(arg, e))?
    };
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wrapped {
        Outer { rule: RuleConfig },
        Bare(RuleConfig),
    }
    let wrapped: Wrapped =
        serde_json::from_str(&text).map_err(|e| BcpError::Config(format!("rule: {e}")))?;
    Ok(match wrapped {
        Wrapped::Outer { rule } | Wrapped::Bare(rule) => rule,
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<TrialConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| BcpError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| BcpError::Config(format!("{}: {e}", path.display())))
}

/// Runs the experiment described by `config_path` and writes its output
/// files into `out_dir`.
pub fn simulate(config_path: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<ExperimentSummary> {
    let summary = Experiment::new(load_config(config_path)?)?.run()?;
    write_outputs(out_dir, &summary)?;
    Ok(summary)
}

fn load_inputs(
    scores: &Path,
    embeddings: Option<&Path>,
) -> Result<(CalibrationSet, Option<EmbeddingMatrix>)> {
    let cal = load_scores_csv(scores)?;
    let emb = embeddings.map(load_embeddings_csv).transpose()?;
    if let Some(e) = &emb {
        if e.n() != cal.n() {
            return Err(BcpError::Shape(format!(
                "{} embedding rows for {} score rows",
                e.n(),
                cal.n()
            )));
        }
    }
    Ok((cal, emb))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub test_row: usize,
    pub test_label: usize,
    pub n: usize,
    pub cap: usize,
    pub alpha: f64,
    pub set: Vec<usize>,
    pub degenerate: bool,
    pub covered: bool,
    pub alpha_bisect: f64,
    pub alpha_loo: f64,
    pub estimated_coverage: f64,
}

/// One pass of the full procedure with row `test_row` held out as the test
/// point and all other rows as calibration data.
pub fn run_single(
    scores: &Path,
    embeddings: Option<&Path>,
    rule: &RuleConfig,
    test_row: usize,
) -> Result<RunReport> {
    let (pool, emb) = load_inputs(scores, embeddings)?;
    if test_row >= pool.n() {
        return Err(BcpError::IndexOutOfRange {
            index: test_row,
            len: pool.n(),
        });
    }
    let rest: Vec<usize> = (0..pool.n()).filter(|&i| i != test_row).collect();
    let cal = pool.select(&rest)?;
    let cal_emb = emb.as_ref().map(|e| e.select(&rest)).transpose()?;
    let fitted = rule.fit(&cal, cal_emb.as_ref())?;
    let cap = fitted.cap(emb.as_ref().map(|e| e.row(test_row)))?;

    let test_scores = pool.scores().row(test_row);
    let test_label = pool.labels()[test_row];
    let e = test_ratio_vector(&cal, test_scores)?;
    let result = adaptive_alpha(&e, cap)?;
    let loo = loo_estimator(&cal, &fitted, cal_emb.as_ref())?;
    Ok(RunReport {
        test_row,
        test_label,
        n: cal.n(),
        cap,
        alpha: result.alpha,
        covered: result.contains(test_label),
        set: result.set_indices,
        degenerate: result.degenerate,
        alpha_bisect: adaptive_alpha_bisect(&e, cap, DEFAULT_BISECT_TOLERANCE)?,
        alpha_loo: loo.alpha_loo,
        estimated_coverage: 1.0 - loo.alpha_loo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub n: usize,
    pub alpha_loo: f64,
    pub per_j: Vec<f64>,
    pub per_j_caps: Vec<usize>,
    pub observed_min: f64,
    pub observed_max: f64,
}

pub fn loo(scores: &Path, embeddings: Option<&Path>, rule: &RuleConfig) -> Result<LooReport> {
    let (cal, emb) = load_inputs(scores, embeddings)?;
    let fitted = rule.fit(&cal, emb.as_ref())?;
    let est = loo_estimator(&cal, &fitted, emb.as_ref())?;
    let (observed_min, observed_max) = cal.observed_range();
    Ok(LooReport {
        n: cal.n(),
        alpha_loo: est.alpha_loo,
        per_j: est.per_j,
        per_j_caps: est.per_j_caps,
        observed_min,
        observed_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub r_delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_with_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trust: Option<TrustReport>,
}

pub fn bound(params: BoundParams, alpha_loo: Option<f64>, tau: Option<f64>) -> Result<BoundReport> {
    let r = r_delta(&params)?;
    let bound_with_mu = params.mu.map(|_| explicit_bound_with_mu(&params)).transpose()?;
    let trust = match (alpha_loo, tau) {
        (Some(a), Some(t)) => Some(trust_decision(a, r, t)?),
        (None, None) => None,
        _ => {
            return Err(BcpError::InvalidParameter(
                "--alpha-loo and --tau must be given together".into(),
            ))
        }
    };
    Ok(BoundReport {
        params,
        r_delta: r,
        bound_with_mu,
        trust,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_argument_forms() {
        let bare = parse_rule(r#"{"kind": "constant", "t": 2}"#).unwrap();
        let wrapped = parse_rule(r#"{"rule": {"kind": "constant", "t": 2}}"#).unwrap();
        assert_eq!(bare, wrapped);
        assert!(parse_rule(r#"{"kind": "nope"}"#).is_err());
        assert!(parse_rule("/no/such/rule.json").is_err());
    }

    #[test]
    fn bound_report() {
        let p = BoundParams::new(100, 1.0, 1.0, 0.05).unwrap();
        let r = bound(p, Some(0.05), Some(0.3)).unwrap();
        assert!(r.trust.is_some() && r.bound_with_mu.is_none());
        assert!(bound(p, Some(0.05), None).is_err());
    }
}
