//! Monte Carlo experiment runner.
//!
//! One trial executes the full procedure on a fresh calibration/test draw:
//! resolve the size cap for the test point, compute its ratio vector, the
//! adaptive miscoverage and the capped set, record coverage, then compute the
//! leave-one-out estimate from the calibration set alone. Trials are
//! independent; trial `i` draws from [`trial_stream`]`(master_seed, i)` so the
//! whole summary is a pure function of the config.

mod baselines;
mod export;
mod stability;
mod synthetic;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use baselines::{markov_coverage, mean_true_label_ratio};
pub use export::{histogram_csv, trials_csv, write_outputs};
pub use stability::{stability_diagnostic, ReferenceEstimate, StabilityDiagnostic};
pub use synthetic::{gen_synthetic_scores, trial_stream, SyntheticDraw};

use crate::backward::{adaptive_alpha, adaptive_alpha_bisect, loo_estimator, DEFAULT_BISECT_TOLERANCE};
use crate::bounds::{r_delta, trust_decision, BoundParams, Decision};
use crate::error::{BcpError, Result};
use crate::evalues::test_ratio_vector;
use crate::rules::RuleConfig;
use crate::scores::{load_embeddings_csv, load_scores_csv, CalibrationSet, EmbeddingMatrix};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum GeneratorConfig {
    #[serde(rename = "softmax-logit")]
    SoftmaxLogit { signal: f64 },
    #[serde(rename = "csv")]
    Csv {
        score_path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding_path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    /// Calibration size per trial.
    pub n: usize,
    /// Label count; required for synthetic data, taken from the file otherwise.
    #[serde(default, alias = "K", skip_serializing_if = "Option::is_none")]
    pub num_labels: Option<usize>,
    pub rule: RuleConfig,
    pub generator: GeneratorConfig,
    #[serde(alias = "N")]
    pub num_trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub bisect_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl TrialConfig {
    /// Synthetic-data config with a constant cap and no bound.
    pub fn synthetic(n: usize, num_labels: usize, signal: f64, cap: usize, num_trials: usize, master_seed: u64) -> Self {
        Self {
            n,
            num_labels: Some(num_labels),
            rule: RuleConfig::Constant { t: cap },
            generator: GeneratorConfig::SoftmaxLogit { signal },
            num_trials,
            master_seed,
            bisect_check: false,
            bound: None,
            tau: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub alpha_tilde: f64,
    pub covered: bool,
    pub set_size: usize,
    pub cap: usize,
    pub degenerate: bool,
    pub alpha_loo: f64,
    pub miss_over_alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_tilde_bisect: Option<f64>,
    /// Pool row used as the test point (CSV data only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trusted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count_one_minus_alpha: usize,
    pub count_one_minus_loo: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub seed: u64,
    pub num_trials: usize,
    pub mean_alpha_tilde: f64,
    pub mean_alpha_loo: f64,
    pub empirical_coverage: f64,
    pub posthoc_ratio_mean: f64,
    pub mean_set_size: f64,
    pub degenerate_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trust_fraction: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    pub config: TrialConfig,
    pub trials: Vec<TrialRecord>,
}

/// Calibration and test data for one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub cal: CalibrationSet,
    pub embeddings: Option<EmbeddingMatrix>,
    pub test_scores: Vec<f64>,
    pub test_label: usize,
    pub test_embedding: Option<Vec<f64>>,
    pub test_index: Option<usize>,
}

#[derive(Debug, Clone)]
enum Source {
    Synthetic { num_labels: usize, signal: f64 },
    Pool {
        cal: CalibrationSet,
        embeddings: Option<EmbeddingMatrix>,
    },
}

/// A validated config with any CSV pool loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: TrialConfig,
    source: Source,
    r_delta: Option<f64>,
}

impl Experiment {
    pub fn new(config: TrialConfig) -> Result<Self> {
        if config.n < 2 {
            return Err(BcpError::Config(format!("n = {} must be at least 2", config.n)));
        }
        if config.num_trials < 1 {
            return Err(BcpError::Config("num_trials must be at least 1".into()));
        }
        if let Some(tau) = config.tau {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(BcpError::Config(format!("tau = {tau} outside (0, 1)")));
            }
        }
        let source = match &config.generator {
            GeneratorConfig::SoftmaxLogit { signal } => {
                let num_labels = config
                    .num_labels
                    .ok_or_else(|| BcpError::Config("synthetic data needs num_labels".into()))?;
                if num_labels < 2 {
                    return Err(BcpError::TooFewLabels(num_labels));
                }
                if !(*signal >= 0.0 && signal.is_finite()) {
                    return Err(BcpError::Config(format!("signal {signal} must be nonnegative")));
                }
                Source::Synthetic {
                    num_labels,
                    signal: *signal,
                }
            }
            GeneratorConfig::Csv {
                score_path,
                embedding_path,
            } => {
                let cal = load_scores_csv(score_path)?;
                let embeddings = embedding_path.as_ref().map(load_embeddings_csv).transpose()?;
                if let Some(emb) = &embeddings {
                    if emb.n() != cal.n() {
                        return Err(BcpError::Shape(format!(
                            "{} embedding rows for {} score rows",
                            emb.n(),
                            cal.n()
                        )));
                    }
                }
                if cal.n() <= config.n {
                    return Err(BcpError::Config(format!(
                        "pool of {} points must exceed n = {}",
                        cal.n(),
                        config.n
                    )));
                }
                if let Some(k) = config.num_labels {
                    if k != cal.num_labels() {
                        return Err(BcpError::Config(format!(
                            "num_labels = {k} but the score file has {}",
                            cal.num_labels()
                        )));
                    }
                }
                Source::Pool { cal, embeddings }
            }
        };
        if config.rule.needs_embeddings() {
            if let Source::Pool { embeddings: None, .. } = source {
                return Err(BcpError::MissingEmbeddings);
            }
        }
        let r_delta = config.bound.as_ref().map(r_delta).transpose()?;
        Ok(Self {
            config,
            source,
            r_delta,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    /// Draws the data of trial `trial_index`.
    pub fn trial_data(&self, trial_index: u64) -> Result<TrialData> {
        let mut rng = trial_stream(self.config.master_seed, trial_index);
        let n = self.config.n;
        match &self.source {
            Source::Synthetic { num_labels, signal } => {
                let d = gen_synthetic_scores(n, *num_labels, *signal, &mut rng)?;
                let with_emb = self.config.rule.needs_embeddings();
                Ok(TrialData {
                    cal: d.cal,
                    embeddings: with_emb.then_some(d.embeddings),
                    test_scores: d.test_scores,
                    test_label: d.test_label,
                    test_embedding: with_emb.then_some(d.test_embedding),
                    test_index: None,
                })
            }
            Source::Pool { cal, embeddings } => {
                let picked = rand::seq::index::sample(&mut rng, cal.n(), n + 1).into_vec();
                let (cal_idx, test_idx) = picked.split_at(n);
                let test = test_idx[0];
                Ok(TrialData {
                    cal: cal.select(cal_idx)?,
                    embeddings: embeddings.as_ref().map(|e| e.select(cal_idx)).transpose()?,
                    test_scores: cal.scores().row(test).to_vec(),
                    test_label: cal.labels()[test],
                    test_embedding: embeddings.as_ref().map(|e| e.row(test).to_vec()),
                    test_index: Some(test),
                })
            }
        }
    }

    /// Runs one trial of the procedure.
    pub fn run_trial(&self, trial_index: u64) -> Result<TrialRecord> {
        self.trial(trial_index, true)
    }

    fn trial(&self, trial_index: u64, with_loo: bool) -> Result<TrialRecord> {
        let data = self.trial_data(trial_index)?;
        let rule = self.config.rule.fit(&data.cal, data.embeddings.as_ref())?;
        let cap = rule.cap(data.test_embedding.as_deref())?;
        let e = test_ratio_vector(&data.cal, &data.test_scores)?;
        let result = adaptive_alpha(&e, cap)?;
        let covered = result.contains(data.test_label);
        let alpha_tilde_bisect = if self.config.bisect_check {
            Some(adaptive_alpha_bisect(&e, cap, DEFAULT_BISECT_TOLERANCE)?)
        } else {
            None
        };
        let alpha_loo = if with_loo {
            loo_estimator(&data.cal, &rule, data.embeddings.as_ref())?.alpha_loo
        } else {
            f64::NAN
        };
        let trusted = match (self.r_delta, self.config.tau) {
            (Some(r), Some(tau)) if with_loo => {
                Some(trust_decision(alpha_loo, r, tau)?.decision == Decision::Trust)
            }
            _ => None,
        };
        Ok(TrialRecord {
            trial: trial_index,
            alpha_tilde: result.alpha,
            covered,
            set_size: result.set_size(),
            cap,
            degenerate: result.degenerate,
            alpha_loo,
            miss_over_alpha: if covered { 0.0 } else { 1.0 / result.alpha },
            alpha_tilde_bisect,
            test_index: data.test_index,
            trusted,
        })
    }

    /// Runs all trials and aggregates them in trial order.
    pub fn run(&self) -> Result<ExperimentSummary> {
        let trials = (0..self.config.num_trials as u64)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.summarize(trials))
    }

    fn summarize(&self, trials: Vec<TrialRecord>) -> ExperimentSummary {
        let n = trials.len() as f64;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| trials.iter().map(f).sum::<f64>() / n;
        let mut histogram: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
            .map(|b| HistogramBin {
                bin_left: b as f64 / HISTOGRAM_BINS as f64,
                bin_right: (b + 1) as f64 / HISTOGRAM_BINS as f64,
                count_one_minus_alpha: 0,
                count_one_minus_loo: 0,
            })
            .collect();
        for t in &trials {
            histogram[histogram_bin(1.0 - t.alpha_tilde)].count_one_minus_alpha += 1;
            histogram[histogram_bin(1.0 - t.alpha_loo)].count_one_minus_loo += 1;
        }
        let trust_fraction = trials
            .iter()
            .map(|t| t.trusted)
            .collect::<Option<Vec<bool>>>()
            .map(|v| v.iter().filter(|&&b| b).count() as f64 / n);
        ExperimentSummary {
            seed: self.config.master_seed,
            num_trials: trials.len(),
            mean_alpha_tilde: mean(&|t| t.alpha_tilde),
            mean_alpha_loo: mean(&|t| t.alpha_loo),
            empirical_coverage: mean(&|t| f64::from(u8::from(t.covered))),
            posthoc_ratio_mean: mean(&|t| t.miss_over_alpha),
            mean_set_size: mean(&|t| t.set_size as f64),
            degenerate_fraction: mean(&|t| f64::from(u8::from(t.degenerate))),
            r_delta: self.r_delta,
            trust_fraction,
            histogram,
            config: self.config.clone(),
            trials,
        }
    }

    /// Long-run estimates of the marginal miscoverage and the mean
    /// normalized test ratio per label, from `draws` fresh trials seeded by
    /// `seed` (independent of the experiment's own trials).
    pub fn reference(&self, draws: usize, seed: u64) -> Result<ReferenceEstimate> {
        let shadow = Experiment {
            config: TrialConfig {
                master_seed: seed,
                bisect_check: false,
                ..self.config.clone()
            },
            source: self.source.clone(),
            r_delta: None,
        };
        stability::reference_from(&shadow, draws)
    }
}

fn histogram_bin(v: f64) -> usize {
    ((v * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

pub fn run_trial(config: &TrialConfig, trial_index: u64) -> Result<TrialRecord> {
    Experiment::new(config.clone())?.run_trial(trial_index)
}

pub fn run_experiment(config: &TrialConfig) -> Result<ExperimentSummary> {
    Experiment::new(config.clone())?.run()
}

/// Mean of `1{miss} / alpha~` over trials; at most 1 in expectation.
pub fn posthoc_validity_check(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(BcpError::InvalidParameter("no trial records".into()));
    }
    Ok(records.iter().map(|r| r.miss_over_alpha).sum::<f64>() / records.len() as f64)
}
