//! Size-constraint rules: the maximum prediction-set size allowed for a
//! test point.
//!
//! Two rules are provided. [`SizeRule::Constant`] caps every set at `t`
//! labels. [`SizeRule::EntropyAdaptive`] measures label uncertainty around
//! the test point and grants larger sets in ambiguous regions:
//!
//! 1. project embeddings onto their top two principal axes,
//! 2. collect the labels of the `k` nearest calibration points,
//! 3. take the Shannon entropy (bits) of that label histogram,
//! 4. map the entropy to a size in `[t_min, t_max]` through thresholds that
//!    split the calibration entropy range, skewed toward low entropy.

mod knn;
mod pca;

use serde::{Deserialize, Serialize};

pub use knn::{local_entropy, nearest_indices};
pub use pca::{pca_2d, Pca2};

use crate::error::{BcpError, Result};
use crate::scores::{CalibrationSet, EmbeddingMatrix};

pub const DEFAULT_SKEW_EXPONENT: f64 = 0.5;

fn default_skew() -> f64 {
    DEFAULT_SKEW_EXPONENT
}

/// Serializable rule description, e.g. `{"kind": "constant", "t": 1}` or
/// `{"kind": "entropy", "k": 20, "t_min": 1, "t_max": 3, "skew_exponent": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    Constant {
        t: usize,
    },
    Entropy {
        k: usize,
        t_min: usize,
        t_max: usize,
        #[serde(default = "default_skew")]
        skew_exponent: f64,
    },
}

impl RuleConfig {
    pub fn needs_embeddings(&self) -> bool {
        matches!(self, RuleConfig::Entropy { .. })
    }

    /// Builds the rule for a calibration set. Entropy rules are fitted here.
    pub fn fit(&self, cal: &CalibrationSet, embeddings: Option<&EmbeddingMatrix>) -> Result<SizeRule> {
        match *self {
            RuleConfig::Constant { t } => SizeRule::constant(t),
            RuleConfig::Entropy {
                k,
                t_min,
                t_max,
                skew_exponent,
            } => {
                let emb = embeddings.ok_or(BcpError::MissingEmbeddings)?;
                Ok(SizeRule::EntropyAdaptive(fit_entropy_rule(
                    cal,
                    emb,
                    k,
                    t_min,
                    t_max,
                    skew_exponent,
                )?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SizeRule {
    Constant { t: usize },
    EntropyAdaptive(EntropyModel),
}

impl SizeRule {
    pub fn constant(t: usize) -> Result<Self> {
        if t < 1 {
            return Err(BcpError::InvalidParameter("constant size rule needs t >= 1".into()));
        }
        Ok(SizeRule::Constant { t })
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(self, SizeRule::EntropyAdaptive(_))
    }

    /// Size cap for a test point. The constant rule ignores the embedding.
    pub fn cap(&self, test_embedding: Option<&[f64]>) -> Result<usize> {
        match self {
            SizeRule::Constant { t } => Ok(*t),
            SizeRule::EntropyAdaptive(model) => {
                model.cap_for(test_embedding.ok_or(BcpError::MissingEmbeddings)?, None)
            }
        }
    }

    /// Size cap for calibration point `j` acting as a pseudo-test point: its
    /// neighbours are searched among the other calibration points.
    pub fn loo_cap(&self, j: usize, embeddings: Option<&EmbeddingMatrix>) -> Result<usize> {
        match self {
            SizeRule::Constant { t } => Ok(*t),
            SizeRule::EntropyAdaptive(model) => {
                let emb = embeddings.ok_or(BcpError::MissingEmbeddings)?;
                if j >= emb.n() {
                    return Err(BcpError::IndexOutOfRange {
                        index: j,
                        len: emb.n(),
                    });
                }
                model.cap_for(emb.row(j), Some(j))
            }
        }
    }
}

/// Size cap for a test point under `rule`.
pub fn apply_rule(rule: &SizeRule, test_embedding: Option<&[f64]>) -> Result<usize> {
    rule.cap(test_embedding)
}

/// Fitted entropy-adaptive rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyModel {
    pca: Pca2,
    projected_cal: Vec<[f64; 2]>,
    cal_labels: Vec<usize>,
    cal_entropies: Vec<f64>,
    num_labels: usize,
    k: usize,
    t_min: usize,
    t_max: usize,
    bins: Vec<f64>,
    skew_exponent: f64,
}

impl EntropyModel {
    pub fn pca(&self) -> &Pca2 {
        &self.pca
    }

    pub fn projected_calibration(&self) -> &[[f64; 2]] {
        &self.projected_cal
    }

    /// Local entropy of each calibration point, its own label excluded.
    pub fn calibration_entropies(&self) -> &[f64] {
        &self.cal_entropies
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn size_range(&self) -> (usize, usize) {
        (self.t_min, self.t_max)
    }

    pub fn skew_exponent(&self) -> f64 {
        self.skew_exponent
    }

    /// Local label entropy around an embedding. `exclude` removes one
    /// calibration index from the neighbour search.
    pub fn entropy_at(&self, embedding: &[f64], exclude: Option<usize>) -> Result<f64> {
        if embedding.len() != self.pca.dim() {
            return Err(BcpError::Shape(format!(
                "embedding has {} entries, model expects {}",
                embedding.len(),
                self.pca.dim()
            )));
        }
        let q = self.pca.project(embedding);
        self.entropy_of_projected(q, exclude)
    }

    fn entropy_of_projected(&self, q: [f64; 2], exclude: Option<usize>) -> Result<f64> {
        let labels: Vec<usize> = nearest_indices(&self.projected_cal, q, self.k, exclude)
            .into_iter()
            .map(|i| self.cal_labels[i])
            .collect();
        local_entropy(&labels, self.num_labels)
    }

    pub fn size_for_entropy(&self, h: f64) -> usize {
        bin_size(&self.bins, self.t_min, h)
    }

    fn cap_for(&self, embedding: &[f64], exclude: Option<usize>) -> Result<usize> {
        Ok(self.size_for_entropy(self.entropy_at(embedding, exclude)?))
    }
}

/// `L` thresholds `min + (max - min) * ((l - 1) / (L - 1))^skew`, `l = 1..=L`.
pub fn entropy_bins(min_h: f64, max_h: f64, levels: usize, skew_exponent: f64) -> Vec<f64> {
    debug_assert!(levels >= 2);
    let span = max_h - min_h;
    (0..levels)
        .map(|l| min_h + span * (l as f64 / (levels - 1) as f64).powf(skew_exponent))
        .collect()
}

/// `t_min + #{l < L - 1 : h > bins[l]}`; the last threshold never counts.
pub fn bin_size(bins: &[f64], t_min: usize, h: f64) -> usize {
    let inner = bins.len().saturating_sub(1);
    t_min + bins[..inner].iter().filter(|&&b| h > b).count()
}

/// Fits the entropy-adaptive rule on a calibration set and its embeddings.
///
/// Each calibration point's entropy uses its `k` nearest *other* calibration
/// points. Requires `1 <= k <= n - 1` and `1 <= t_min < t_max < K`.
pub fn fit_entropy_rule(
    cal: &CalibrationSet,
    embeddings: &EmbeddingMatrix,
    k: usize,
    t_min: usize,
    t_max: usize,
    skew_exponent: f64,
) -> Result<EntropyModel> {
    let n = cal.n();
    if embeddings.n() != n {
        return Err(BcpError::Shape(format!(
            "{} embeddings for {n} calibration points",
            embeddings.n()
        )));
    }
    if k < 1 || k >= n {
        return Err(BcpError::InvalidParameter(format!(
            "neighbour count k = {k} outside [1, {}]",
            n.saturating_sub(1)
        )));
    }
    let num_labels = cal.num_labels();
    if t_min < 1 || t_max <= t_min || t_max >= num_labels {
        return Err(BcpError::InvalidParameter(format!(
            "size bounds need 1 <= t_min < t_max < {num_labels}, got t_min = {t_min}, t_max = {t_max}"
        )));
    }
    if !(skew_exponent > 0.0 && skew_exponent.is_finite()) {
        return Err(BcpError::InvalidParameter(format!(
            "skew exponent {skew_exponent} must be positive"
        )));
    }

    let (pca, projected_cal) = pca_2d(embeddings)?;
    let mut model = EntropyModel {
        pca,
        projected_cal,
        cal_labels: cal.labels().to_vec(),
        cal_entropies: Vec::new(),
        num_labels,
        k,
        t_min,
        t_max,
        bins: Vec::new(),
        skew_exponent,
    };
    let entropies = (0..n)
        .map(|i| model.entropy_of_projected(model.projected_cal[i], Some(i)))
        .collect::<Result<Vec<f64>>>()?;
    let (min_h, max_h) = entropies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)));
    model.bins = entropy_bins(min_h, max_h, t_max - t_min + 1, skew_exponent);
    model.cal_entropies = entropies;
    Ok(model)
}
