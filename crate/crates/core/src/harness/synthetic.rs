//! Synthetic exchangeable calibration data.
//!
//! Each point draws a label uniformly, logits `z_y ~ N(signal * 1{y = label}, 1)`,
//! softmax probabilities and cross-entropy scores. The logits double as a
//! `K`-dimensional embedding, so the entropy-adaptive rule can run on the
//! same draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{BcpError, Result};
use crate::scores::{cross_entropy_row, CalibrationSet, EmbeddingMatrix, ScoreMatrix, DEFAULT_CLAMP};

/// Independent random stream for one trial of an experiment. Streams depend
/// only on `(master_seed, trial_index)`, never on scheduling.
pub fn trial_stream(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// `n` calibration points plus one test point, all i.i.d.
#[derive(Debug, Clone)]
pub struct SyntheticDraw {
    pub cal: CalibrationSet,
    pub embeddings: EmbeddingMatrix,
    pub test_scores: Vec<f64>,
    pub test_label: usize,
    pub test_embedding: Vec<f64>,
}

pub fn gen_synthetic_scores<R: Rng + ?Sized>(
    n: usize,
    num_labels: usize,
    signal: f64,
    rng: &mut R,
) -> Result<SyntheticDraw> {
    if !(signal >= 0.0 && signal.is_finite()) {
        return Err(BcpError::InvalidParameter(format!(
            "signal {signal} must be finite and nonnegative"
        )));
    }
    if num_labels < 2 {
        return Err(BcpError::TooFewLabels(num_labels));
    }
    if n < 1 {
        return Err(BcpError::TooFewPoints {
            required: 1,
            found: n,
        });
    }

    let k = num_labels;
    let total = n + 1;
    let mut logits = vec![0.0; total * k];
    let mut scores = vec![0.0; total * k];
    let mut labels = Vec::with_capacity(total);
    let mut probs = vec![0.0; k];
    for i in 0..total {
        let label = rng.random_range(0..k);
        labels.push(label);
        let z = &mut logits[i * k..(i + 1) * k];
        for (y, zy) in z.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *zy = noise + if y == label { signal } else { 0.0 };
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut norm = 0.0;
        for (p, &zy) in probs.iter_mut().zip(z.iter()) {
            *p = (zy - max).exp();
            norm += *p;
        }
        probs.iter_mut().for_each(|p| *p /= norm);
        cross_entropy_row(&probs, DEFAULT_CLAMP, &mut scores[i * k..(i + 1) * k]);
    }

    let test_scores = scores.split_off(n * k);
    let test_embedding = logits.split_off(n * k);
    let test_label = labels.pop().expect("n + 1 labels drawn");
    Ok(SyntheticDraw {
        cal: CalibrationSet::new(ScoreMatrix::new(scores, n, k)?, labels)?,
        embeddings: EmbeddingMatrix::new(logits, n, k)?,
        test_scores,
        test_label,
        test_embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_stream() {
        let a = gen_synthetic_scores(20, 5, 1.0, &mut trial_stream(7, 3)).unwrap();
        let b = gen_synthetic_scores(20, 5, 1.0, &mut trial_stream(7, 3)).unwrap();
        assert_eq!(a.cal, b.cal);
        assert_eq!(a.test_scores, b.test_scores);
        assert_eq!(a.test_embedding, b.test_embedding);
        let c = gen_synthetic_scores(20, 5, 1.0, &mut trial_stream(7, 4)).unwrap();
        assert_ne!(a.cal, c.cal);
    }

    #[test]
    fn shapes_and_positivity() {
        let d = gen_synthetic_scores(30, 4, 2.0, &mut trial_stream(1, 0)).unwrap();
        assert_eq!(d.cal.n(), 30);
        assert_eq!(d.cal.num_labels(), 4);
        assert_eq!(d.embeddings.dim(), 4);
        assert_eq!(d.test_scores.len(), 4);
        assert!(d.test_label < 4);
        assert!(d.cal.scores().as_slice().iter().all(|&s| s > 0.0 && s.is_finite()));
    }

    #[test]
    fn strong_signal_makes_true_label_cheap() {
        let d = gen_synthetic_scores(50, 10, 20.0, &mut trial_stream(2, 0)).unwrap();
        assert!(d.cal.observed_scores().iter().all(|&s| s < 1e-3));
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = trial_stream(0, 0);
        assert!(gen_synthetic_scores(10, 3, -1.0, &mut rng).is_err());
        assert!(gen_synthetic_scores(10, 1, 1.0, &mut rng).is_err());
        assert!(gen_synthetic_scores(0, 3, 1.0, &mut rng).is_err());
    }
}
