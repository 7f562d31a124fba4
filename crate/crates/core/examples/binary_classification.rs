//! Two labels with a cap of one: every set is a single label or, when the
//! cap cannot be met below level one, the degenerate set.
//!
//! cargo run --release --example binary_classification

use backward_cp::harness::trial_stream;
use backward_cp::prelude::*;
use backward_cp::scores::{binary_cross_entropy_scores, DEFAULT_CLAMP};
use rand::Rng;

fn sample(n: usize, separation: f64, rng: &mut impl Rng) -> (Vec<f64>, Vec<usize>) {
    let mut p = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..2);
        let logit = if y == 1 { separation } else { -separation } + rng.random_range(-2.0..2.0);
        p.push(1.0 / (1.0 + (-logit).exp()));
        labels.push(y);
    }
    (p, labels)
}

fn main() -> Result<()> {
    for separation in [0.5, 1.5, 3.0] {
        let mut covered = 0;
        let mut alpha_sum = 0.0;
        let trials = 500;
        for t in 0..trials {
            let mut rng = trial_stream(99, t);
            let (p, labels) = sample(301, separation, &mut rng);
            let scores = binary_cross_entropy_scores(&p, DEFAULT_CLAMP)?;
            let test_scores = scores.row(300).to_vec();
            let rows: Vec<&[f64]> = (0..300).map(|i| scores.row(i)).collect();
            let cal = CalibrationSet::new(ScoreMatrix::from_rows(&rows)?, labels[..300].to_vec())?;
            let r = adaptive_alpha(&test_ratio_vector(&cal, &test_scores)?, 1)?;
            covered += usize::from(r.contains(labels[300]));
            alpha_sum += r.alpha;
        }
        println!(
            "separation {separation}: coverage {:.3}, mean alpha {:.3}",
            covered as f64 / trials as f64,
            alpha_sum / trials as f64
        );
    }
    Ok(())
}
