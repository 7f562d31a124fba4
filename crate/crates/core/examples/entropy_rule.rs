//! A size cap that grows with the label entropy of a point's neighbourhood.
//!
//! cargo run --release --example entropy_rule

use backward_cp::harness::{gen_synthetic_scores, trial_stream};
use backward_cp::prelude::*;
use backward_cp::rules::entropy_bins;

fn main() -> Result<()> {
    println!("bins over [0, 2], three levels: {:?}", entropy_bins(0.0, 2.0, 3, 0.5));

    let k = 6;
    let draw = gen_synthetic_scores(500, k, 1.5, &mut trial_stream(3, 0))?;
    let model = fit_entropy_rule(&draw.cal, &draw.embeddings, 20, 1, 4, 0.5)?;
    println!("eigenvalues {:?}", model.pca().eigenvalues());
    println!("bins {:?}", model.bins());

    let rule = SizeRule::EntropyAdaptive(model);
    let mut counts = [0usize; 5];
    for j in 0..draw.cal.n() {
        counts[rule.loo_cap(j, Some(&draw.embeddings))?] += 1;
    }
    println!("calibration caps 1..=4: {:?}", &counts[1..]);

    let cap = apply_rule(&rule, Some(&draw.test_embedding))?;
    let e = test_ratio_vector(&draw.cal, &draw.test_scores)?;
    let r = adaptive_alpha(&e, cap)?;
    println!(
        "test point: cap {cap}, alpha {:.4}, set {:?}, true label {}",
        r.alpha, r.set_indices, draw.test_label
    );
    let est = loo_estimator(&draw.cal, &rule, Some(&draw.embeddings))?;
    println!("alpha_loo {:.4}", est.alpha_loo);
    Ok(())
}
