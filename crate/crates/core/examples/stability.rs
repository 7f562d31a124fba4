//! Realized stability ratio of the constant and entropy rules against a long
//! reference run.
//!
//! cargo run --release --example stability

use backward_cp::harness::{stability_diagnostic, Experiment, TrialConfig};
use backward_cp::rules::RuleConfig;

fn main() -> backward_cp::Result<()> {
    for rule in [
        RuleConfig::Constant { t: 1 },
        RuleConfig::Entropy { k: 15, t_min: 1, t_max: 3, skew_exponent: 0.5 },
    ] {
        let mut config = TrialConfig::synthetic(500, 6, 2.0, 1, 5, 8);
        config.rule = rule.clone();
        let exp = Experiment::new(config)?;
        let reference = exp.reference(20_000, 9)?;
        println!("{rule:?}: E[alpha~] {:.4}", reference.mean_alpha_tilde);
        for i in 0..5 {
            let data = exp.trial_data(i)?;
            let fitted = rule.fit(&data.cal, data.embeddings.as_ref())?;
            let d = stability_diagnostic(&data.cal, &fitted, data.embeddings.as_ref(), &reference)?;
            println!("  seed {i}: ratio {:.4} ({:.3} / {:.3})", d.ratio, d.numerator, d.denominator);
        }
    }
    Ok(())
}
