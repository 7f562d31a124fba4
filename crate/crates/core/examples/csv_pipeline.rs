//! Probabilities in, scores file out, then the procedure on that file.
//!
//! cargo run --example csv_pipeline

use backward_cp::commands;
use backward_cp::rules::RuleConfig;
use backward_cp::scores::{cross_entropy_scores, write_scores_csv, CalibrationSet, DEFAULT_CLAMP};

fn main() -> backward_cp::Result<()> {
    let probs = [
        [0.7, 0.2, 0.1],
        [0.2, 0.5, 0.3],
        [0.1, 0.1, 0.8],
        [0.6, 0.3, 0.1],
        [0.3, 0.6, 0.1],
        [0.2, 0.2, 0.6],
        [0.5, 0.4, 0.1],
        [0.1, 0.3, 0.6],
    ];
    let labels = vec![0, 1, 2, 0, 1, 2, 1, 2];
    let cal = CalibrationSet::new(cross_entropy_scores(&probs, DEFAULT_CLAMP)?, labels)?;

    let dir = std::env::temp_dir().join("bcp_csv_pipeline");
    std::fs::create_dir_all(&dir).map_err(|e| backward_cp::BcpError::Io { path: dir.clone(), source: e })?;
    let path = dir.join("scores.csv");
    write_scores_csv(&path, &cal)?;
    println!("{}", std::fs::read_to_string(&path).unwrap_or_default());

    let rule = RuleConfig::Constant { t: 1 };
    let report = commands::run_single(&path, None, &rule, 6)?;
    println!("{report:#?}");
    let loo = commands::loo(&path, None, &rule)?;
    println!("alpha_loo {:.4} over {} points", loo.alpha_loo, loo.n);
    Ok(())
}
