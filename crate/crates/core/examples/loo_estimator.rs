//! Leave-one-out estimate of the miscoverage a size rule will incur, read
//! off the calibration data alone.
//!
//! cargo run --release --example loo_estimator

use backward_cp::harness::{gen_synthetic_scores, trial_stream};
use backward_cp::prelude::*;

fn main() -> Result<()> {
    let rule = SizeRule::constant(1)?;
    let three = CalibrationSet::new(ScoreMatrix::from_rows(&[[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])?, vec![0, 0, 0])?;
    let est = loo_estimator(&three, &rule, None)?;
    println!("three points: per-point {:?}, mean {:.5}", est.per_j, est.alpha_loo);

    for n in [100, 1000, 5000] {
        let draw = gen_synthetic_scores(n, 10, 2.0, &mut trial_stream(7, 0))?;
        for cap in [1, 2, 3] {
            let est = loo_estimator(&draw.cal, &SizeRule::constant(cap)?, None)?;
            println!("n {n:>4}, cap {cap}: alpha_loo {:.4}", est.alpha_loo);
        }
    }
    Ok(())
}
