//! One test point, a size cap of two labels, and the miscoverage level that
//! cap forces.
//!
//! cargo run --example backward_set

use backward_cp::prelude::*;

fn main() -> Result<()> {
    let scores = ScoreMatrix::from_rows(&[[1.0, 9.0, 9.0], [9.0, 2.0, 9.0], [9.0, 9.0, 3.0]])?;
    let cal = CalibrationSet::new(scores, vec![0, 1, 2])?;
    let test = [0.5, 2.0, 4.0];

    let e = test_ratio_vector(&cal, &test)?;
    println!("ratios: {:?}", e.ratios());

    for cap in [1, 2] {
        let r = adaptive_alpha(&e, cap)?;
        let bisect = adaptive_alpha_bisect(&e, cap, DEFAULT_BISECT_TOLERANCE)?;
        println!(
            "cap {cap}: alpha {:.5} (bisection {bisect:.5}), set {:?}, degenerate {}",
            r.alpha, r.set_indices, r.degenerate
        );
    }
    Ok(())
}
