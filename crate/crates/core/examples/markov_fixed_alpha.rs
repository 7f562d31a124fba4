//! Fixed-level sets `{y : E[y] < 1/alpha}` and the e-variable behind them.
//!
//! cargo run --release --example markov_fixed_alpha

use backward_cp::harness::{markov_coverage, mean_true_label_ratio};

fn main() -> backward_cp::Result<()> {
    let (n, k) = (200, 10);
    for signal in [0.0, 1.0, 2.0] {
        let mean = mean_true_label_ratio(n, k, signal, 20_000, 1)?;
        print!("signal {signal}: mean true-label ratio {mean:.4}");
        for alpha in [0.05, 0.1, 0.2] {
            let c = markov_coverage(n, k, signal, alpha, 20_000, 2)?;
            print!(", coverage@{alpha} {c:.4}");
        }
        println!();
    }
    Ok(())
}
