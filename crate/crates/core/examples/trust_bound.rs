//! Finite-sample slack on the leave-one-out estimate and the resulting
//! trust/reject call.
//!
//! cargo run --example trust_bound

use backward_cp::prelude::*;

fn main() -> Result<()> {
    for n in [100, 200, 500, 1000, 5000, 50_000] {
        let p = BoundParams::new(n, 1.0, 1.0, 0.05)?;
        println!("n {n:>6}: R = {:.5}", r_delta(&p)?);
    }

    let p = BoundParams::new(5000, 0.5, 2.0, 0.05)?;
    let r = r_delta(&p)?;
    let with_mu = explicit_bound_with_mu(&p.with_mu(1.2)?)?;
    println!("s in [0.5, 2], n 5000: R = {r:.5}, with mu = 1.2: {with_mu:.5}");

    let r = r_delta(&BoundParams::new(50_000, 1.0, 1.0, 0.05)?)?;
    for (alpha_loo, tau) in [(0.05, 0.9), (0.05, 0.95), (0.2, 0.75)] {
        let t = trust_decision(alpha_loo, r, tau)?;
        println!(
            "n 50000, alpha_loo {alpha_loo}, tau {tau}: lower coverage {:.4} -> {:?}",
            t.lower_coverage, t.decision
        );
    }
    Ok(())
}
