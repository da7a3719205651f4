//! Evaluate the error threshold, ancilla growth and rate check.
//!
//! cargo run --example bounds

use gatecap::protocol::bounds::{BoundsInput, BoundsReport};

fn main() -> gatecap::Result<()> {
    for (base, target, m) in [
        ((1.0, 1.0), (2.0, 2.0), 10),
        ((0.5, 0.5), (1.0, 1.0), 1_000_000),
    ] {
        let r = BoundsReport::evaluate(&BoundsInput {
            base,
            target,
            m,
            ..Default::default()
        })?;
        println!("R = {base:?} -> R' = {target:?}, M = {m}");
        println!("  eps threshold  {:.6e}", r.epsilon_threshold);
        println!("  K, K_n         {}, {}", r.k, r.k_n);
        println!("  log2 dim bound {}", r.log2_dimension_bound);
        println!("  chained fid.   {:.6}", r.chained_fidelity);
        println!("  rate check     {:?}", r.rate_check);
    }
    Ok(())
}
