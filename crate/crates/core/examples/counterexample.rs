//! An ensemble whose one-way Holevo quantities add up to one bit even
//! though it is not of the product-coded form.
//!
//! cargo run --example counterexample

use gatecap::ensembles::{chi_lo, chi_up, counterexample_ensemble, CorrectionMaps, Flow};

fn main() -> gatecap::Result<()> {
    let e = counterexample_ensemble();
    let maps = CorrectionMaps::identity(e.layout(), 2, 2);
    for flow in [Flow::AliceToBob, Flow::BobToAlice] {
        println!(
            "{flow:?}: chi_up = {:.6}, chi_lo (no correction) = {:.6}",
            chi_up(&e, flow)?,
            chi_lo(&e, &maps, flow)?
        );
    }
    let total = chi_up(&e, Flow::AliceToBob)? + chi_up(&e, Flow::BobToAlice)?;
    println!("total: {total:.6} bit");
    Ok(())
}
