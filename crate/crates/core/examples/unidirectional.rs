//! One-way Holevo gain of the four-member Pauli ensemble.
//!
//! cargo run --release --example unidirectional

use gatecap::canonical::random_gate;
use gatecap::capacity::CapacitySearchConfig;
use gatecap::ensembles::{
    build_unidirectional_ensemble, canonical_source, delta_chi_oneway, depolarization_residual,
    Flow,
};

fn main() -> gatecap::Result<()> {
    let cfg = CapacitySearchConfig {
        restarts: 16,
        ..Default::default()
    };
    for seed in 0..3 {
        let gate = random_gate(seed);
        let src = canonical_source(&gate, &cfg)?;
        let e = build_unidirectional_ensemble(&src.state)?;
        println!(
            "random:{seed}  E_U^- = {:.6}  dchi(A->B) = {:.6}  dchi(B->A) = {:.6}  depolarization residual = {:.1e}",
            src.decrease,
            delta_chi_oneway(&src.ud, &e, Flow::AliceToBob)?,
            delta_chi_oneway(&src.ud, &e, Flow::BobToAlice)?,
            depolarization_residual(&src.state)?,
        );
    }
    Ok(())
}
