//! The sixteen-member two-way ensemble and its total Holevo gain.
//!
//! cargo run --release --example bidirectional

use gatecap::canonical::{cnot, swap};
use gatecap::capacity::CapacitySearchConfig;
use gatecap::ensembles::{
    build_bidirectional_ensemble, canonical_source, delta_chi_bidir, CorrectionMaps,
};

fn main() -> gatecap::Result<()> {
    let cfg = CapacitySearchConfig {
        restarts: 16,
        ..Default::default()
    };
    for (name, gate) in [("cnot", cnot()), ("swap", swap())] {
        let src = canonical_source(&gate, &cfg)?;
        let e = build_bidirectional_ensemble(&src.state)?;
        let maps = CorrectionMaps::pauli(e.layout())?;
        let d = delta_chi_bidir(&src.ud, &e, &maps)?;
        println!(
            "{name}: dchi = {:.6} (2 E_U^- = {:.6}), bounds coincide: {}",
            d.value,
            2.0 * src.decrease,
            d.coincide
        );
        println!(
            "  after: forward [{:.6}, {:.6}]  backward [{:.6}, {:.6}]",
            d.after.lo_forward, d.after.up_forward, d.after.lo_backward, d.after.up_backward
        );
    }
    Ok(())
}
