//! Simulate the shipped scripts message by message and look at what each
//! receiver ends up holding.
//!
//! cargo run --example protocol_run

use gatecap::ensembles::holevo_chi;
use gatecap::protocol::{library, message_fidelity, receiver_ensembles};

fn main() -> gatecap::Result<()> {
    for script in library::shipped_scripts()? {
        let result = message_fidelity(&script)?;
        let (at_alice, at_bob) = receiver_ensembles(&script, &result)?;
        println!(
            "{:14} t = {}  (n_a, n_b) = ({}, {})  eps = {:.1e}  chi at Bob = {:.6}  chi at Alice = {:.6}",
            script.name(),
            script.t(),
            script.n_a(),
            script.n_b(),
            result.eps,
            holevo_chi(&at_bob)?,
            holevo_chi(&at_alice)?,
        );
    }
    Ok(())
}
