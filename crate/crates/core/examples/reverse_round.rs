//! Build the ancilla-returning round from an entanglement-assisted script.
//!
//! cargo run --release --example reverse_round

use gatecap::protocol::{library, reverse_protocol};

fn main() -> gatecap::Result<()> {
    for script in [library::cnot_assisted()?, library::swap_assisted()?] {
        let rev = reverse_protocol(&script)?;
        let r = rev.evaluate()?;
        println!(
            "{}: {} gate uses, fidelity {:.12}, ancilla {:.12}, delivery {:.12}",
            script.name(),
            r.gate_applications,
            r.min_fidelity,
            r.min_ancilla_fidelity,
            r.min_delivery
        );
    }
    Ok(())
}
