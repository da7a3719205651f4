//! Run every message pair in superposition and compare the entanglement of
//! the result with its closed form, with and without noise.
//!
//! cargo run --example superposition

use gatecap::protocol::{eta_entanglement, library, LocalOp};
use gatecap::qmath::linalg::{expm_hermitian, pauli};
use gatecap::qmath::Party;

fn main() -> gatecap::Result<()> {
    for script in library::shipped_scripts()? {
        let a = eta_entanglement(&script)?;
        println!(
            "{:14} E(eta) = {:.9}  closed form = {:.9}  gain = {:.6}",
            script.name(),
            a.direct,
            a.closed_form,
            a.gain
        );
    }

    let script = library::cnot_assisted()?;
    let (a1, _) = script.message_registers();
    for angle in [0.01, 0.05, 0.1] {
        let noisy = script.with_local_op(
            2,
            LocalOp::new(Party::Alice, vec![a1], expm_hermitian(&pauli(2), angle)),
        )?;
        let a = eta_entanglement(&noisy)?;
        println!(
            "noise {angle:4}: eps = {:.2e}  |E - closed| = {:.2e} <= {:.3}  overlap = {:.6} >= {:.6}",
            a.eps,
            (a.direct - a.closed_form).abs(),
            a.continuity_bound,
            a.overlap,
            1.0 - a.eps
        );
    }
    Ok(())
}
