//! Entangling and disentangling capability with 2x2 ancillas.
//!
//! cargo run --release --example capacity

use gatecap::canonical::{cnot, make_ud, random_gate, swap};
use gatecap::capacity::{disentangling_capability, entangling_capability, CapacitySearchConfig};

fn main() -> gatecap::Result<()> {
    let cfg = CapacitySearchConfig {
        restarts: 16,
        ..Default::default()
    };
    let gates = [
        ("cnot", cnot()),
        ("swap", swap()),
        ("U_d(0.5, 0.2, 0.1)", make_ud(0.5, 0.2, 0.1)),
        ("random:1", random_gate(1)),
    ];
    println!(
        "{:20} {:>10} {:>10} {:>10}",
        "gate", "E_U", "E_U^-", "converged"
    );
    for (name, g) in gates {
        let up = entangling_capability(&g, &cfg)?;
        let down = disentangling_capability(&g, &cfg)?;
        println!(
            "{name:20} {:>10.6} {:>10.6} {:>7}/{}",
            up.value,
            down.value,
            up.restarts_converged(),
            cfg.restarts
        );
    }
    Ok(())
}
