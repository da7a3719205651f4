//! The capacity chain for CNOT and SWAP, with witnesses from the shipped scripts.
//!
//! cargo run --release --example verify_chain

use gatecap::canonical::{cnot, random_gate, swap};
use gatecap::capacity::CapacitySearchConfig;
use gatecap::cli::{chain_assertions, verify_chain};

fn main() -> gatecap::Result<()> {
    let cfg = CapacitySearchConfig::default();
    for (name, gate) in [
        ("cnot", cnot()),
        ("swap", swap()),
        ("random:5", random_gate(5)),
    ] {
        let r = verify_chain(&gate, &cfg)?;
        let show = |v: Option<f64>| v.map_or("  n/a  ".to_string(), |x| format!("{x:.5}"));
        println!(
            "{name:9} C+E >= {}  2C+ >= {}  2E_U = {}  dchi = {}",
            show(r.chain[0]),
            show(r.chain[1]),
            show(r.chain[2]),
            show(r.chain[3])
        );
        for a in chain_assertions(&r).iter().filter(|a| !a.passed) {
            println!("  failed: {} ({})", a.name, a.detail);
        }
    }
    Ok(())
}
