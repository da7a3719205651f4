//! Canonical parameters of a few gates, plus a round trip on random ones.
//!
//! cargo run --example decompose

use gatecap::canonical::{cnot, decompose, local_invariants, random_gate, swap};

fn main() -> gatecap::Result<()> {
    for (name, gate) in [
        ("cnot", cnot()),
        ("swap", swap()),
        ("random:7", random_gate(7)),
    ] {
        let form = decompose(&gate)?;
        let (g1, g2) = local_invariants(&gate);
        println!(
            "{name:9} alphas = ({:.6}, {:.6}, {:.6})  residual = {:.1e}  G1 = {:.4}{:+.4}i  G2 = {:.4}",
            form.alphas[0],
            form.alphas[1],
            form.alphas[2],
            form.reconstruction_error(&gate),
            g1.re,
            g1.im,
            g2
        );
    }

    let worst = (0..200)
        .map(|s| {
            let g = random_gate(s);
            decompose(&g).map(|f| f.reconstruction_error(&g))
        })
        .collect::<gatecap::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("worst residual over 200 random gates: {worst:.2e}");
    Ok(())
}
