//! The product ensemble built from one-party marginals has the same
//! single-party views as the entangled two-way ensemble.
//!
//! cargo run --example appendix_b

use gatecap::ensembles::{appendix_b_ensemble, build_bidirectional_ensemble};
use gatecap::qmath::linalg::{haar_vector, max_abs_diff};
use gatecap::qmath::{PartitionedState, Party, SubsystemLayout};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gatecap::Result<()> {
    let layout = SubsystemLayout::ancilla_extended(2, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..3 {
        let phi = PartitionedState::new(haar_vector(layout.total_dim(), &mut rng), layout.clone())?;
        let pure = build_bidirectional_ensemble(&phi)?;
        let prod = appendix_b_ensemble(&phi)?;
        let mut worst: f64 = 0.0;
        for party in [Party::Alice, Party::Bob] {
            for (a, b) in pure
                .marginals(party)?
                .iter()
                .zip(prod.marginals(party)?.iter())
            {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max(max_abs_diff(x.matrix(), y.matrix()));
                }
            }
        }
        println!("state {k}: largest marginal difference {worst:.2e}");
    }
    Ok(())
}
