//! Message fidelities, receiver ensembles and the superposition analysis.

use rayon::prelude::*;

use super::{embed, project, ProtocolScript};
use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::qmath::linalg::{c, CVec};
use crate::qmath::{
    entanglement_entropy, fidelity_pure_mixed, DensityOperator, PartitionedState, Party,
    QuantumState, Role, Subsystem, SubsystemLayout, Q_CONTINUITY,
};

/// One simulated message pair.
#[derive(Clone, Debug)]
pub struct MessageRun {
    pub x: usize,
    pub y: usize,
    pub final_state: PartitionedState,
    /// `1 - <y,x| rho_{A1 B1} |y,x>`.
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// In the order of [`ProtocolScript::messages`].
    pub runs: Vec<MessageRun>,
    /// Worst case over all message pairs.
    pub eps: f64,
}

impl RunResult {
    pub fn get(&self, x: usize, y: usize) -> Option<&MessageRun> {
        self.runs.iter().find(|r| r.x == x && r.y == y)
    }
}

/// Target state `|y>_{A1} |x>_{B1}` on the two message registers.
fn delivered_target(script: &ProtocolScript, x: usize, y: usize) -> Result<PartitionedState> {
    let (a, b) = script.message_registers();
    let layout = script.layout().restrict(&[a, b])?;
    let digits = if a < b { [y, x] } else { [x, y] };
    PartitionedState::basis(layout, &digits)
}

/// Simulates every message pair and scores the delivered messages.
pub fn message_fidelity(script: &ProtocolScript) -> Result<RunResult> {
    let (a, b) = script.message_registers();
    let runs: Vec<MessageRun> = script
        .messages()
        .into_par_iter()
        .map(|(x, y)| {
            let final_state = script.run(x, y)?;
            let rho = final_state.partial_trace(&[a, b])?;
            let f = fidelity_pure_mixed(&delivered_target(script, x, y)?, &rho)?;
            Ok(MessageRun {
                x,
                y,
                final_state,
                eps: (1.0 - f).clamp(0.0, 1.0),
            })
        })
        .collect::<Result<_>>()?;
    let eps = runs.iter().map(|r| r.eps).fold(0.0, f64::max);
    Ok(RunResult { runs, eps })
}

/// `({2^-n_b, rho_{A1}^(y)}, {2^-n_a, rho_{B1}^(x)})`: what each receiver
/// holds, averaged over the message it does not know.
pub fn receiver_ensembles(
    script: &ProtocolScript,
    result: &RunResult,
) -> Result<(Ensemble, Ensemble)> {
    let (a, b) = script.message_registers();
    let (na, nb) = (1usize << script.n_a(), 1usize << script.n_b());
    let reduce = |fixed_party: Party, index: usize, keep: usize, count: usize| {
        let members: Vec<DensityOperator> = result
            .runs
            .iter()
            .filter(|r| match fixed_party {
                Party::Alice => r.y == index,
                Party::Bob => r.x == index,
            })
            .map(|r| r.final_state.partial_trace(&[keep]))
            .collect::<Result<_>>()?;
        if members.len() != count {
            return Err(Error::InvalidEnsemble("run result is incomplete".into()));
        }
        DensityOperator::mixture(&vec![1.0 / count as f64; count], &members)
    };
    let alice: Vec<QuantumState> = (0..nb)
        .map(|y| reduce(Party::Alice, y, a, na).map(QuantumState::Mixed))
        .collect::<Result<_>>()?;
    let bob: Vec<QuantumState> = (0..na)
        .map(|x| reduce(Party::Bob, x, b, nb).map(QuantumState::Mixed))
        .collect::<Result<_>>()?;
    Ok((
        Ensemble::new(vec![1.0 / nb as f64; nb], alice)?,
        Ensemble::new(vec![1.0 / na as f64; na], bob)?,
    ))
}

/// `final = sqrt(1 - eps) |y>|x>|c> + sqrt(eps) |e>`.
#[derive(Clone, Debug)]
pub struct UhlmannSplit {
    /// Normalized ancilla component, over the script's ancilla subsystems.
    pub c: PartitionedState,
    pub eps: f64,
    /// `|y>_{A1} |x>_{B1} |c>` over the full layout.
    pub ideal: PartitionedState,
    /// Error component; `None` when `eps` is zero.
    pub error: Option<PartitionedState>,
}

impl UhlmannSplit {
    pub fn reconstruct(&self) -> CVec {
        let mut v = self.ideal.amplitudes() * c((1.0 - self.eps).sqrt(), 0.0);
        if let Some(e) = &self.error {
            v += e.amplitudes() * c(self.eps.sqrt(), 0.0);
        }
        v
    }
}

/// Projects `final_state` onto the delivered messages.
pub fn uhlmann_split(
    script: &ProtocolScript,
    final_state: &PartitionedState,
    x: usize,
    y: usize,
) -> Result<UhlmannSplit> {
    let (a, b) = script.message_registers();
    if final_state.layout() != script.layout() {
        return Err(Error::Layout("state does not use the script layout".into()));
    }
    let fixed = [(a, y), (b, x)];
    let block = project(final_state, &fixed, script.ancilla_indices());
    let weight = block.norm_squared();
    if weight <= 1e-300 {
        return Err(Error::OutOfRange(format!(
            "messages ({x}, {y}) are never delivered"
        )));
    }
    let eps = (1.0 - weight).clamp(0.0, 1.0);
    let c_vec = &block / c(weight.sqrt(), 0.0);
    let ideal_amps = embed(script.layout(), &fixed, script.ancilla_indices(), &c_vec);
    let ideal = PartitionedState::normalized(ideal_amps, script.layout().clone())?;
    let remainder = final_state.amplitudes() - ideal.amplitudes() * c(weight.sqrt(), 0.0);
    let error = if remainder.norm() > 1e-14 {
        Some(PartitionedState::normalized(
            remainder,
            script.layout().clone(),
        )?)
    } else {
        None
    };
    let c_state =
        PartitionedState::normalized(c_vec, script.layout().restrict(script.ancilla_indices())?)?;
    Ok(UhlmannSplit {
        c: c_state,
        eps,
        ideal,
        error,
    })
}

/// The script layout followed by copy registers `A3` (`2^n_a` levels) and
/// `B3` (`2^n_b` levels).
pub fn superposition_layout(script: &ProtocolScript) -> SubsystemLayout {
    let copies = SubsystemLayout::new(vec![
        Subsystem::new(1 << script.n_a(), Party::Alice, Role::CopyRegister),
        Subsystem::new(1 << script.n_b(), Party::Bob, Role::CopyRegister),
    ])
    .expect("positive dimensions");
    script.layout().concat(&copies)
}

fn superpose<'a>(
    script: &ProtocolScript,
    members: impl Iterator<Item = ((usize, usize), &'a CVec)>,
) -> Result<PartitionedState> {
    let layout = superposition_layout(script);
    let base = script.layout().len();
    let free: Vec<usize> = (0..base).collect();
    let mut amps = CVec::zeros(layout.total_dim());
    for ((x, y), v) in members {
        amps += embed(&layout, &[(base, x), (base + 1, y)], &free, v);
    }
    PartitionedState::normalized(amps, layout)
}

/// `2^{-(n_a+n_b)/2} sum_{xy} |x>_{A3} |y>_{B3} |eta_xy>`.
pub fn superposition_state(
    script: &ProtocolScript,
    result: &RunResult,
) -> Result<PartitionedState> {
    superpose(
        script,
        result
            .runs
            .iter()
            .map(|r| ((r.x, r.y), r.final_state.amplitudes())),
    )
}

/// The same superposition built from the ideal components `|y>|x>|c_xy>`.
pub fn ideal_superposition(
    script: &ProtocolScript,
    splits: &[((usize, usize), UhlmannSplit)],
) -> Result<PartitionedState> {
    superpose(
        script,
        splits.iter().map(|(m, s)| (*m, s.ideal.amplitudes())),
    )
}

#[derive(Clone, Debug)]
pub struct EtaAnalysis {
    /// `n_a + n_b + 2^{-(n_a+n_b)} sum_{xy} E(c_xy)`.
    pub closed_form: f64,
    /// Entanglement of the simulated superposition.
    pub direct: f64,
    pub eps: f64,
    /// `|<eta|eta_eps>|^2`.
    pub overlap: f64,
    /// Entanglement of the initial ancilla.
    pub ancilla_entanglement: f64,
    /// `direct - ancilla_entanglement`.
    pub gain: f64,
    /// Log-dimension of Alice's ancilla, standing in for `K t`.
    pub kt: f64,
    /// `sqrt(eps) (4n + K t) + Q`.
    pub continuity_bound: f64,
}

pub fn eta_entanglement(script: &ProtocolScript) -> Result<EtaAnalysis> {
    let result = message_fidelity(script)?;
    let splits: Vec<((usize, usize), UhlmannSplit)> = result
        .runs
        .iter()
        .map(|r| Ok(((r.x, r.y), uhlmann_split(script, &r.final_state, r.x, r.y)?)))
        .collect::<Result<_>>()?;
    let mean_c = splits
        .iter()
        .map(|(_, s)| entanglement_entropy(&s.c))
        .sum::<f64>()
        / splits.len() as f64;
    let closed_form = (script.n_a() + script.n_b()) as f64 + mean_c;
    let eta_eps = superposition_state(script, &result)?;
    let eta = ideal_superposition(script, &splits)?;
    let direct = entanglement_entropy(&eta_eps);
    let overlap = eta.inner(&eta_eps)?.norm_sqr();
    let ancilla_entanglement = entanglement_entropy(&script.ancilla_state()?);
    let kt = (script.layout().dim_of(&script.ancilla_of(Party::Alice)) as f64).log2();
    let continuity_bound = result.eps.sqrt() * (4.0 * script.n() as f64 + kt) + Q_CONTINUITY;
    Ok(EtaAnalysis {
        closed_form,
        direct,
        eps: result.eps,
        overlap,
        ancilla_entanglement,
        gain: direct - ancilla_entanglement,
        kt,
        continuity_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{library, LocalOp};
    use super::*;
    use crate::ensembles::holevo_chi;
    use crate::qmath::linalg;

    #[test]
    fn shipped_scripts_deliver_exactly() {
        for s in library::shipped_scripts().unwrap() {
            let r = message_fidelity(&s).unwrap();
            assert!(r.eps < 1e-12, "{} eps {}", s.name(), r.eps);
            assert_eq!(r.runs.len(), 1 << (s.n_a() + s.n_b()));
        }
    }

    #[test]
    fn bit_flip_after_transfer_fails_every_message() {
        let s = library::cnot_forward().unwrap();
        let (_, b1) = s.message_registers();
        let flipped = s
            .with_local_op(2, LocalOp::new(Party::Bob, vec![b1], linalg::pauli(1)))
            .unwrap();
        let r = message_fidelity(&flipped).unwrap();
        assert!((r.eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn receiver_ensembles_of_perfect_forwarding() {
        let s = library::cnot_forward().unwrap();
        let r = message_fidelity(&s).unwrap();
        let (ea, eb) = receiver_ensembles(&s, &r).unwrap();
        assert_eq!(eb.len(), 2);
        assert!((holevo_chi(&eb).unwrap() - 1.0).abs() < 1e-12);
        assert!(holevo_chi(&ea).unwrap().abs() < 1e-12);
    }

    #[test]
    fn no_communication_gives_zero_chi() {
        let s = library::identity_script(1, 1).unwrap();
        let r = message_fidelity(&s).unwrap();
        let (ea, eb) = receiver_ensembles(&s, &r).unwrap();
        assert!(holevo_chi(&ea).unwrap().abs() < 1e-12);
        assert!(holevo_chi(&eb).unwrap().abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs_and_has_no_error_at_zero_eps() {
        let s = library::cnot_assisted().unwrap();
        for (x, y) in s.messages() {
            let fin = s.run(x, y).unwrap();
            let split = uhlmann_split(&s, &fin, x, y).unwrap();
            assert!(split.error.is_none());
            assert!((split.c.amplitudes().norm() - 1.0).abs() < 1e-14);
            assert!((split.reconstruct() - fin.amplitudes()).norm() < 1e-10);
        }
    }

    #[test]
    fn forwarding_leaves_the_bit_on_alice_gate_qubit() {
        // Alice cannot erase x locally, so c_xy = |x>_{Ag} |0>_{Bg}.
        let s = library::cnot_forward().unwrap();
        for x in 0..2 {
            let split = uhlmann_split(&s, &s.run(x, 0).unwrap(), x, 0).unwrap();
            let expected = PartitionedState::basis(split.c.layout().clone(), &[x, 0]).unwrap();
            assert!((split.c.inner(&expected).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn noisy_split_error_is_orthogonal_on_messages() {
        let s = library::swap_exchange().unwrap();
        let (a1, _) = s.message_registers();
        let h = linalg::pauli(2);
        let noisy = s
            .with_local_op(
                2,
                LocalOp::new(Party::Alice, vec![a1], linalg::expm_hermitian(&h, 0.1)),
            )
            .unwrap();
        let fin = noisy.run(1, 0).unwrap();
        let split = uhlmann_split(&noisy, &fin, 1, 0).unwrap();
        assert!((split.eps - 0.1f64.sin().powi(2)).abs() < 1e-12);
        let e = split.error.clone().unwrap();
        let (a, b) = noisy.message_registers();
        let rho = e.partial_trace(&[a, b]).unwrap();
        let target = delivered_target(&noisy, 1, 0).unwrap();
        assert!(fidelity_pure_mixed(&target, &rho).unwrap() < 1e-12);
        assert!((split.reconstruct() - fin.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn eta_closed_form_matches_direct_on_shipped_scripts() {
        let expected = [
            ("cnot-forward", 1.0, 1.0),
            ("swap-exchange", 2.0, 2.0),
            ("cnot-assisted", 2.0, 1.0),
            ("swap-assisted", 4.0, 2.0),
        ];
        for (s, (name, e, gain)) in library::shipped_scripts().unwrap().iter().zip(expected) {
            assert_eq!(s.name(), name);
            let a = eta_entanglement(s).unwrap();
            assert!((a.closed_form - a.direct).abs() < 1e-9, "{name}");
            assert!((a.direct - e).abs() < 1e-9, "{name}: {}", a.direct);
            assert!((a.gain - gain).abs() < 1e-9, "{name}");
            assert!((a.overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_message_script_keeps_ancilla_entanglement() {
        let s = library::identity_script(0, 0).unwrap();
        let a = eta_entanglement(&s).unwrap();
        assert!(a.direct.abs() < 1e-12 && a.closed_form.abs() < 1e-12);
    }
}
