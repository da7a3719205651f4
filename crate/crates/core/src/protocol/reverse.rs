//! Turning an entanglement-assisted script into a round that returns its
//! ancilla: run forward, copy the received messages out, conjugate the
//! leftover state locally, then run the conjugated steps backwards.

use rayon::prelude::*;

use super::analysis::{message_fidelity, uhlmann_split};
use super::{embed, LocalOp, ProtocolScript, ScriptSpec, Step};
use crate::error::{Error, Result};
use crate::qmath::linalg::{self, CMat, CVec, C0, C1};
use crate::qmath::{
    fidelity_pure_mixed, schmidt_decompose, PartitionedState, Party, Role, Subsystem,
    SubsystemLayout,
};

/// `U* = U^dagger` tolerance required of the gate.
pub const CONJUGATE_TOL: f64 = 1e-9;

/// Extra registers appended after the forward layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CopyRegisters {
    /// Copy of Alice's own message `x`.
    pub a3: usize,
    /// Where Alice keeps the received `y`.
    pub a4: usize,
    /// Copy of Bob's own message `y`.
    pub b3: usize,
    /// Where Bob keeps the received `x`.
    pub b4: usize,
}

#[derive(Clone, Debug)]
pub struct ReverseProtocol {
    script: ProtocolScript,
    forward: ProtocolScript,
    copies: CopyRegisters,
    forward_eps: f64,
}

#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub x: usize,
    pub y: usize,
    /// Overlap with `|x>|x>|y>|y>|psi>|y>|x>` on `A1 A3 B1 B3 (A2B2) A4 B4`.
    pub fidelity: f64,
    /// Fidelity of the returned ancilla with the initial one.
    pub ancilla_fidelity: f64,
    /// Probability that `A4` holds `y` and `B4` holds `x`.
    pub delivery: f64,
}

#[derive(Clone, Debug)]
pub struct ReverseReport {
    pub rounds: Vec<RoundOutcome>,
    pub forward_eps: f64,
    pub gate_applications: usize,
    pub min_fidelity: f64,
    pub min_ancilla_fidelity: f64,
    pub min_delivery: f64,
    /// `1 - 4 sqrt(eps)` for a single round.
    pub fidelity_bound: f64,
}

impl ReverseProtocol {
    /// The full round as a script over the extended layout.
    pub fn script(&self) -> &ProtocolScript {
        &self.script
    }

    pub fn forward(&self) -> &ProtocolScript {
        &self.forward
    }

    pub fn copies(&self) -> CopyRegisters {
        self.copies
    }

    pub fn forward_eps(&self) -> f64 {
        self.forward_eps
    }

    /// The state the round should produce for messages `(x, y)`.
    pub fn target_state(&self, x: usize, y: usize) -> Result<PartitionedState> {
        let (a1, b1) = self.forward.message_registers();
        let CopyRegisters { a3, a4, b3, b4 } = self.copies;
        let amps = embed(
            self.script.layout(),
            &[(a1, x), (b1, y), (a3, x), (b3, y), (a4, y), (b4, x)],
            self.forward.ancilla_indices(),
            &self.forward.spec().initial_ancilla,
        );
        PartitionedState::normalized(amps, self.script.layout().clone())
    }

    pub fn round(&self, x: usize, y: usize) -> Result<RoundOutcome> {
        let fin = self.script.run(x, y)?;
        let fidelity = self.target_state(x, y)?.inner(&fin)?.norm_sqr();
        let ancilla = self.forward.ancilla_state()?;
        let rho = fin.partial_trace(self.forward.ancilla_indices())?;
        let ancilla_fidelity = fidelity_pure_mixed(&ancilla, &rho)?;
        let CopyRegisters { a4, b4, .. } = self.copies;
        let delivered =
            PartitionedState::basis(self.script.layout().restrict(&[a4, b4])?, &[y, x])?;
        let delivery = fidelity_pure_mixed(&delivered, &fin.partial_trace(&[a4, b4])?)?;
        Ok(RoundOutcome {
            x,
            y,
            fidelity,
            ancilla_fidelity,
            delivery,
        })
    }

    pub fn evaluate(&self) -> Result<ReverseReport> {
        let rounds: Vec<RoundOutcome> = self
            .forward
            .messages()
            .into_par_iter()
            .map(|(x, y)| self.round(x, y))
            .collect::<Result<_>>()?;
        let min = |f: fn(&RoundOutcome) -> f64| rounds.iter().map(f).fold(1.0, f64::min);
        Ok(ReverseReport {
            forward_eps: self.forward_eps,
            gate_applications: self.script.t(),
            min_fidelity: min(|r| r.fidelity),
            min_ancilla_fidelity: min(|r| r.ancilla_fidelity),
            min_delivery: min(|r| r.delivery),
            fidelity_bound: 1.0 - 4.0 * self.forward_eps.sqrt(),
            rounds,
        })
    }
}

/// Unitary sending each column `v` of a completed basis to `conj(v)`.
fn conjugating_map(partial: &CMat) -> CMat {
    let full = linalg::complete_basis(partial);
    linalg::conj(&full) * full.adjoint()
}

/// Unitary sending each `conj(v)` back to `v`.
fn unconjugating_map(partial: &CMat) -> CMat {
    let full = linalg::complete_basis(partial);
    &full * full.transpose()
}

/// `sum_{m, k} |m><m| (x) |k><k| (x) W_{m k}` with identity on missing blocks.
fn controlled_blocks(
    dm: usize,
    dk: usize,
    inner: usize,
    blocks: &[((usize, usize), CMat)],
) -> CMat {
    let n = dm * dk * inner;
    let mut out = linalg::identity(n);
    for ((m, k), w) in blocks {
        let start = (m * dk + k) * inner;
        out.view_mut((start, start), (inner, inner)).copy_from(w);
    }
    out
}

pub fn reverse_protocol(forward: &ProtocolScript) -> Result<ReverseProtocol> {
    let u = forward.gate().matrix();
    let defect = linalg::max_abs_diff(&linalg::conj(u), &u.adjoint());
    if defect > CONJUGATE_TOL {
        return Err(Error::InvalidScript(format!(
            "gate must satisfy U* = U^dagger (deviation {defect:e}); canonicalize the script first"
        )));
    }
    let layout = forward.layout();
    let dims = layout.dims();
    let (a1, b1) = forward.message_registers();
    let (da, db) = (dims[a1], dims[b1]);
    let base = layout.len();
    let copies = CopyRegisters {
        a3: base,
        a4: base + 1,
        b3: base + 2,
        b4: base + 3,
    };
    let extended = layout.concat(&SubsystemLayout::new(vec![
        Subsystem::new(da, Party::Alice, Role::CopyRegister),
        Subsystem::new(da, Party::Alice, Role::CopyRegister),
        Subsystem::new(db, Party::Bob, Role::CopyRegister),
        Subsystem::new(db, Party::Bob, Role::CopyRegister),
    ])?);

    let alice_rest = forward.ancilla_of(Party::Alice);
    let bob_rest = forward.ancilla_of(Party::Bob);
    let dim_a = layout.dim_of(&alice_rest);
    let dim_b = layout.dim_of(&bob_rest);

    let result = message_fidelity(forward)?;
    let mut blocks_a = Vec::new();
    let mut blocks_b = Vec::new();
    for run in &result.runs {
        let split = uhlmann_split(forward, &run.final_state, run.x, run.y)?;
        let schmidt = schmidt_decompose(&split.c);
        // Alice's block is selected by (A1 = y, A3 = x), Bob's by (B1 = x, B3 = y).
        blocks_a.push(((run.y, run.x), conjugating_map(&schmidt.alice)));
        blocks_b.push(((run.x, run.y), conjugating_map(&schmidt.bob)));
    }
    let cond_a = controlled_blocks(da, da, dim_a, &blocks_a);
    let cond_b = controlled_blocks(db, db, dim_b, &blocks_b);

    let psi = schmidt_decompose(&forward.ancilla_state()?);
    let restore_a = unconjugating_map(&psi.alice);
    let restore_b = unconjugating_map(&psi.bob);

    let with = |first: &[usize], rest: &[usize]| -> Vec<usize> {
        first.iter().chain(rest).copied().collect()
    };
    let forward_locals: Vec<Vec<LocalOp>> = forward
        .steps()
        .iter()
        .filter_map(|s| match s {
            Step::Local(ops) => Some(ops.clone()),
            Step::Gate => None,
        })
        .collect();
    let reversed =
        |ops: &[LocalOp]| -> Vec<LocalOp> { ops.iter().rev().map(LocalOp::transpose).collect() };
    let t = forward.t();

    let mut locals: Vec<Vec<LocalOp>> = forward_locals[..t].to_vec();
    let mut middle = forward_locals[t].clone();
    middle.push(LocalOp::new(
        Party::Alice,
        vec![a1, copies.a4],
        linalg::copy_permutation(da, da),
    ));
    middle.push(LocalOp::new(
        Party::Bob,
        vec![b1, copies.b4],
        linalg::copy_permutation(db, db),
    ));
    if dim_a > 1 {
        middle.push(LocalOp::new(
            Party::Alice,
            with(&[a1, copies.a3], &alice_rest),
            cond_a,
        ));
    }
    if dim_b > 1 {
        middle.push(LocalOp::new(
            Party::Bob,
            with(&[b1, copies.b3], &bob_rest),
            cond_b,
        ));
    }
    middle.extend(reversed(&forward_locals[t]));
    locals.push(middle);
    for k in (0..t).rev() {
        locals.push(reversed(&forward_locals[k]));
    }
    locals[0].splice(
        0..0,
        [
            LocalOp::new(
                Party::Alice,
                vec![a1, copies.a3],
                linalg::copy_permutation(da, da),
            ),
            LocalOp::new(
                Party::Bob,
                vec![b1, copies.b3],
                linalg::copy_permutation(db, db),
            ),
        ],
    );
    let last = locals.len() - 1;
    if !alice_rest.is_empty() {
        locals[last].push(LocalOp::new(Party::Alice, alice_rest.clone(), restore_a));
    }
    if !bob_rest.is_empty() {
        locals[last].push(LocalOp::new(Party::Bob, bob_rest.clone(), restore_b));
    }

    let mut steps = Vec::with_capacity(2 * locals.len() - 1);
    for (k, ops) in locals.into_iter().enumerate() {
        if k > 0 {
            steps.push(Step::Gate);
        }
        steps.push(Step::Local(ops));
    }

    let blank = da * da * db * db;
    let mut zero = CVec::from_element(blank, C0);
    zero[0] = C1;
    let initial_ancilla = forward.spec().initial_ancilla.kronecker(&zero);

    let script = ProtocolScript::new(ScriptSpec {
        name: format!("{} (reverse round)", forward.name()),
        gate: forward.spec().gate.clone(),
        layout: extended,
        n_a: forward.n_a(),
        n_b: forward.n_b(),
        initial_ancilla,
        steps,
    })?;
    Ok(ReverseProtocol {
        script,
        forward: forward.clone(),
        copies,
        forward_eps: result.eps,
    })
}
