//! Communication scripts: local steps interleaved with applications of a
//! two-qubit gate, their simulation, and the analysis built on top.

mod analysis;
pub mod bounds;
pub mod library;
mod reverse;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{self, Gate, GateSource};
use crate::error::{Error, Result};
use crate::qmath::encoding;
use crate::qmath::linalg::{self, CMat, CVec, C0};
use crate::qmath::{PartitionedState, Party, Role, SubsystemLayout};

pub use analysis::{
    eta_entanglement, ideal_superposition, message_fidelity, receiver_ensembles,
    superposition_layout, superposition_state, uhlmann_split, EtaAnalysis, MessageRun, RunResult,
    UhlmannSplit,
};
pub use bounds::BoundsReport;
pub use reverse::{reverse_protocol, CopyRegisters, ReverseProtocol, ReverseReport, RoundOutcome};

/// Unitarity tolerance for the matrices of a script.
pub const SCRIPT_UNITARY_TOL: f64 = 1e-8;
/// Norm tolerance for the initial ancilla of a script.
pub const SCRIPT_NORM_TOL: f64 = 1e-10;

/// Largest canonical-parameter gap accepted as local equivalence.
pub const EQUIVALENCE_TOL: f64 = 1e-9;

/// Largest message size in bits per party.
const MAX_MESSAGE_BITS: usize = 12;

/// A unitary performed by one party on some of its subsystems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOp {
    pub party: Party,
    /// Subsystem indices; the operator's tensor factors follow this order.
    pub targets: Vec<usize>,
    #[serde(with = "encoding::matrix")]
    pub matrix: CMat,
}

impl LocalOp {
    pub fn new(party: Party, targets: Vec<usize>, matrix: CMat) -> LocalOp {
        LocalOp {
            party,
            targets,
            matrix,
        }
    }

    pub fn transpose(&self) -> LocalOp {
        LocalOp::new(self.party, self.targets.clone(), self.matrix.transpose())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    /// Local operations, performed in list order.
    Local(Vec<LocalOp>),
    /// One application of the script's gate on the two gate qubits.
    Gate,
}

/// The serializable content of a script.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptSpec {
    pub name: String,
    pub gate: GateSource,
    pub layout: SubsystemLayout,
    /// Bits Alice sends to Bob.
    pub n_a: usize,
    /// Bits Bob sends to Alice.
    pub n_b: usize,
    /// Joint state of every non-message subsystem, in layout order.
    #[serde(with = "encoding::vector")]
    pub initial_ancilla: CVec,
    pub steps: Vec<Step>,
}

/// A validated script. Alice's message register starts in `|x>` and should
/// end in `|y>`; Bob's starts in `|y>` and should end in `|x>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScriptSpec", into = "ScriptSpec")]
pub struct ProtocolScript {
    spec: ScriptSpec,
    gate: Gate,
    message_a: usize,
    message_b: usize,
    ancilla: Vec<usize>,
}

impl TryFrom<ScriptSpec> for ProtocolScript {
    type Error = Error;
    fn try_from(spec: ScriptSpec) -> Result<Self> {
        ProtocolScript::new(spec)
    }
}

impl From<ProtocolScript> for ScriptSpec {
    fn from(s: ProtocolScript) -> Self {
        s.spec
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidScript(msg.into())
}

impl ProtocolScript {
    pub fn new(spec: ScriptSpec) -> Result<ProtocolScript> {
        let gate = spec.gate.resolve()?;
        let layout = &spec.layout;
        layout.gate_qubits()?;
        let message = |party: Party| -> Result<usize> {
            match layout.role_indices(party, Role::Message).as_slice() {
                [k] => Ok(*k),
                found => Err(invalid(format!(
                    "expected one {party:?} message register, found {}",
                    found.len()
                ))),
            }
        };
        let message_a = message(Party::Alice)?;
        let message_b = message(Party::Bob)?;
        if spec.n_a > MAX_MESSAGE_BITS || spec.n_b > MAX_MESSAGE_BITS {
            return Err(invalid("message sizes above 12 bits are not supported"));
        }
        let needed = 1usize << spec.n_a.max(spec.n_b);
        for k in [message_a, message_b] {
            let dim = layout.subsystems()[k].dim;
            if dim < needed {
                return Err(invalid(format!(
                    "message register {k} has dimension {dim}, needs {needed}"
                )));
            }
        }
        let ancilla: Vec<usize> = (0..layout.len())
            .filter(|&k| k != message_a && k != message_b)
            .collect();
        let ancilla_dim = layout.dim_of(&ancilla);
        if spec.initial_ancilla.len() != ancilla_dim {
            return Err(invalid(format!(
                "initial ancilla has {} amplitudes, expected {ancilla_dim}",
                spec.initial_ancilla.len()
            )));
        }
        let norm = spec.initial_ancilla.norm();
        if (norm - 1.0).abs() > SCRIPT_NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        if spec.steps.len() % 2 == 0 {
            return Err(invalid(format!(
                "a script needs 2t+1 steps, got {}",
                spec.steps.len()
            )));
        }
        for (k, step) in spec.steps.iter().enumerate() {
            match (k % 2, step) {
                (0, Step::Local(ops)) => {
                    for op in ops {
                        check_op(layout, op).map_err(|e| invalid(format!("step {k}: {e}")))?;
                    }
                }
                (1, Step::Gate) => {}
                (0, Step::Gate) => return Err(invalid(format!("step {k} should be local"))),
                _ => return Err(invalid(format!("step {k} should be a gate application"))),
            }
        }
        Ok(ProtocolScript {
            spec,
            gate,
            message_a,
            message_b,
            ancilla,
        })
    }

    pub fn from_json(text: &str) -> Result<ProtocolScript> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ProtocolScript> {
        ProtocolScript::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn spec(&self) -> &ScriptSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.spec.layout
    }

    pub fn n_a(&self) -> usize {
        self.spec.n_a
    }

    pub fn n_b(&self) -> usize {
        self.spec.n_b
    }

    /// Larger of the two message sizes.
    pub fn n(&self) -> usize {
        self.spec.n_a.max(self.spec.n_b)
    }

    /// Number of gate applications.
    pub fn t(&self) -> usize {
        self.spec.steps.len() / 2
    }

    pub fn steps(&self) -> &[Step] {
        &self.spec.steps
    }

    /// `(A1, B1)` subsystem indices.
    pub fn message_registers(&self) -> (usize, usize) {
        (self.message_a, self.message_b)
    }

    /// Every subsystem other than the two message registers.
    pub fn ancilla_indices(&self) -> &[usize] {
        &self.ancilla
    }

    /// Ancilla subsystems owned by `party`.
    pub fn ancilla_of(&self, party: Party) -> Vec<usize> {
        self.ancilla
            .iter()
            .copied()
            .filter(|&k| self.layout().subsystems()[k].party == party)
            .collect()
    }

    pub fn ancilla_state(&self) -> Result<PartitionedState> {
        PartitionedState::normalized(
            self.spec.initial_ancilla.clone(),
            self.layout().restrict(&self.ancilla)?,
        )
    }

    /// True when the initial ancilla carries entanglement across the cut.
    pub fn is_assisted(&self) -> Result<bool> {
        Ok(crate::qmath::entanglement_entropy(&self.ancilla_state()?) > 1e-12)
    }

    /// All `(x, y)` message pairs, `x` major.
    pub fn messages(&self) -> Vec<(usize, usize)> {
        let (na, nb) = (1usize << self.spec.n_a, 1usize << self.spec.n_b);
        (0..na).flat_map(|x| (0..nb).map(move |y| (x, y))).collect()
    }

    fn check_message(&self, x: usize, y: usize) -> Result<()> {
        if x >> self.spec.n_a != 0 || y >> self.spec.n_b != 0 {
            return Err(Error::OutOfRange(format!(
                "messages ({x}, {y}) exceed ({}, {}) bits",
                self.spec.n_a, self.spec.n_b
            )));
        }
        Ok(())
    }

    /// `|x>_{A1} |y>_{B1} |psi>` before any step.
    pub fn initial_state(&self, x: usize, y: usize) -> Result<PartitionedState> {
        self.check_message(x, y)?;
        let amps = embed(
            self.layout(),
            &[(self.message_a, x), (self.message_b, y)],
            &self.ancilla,
            &self.spec.initial_ancilla,
        );
        PartitionedState::normalized(amps, self.layout().clone())
    }

    /// The final state for messages `(x, y)`.
    pub fn run(&self, x: usize, y: usize) -> Result<PartitionedState> {
        let mut state = self.initial_state(x, y)?;
        self.evolve(&mut state)?;
        Ok(state)
    }

    /// Applies every step to `state` (which must use this script's layout).
    pub fn evolve(&self, state: &mut PartitionedState) -> Result<()> {
        if state.layout() != self.layout() {
            return Err(Error::Layout("state does not use the script layout".into()));
        }
        let (ga, gb) = self.layout().gate_qubits()?;
        for step in &self.spec.steps {
            match step {
                Step::Local(ops) => {
                    for op in ops {
                        state.apply_in_place(&op.targets, &op.matrix)?;
                    }
                }
                Step::Gate => state.apply_in_place(&[ga, gb], self.gate.matrix())?,
            }
        }
        Ok(())
    }

    /// Final states for every message pair, computed in parallel.
    pub fn run_all(&self) -> Result<Vec<((usize, usize), PartitionedState)>> {
        self.messages()
            .into_par_iter()
            .map(|(x, y)| self.run(x, y).map(|s| ((x, y), s)))
            .collect()
    }

    /// The same script with `op` appended to local step `step`.
    pub fn with_local_op(&self, step: usize, op: LocalOp) -> Result<ProtocolScript> {
        let mut spec = self.spec.clone();
        match spec.steps.get_mut(step) {
            Some(Step::Local(ops)) => ops.push(op),
            _ => return Err(invalid(format!("step {step} is not a local step"))),
        }
        ProtocolScript::new(spec)
    }

    /// The script with every step inverted and listed in reverse order.
    pub fn inverse_steps(&self) -> Result<ProtocolScript> {
        let mut spec = self.spec.clone();
        spec.name = format!("{} (inverse)", spec.name);
        spec.gate = GateSource::Matrix(self.gate.matrix().adjoint());
        spec.steps = self
            .spec
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Gate => Step::Gate,
                Step::Local(ops) => Step::Local(
                    ops.iter()
                        .rev()
                        .map(|op| LocalOp::new(op.party, op.targets.clone(), op.matrix.adjoint()))
                        .collect(),
                ),
            })
            .collect();
        ProtocolScript::new(spec)
    }

    /// Rewrites the script around the canonical gate `U_d` of its gate,
    /// absorbing the local factors into the neighbouring local steps. The
    /// final states change only by a global phase.
    pub fn canonicalized(&self) -> Result<ProtocolScript> {
        let form = canonical::decompose(&self.gate)?;
        let mut s = self.with_equivalent_gate(&GateSource::Alphas(form.alphas))?;
        s.spec.name = format!("{} (canonical)", self.spec.name);
        Ok(s)
    }

    /// Rewrites the script to use `source`, which must be locally equivalent
    /// to the current gate. Final states change only by a global phase.
    pub fn with_equivalent_gate(&self, source: &GateSource) -> Result<ProtocolScript> {
        let target = source.resolve()?;
        let have = canonical::decompose(&self.gate)?;
        let want = canonical::decompose(&target)?;
        let gap = have
            .alphas
            .iter()
            .zip(&want.alphas)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > EQUIVALENCE_TOL {
            return Err(invalid(format!(
                "gates are not locally equivalent: alphas {:?} vs {:?}",
                have.alphas, want.alphas
            )));
        }
        // old = post_h U_d pre_h and new = post_w U_d pre_w (up to phases), so
        // old = (post_h post_w^dagger) new (pre_w^dagger pre_h).
        let before = (
            want.pre_local.0.adjoint() * &have.pre_local.0,
            want.pre_local.1.adjoint() * &have.pre_local.1,
        );
        let after = (
            &have.post_local.0 * want.post_local.0.adjoint(),
            &have.post_local.1 * want.post_local.1.adjoint(),
        );
        let (ga, gb) = self.layout().gate_qubits()?;
        let mut spec = self.spec.clone();
        spec.gate = source.clone();
        for k in (1..spec.steps.len()).step_by(2) {
            if let Step::Local(ops) = &mut spec.steps[k - 1] {
                ops.push(LocalOp::new(Party::Alice, vec![ga], before.0.clone()));
                ops.push(LocalOp::new(Party::Bob, vec![gb], before.1.clone()));
            }
            if let Step::Local(ops) = &mut spec.steps[k + 1] {
                ops.insert(0, LocalOp::new(Party::Alice, vec![ga], after.0.clone()));
                ops.insert(1, LocalOp::new(Party::Bob, vec![gb], after.1.clone()));
            }
        }
        ProtocolScript::new(spec)
    }
}

fn check_op(layout: &SubsystemLayout, op: &LocalOp) -> Result<()> {
    if op.targets.is_empty() {
        return Err(invalid("operation without targets"));
    }
    let mut seen = vec![false; layout.len()];
    for &k in &op.targets {
        let Some(s) = layout.get(k) else {
            return Err(invalid(format!("target {k} out of range")));
        };
        if seen[k] {
            return Err(invalid(format!("target {k} repeated")));
        }
        seen[k] = true;
        if s.party != op.party {
            return Err(invalid(format!(
                "{:?} operation targets subsystem {k} owned by {:?}",
                op.party, s.party
            )));
        }
    }
    let dim = layout.dim_of(&op.targets);
    if op.matrix.nrows() != dim || op.matrix.ncols() != dim {
        return Err(Error::Dimension(format!(
            "operator is {}x{} but targets span dimension {dim}",
            op.matrix.nrows(),
            op.matrix.ncols()
        )));
    }
    linalg::ensure_unitary(&op.matrix, SCRIPT_UNITARY_TOL)
}

/// Full amplitude vector with basis digits fixed on some subsystems and
/// `amps` spread (row-major, in `free` order) over the others.
pub(crate) fn embed(
    layout: &SubsystemLayout,
    fixed: &[(usize, usize)],
    free: &[usize],
    amps: &CVec,
) -> CVec {
    let dims = layout.dims();
    let strides = linalg::strides(&dims);
    let base: usize = fixed.iter().map(|&(k, d)| d * strides[k]).sum();
    let mut out = CVec::from_element(layout.total_dim(), C0);
    for (j, &a) in amps.iter().enumerate() {
        let mut rem = j;
        let mut index = base;
        for &k in free.iter().rev() {
            index += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        out[index] = a;
    }
    out
}

/// The block of `state` with the given subsystems fixed to basis digits,
/// as a vector over the remaining subsystems (in `free` order).
pub(crate) fn project(state: &PartitionedState, fixed: &[(usize, usize)], free: &[usize]) -> CVec {
    let dims = state.layout().dims();
    let strides = linalg::strides(&dims);
    let base: usize = fixed.iter().map(|&(k, d)| d * strides[k]).sum();
    let n: usize = free.iter().map(|&k| dims[k]).product();
    let amps = state.amplitudes();
    CVec::from_iterator(
        n,
        (0..n).map(|j| {
            let mut rem = j;
            let mut index = base;
            for &k in free.iter().rev() {
                index += (rem % dims[k]) * strides[k];
                rem /= dims[k];
            }
            amps[index]
        }),
    )
}
