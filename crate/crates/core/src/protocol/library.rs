//! Hand-built scripts shipped with the crate.

use num_complex::Complex64;

use super::{LocalOp, ProtocolScript, ScriptSpec, Step};
use crate::canonical::GateSource;
use crate::error::Result;
use crate::qmath::linalg::{self, c, CMat, CVec, C0, C1};
use crate::qmath::{Party, Role, Subsystem, SubsystemLayout};

fn hadamard() -> CMat {
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMat::from_row_slice(2, 2, &[s, s, s, -s])
}

fn cz() -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(&[C1, C1, C1, -C1]))
}

/// `sum_x |x><x| (x) X^{x_0} Z^{x_1}` on (4-level register, qubit).
fn dense_encoder() -> CMat {
    let mut m = CMat::zeros(8, 8);
    for x in 0..4 {
        let flip = if x & 1 == 1 {
            linalg::pauli(1)
        } else {
            linalg::identity(2)
        };
        let phase = if x >> 1 == 1 {
            linalg::pauli(3)
        } else {
            linalg::identity(2)
        };
        let p = flip * phase;
        m.view_mut((2 * x, 2 * x), (2, 2)).copy_from(&p);
    }
    m
}

/// Bell-basis decoder `(H (x) I) CNOT` on (encoded qubit, partner).
fn bell_decoder() -> CMat {
    linalg::kron(&hadamard(), &linalg::identity(2)) * linalg::copy_permutation(2, 2)
}

/// `|0...0>` on `dim` levels.
fn zero_state(dim: usize) -> CVec {
    let mut v = CVec::from_element(dim, C0);
    v[0] = C1;
    v
}

/// `(|00> + |11>)/sqrt(2)`.
fn bell_pair() -> CVec {
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CVec::from_column_slice(&[s, C0, C0, s])
}

/// `[A1, Ag, Bg, B1]` with message registers of `message_dim` levels.
fn four_register_layout(message_dim: usize) -> SubsystemLayout {
    SubsystemLayout::new(vec![
        Subsystem::new(message_dim, Party::Alice, Role::Message),
        Subsystem::new(2, Party::Alice, Role::GateQubit),
        Subsystem::new(2, Party::Bob, Role::GateQubit),
        Subsystem::new(message_dim, Party::Bob, Role::Message),
    ])
    .expect("fixed layout")
}

const A1: usize = 0;
const AG: usize = 1;
const BG: usize = 2;
const B1: usize = 3;

fn op(party: Party, targets: &[usize], m: CMat) -> LocalOp {
    LocalOp::new(party, targets.to_vec(), m)
}

/// One bit from Alice to Bob: Alice swaps her bit onto the gate qubit, the
/// CNOT copies it onto Bob's blank gate qubit, Bob swaps it into his register.
pub fn cnot_forward() -> Result<ProtocolScript> {
    ProtocolScript::new(ScriptSpec {
        name: "cnot-forward".into(),
        gate: GateSource::Named("cnot".into()),
        layout: four_register_layout(2),
        n_a: 1,
        n_b: 0,
        initial_ancilla: zero_state(4),
        steps: vec![
            Step::Local(vec![op(Party::Alice, &[A1, AG], linalg::swap_registers(2))]),
            Step::Gate,
            Step::Local(vec![op(Party::Bob, &[BG, B1], linalg::swap_registers(2))]),
        ],
    })
}

/// One bit each way through a single SWAP.
pub fn swap_exchange() -> Result<ProtocolScript> {
    let swaps = || {
        Step::Local(vec![
            op(Party::Alice, &[A1, AG], linalg::swap_registers(2)),
            op(Party::Bob, &[B1, BG], linalg::swap_registers(2)),
        ])
    };
    ProtocolScript::new(ScriptSpec {
        name: "swap-exchange".into(),
        gate: GateSource::Named("swap".into()),
        layout: four_register_layout(2),
        n_a: 1,
        n_b: 1,
        initial_ancilla: zero_state(4),
        steps: vec![swaps(), Step::Gate, swaps()],
    })
}

/// One bit each way through a single CNOT, consuming one shared ebit on the
/// gate qubits. Alice flips her half with `x`, Bob phases his with `y`;
/// after the CNOT Bob's qubit holds `x` and a Hadamard turns Alice's into `y`.
pub fn cnot_assisted() -> Result<ProtocolScript> {
    ProtocolScript::new(ScriptSpec {
        name: "cnot-assisted".into(),
        gate: GateSource::Named("cnot".into()),
        layout: four_register_layout(2),
        n_a: 1,
        n_b: 1,
        initial_ancilla: bell_pair(),
        steps: vec![
            Step::Local(vec![
                op(Party::Alice, &[A1, AG], linalg::copy_permutation(2, 2)),
                op(Party::Bob, &[B1, BG], cz()),
            ]),
            Step::Gate,
            Step::Local(vec![
                op(Party::Alice, &[AG], hadamard()),
                op(Party::Alice, &[A1, AG], linalg::swap_registers(2)),
                op(Party::Bob, &[BG, B1], linalg::swap_registers(2)),
            ]),
        ],
    })
}

/// Two bits each way through a single SWAP by superdense coding. Each gate
/// qubit starts maximally entangled with the other party's spare qubit.
pub fn swap_assisted() -> Result<ProtocolScript> {
    // [A1, Aanc, Ag, Bg, Banc, B1]
    let layout = SubsystemLayout::new(vec![
        Subsystem::new(4, Party::Alice, Role::Message),
        Subsystem::new(2, Party::Alice, Role::Ancilla),
        Subsystem::new(2, Party::Alice, Role::GateQubit),
        Subsystem::new(2, Party::Bob, Role::GateQubit),
        Subsystem::new(2, Party::Bob, Role::Ancilla),
        Subsystem::new(4, Party::Bob, Role::Message),
    ])?;
    let (a1, aanc, ag, bg, banc, b1) = (0, 1, 2, 3, 4, 5);
    // Ancilla order is (Aanc, Ag, Bg, Banc): pairs Ag-Banc and Aanc-Bg.
    let half = Complex64::new(0.5, 0.0);
    let mut psi = CVec::from_element(16, C0);
    for p in 0..2 {
        for q in 0..2 {
            // Aanc = q, Ag = p, Bg = q, Banc = p
            psi[(q << 3) | (p << 2) | (q << 1) | p] = half;
        }
    }
    let swap4 = linalg::swap_registers(4);
    ProtocolScript::new(ScriptSpec {
        name: "swap-assisted".into(),
        gate: GateSource::Named("swap".into()),
        layout,
        n_a: 2,
        n_b: 2,
        initial_ancilla: psi,
        steps: vec![
            Step::Local(vec![
                op(Party::Alice, &[a1, ag], dense_encoder()),
                op(Party::Bob, &[b1, bg], dense_encoder()),
            ]),
            Step::Gate,
            Step::Local(vec![
                op(Party::Alice, &[ag, aanc], bell_decoder()),
                op(Party::Alice, &[a1, ag, aanc], swap4.clone()),
                op(Party::Bob, &[bg, banc], bell_decoder()),
                op(Party::Bob, &[b1, bg, banc], swap4),
            ]),
        ],
    })
}

/// The identity gate with empty local steps.
pub fn identity_script(n_a: usize, n_b: usize) -> Result<ProtocolScript> {
    ProtocolScript::new(ScriptSpec {
        name: "identity".into(),
        gate: GateSource::Named("identity".into()),
        layout: four_register_layout(1 << n_a.max(n_b).max(1)),
        n_a,
        n_b,
        initial_ancilla: zero_state(4),
        steps: vec![Step::Local(vec![]), Step::Gate, Step::Local(vec![])],
    })
}

/// The four scripts shipped as fixtures, in a fixed order.
pub fn shipped_scripts() -> Result<Vec<ProtocolScript>> {
    Ok(vec![
        cnot_forward()?,
        swap_exchange()?,
        cnot_assisted()?,
        swap_assisted()?,
    ])
}

/// The shipped fixture with this name.
pub fn by_name(name: &str) -> Result<ProtocolScript> {
    match name {
        "cnot-forward" => cnot_forward(),
        "swap-exchange" => swap_exchange(),
        "cnot-assisted" => cnot_assisted(),
        "swap-assisted" => swap_assisted(),
        other => Err(crate::Error::Parse(format!("unknown script {other:?}"))),
    }
}
