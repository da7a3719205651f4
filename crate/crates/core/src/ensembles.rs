//! Holevo information and the Pauli-coding ensembles built on canonical
//! gates: one-way ensembles `{1/4, s_i s_i |psi>}`, the 16-member
//! bidirectional ensemble, its upper/lower communication bounds, and the
//! product-state ensemble with the same marginals.

use serde::{Deserialize, Serialize};

use crate::canonical::{decompose, Gate};
use crate::capacity::{disentangling_capability, CapacitySearchConfig};
use crate::error::{Error, Result};
use crate::qmath::linalg::{self, CMat};
use crate::qmath::{
    von_neumann_entropy, DensityOperator, PartitionedState, Party, QuantumState, SubsystemLayout,
};

/// Tolerance on probability normalization.
pub const PROB_TOL: f64 = 1e-12;

/// Which way classical information flows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flow {
    /// Alice encodes, Bob's marginal carries the message.
    AliceToBob,
    /// Bob encodes, Alice's marginal carries the message.
    BobToAlice,
}

impl Flow {
    /// The party whose marginal is read out.
    pub fn receiver(self) -> Party {
        match self {
            Flow::AliceToBob => Party::Bob,
            Flow::BobToAlice => Party::Alice,
        }
    }
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidEnsemble(format!("{what}: no probabilities")));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::InvalidEnsemble(format!(
            "{what}: negative probability {p}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidEnsemble(format!(
            "{what}: probabilities sum to {total}"
        )));
    }
    Ok(())
}

fn entropy_of(s: &QuantumState) -> f64 {
    match s {
        QuantumState::Pure(_) => 0.0,
        QuantumState::Mixed(m) => von_neumann_entropy(m),
    }
}

fn apply_gate(s: &QuantumState, gate: &Gate) -> Result<QuantumState> {
    let (a, b) = s.layout().gate_qubits()?;
    s.apply(&[a, b], gate.matrix())
}

/// `S(sum p rho) - sum p S(rho)`.
fn chi_of(probs: &[f64], members: &[DensityOperator]) -> Result<f64> {
    let avg = DensityOperator::mixture(probs, members)?;
    let mean: f64 = probs
        .iter()
        .zip(members)
        .map(|(p, m)| p * von_neumann_entropy(m))
        .sum();
    Ok((von_neumann_entropy(&avg) - mean).max(0.0))
}

/// `{p_i, rho_i}` with members kept pure where possible.
#[derive(Clone, Debug)]
pub struct Ensemble {
    probs: Vec<f64>,
    members: Vec<QuantumState>,
}

impl Ensemble {
    pub fn new(probs: Vec<f64>, members: Vec<QuantumState>) -> Result<Ensemble> {
        check_probs(&probs, "ensemble")?;
        if probs.len() != members.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} probabilities for {} members",
                probs.len(),
                members.len()
            )));
        }
        let layout = members[0].layout();
        if members.iter().any(|m| m.layout() != layout) {
            return Err(Error::InvalidEnsemble(
                "members do not share a layout".into(),
            ));
        }
        Ok(Ensemble { probs, members })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn members(&self) -> &[QuantumState] {
        &self.members
    }

    pub fn layout(&self) -> &SubsystemLayout {
        self.members[0].layout()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<Ensemble> {
        let members = self
            .members
            .iter()
            .map(|m| apply_gate(m, gate))
            .collect::<Result<_>>()?;
        Ok(Ensemble {
            probs: self.probs.clone(),
            members,
        })
    }

    /// Each member reduced to `party`'s subsystems.
    pub fn marginal(&self, party: Party) -> Result<Ensemble> {
        let members = self
            .members
            .iter()
            .map(|m| m.marginal(party).map(QuantumState::Mixed))
            .collect::<Result<_>>()?;
        Ok(Ensemble {
            probs: self.probs.clone(),
            members,
        })
    }

    pub fn average(&self) -> Result<DensityOperator> {
        let dens: Vec<DensityOperator> = self.members.iter().map(|m| m.density()).collect();
        DensityOperator::mixture(&self.probs, &dens)
    }
}

/// Holevo information of an ensemble, in bits.
pub fn holevo_chi(e: &Ensemble) -> Result<f64> {
    let avg = e.average()?;
    let mean: f64 = e
        .probs
        .iter()
        .zip(&e.members)
        .map(|(p, m)| p * entropy_of(m))
        .sum();
    Ok((von_neumann_entropy(&avg) - mean).max(0.0))
}

/// `s_k` on both gate qubits, as a 4x4 operator.
pub fn pauli_pair(k: usize) -> CMat {
    linalg::kron(&linalg::pauli(k), &linalg::pauli(k))
}

/// `{1/4, s_i^(2) s_i^(3) |psi>}` for `i = 0..3`.
pub fn build_unidirectional_ensemble(psi: &PartitionedState) -> Result<Ensemble> {
    psi.layout().gate_qubits()?;
    let members = (0..4)
        .map(|i| psi.apply_two_qubit(&pauli_pair(i)).map(QuantumState::Pure))
        .collect::<Result<_>>()?;
    Ensemble::new(vec![0.25; 4], members)
}

/// Tensor product of operators on disjoint index sets, rearranged into
/// ascending layout order.
fn tensor_in_layout_order(parts: Vec<(Vec<usize>, DensityOperator)>) -> Result<DensityOperator> {
    let mut order: Vec<usize> = Vec::new();
    let mut acc: Option<DensityOperator> = None;
    for (idx, op) in parts {
        order.extend(idx);
        acc = Some(match acc {
            None => op,
            Some(a) => a.tensor(&op),
        });
    }
    let acc = acc.ok_or_else(|| Error::InvalidEnsemble("no factors".into()))?;
    let mut perm: Vec<usize> = (0..order.len()).collect();
    perm.sort_by_key(|&k| order[k]);
    acc.reorder(&perm)
}

/// Largest entry of `sum_i 1/4 Tr_A(V_i psi) - 1/2 I (x) rho^(4)`.
pub fn depolarization_residual(psi: &PartitionedState) -> Result<f64> {
    let e = build_unidirectional_ensemble(psi)?;
    let lhs = e.marginal(Party::Bob)?.average()?;
    let layout = psi.layout();
    let bob_gate = layout.gate_qubit(Party::Bob)?;
    let rest = layout
        .indices_where(|s| s.party == Party::Bob)
        .into_iter()
        .filter(|&k| k != bob_gate)
        .collect::<Vec<_>>();
    let half = DensityOperator::maximally_mixed(layout.restrict(&[bob_gate])?);
    let mut parts = vec![(vec![bob_gate], half)];
    if !rest.is_empty() {
        parts.push((rest.clone(), psi.partial_trace(&rest)?));
    }
    let rhs = tensor_in_layout_order(parts)?;
    Ok(linalg::max_abs_diff(lhs.matrix(), rhs.matrix()))
}

/// `chi(Tr_side U E) - chi(Tr_side E)`.
pub fn delta_chi_oneway(gate: &Gate, e: &Ensemble, flow: Flow) -> Result<f64> {
    let before = holevo_chi(&e.marginal(flow.receiver())?)?;
    let after = holevo_chi(&e.apply_gate(gate)?.marginal(flow.receiver())?)?;
    Ok(after - before)
}

/// `{p_i, q_j, psi_ij}` with Alice choosing `i` and Bob choosing `j`.
#[derive(Clone, Debug)]
pub struct BidirEnsemble {
    probs_a: Vec<f64>,
    probs_b: Vec<f64>,
    /// Row `i`, column `j`.
    members: Vec<Vec<QuantumState>>,
}

impl BidirEnsemble {
    pub fn new(
        probs_a: Vec<f64>,
        probs_b: Vec<f64>,
        members: Vec<Vec<QuantumState>>,
    ) -> Result<Self> {
        check_probs(&probs_a, "Alice's probabilities")?;
        check_probs(&probs_b, "Bob's probabilities")?;
        if members.len() != probs_a.len() || members.iter().any(|r| r.len() != probs_b.len()) {
            return Err(Error::InvalidEnsemble(format!(
                "member grid must be {}x{}",
                probs_a.len(),
                probs_b.len()
            )));
        }
        let layout = members[0][0].layout();
        if members.iter().flatten().any(|m| m.layout() != layout) {
            return Err(Error::InvalidEnsemble(
                "members do not share a layout".into(),
            ));
        }
        Ok(BidirEnsemble {
            probs_a,
            probs_b,
            members,
        })
    }

    pub fn probs_a(&self) -> &[f64] {
        &self.probs_a
    }

    pub fn probs_b(&self) -> &[f64] {
        &self.probs_b
    }

    pub fn member(&self, i: usize, j: usize) -> &QuantumState {
        &self.members[i][j]
    }

    pub fn layout(&self) -> &SubsystemLayout {
        self.members[0][0].layout()
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<BidirEnsemble> {
        let members = self
            .members
            .iter()
            .map(|row| {
                row.iter()
                    .map(|m| apply_gate(m, gate))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(BidirEnsemble {
            probs_a: self.probs_a.clone(),
            probs_b: self.probs_b.clone(),
            members,
        })
    }

    /// `rho_ij` on `party`'s subsystems.
    pub fn marginals(&self, party: Party) -> Result<Vec<Vec<DensityOperator>>> {
        self.members
            .iter()
            .map(|row| row.iter().map(|m| m.marginal(party)).collect())
            .collect()
    }
}

/// The 16 states `s_i^(2) s_i^(3) s_j^(2) s_j^(3) |psi>`, `p_i = q_j = 1/4`.
pub fn build_bidirectional_ensemble(psi: &PartitionedState) -> Result<BidirEnsemble> {
    psi.layout().gate_qubits()?;
    let mut members = Vec::with_capacity(4);
    for i in 0..4 {
        let mut row = Vec::with_capacity(4);
        for j in 0..4 {
            let op = pauli_pair(i) * pauli_pair(j);
            row.push(QuantumState::Pure(psi.apply_two_qubit(&op)?));
        }
        members.push(row);
    }
    BidirEnsemble::new(vec![0.25; 4], vec![0.25; 4], members)
}

/// Per-index unitary corrections applied by each receiver to its own
/// marginal: `alice[i]` acts on Alice's subsystems, `bob[j]` on Bob's.
#[derive(Clone, Debug)]
pub struct CorrectionMaps {
    pub alice: Vec<CMat>,
    pub bob: Vec<CMat>,
}

/// `op` on subsystem `pos` of a party whose subsystems have `dims`.
fn embed(dims: &[usize], pos: usize, op: &CMat) -> CMat {
    let mut acc = linalg::identity(1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == pos {
            op.clone()
        } else {
            linalg::identity(d)
        };
        acc = linalg::kron(&acc, &factor);
    }
    acc
}

impl CorrectionMaps {
    pub fn new(alice: Vec<CMat>, bob: Vec<CMat>) -> Result<CorrectionMaps> {
        for m in alice.iter().chain(&bob) {
            linalg::ensure_unitary(m, 1e-10)?;
        }
        Ok(CorrectionMaps { alice, bob })
    }

    /// `T_i^A = s_i` on Alice's gate qubit and `T_j^B = s_j` on Bob's.
    pub fn pauli(layout: &SubsystemLayout) -> Result<CorrectionMaps> {
        let side = |party: Party| -> Result<Vec<CMat>> {
            let idx = layout.party_indices(party);
            let gate = layout.gate_qubit(party)?;
            let pos = idx
                .iter()
                .position(|&k| k == gate)
                .expect("gate qubit belongs to party");
            let dims: Vec<usize> = idx.iter().map(|&k| layout.subsystems()[k].dim).collect();
            Ok((0..4)
                .map(|k| embed(&dims, pos, &linalg::pauli(k)))
                .collect())
        };
        Ok(CorrectionMaps {
            alice: side(Party::Alice)?,
            bob: side(Party::Bob)?,
        })
    }

    /// No correction, for `n_a` Alice messages and `n_b` Bob messages.
    pub fn identity(layout: &SubsystemLayout, n_a: usize, n_b: usize) -> CorrectionMaps {
        let da = layout.dim_of(&layout.party_indices(Party::Alice));
        let db = layout.dim_of(&layout.party_indices(Party::Bob));
        CorrectionMaps {
            alice: vec![linalg::identity(da); n_a],
            bob: vec![linalg::identity(db); n_b],
        }
    }
}

/// Upper bound where the sender knows the other party's message.
pub fn chi_up(e: &BidirEnsemble, flow: Flow) -> Result<f64> {
    let rho = e.marginals(flow.receiver())?;
    let mut total = 0.0;
    match flow {
        Flow::AliceToBob => {
            for (j, &q) in e.probs_b.iter().enumerate() {
                let column: Vec<DensityOperator> = rho.iter().map(|row| row[j].clone()).collect();
                total += q * chi_of(&e.probs_a, &column)?;
            }
        }
        Flow::BobToAlice => {
            for (i, &p) in e.probs_a.iter().enumerate() {
                total += p * chi_of(&e.probs_b, &rho[i])?;
            }
        }
    }
    Ok(total)
}

/// Lower bound with the receiver undoing the other index through `maps`.
pub fn chi_lo(e: &BidirEnsemble, maps: &CorrectionMaps, flow: Flow) -> Result<f64> {
    let rho = e.marginals(flow.receiver())?;
    let conj = |m: &DensityOperator, t: &CMat| -> DensityOperator {
        let out = t * m.matrix() * t.adjoint();
        DensityOperator::new(out, m.layout().clone()).unwrap_or_else(|_| m.clone())
    };
    match flow {
        Flow::AliceToBob => {
            if maps.bob.len() != e.probs_b.len() {
                return Err(Error::InvalidEnsemble(
                    "need one Bob correction per j".into(),
                ));
            }
            let averaged = (0..e.probs_a.len())
                .map(|i| {
                    let terms: Vec<DensityOperator> = (0..e.probs_b.len())
                        .map(|j| conj(&rho[i][j], &maps.bob[j]))
                        .collect();
                    DensityOperator::mixture(&e.probs_b, &terms)
                })
                .collect::<Result<Vec<_>>>()?;
            chi_of(&e.probs_a, &averaged)
        }
        Flow::BobToAlice => {
            if maps.alice.len() != e.probs_a.len() {
                return Err(Error::InvalidEnsemble(
                    "need one Alice correction per i".into(),
                ));
            }
            let averaged = (0..e.probs_b.len())
                .map(|j| {
                    let terms: Vec<DensityOperator> = (0..e.probs_a.len())
                        .map(|i| conj(&rho[i][j], &maps.alice[i]))
                        .collect();
                    DensityOperator::mixture(&e.probs_a, &terms)
                })
                .collect::<Result<Vec<_>>>()?;
            chi_of(&e.probs_b, &averaged)
        }
    }
}

/// Both bounds in both directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiBounds {
    pub lo_forward: f64,
    pub up_forward: f64,
    pub lo_backward: f64,
    pub up_backward: f64,
}

/// Window within which lower and upper bounds count as equal.
pub const COINCIDE_TOL: f64 = 1e-10;

impl ChiBounds {
    pub fn of(e: &BidirEnsemble, maps: &CorrectionMaps) -> Result<ChiBounds> {
        Ok(ChiBounds {
            lo_forward: chi_lo(e, maps, Flow::AliceToBob)?,
            up_forward: chi_up(e, Flow::AliceToBob)?,
            lo_backward: chi_lo(e, maps, Flow::BobToAlice)?,
            up_backward: chi_up(e, Flow::BobToAlice)?,
        })
    }

    pub fn coincide(&self) -> bool {
        (self.up_forward - self.lo_forward).abs() <= COINCIDE_TOL
            && (self.up_backward - self.lo_backward).abs() <= COINCIDE_TOL
    }

    pub fn total_up(&self) -> f64 {
        self.up_forward + self.up_backward
    }

    pub fn total_lo(&self) -> f64 {
        self.lo_forward + self.lo_backward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BidirDelta {
    /// Increase in total two-way communication.
    pub value: f64,
    pub before: ChiBounds,
    pub after: ChiBounds,
    /// True when lower and upper bounds agree before and after, which is
    /// what makes `value` exact.
    pub coincide: bool,
}

pub fn delta_chi_bidir(
    gate: &Gate,
    e: &BidirEnsemble,
    maps: &CorrectionMaps,
) -> Result<BidirDelta> {
    let before = ChiBounds::of(e, maps)?;
    let after = ChiBounds::of(&e.apply_gate(gate)?, maps)?;
    Ok(BidirDelta {
        value: after.total_up() - before.total_up(),
        before,
        after,
        coincide: before.coincide() && after.coincide(),
    })
}

/// Product members `s_i s_j Tr_B(phi) s_j s_i (x) s_i s_j Tr_A(phi) s_j s_i`
/// with the Paulis on each party's gate qubit.
pub fn appendix_b_ensemble(phi: &PartitionedState) -> Result<BidirEnsemble> {
    let layout = phi.layout();
    let alice = layout.party_indices(Party::Alice);
    let bob = layout.party_indices(Party::Bob);
    if alice.is_empty() || bob.is_empty() {
        return Err(Error::Layout("both parties need subsystems".into()));
    }
    let maps = CorrectionMaps::pauli(layout)?;
    let rho_a = phi.partial_trace(&alice)?;
    let rho_b = phi.partial_trace(&bob)?;
    let mut members = Vec::with_capacity(4);
    for i in 0..4 {
        let mut row = Vec::with_capacity(4);
        for j in 0..4 {
            let ua = &maps.alice[i] * &maps.alice[j];
            let ub = &maps.bob[i] * &maps.bob[j];
            let a =
                DensityOperator::new(&ua * rho_a.matrix() * ua.adjoint(), rho_a.layout().clone())?;
            let b =
                DensityOperator::new(&ub * rho_b.matrix() * ub.adjoint(), rho_b.layout().clone())?;
            let prod = tensor_in_layout_order(vec![(alice.clone(), a), (bob.clone(), b)])?;
            row.push(QuantumState::Mixed(prod));
        }
        members.push(row);
    }
    BidirEnsemble::new(vec![0.25; 4], vec![0.25; 4], members)
}

/// `psi_00 = psi_01 = psi_10 = |00>`, `psi_11 = |11>`, `p = q = (1/2, 1/2)`.
pub fn counterexample_ensemble() -> BidirEnsemble {
    let layout = SubsystemLayout::two_qubit();
    let basis = |d: &[usize]| {
        QuantumState::Pure(PartitionedState::basis(layout.clone(), d).expect("valid basis digits"))
    };
    let members = vec![
        vec![basis(&[0, 0]), basis(&[0, 0])],
        vec![basis(&[0, 0]), basis(&[1, 1])],
    ];
    BidirEnsemble::new(vec![0.5, 0.5], vec![0.5, 0.5], members).expect("well-formed ensemble")
}

/// Source state for the Pauli constructions: the maximal-decrease state of
/// the canonical gate locally equivalent to `gate`.
#[derive(Clone, Debug)]
pub struct CanonicalSource {
    pub ud: Gate,
    pub state: PartitionedState,
    /// `E(psi) - E(U_d psi)`.
    pub decrease: f64,
    pub converged: bool,
}

pub fn canonical_source(gate: &Gate, config: &CapacitySearchConfig) -> Result<CanonicalSource> {
    let ud = decompose(gate)?.ud();
    let report = disentangling_capability(&ud, config)?;
    Ok(CanonicalSource {
        ud,
        state: report.best_state,
        decrease: report.value,
        converged: report.converged,
    })
}
