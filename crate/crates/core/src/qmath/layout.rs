use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Message,
    GateQubit,
    Ancilla,
    CopyRegister,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsystem {
    pub dim: usize,
    pub party: Party,
    pub role: Role,
}

impl Subsystem {
    pub fn new(dim: usize, party: Party, role: Role) -> Self {
        Subsystem { dim, party, role }
    }
}

/// Ordered list of tagged subsystems. Basis indices are row-major over this
/// list (first entry most significant).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subsystem>", into = "Vec<Subsystem>")]
pub struct SubsystemLayout {
    subsystems: Vec<Subsystem>,
}

impl TryFrom<Vec<Subsystem>> for SubsystemLayout {
    type Error = Error;
    fn try_from(v: Vec<Subsystem>) -> Result<Self> {
        SubsystemLayout::new(v)
    }
}

impl From<SubsystemLayout> for Vec<Subsystem> {
    fn from(l: SubsystemLayout) -> Self {
        l.subsystems
    }
}

impl SubsystemLayout {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::Layout("layout has no subsystems".into()));
        }
        if let Some(k) = subsystems.iter().position(|s| s.dim == 0) {
            return Err(Error::Layout(format!("subsystem {k} has dimension 0")));
        }
        Ok(SubsystemLayout { subsystems })
    }

    /// Two qubits, Alice's first, both tagged as gate qubits.
    pub fn two_qubit() -> Self {
        SubsystemLayout {
            subsystems: vec![
                Subsystem::new(2, Party::Alice, Role::GateQubit),
                Subsystem::new(2, Party::Bob, Role::GateQubit),
            ],
        }
    }

    /// `[Alice ancilla, Alice gate qubit, Bob gate qubit, Bob ancilla]`.
    pub fn ancilla_extended(dim_a: usize, dim_b: usize) -> Result<Self> {
        SubsystemLayout::new(vec![
            Subsystem::new(dim_a, Party::Alice, Role::Ancilla),
            Subsystem::new(2, Party::Alice, Role::GateQubit),
            Subsystem::new(2, Party::Bob, Role::GateQubit),
            Subsystem::new(dim_b, Party::Bob, Role::Ancilla),
        ])
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn get(&self, k: usize) -> Option<&Subsystem> {
        self.subsystems.get(k)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn dim_of(&self, indices: &[usize]) -> usize {
        indices.iter().map(|&k| self.subsystems[k].dim).product()
    }

    pub fn party_indices(&self, party: Party) -> Vec<usize> {
        self.indices_where(|s| s.party == party)
    }

    pub fn role_indices(&self, party: Party, role: Role) -> Vec<usize> {
        self.indices_where(|s| s.party == party && s.role == role)
    }

    pub fn indices_where(&self, pred: impl Fn(&Subsystem) -> bool) -> Vec<usize> {
        self.subsystems
            .iter()
            .enumerate()
            .filter(|(_, s)| pred(s))
            .map(|(k, _)| k)
            .collect()
    }

    /// Index of the single qubit of `party` that a two-qubit gate acts on.
    pub fn gate_qubit(&self, party: Party) -> Result<usize> {
        let found = self.role_indices(party, Role::GateQubit);
        match found.as_slice() {
            [k] if self.subsystems[*k].dim == 2 => Ok(*k),
            [k] => Err(Error::Layout(format!(
                "{party:?} gate qubit {k} has dimension {}",
                self.subsystems[*k].dim
            ))),
            _ => Err(Error::Layout(format!(
                "expected exactly one {party:?} gate qubit, found {}",
                found.len()
            ))),
        }
    }

    /// `(alice, bob)` gate-qubit indices.
    pub fn gate_qubits(&self) -> Result<(usize, usize)> {
        Ok((self.gate_qubit(Party::Alice)?, self.gate_qubit(Party::Bob)?))
    }

    pub fn concat(&self, other: &SubsystemLayout) -> SubsystemLayout {
        let mut subsystems = self.subsystems.clone();
        subsystems.extend_from_slice(&other.subsystems);
        SubsystemLayout { subsystems }
    }

    /// Layout of the listed subsystems, kept in ascending layout order.
    pub fn restrict(&self, keep: &[usize]) -> Result<SubsystemLayout> {
        let keep = self.normalize_keep(keep)?;
        Ok(SubsystemLayout {
            subsystems: keep.iter().map(|&k| self.subsystems[k]).collect(),
        })
    }

    /// Layout with subsystem `k` of the result taken from `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SubsystemLayout> {
        self.check_permutation(perm)?;
        Ok(SubsystemLayout {
            subsystems: perm.iter().map(|&p| self.subsystems[p]).collect(),
        })
    }

    pub(crate) fn check_permutation(&self, perm: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() {
            return Err(Error::Layout(format!(
                "permutation has {} entries for {} subsystems",
                perm.len(),
                self.len()
            )));
        }
        for &p in perm {
            if p >= self.len() || seen[p] {
                return Err(Error::Layout(format!("invalid permutation {perm:?}")));
            }
            seen[p] = true;
        }
        Ok(())
    }

    pub(crate) fn normalize_keep(&self, keep: &[usize]) -> Result<Vec<usize>> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&k| k >= self.len()) {
            return Err(Error::Layout(format!(
                "subsystem {bad} out of range for {} subsystems",
                self.len()
            )));
        }
        Ok(keep)
    }
}
