use num_complex::Complex64;

use super::layout::{Party, SubsystemLayout};
use super::linalg::{self, c, CMat, CVec, C0, C1};
use crate::error::{Error, Result};

/// Norm tolerance for [`PartitionedState::new`].
pub const NORM_TOL: f64 = 1e-12;

/// Pure state over a tagged subsystem layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedState {
    amplitudes: CVec,
    layout: SubsystemLayout,
}

impl PartitionedState {
    pub fn new(amplitudes: CVec, layout: SubsystemLayout) -> Result<Self> {
        check_len(amplitudes.len(), &layout)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PartitionedState { amplitudes, layout })
    }

    /// Rescales `amplitudes` to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: CVec, layout: SubsystemLayout) -> Result<Self> {
        check_len(amplitudes.len(), &layout)?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PartitionedState {
            amplitudes: amplitudes / c(norm, 0.0),
            layout,
        })
    }

    /// Computational basis state with one digit per subsystem.
    pub fn basis(layout: SubsystemLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::Dimension(format!(
                "{} digits for {} subsystems",
                digits.len(),
                layout.len()
            )));
        }
        let mut index = 0usize;
        for (d, s) in digits.iter().zip(layout.subsystems()) {
            if *d >= s.dim {
                return Err(Error::Dimension(format!(
                    "digit {d} out of range for dimension {}",
                    s.dim
                )));
            }
            index = index * s.dim + d;
        }
        let mut v = CVec::zeros(layout.total_dim());
        v[index] = C1;
        Ok(PartitionedState {
            amplitudes: v,
            layout,
        })
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn into_parts(self) -> (CVec, SubsystemLayout) {
        (self.amplitudes, self.layout)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PartitionedState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Kronecker product; the layout of `other` is appended.
    pub fn tensor(&self, other: &PartitionedState) -> PartitionedState {
        PartitionedState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            layout: self.layout.concat(&other.layout),
        }
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conjugate(&self) -> PartitionedState {
        PartitionedState {
            amplitudes: self.amplitudes.map(|z| z.conj()),
            layout: self.layout.clone(),
        }
    }

    /// Applies `op` to `targets` (operator basis follows the target order).
    pub fn apply(&self, targets: &[usize], op: &CMat) -> Result<PartitionedState> {
        let mut amps = self.amplitudes.clone();
        linalg::apply_on_subsystems(&mut amps, &self.layout.dims(), targets, op)?;
        Ok(PartitionedState {
            amplitudes: amps,
            layout: self.layout.clone(),
        })
    }

    pub fn apply_in_place(&mut self, targets: &[usize], op: &CMat) -> Result<()> {
        linalg::apply_on_subsystems(&mut self.amplitudes, &self.layout.dims(), targets, op)
    }

    /// Applies a 4x4 operator on `(Alice gate qubit, Bob gate qubit)`.
    pub fn apply_two_qubit(&self, op: &CMat) -> Result<PartitionedState> {
        let (a, b) = self.layout.gate_qubits()?;
        self.apply(&[a, b], op)
    }

    /// Subsystems reordered so that new subsystem `k` is old `perm[k]`.
    pub fn reorder(&self, perm: &[usize]) -> Result<PartitionedState> {
        let layout = self.layout.permuted(perm)?;
        let map = linalg::reorder_indices(&self.layout.dims(), perm);
        let amplitudes =
            CVec::from_iterator(map.len(), map.iter().map(|&old| self.amplitudes[old]));
        Ok(PartitionedState { amplitudes, layout })
    }

    /// Matrix of amplitudes with rows over `rows` subsystems and columns
    /// over the rest, both in layout order.
    pub fn bipartite_matrix(&self, rows: &[usize]) -> CMat {
        linalg::bipartite_matrix(&self.amplitudes, &self.layout.dims(), rows)
    }

    /// Reduced density operator on `keep` (sorted into layout order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let keep = self.layout.normalize_keep(keep)?;
        let m = self.bipartite_matrix(&keep);
        Ok(DensityOperator {
            matrix: &m * m.adjoint(),
            layout: self.layout.restrict(&keep)?,
        })
    }

    /// Marginal of every subsystem owned by `party`.
    pub fn marginal(&self, party: Party) -> Result<DensityOperator> {
        self.partial_trace(&self.layout.party_indices(party))
    }

    pub fn density(&self) -> DensityOperator {
        let v = &self.amplitudes;
        DensityOperator {
            matrix: v * v.adjoint(),
            layout: self.layout.clone(),
        }
    }
}

/// Mixed state over the retained subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
    layout: SubsystemLayout,
}

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMat, layout: SubsystemLayout) -> Result<Self> {
        check_len(matrix.nrows(), &layout)?;
        if !matrix.is_square() {
            return Err(Error::Dimension("density matrix is not square".into()));
        }
        let h = linalg::hermiticity_defect(&matrix);
        if h > HERMITIAN_TOL {
            return Err(Error::NotHermitian(h));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}")));
        }
        let min = linalg::eigvalsh(&matrix).first().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityOperator { matrix, layout })
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let n = layout.total_dim();
        DensityOperator {
            matrix: linalg::identity(n) / c(n as f64, 0.0),
            layout,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: linalg::kron(&self.matrix, &other.matrix),
            layout: self.layout.concat(&other.layout),
        }
    }

    pub fn conjugate(&self) -> DensityOperator {
        DensityOperator {
            matrix: linalg::conj(&self.matrix),
            layout: self.layout.clone(),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let keep = self.layout.normalize_keep(keep)?;
        Ok(DensityOperator {
            matrix: linalg::trace_out(&self.matrix, &self.layout.dims(), &keep),
            layout: self.layout.restrict(&keep)?,
        })
    }

    pub fn marginal(&self, party: Party) -> Result<DensityOperator> {
        self.partial_trace(&self.layout.party_indices(party))
    }

    /// `U rho U^dagger` with `U` acting on `targets`.
    pub fn conjugate_by(&self, targets: &[usize], op: &CMat) -> Result<DensityOperator> {
        let dims = self.layout.dims();
        let n = self.dim();
        // U rho on the columns, then U (U rho)^dagger = U rho U^dagger.
        let mut left = CMat::zeros(n, n);
        for col in 0..n {
            let mut v = self.matrix.column(col).into_owned();
            linalg::apply_on_subsystems(&mut v, &dims, targets, op)?;
            left.set_column(col, &v);
        }
        let mut out = CMat::zeros(n, n);
        let lt = left.adjoint();
        for col in 0..n {
            let mut v = lt.column(col).into_owned();
            linalg::apply_on_subsystems(&mut v, &dims, targets, op)?;
            out.set_column(col, &v);
        }
        Ok(DensityOperator {
            matrix: out,
            layout: self.layout.clone(),
        })
    }

    pub fn reorder(&self, perm: &[usize]) -> Result<DensityOperator> {
        let layout = self.layout.permuted(perm)?;
        let map = linalg::reorder_indices(&self.layout.dims(), perm);
        let n = map.len();
        let matrix = CMat::from_fn(n, n, |r, col| self.matrix[(map[r], map[col])]);
        Ok(DensityOperator { matrix, layout })
    }

    /// Convex combination `sum_k w_k rho_k`; all inputs share one layout.
    pub fn mixture(weights: &[f64], members: &[DensityOperator]) -> Result<DensityOperator> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidEnsemble("empty mixture".into()))?;
        if weights.len() != members.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} weights for {} members",
                weights.len(),
                members.len()
            )));
        }
        let n = first.dim();
        let mut acc = CMat::from_element(n, n, C0);
        for (w, m) in weights.iter().zip(members) {
            if m.layout != first.layout {
                return Err(Error::InvalidEnsemble(
                    "members do not share a layout".into(),
                ));
            }
            acc += &m.matrix * c(*w, 0.0);
        }
        Ok(DensityOperator {
            matrix: acc,
            layout: first.layout.clone(),
        })
    }
}

/// Either kind of state, for operations that accept both.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(PartitionedState),
    Mixed(DensityOperator),
}

impl QuantumState {
    pub fn layout(&self) -> &SubsystemLayout {
        match self {
            QuantumState::Pure(p) => p.layout(),
            QuantumState::Mixed(m) => m.layout(),
        }
    }

    /// Kronecker product of two states of the same kind.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        match (self, other) {
            (QuantumState::Pure(a), QuantumState::Pure(b)) => Ok(QuantumState::Pure(a.tensor(b))),
            (QuantumState::Mixed(a), QuantumState::Mixed(b)) => {
                Ok(QuantumState::Mixed(a.tensor(b)))
            }
            _ => Err(Error::KindMismatch(
                "tensor of a pure state with a density operator".into(),
            )),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        match self {
            QuantumState::Pure(p) => p.partial_trace(keep),
            QuantumState::Mixed(m) => m.partial_trace(keep),
        }
    }

    pub fn marginal(&self, party: Party) -> Result<DensityOperator> {
        self.partial_trace(&self.layout().party_indices(party))
    }

    pub fn density(&self) -> DensityOperator {
        match self {
            QuantumState::Pure(p) => p.density(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    pub fn apply(&self, targets: &[usize], op: &CMat) -> Result<QuantumState> {
        match self {
            QuantumState::Pure(p) => Ok(QuantumState::Pure(p.apply(targets, op)?)),
            QuantumState::Mixed(m) => Ok(QuantumState::Mixed(m.conjugate_by(targets, op)?)),
        }
    }
}

impl From<PartitionedState> for QuantumState {
    fn from(p: PartitionedState) -> Self {
        QuantumState::Pure(p)
    }
}

impl From<DensityOperator> for QuantumState {
    fn from(m: DensityOperator) -> Self {
        QuantumState::Mixed(m)
    }
}

fn check_len(len: usize, layout: &SubsystemLayout) -> Result<()> {
    if len != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "vector of length {len} does not match layout dimension {}",
            layout.total_dim()
        )));
    }
    Ok(())
}
