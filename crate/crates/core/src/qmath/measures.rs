//! Entropies, fidelities and distances. All logarithms are base 2.

use num_complex::Complex64;

use super::layout::Party;
use super::linalg::{self, c, CMat, CVec};
use super::state::{DensityOperator, PartitionedState};
use crate::error::{Error, Result};

/// `log2(e) / e`, the maximum of `-x log2 x`.
pub const Q_CONTINUITY: f64 = std::f64::consts::LOG2_E / std::f64::consts::E;

/// Hermiticity tolerance used when taking the entropy of a raw matrix.
pub const ENTROPY_HERMITIAN_TOL: f64 = 1e-10;

/// `S(rho) = -Tr rho log2 rho`, in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    matrix_entropy_unchecked(rho.matrix())
}

/// Entropy of a raw matrix, rejecting non-Hermitian input.
pub fn matrix_entropy(m: &CMat) -> Result<f64> {
    let defect = linalg::hermiticity_defect(m);
    if defect > ENTROPY_HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(matrix_entropy_unchecked(m))
}

pub(crate) fn matrix_entropy_unchecked(m: &CMat) -> f64 {
    let s = linalg::shannon_bits(&linalg::eigvalsh(m));
    s.min((m.nrows() as f64).log2())
}

/// Entropy of Alice's marginal, in ebits.
pub fn entanglement_entropy(psi: &PartitionedState) -> f64 {
    let alice = psi.layout().party_indices(Party::Alice);
    if alice.is_empty() || alice.len() == psi.layout().len() {
        return 0.0;
    }
    let m = psi.bipartite_matrix(&alice);
    // The smaller Gram matrix has the same nonzero spectrum.
    let gram = if m.nrows() <= m.ncols() {
        &m * m.adjoint()
    } else {
        m.adjoint() * &m
    };
    matrix_entropy_unchecked(&gram)
}

/// `F(|psi>, rho) = <psi|rho|psi>`.
pub fn fidelity_pure_mixed(psi: &PartitionedState, rho: &DensityOperator) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::Dimension(format!(
            "state of dimension {} against operator of dimension {}",
            psi.dim(),
            rho.dim()
        )));
    }
    let v = psi.amplitudes();
    let f: Complex64 = v.dotc(&(rho.matrix() * v));
    Ok(f.re.clamp(0.0, 1.0))
}

/// `T(rho, sigma) = Tr |rho - sigma|` (no factor one half).
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "trace distance between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    Ok(linalg::eigvalsh(&diff).iter().map(|v| v.abs()).sum())
}

/// Trace distance between pure states, `2 sqrt(1 - |<a|b>|^2)`.
pub fn trace_distance_pure(a: &PartitionedState, b: &PartitionedState) -> Result<f64> {
    let overlap = a.inner(b)?.norm_sqr();
    Ok(2.0 * (1.0 - overlap).max(0.0).sqrt())
}

/// `eta(x) = -x log2 x` with `eta(0) = 0`.
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Right-hand side of Fannes' inequality, `T log2 D + eta(T)`; only valid
/// for `0 <= T <= 1/e`.
pub fn fannes_bound(t: f64, dim: usize) -> Result<f64> {
    let limit = 1.0 / std::f64::consts::E;
    if !(0.0..=limit + 1e-12).contains(&t) {
        return Err(Error::OutOfRange(format!(
            "Fannes bound needs 0 <= T <= 1/e, got T = {t}"
        )));
    }
    if dim == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    Ok(t * (dim as f64).log2() + eta(t))
}

/// Schmidt form of a pure bipartite state across the Alice/Bob cut.
#[derive(Clone, Debug)]
pub struct Schmidt {
    /// Squared Schmidt coefficients, descending, summing to one.
    pub coefficients: Vec<f64>,
    /// Columns are Alice's Schmidt vectors (over her subsystems in layout order).
    pub alice: CMat,
    /// Columns are Bob's Schmidt vectors.
    pub bob: CMat,
}

impl Schmidt {
    /// `sum_k sqrt(lambda_k) |a_k>|b_k>` in Alice-then-Bob ordering.
    pub fn reconstruct(&self) -> CVec {
        let da = self.alice.nrows();
        let db = self.bob.nrows();
        let mut out = CVec::zeros(da * db);
        for (k, &lam) in self.coefficients.iter().enumerate() {
            let a = self.alice.column(k).into_owned();
            let b = self.bob.column(k).into_owned();
            out += a.kronecker(&b) * c(lam.sqrt(), 0.0);
        }
        out
    }
}

/// SVD of the amplitude matrix with rows over Alice's subsystems.
pub fn schmidt_decompose(psi: &PartitionedState) -> Schmidt {
    let alice = psi.layout().party_indices(Party::Alice);
    let m = psi.bipartite_matrix(&alice);
    schmidt_of_matrix(&m)
}

pub(crate) fn schmidt_of_matrix(m: &CMat) -> Schmidt {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut coefficients = Vec::new();
    let mut alice_cols = Vec::new();
    let mut bob_cols = Vec::new();
    for &k in &order {
        let s = svd.singular_values[k];
        coefficients.push(s * s);
        alice_cols.push(u.column(k).into_owned());
        // m = U S V^dagger, so Bob's vector is row k of V^dagger.
        bob_cols.push(v_t.row(k).transpose());
    }
    Schmidt {
        coefficients,
        alice: CMat::from_columns(&alice_cols),
        bob: CMat::from_columns(&bob_cols),
    }
}

#[cfg(test)]
mod tests {
    use super::super::layout::{Role, Subsystem, SubsystemLayout};
    use super::*;
    use crate::qmath::linalg::{C0, C1, CI};

    fn ab() -> SubsystemLayout {
        SubsystemLayout::two_qubit()
    }

    fn state(entries: &[Complex64], layout: SubsystemLayout) -> PartitionedState {
        PartitionedState::normalized(CVec::from_column_slice(entries), layout).unwrap()
    }

    fn bell() -> PartitionedState {
        state(&[C1, C0, C0, C1], ab())
    }

    fn one_qubit(p: Party) -> SubsystemLayout {
        SubsystemLayout::new(vec![Subsystem::new(2, p, Role::Ancilla)]).unwrap()
    }

    #[test]
    fn entropy_of_simple_states() {
        let zero = PartitionedState::basis(one_qubit(Party::Alice), &[0]).unwrap();
        assert!(von_neumann_entropy(&zero.density()).abs() < 1e-15);
        let half = DensityOperator::maximally_mixed(one_qubit(Party::Alice));
        assert!((von_neumann_entropy(&half) - 1.0).abs() < 1e-14);
        let quarter = DensityOperator::maximally_mixed(ab());
        assert!((von_neumann_entropy(&quarter) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_matrix_entropy_fails() {
        let m = CMat::from_row_slice(2, 2, &[c(0.5, 0.), c(0.3, 0.), C0, c(0.5, 0.)]);
        assert!(matches!(matrix_entropy(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn entanglement_of_bell_and_products() {
        assert!((entanglement_entropy(&bell()) - 1.0).abs() < 1e-14);
        let prod = PartitionedState::basis(ab(), &[1, 0]).unwrap();
        assert!(entanglement_entropy(&prod).abs() < 1e-14);
        let two = bell().tensor(&bell());
        assert!((entanglement_entropy(&two) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn fidelity_examples() {
        let zero = PartitionedState::basis(one_qubit(Party::Alice), &[0]).unwrap();
        let one = PartitionedState::basis(one_qubit(Party::Alice), &[1]).unwrap();
        let plus = state(&[C1, C1], one_qubit(Party::Alice));
        assert!((fidelity_pure_mixed(&plus, &plus.density()).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity_pure_mixed(&zero, &one.density()).unwrap().abs() < 1e-15);
        assert!((fidelity_pure_mixed(&plus, &zero.density()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = PartitionedState::basis(one_qubit(Party::Alice), &[0]).unwrap();
        let one = PartitionedState::basis(one_qubit(Party::Alice), &[1]).unwrap();
        let plus = state(&[C1, C1], one_qubit(Party::Alice));
        assert!((trace_distance(&zero.density(), &one.density()).unwrap() - 2.0).abs() < 1e-14);
        assert!(trace_distance(&plus.density(), &plus.density()).unwrap() < 1e-15);
        // |0><0| - |+><+| has eigenvalues +-1/sqrt(2).
        let t = trace_distance(&zero.density(), &plus.density()).unwrap();
        assert!((t - std::f64::consts::SQRT_2).abs() < 1e-14);
        let tp = trace_distance_pure(&zero, &plus).unwrap();
        assert!((tp - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((trace_distance_pure(&zero, &one).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fannes_examples() {
        assert_eq!(fannes_bound(0.0, 4).unwrap(), 0.0);
        // 0.2 * 2 + 0.2 * log2(5)
        assert!((fannes_bound(0.2, 4).unwrap() - 0.864385618977).abs() < 1e-11);
        // (1 + log2 e) / e
        let t = 1.0 / std::f64::consts::E;
        assert!((fannes_bound(t, 2).unwrap() - 0.898617286594).abs() < 1e-11);
        assert!(fannes_bound(0.5, 2).is_err());
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_decompose(&bell());
        assert!((s.coefficients[0] - 0.5).abs() < 1e-15 && (s.coefficients[1] - 0.5).abs() < 1e-15);
        let prod = PartitionedState::basis(ab(), &[0, 1]).unwrap();
        let sp = schmidt_decompose(&prod);
        assert!((sp.coefficients[0] - 1.0).abs() < 1e-15);
        assert!(sp.coefficients[1].abs() < 1e-15);
        let skew = state(&[c(0.9f64.sqrt(), 0.), C0, C0, c(0.1f64.sqrt(), 0.)], ab());
        let ss = schmidt_decompose(&skew);
        assert!((ss.coefficients[0] - 0.9).abs() < 1e-14);
        assert!((ss.coefficients[1] - 0.1).abs() < 1e-14);
        assert!((ss.reconstruct() - skew.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn conjugation_preserves_entanglement() {
        let psi = state(&[C1, C0, C0, CI], ab());
        assert!((entanglement_entropy(&psi) - 1.0).abs() < 1e-14);
        assert!((entanglement_entropy(&psi.conjugate()) - 1.0).abs() < 1e-14);
        assert_eq!(psi.conjugate().conjugate(), psi);
        let real = bell();
        assert_eq!(real.conjugate(), real);
    }
}
