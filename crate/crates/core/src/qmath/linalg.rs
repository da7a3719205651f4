//! Dense complex matrix helpers shared by every module.
//!
//! Subsystem index arithmetic is row-major: for dims `[d0, d1, .., dn]` the
//! basis state `|i0 i1 .. in>` sits at `((i0 * d1 + i1) * d2 + i2) ...`, so
//! the first listed subsystem is the most significant digit and `kron(a, b)`
//! places `a` before `b`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C0: Complex64 = Complex64::new(0.0, 0.0);
pub const C1: Complex64 = Complex64::new(1.0, 0.0);
pub const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues below this are treated as exact zeros before taking logs.
pub const EIGEN_CLAMP: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Pauli matrix `sigma_k` with `sigma_0 = I`.
pub fn pauli(k: usize) -> CMat {
    match k {
        0 => CMat::from_row_slice(2, 2, &[C1, C0, C0, C1]),
        1 => CMat::from_row_slice(2, 2, &[C0, C1, C1, C0]),
        2 => CMat::from_row_slice(2, 2, &[C0, -CI, CI, C0]),
        3 => CMat::from_row_slice(2, 2, &[C1, C0, C0, -C1]),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn conj(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max entry of `|U^dagger U - I|`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn ensure_unitary(u: &CMat, tol: f64) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect > tol {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().sum()
}

/// Hermitian eigendecomposition, eigenvalues ascending with matching
/// eigenvector columns.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `-sum p log2 p` over a spectrum, zeroing entries below [`EIGEN_CLAMP`].
pub fn shannon_bits(spectrum: &[f64]) -> f64 {
    let s: f64 = spectrum
        .iter()
        .filter(|&&p| p > EIGEN_CLAMP)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = eigh(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let fv = f(v);
        for r in 0..n {
            scaled[(r, k)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// Haar-distributed `n x n` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C1 };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Uniformly random unit vector in `C^n`.
pub fn haar_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let norm = v.norm();
    v / c(norm, 0.0)
}

pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Offsets of every basis state of the `targets` subsystems (first target
/// most significant), relative to the all-zero configuration.
fn target_offsets(dims: &[usize], targets: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offsets = vec![0usize];
    for &t in targets {
        let mut next = Vec::with_capacity(offsets.len() * dims[t]);
        for &o in &offsets {
            for digit in 0..dims[t] {
                next.push(o + digit * st[t]);
            }
        }
        offsets = next;
    }
    offsets
}

/// Base offsets for every configuration of the subsystems not in `targets`.
fn rest_offsets(dims: &[usize], targets: &[usize]) -> Vec<usize> {
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    target_offsets(dims, &rest)
}

pub(crate) fn validate_targets(dims: &[usize], targets: &[usize]) -> Result<usize> {
    if targets.is_empty() {
        return Err(Error::Dimension(
            "operator needs at least one target".into(),
        ));
    }
    let mut seen = vec![false; dims.len()];
    let mut block = 1usize;
    for &t in targets {
        if t >= dims.len() {
            return Err(Error::Dimension(format!(
                "target subsystem {t} out of range for {} subsystems",
                dims.len()
            )));
        }
        if seen[t] {
            return Err(Error::Dimension(format!("target subsystem {t} repeated")));
        }
        seen[t] = true;
        block *= dims[t];
    }
    Ok(block)
}

/// Applies `op` to the listed subsystems of a state vector in place. The
/// operator's basis follows the order of `targets`.
pub fn apply_on_subsystems(
    amps: &mut CVec,
    dims: &[usize],
    targets: &[usize],
    op: &CMat,
) -> Result<()> {
    let block = validate_targets(dims, targets)?;
    if op.nrows() != block || op.ncols() != block {
        return Err(Error::Dimension(format!(
            "operator is {}x{} but targets span dimension {block}",
            op.nrows(),
            op.ncols()
        )));
    }
    let total: usize = dims.iter().product();
    if amps.len() != total {
        return Err(Error::Dimension(format!(
            "state has {} amplitudes, layout expects {total}",
            amps.len()
        )));
    }
    let offs = target_offsets(dims, targets);
    let mut gathered = vec![C0; block];
    for base in rest_offsets(dims, targets) {
        for (g, &o) in gathered.iter_mut().zip(&offs) {
            *g = amps[base + o];
        }
        for (row, &o) in offs.iter().enumerate() {
            let mut acc = C0;
            for (col, g) in gathered.iter().enumerate() {
                acc += op[(row, col)] * g;
            }
            amps[base + o] = acc;
        }
    }
    Ok(())
}

/// Reshapes a state vector into a matrix whose rows run over the `rows`
/// subsystems and columns over the remaining ones, both in layout order.
pub fn bipartite_matrix(amps: &CVec, dims: &[usize], rows: &[usize]) -> CMat {
    let mut rows_sorted = rows.to_vec();
    rows_sorted.sort_unstable();
    let row_offs = target_offsets(dims, &rows_sorted);
    let col_offs = rest_offsets(dims, &rows_sorted);
    CMat::from_fn(row_offs.len(), col_offs.len(), |r, c| {
        amps[row_offs[r] + col_offs[c]]
    })
}

/// Partial trace of a density matrix over every subsystem not in `keep`.
pub fn trace_out(rho: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    let keep_offs = target_offsets(dims, &keep_sorted);
    let rest = rest_offsets(dims, &keep_sorted);
    let n = keep_offs.len();
    let mut out = CMat::zeros(n, n);
    for base in rest {
        for (i, &oi) in keep_offs.iter().enumerate() {
            for (j, &oj) in keep_offs.iter().enumerate() {
                out[(i, j)] += rho[(base + oi, base + oj)];
            }
        }
    }
    out
}

/// Permutation of basis indices induced by reordering subsystems:
/// new subsystem `k` is old subsystem `perm[k]`. Returns `map[new] = old`.
pub fn reorder_indices(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; dims.len()];
    for (new_index, slot) in map.iter_mut().enumerate() {
        let mut rem = new_index;
        for k in (0..new_dims.len()).rev() {
            digits[k] = rem % new_dims[k];
            rem /= new_dims[k];
        }
        *slot = perm
            .iter()
            .zip(&digits)
            .map(|(&p, &d)| d * old_strides[p])
            .sum();
    }
    map
}

/// Completes the orthonormal columns of `partial` to a full unitary by
/// Gram-Schmidt over the standard basis, taken in index order.
pub fn complete_basis(partial: &CMat) -> CMat {
    let n = partial.nrows();
    let mut cols: Vec<CVec> = (0..partial.ncols())
        .map(|k| partial.column(k).into_owned())
        .collect();
    let mut candidate = 0;
    while cols.len() < n && candidate < n {
        let mut v = CVec::zeros(n);
        v[candidate] = C1;
        candidate += 1;
        for _ in 0..2 {
            for u in &cols {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v / c(norm, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

/// Matrix exponential of `-i * h` for Hermitian `h`.
pub fn expm_hermitian(h: &CMat, scale: f64) -> CMat {
    let (values, vectors) = eigh(h);
    let n = h.nrows();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -scale * v);
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Basis-controlled shift `|a>|b> -> |a>|b + a mod d_b>`, used to copy a
/// classical register into a blank one.
pub fn copy_permutation(control_dim: usize, target_dim: usize) -> CMat {
    let n = control_dim * target_dim;
    let mut m = CMat::zeros(n, n);
    for a in 0..control_dim {
        for b in 0..target_dim {
            let out = a * target_dim + (b + a) % target_dim;
            m[(out, a * target_dim + b)] = C1;
        }
    }
    m
}

/// Swap of two registers of equal dimension.
pub fn swap_registers(dim: usize) -> CMat {
    let n = dim * dim;
    let mut m = CMat::zeros(n, n);
    for a in 0..dim {
        for b in 0..dim {
            m[(b * dim + a, a * dim + b)] = C1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 4, 8] {
            let u = haar_unitary(n, &mut rng);
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }

    #[test]
    fn eigh_reconstructs_hermitian_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = haar_unitary(6, &mut rng);
        let h = &g + g.adjoint();
        let (values, vectors) = eigh(&h);
        let diag = CMat::from_diagonal(&CVec::from_iterator(6, values.iter().map(|&v| c(v, 0.0))));
        let rebuilt = &vectors * diag * vectors.adjoint();
        assert!(max_abs_diff(&rebuilt, &h) < 1e-12);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn apply_on_subsystems_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = [2, 3, 2];
        let psi = haar_vector(12, &mut rng);
        let op = haar_unitary(3, &mut rng);
        let full = kron(&kron(&identity(2), &op), &identity(2));
        let expected = &full * &psi;
        let mut got = psi.clone();
        apply_on_subsystems(&mut got, &dims, &[1], &op).unwrap();
        assert!((expected - got).norm() < 1e-13);
    }

    #[test]
    fn apply_on_reversed_targets_swaps_operator_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dims = [2, 2];
        let psi = haar_vector(4, &mut rng);
        let a = haar_unitary(2, &mut rng);
        let b = haar_unitary(2, &mut rng);
        let mut forward = psi.clone();
        apply_on_subsystems(&mut forward, &dims, &[0, 1], &kron(&a, &b)).unwrap();
        let mut reversed = psi.clone();
        apply_on_subsystems(&mut reversed, &dims, &[1, 0], &kron(&b, &a)).unwrap();
        assert!((forward - reversed).norm() < 1e-13);
    }

    #[test]
    fn trace_out_of_product_gives_factor() {
        let a = CMat::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let b = identity(3) / c(3.0, 0.0);
        let rho = kron(&a, &b);
        assert!(max_abs_diff(&trace_out(&rho, &[2, 3], &[0]), &a) < 1e-15);
        assert!(max_abs_diff(&trace_out(&rho, &[2, 3], &[1]), &b) < 1e-15);
    }

    #[test]
    fn complete_basis_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(5, &mut rng);
        let partial = u.columns(0, 2).into_owned();
        let full = complete_basis(&partial);
        assert!(unitarity_defect(&full) < 1e-12);
        assert!(max_abs_diff(&full.columns(0, 2).into_owned(), &partial) < 1e-15);
    }

    #[test]
    fn copy_permutation_copies_basis_values() {
        let m = copy_permutation(4, 4);
        assert!(unitarity_defect(&m) < 1e-15);
        for a in 0..4 {
            let col = a * 4;
            assert_eq!(m[(a * 4 + a, col)], C1);
        }
    }
}
