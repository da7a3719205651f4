//! Two-qubit gates and their reduction to `exp(-i sum_k a_k sigma_k (x) sigma_k)`
//! up to local unitaries and a global phase.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::encoding;
use crate::qmath::linalg::{self, c, CMat, C0, C1, CI};

/// Unitarity tolerance accepted by [`Gate::new`].
pub const UNITARY_TOL: f64 = 1e-10;

/// A 4x4 unitary on (Alice's gate qubit, Bob's gate qubit), Alice first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub struct Gate {
    matrix: CMat,
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    #[serde(with = "encoding::matrix")]
    matrix: CMat,
}

impl TryFrom<GateRepr> for Gate {
    type Error = Error;
    fn try_from(r: GateRepr) -> Result<Gate> {
        Gate::new(r.matrix)
    }
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> GateRepr {
        GateRepr { matrix: g.matrix }
    }
}

impl Gate {
    pub fn new(matrix: CMat) -> Result<Gate> {
        if matrix.nrows() != 4 || matrix.ncols() != 4 {
            return Err(Error::Dimension(format!(
                "gate must be 4x4, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        linalg::ensure_unitary(&matrix, UNITARY_TOL)?;
        Ok(Gate { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Gate {
        Gate { matrix }
    }

    /// `a (x) b` for single-qubit unitaries.
    pub fn local(a: &CMat, b: &CMat) -> Result<Gate> {
        Gate::new(linalg::kron(a, b))
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn conjugate(&self) -> Gate {
        Gate {
            matrix: linalg::conj(&self.matrix),
        }
    }

    pub fn transpose(&self) -> Gate {
        Gate {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn adjoint(&self) -> Gate {
        Gate {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self * other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &Gate) -> Gate {
        Gate {
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `(post_a (x) post_b) U (pre_a (x) pre_b)`.
    pub fn dressed(&self, post: (&CMat, &CMat), pre: (&CMat, &CMat)) -> Result<Gate> {
        let m = linalg::kron(post.0, post.1) * &self.matrix * linalg::kron(pre.0, pre.1);
        Gate::new(m)
    }

    /// `U^T = U` entrywise within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        linalg::max_abs_diff(&self.matrix, &self.matrix.transpose()) <= tol
    }

    pub fn determinant(&self) -> Complex64 {
        self.matrix.determinant()
    }
}

/// CNOT with Alice's qubit as control.
pub fn cnot() -> Gate {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = C1;
    m[(1, 1)] = C1;
    m[(2, 3)] = C1;
    m[(3, 2)] = C1;
    Gate::from_matrix_unchecked(m)
}

pub fn swap() -> Gate {
    Gate::from_matrix_unchecked(linalg::swap_registers(2))
}

pub fn identity() -> Gate {
    Gate::from_matrix_unchecked(linalg::identity(4))
}

/// Haar-random gate, reproducible from `seed`.
pub fn random_gate(seed: u64) -> Gate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Gate::from_matrix_unchecked(linalg::haar_unitary(4, &mut rng))
}

/// Unitarity tolerance for user-supplied gate matrices.
pub const GATE_FILE_TOL: f64 = 1e-8;

/// Where a gate comes from: a name, canonical parameters, or a raw matrix.
///
/// Serialized as `{"named": "cnot"}`, `{"alphas": [a1, a2, a3]}` or
/// `{"matrix": [[[re, im], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSource {
    Named(String),
    Alphas([f64; 3]),
    Matrix(#[serde(with = "encoding::matrix")] CMat),
}

impl GateSource {
    pub fn resolve(&self) -> Result<Gate> {
        match self {
            GateSource::Named(name) => named_gate(name),
            GateSource::Alphas([a1, a2, a3]) => {
                if ![a1, a2, a3].iter().all(|a| a.is_finite()) {
                    return Err(Error::Parse(format!("non-finite alphas {a1}, {a2}, {a3}")));
                }
                Ok(make_ud(*a1, *a2, *a3))
            }
            GateSource::Matrix(m) => {
                if m.nrows() != 4 || m.ncols() != 4 {
                    return Err(Error::Dimension(format!(
                        "gate must be 4x4, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                linalg::ensure_unitary(m, GATE_FILE_TOL)?;
                Ok(Gate::from_matrix_unchecked(m.clone()))
            }
        }
    }
}

/// `cnot`, `swap`, `identity` or `random:SEED`.
pub fn named_gate(name: &str) -> Result<Gate> {
    match name.trim().to_ascii_lowercase().as_str() {
        "cnot" => Ok(cnot()),
        "swap" => Ok(swap()),
        "identity" | "id" => Ok(identity()),
        other => match other.strip_prefix("random:") {
            Some(seed) => seed
                .parse::<u64>()
                .map(random_gate)
                .map_err(|_| Error::Parse(format!("bad seed in gate name {name:?}"))),
            None => Err(Error::Parse(format!("unknown gate name {name:?}"))),
        },
    }
}

/// Columns are the magic basis states in the computational basis.
pub fn magic_basis() -> CMat {
    let s = c(FRAC_1_SQRT_2, 0.0);
    let i = CI * s;
    CMat::from_row_slice(
        4,
        4,
        &[
            s, i, C0, C0, //
            C0, C0, i, s, //
            C0, C0, i, -s, //
            s, -i, C0, C0,
        ],
    )
}

/// Phases `lambda` with `U_d = Q diag(exp(-i lambda)) Q^dagger`.
fn magic_phases(a: [f64; 3]) -> [f64; 4] {
    [
        a[0] - a[1] + a[2],
        -a[0] + a[1] + a[2],
        a[0] + a[1] - a[2],
        -a[0] - a[1] - a[2],
    ]
}

/// `exp(-i (a1 XX + a2 YY + a3 ZZ))`.
pub fn make_ud(a1: f64, a2: f64, a3: f64) -> Gate {
    let q = magic_basis();
    let lam = magic_phases([a1, a2, a3]);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        lam.iter().map(|&l| Complex64::from_polar(1.0, -l)),
    ));
    Gate::from_matrix_unchecked(&q * d * q.adjoint())
}

/// `phase * (post_a (x) post_b) U_d(alphas) (pre_a (x) pre_b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub alphas: [f64; 3],
    #[serde(with = "encoding::matrix_pair")]
    pub pre_local: (CMat, CMat),
    #[serde(with = "encoding::matrix_pair")]
    pub post_local: (CMat, CMat),
    #[serde(with = "encoding::complex")]
    pub phase: Complex64,
}

impl CanonicalForm {
    pub fn ud(&self) -> Gate {
        make_ud(self.alphas[0], self.alphas[1], self.alphas[2])
    }

    pub fn pre(&self) -> CMat {
        linalg::kron(&self.pre_local.0, &self.pre_local.1)
    }

    pub fn post(&self) -> CMat {
        linalg::kron(&self.post_local.0, &self.post_local.1)
    }

    pub fn reconstruct(&self) -> CMat {
        self.post() * self.ud().matrix() * self.pre() * self.phase
    }

    /// Frobenius distance between the reconstruction and `gate`.
    pub fn reconstruction_error(&self, gate: &Gate) -> f64 {
        linalg::frobenius(&(self.reconstruct() - gate.matrix()))
    }
}

/// Window within which `a_1` counts as sitting on the `pi/4` face.
const FACE_TOL: f64 = 1e-9;

/// Reduces `gate` to canonical form in the chamber
/// `pi/4 >= a1 >= a2 >= |a3|`.
pub fn decompose(gate: &Gate) -> Result<CanonicalForm> {
    let u = gate.matrix();
    if u.nrows() != 4 || u.ncols() != 4 {
        return Err(Error::Dimension("gate must be 4x4".into()));
    }
    linalg::ensure_unitary(u, UNITARY_TOL)?;

    let q = magic_basis();
    let root = u.determinant().powf(0.25);
    let special = u / root;
    let um = q.adjoint() * &special * &q;
    let m2 = um.transpose() * &um;

    let mut p = so4_diagonalizer(&m2);
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    let pc = p.map(|x| c(x, 0.0));
    let diag = pc.transpose() * &m2 * &pc;
    let mut lam: [f64; 4] = std::array::from_fn(|k| -diag[(k, k)].arg() / 2.0);

    let scaled = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        lam.iter().map(|&l| Complex64::from_polar(1.0, l)),
    ));
    let mut o1 = (&um * &pc * scaled).map(|z| z.re);
    if o1.determinant() < 0.0 {
        lam[0] += PI;
        o1.column_mut(0).neg_mut();
    }
    let total: f64 = lam.iter().sum();
    lam[3] -= (total / (2.0 * PI)).round() * 2.0 * PI;

    let alphas = [
        (lam[0] + lam[2]) / 2.0,
        (lam[1] + lam[2]) / 2.0,
        (lam[0] + lam[1]) / 2.0,
    ];
    let o1c = o1.map(|x| c(x, 0.0));
    let post = factor_local(&(&q * o1c * q.adjoint()));
    let pre = factor_local(&(&q * pc.transpose() * q.adjoint()));

    let mut form = CanonicalForm {
        alphas,
        pre_local: pre,
        post_local: post,
        phase: C1,
    };
    weyl_normalize(&mut form);
    form.phase = fit_phase(&form, u);
    Ok(form)
}

/// Real orthogonal `P` with `P^T M P` diagonal, for a complex symmetric
/// unitary `M`. Real and imaginary parts commute, so a generic real
/// combination of them shares their eigenbasis; a fixed list of
/// combinations is tried in order and the best-diagonalizing one kept.
fn so4_diagonalizer(m: &CMat) -> DMatrix<f64> {
    const ANGLES: [f64; 7] = [0.0, FRAC_PI_2, 0.4142, 1.1309, 2.0663, 2.7183, 0.7777];
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for theta in ANGLES {
        let mut r = &re * theta.cos() + &im * theta.sin();
        r = (&r + r.transpose()) * 0.5;
        let p = SymmetricEigen::new(r).eigenvectors;
        let pc = p.map(|x| c(x, 0.0));
        let d = pc.transpose() * m * &pc;
        let mut off = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, p));
        }
        if off < 1e-14 {
            break;
        }
    }
    best.expect("at least one candidate").1
}

/// Splits a 4x4 `A (x) B` into `(A, B)` with `det B = 1`.
fn factor_local(k: &CMat) -> (CMat, CMat) {
    let (mut bi, mut bj, mut big) = (0, 0, -1.0);
    for i in 0..4 {
        for j in 0..4 {
            if k[(i, j)].norm() > big {
                big = k[(i, j)].norm();
                bi = i;
                bj = j;
            }
        }
    }
    let (ai, aj) = (bi / 2, bj / 2);
    let block = CMat::from_fn(2, 2, |r, s| k[(2 * ai + r, 2 * aj + s)]);
    let b = &block / block.determinant().sqrt();
    let a = CMat::from_fn(2, 2, |r, s| {
        let mut acc = C0;
        for x in 0..2 {
            for y in 0..2 {
                acc += k[(2 * r + x, 2 * s + y)] * b[(x, y)].conj();
            }
        }
        acc / 2.0
    });
    (a, b)
}

fn fit_phase(form: &CanonicalForm, u: &CMat) -> Complex64 {
    let recon = form.post() * form.ud().matrix() * form.pre();
    let overlap = (recon.adjoint() * u).trace();
    overlap / overlap.norm()
}

fn s_gate() -> CMat {
    CMat::from_row_slice(2, 2, &[C1, C0, C0, CI])
}

fn hadamard() -> CMat {
    let s = c(FRAC_1_SQRT_2, 0.0);
    CMat::from_row_slice(2, 2, &[s, s, s, -s])
}

fn rx_half_pi() -> CMat {
    let s = c(FRAC_1_SQRT_2, 0.0);
    CMat::from_row_slice(2, 2, &[s, -CI * s, -CI * s, s])
}

/// `U_d(a) = U_d(a - n pi/2 e_k) (-i sigma_k (x) sigma_k)^n`.
fn shift(f: &mut CanonicalForm, k: usize, n: i64) {
    if n == 0 {
        return;
    }
    f.alphas[k] -= n as f64 * FRAC_PI_2;
    if n.rem_euclid(2) == 1 {
        let s = linalg::pauli(k + 1);
        f.pre_local.0 = &s * &f.pre_local.0;
        f.pre_local.1 = &s * &f.pre_local.1;
    }
}

/// Swaps `a_i` and `a_j` by conjugating with a Clifford on both sides.
fn exchange(f: &mut CanonicalForm, i: usize, j: usize) {
    let cl = match (i.min(j), i.max(j)) {
        (0, 1) => s_gate(),
        (0, 2) => hadamard(),
        (1, 2) => rx_half_pi(),
        _ => return,
    };
    f.alphas.swap(i, j);
    let cd = cl.adjoint();
    f.post_local.0 = &f.post_local.0 * &cd;
    f.post_local.1 = &f.post_local.1 * &cd;
    f.pre_local.0 = &cl * &f.pre_local.0;
    f.pre_local.1 = &cl * &f.pre_local.1;
}

/// Negates the two coefficients other than `a_k` via `sigma_k (x) I`.
fn flip(f: &mut CanonicalForm, k: usize) {
    for m in 0..3 {
        if m != k {
            f.alphas[m] = -f.alphas[m];
        }
    }
    let s = linalg::pauli(k + 1);
    f.post_local.0 = &f.post_local.0 * &s;
    f.pre_local.0 = &s * &f.pre_local.0;
}

fn weyl_normalize(f: &mut CanonicalForm) {
    for k in 0..3 {
        let n = (f.alphas[k] / FRAC_PI_2).round() as i64;
        shift(f, k, n);
    }
    for (i, j) in [(0, 1), (1, 2), (0, 1)] {
        if f.alphas[i].abs() < f.alphas[j].abs() {
            exchange(f, i, j);
        }
    }
    match (f.alphas[0] < 0.0, f.alphas[1] < 0.0) {
        (true, true) => flip(f, 2),
        (true, false) => flip(f, 1),
        (false, true) => flip(f, 0),
        (false, false) => {}
    }
    if f.alphas[0] > FRAC_PI_4 - FACE_TOL && f.alphas[2] < 0.0 {
        shift(f, 0, 1);
        flip(f, 1);
    }
}

/// Makhlin invariants `(G1, G2)`; equal for locally equivalent gates.
pub fn local_invariants(gate: &Gate) -> (Complex64, f64) {
    let q = magic_basis();
    let ub = q.adjoint() * gate.matrix() * &q;
    let m = ub.transpose() * &ub;
    let det = gate.determinant();
    let tr = m.trace();
    let tr2 = (&m * &m).trace();
    let g1 = tr * tr / (16.0 * det);
    let g2 = (tr * tr - tr2) / (4.0 * det);
    (g1, g2.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn su2<R: Rng>(rng: &mut R) -> CMat {
        linalg::haar_unitary(2, rng)
    }

    #[test]
    fn magic_basis_is_unitary() {
        assert!(linalg::unitarity_defect(&magic_basis()) < 1e-15);
    }

    #[test]
    fn ud_matches_matrix_exponential() {
        let (a1, a2, a3) = (0.3, -0.2, 0.11);
        let h = linalg::kron(&linalg::pauli(1), &linalg::pauli(1)) * c(a1, 0.)
            + linalg::kron(&linalg::pauli(2), &linalg::pauli(2)) * c(a2, 0.)
            + linalg::kron(&linalg::pauli(3), &linalg::pauli(3)) * c(a3, 0.);
        let expect = linalg::expm_hermitian(&h, 1.0);
        assert!(linalg::max_abs_diff(make_ud(a1, a2, a3).matrix(), &expect) < 1e-13);
    }

    #[test]
    fn ud_zero_is_identity() {
        assert!(linalg::max_abs_diff(make_ud(0., 0., 0.).matrix(), &linalg::identity(4)) < 1e-15);
    }

    #[test]
    fn named_gates() {
        let c2 = cnot().then_after(&cnot());
        assert!(linalg::max_abs_diff(c2.matrix(), &linalg::identity(4)) < 1e-15);
        // SWAP |01> = |10>
        assert_eq!(swap().matrix()[(2, 1)], C1);
        assert_eq!(swap().matrix()[(1, 2)], C1);
        for seed in 0..100 {
            assert!(linalg::unitarity_defect(random_gate(seed).matrix()) < 1e-10);
        }
        assert_eq!(random_gate(7), random_gate(7));
        assert_ne!(random_gate(7), random_gate(8));
    }

    #[test]
    fn rejects_non_unitary() {
        let mut m = linalg::identity(4);
        m[(0, 0)] = c(2.0, 0.0);
        assert!(matches!(Gate::new(m.clone()), Err(Error::NotUnitary(_))));
        assert!(Gate::new(CMat::identity(3, 3)).is_err());
    }

    #[test]
    fn decompose_named_gates() {
        let id = decompose(&identity()).unwrap();
        assert!(id.alphas.iter().all(|a| a.abs() < 1e-12));
        let cn = decompose(&cnot()).unwrap();
        assert!((cn.alphas[0] - FRAC_PI_4).abs() < 1e-9);
        assert!(cn.alphas[1].abs() < 1e-9 && cn.alphas[2].abs() < 1e-9);
        assert!(cn.reconstruction_error(&cnot()) < 1e-9);
        let sw = decompose(&swap()).unwrap();
        for a in sw.alphas {
            assert!((a - FRAC_PI_4).abs() < 1e-9, "{:?}", sw.alphas);
        }
        assert!(sw.reconstruction_error(&swap()) < 1e-9);
    }

    #[test]
    fn decompose_is_deterministic() {
        let g = random_gate(42);
        assert_eq!(decompose(&g).unwrap(), decompose(&g).unwrap());
    }

    #[test]
    fn locals_are_unitary() {
        let f = decompose(&random_gate(3)).unwrap();
        for m in [
            &f.pre_local.0,
            &f.pre_local.1,
            &f.post_local.0,
            &f.post_local.1,
        ] {
            assert!(linalg::unitarity_defect(m) < 1e-10);
        }
        assert!((f.phase.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ud_round_trip_keeps_chamber_alphas() {
        let cases = [
            [0.5, 0.3, 0.1],
            [0.7, 0.2, -0.15],
            [FRAC_PI_4 / 2.0, 0.0, 0.0],
            [0.6, 0.6, 0.6],
        ];
        for a in cases {
            let f = decompose(&make_ud(a[0], a[1], a[2])).unwrap();
            for k in 0..3 {
                assert!((f.alphas[k] - a[k]).abs() < 1e-9, "{a:?} -> {:?}", f.alphas);
            }
        }
    }

    #[test]
    fn normalization_reaches_chamber_from_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(-4.0..4.0));
            let g = make_ud(a[0], a[1], a[2]);
            let f = decompose(&g).unwrap();
            let [a1, a2, a3] = f.alphas;
            assert!(a1 <= FRAC_PI_4 + 1e-9 && a1 >= a2 - 1e-12 && a2 >= a3.abs() - 1e-12);
            assert!(f.reconstruction_error(&g) < 1e-9);
        }
    }

    #[test]
    fn invariants_of_named_gates() {
        let (g1, g2) = local_invariants(&identity());
        assert!((g1 - C1).norm() < 1e-12 && (g2 - 3.0).abs() < 1e-12);
        let (g1, g2) = local_invariants(&cnot());
        assert!(g1.norm() < 1e-12 && (g2 - 1.0).abs() < 1e-12);
        let (g1, g2) = local_invariants(&swap());
        assert!((g1 + C1).norm() < 1e-12 && (g2 + 3.0).abs() < 1e-12);
    }

    #[test]
    fn invariants_ignore_locals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = cnot();
        let (g1, g2) = local_invariants(&base);
        for _ in 0..20 {
            let (a, b, x, y) = (su2(&mut rng), su2(&mut rng), su2(&mut rng), su2(&mut rng));
            let dressed = base.dressed((&a, &b), (&x, &y)).unwrap();
            let (h1, h2) = local_invariants(&dressed);
            assert!((g1 - h1).norm() < 1e-9 && (g2 - h2).abs() < 1e-9);
        }
    }

    #[test]
    fn ud_commutes_with_pauli_pairs() {
        let g = make_ud(0.4, 0.25, -0.1);
        for k in 0..4 {
            let p = linalg::kron(&linalg::pauli(k), &linalg::pauli(k));
            let lhs = g.matrix() * &p;
            let rhs = &p * g.matrix();
            assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn gate_json_round_trip() {
        let g = random_gate(9);
        let text = serde_json::to_string(&g).unwrap();
        let back: Gate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let f = decompose(&g).unwrap();
        let back: CanonicalForm =
            serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
