//! Multi-start ascent for the largest entanglement change a gate can
//! produce on ancilla-extended pure inputs.
//!
//! Inputs live on `[Alice ancilla, Alice gate qubit, Bob gate qubit, Bob
//! ancilla]`. The objective is `s * (E(U psi) - E(psi))` with `s = +1` for
//! the entangling direction and `s = -1` for the disentangling one.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{Gate, UNITARY_TOL};
use crate::error::{Error, Result};
use crate::qmath::linalg::{self, c, CMat, CVec, EIGEN_CLAMP};
use crate::qmath::{entanglement_entropy, PartitionedState, SubsystemLayout};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitySearchConfig {
    pub ancilla_dim_a: usize,
    pub ancilla_dim_b: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for CapacitySearchConfig {
    fn default() -> Self {
        CapacitySearchConfig {
            ancilla_dim_a: 2,
            ancilla_dim_b: 2,
            restarts: 32,
            max_iterations: 1500,
            gradient_tolerance: 1e-8,
            seed: 0,
        }
    }
}

impl CapacitySearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::OutOfRange("restarts must be at least 1".into()));
        }
        if self.ancilla_dim_a == 0 || self.ancilla_dim_b == 0 {
            return Err(Error::OutOfRange(
                "ancilla dimensions must be at least 1".into(),
            ));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::OutOfRange(
                "gradient tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<SubsystemLayout> {
        SubsystemLayout::ancilla_extended(self.ancilla_dim_a, self.ancilla_dim_b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Entangling,
    Disentangling,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Entangling => 1.0,
            Direction::Disentangling => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct CapacityReport {
    pub direction: Direction,
    /// Lower bound at the configured ancilla dimensions, in ebits.
    pub value: f64,
    pub best_state: PartitionedState,
    pub best_restart: usize,
    pub per_restart_values: Vec<f64>,
    pub restarts: Vec<RestartOutcome>,
    /// Whether the winning restart met a stopping criterion.
    pub converged: bool,
}

impl CapacityReport {
    pub fn restarts_converged(&self) -> usize {
        self.restarts.iter().filter(|r| r.converged).count()
    }
}

/// `E(U psi) - E(psi)` with `U` on the two gate qubits.
pub fn entanglement_change(gate: &Gate, psi: &PartitionedState) -> Result<f64> {
    let after = psi.apply_two_qubit(gate.matrix())?;
    Ok(entanglement_entropy(&after) - entanglement_entropy(psi))
}

pub fn entangling_capability(gate: &Gate, config: &CapacitySearchConfig) -> Result<CapacityReport> {
    search(gate, config, Direction::Entangling)
}

pub fn disentangling_capability(
    gate: &Gate,
    config: &CapacitySearchConfig,
) -> Result<CapacityReport> {
    search(gate, config, Direction::Disentangling)
}

/// Ties within this window go to the lowest restart index.
const TIE_WINDOW: f64 = 1e-12;

pub fn search(
    gate: &Gate,
    config: &CapacitySearchConfig,
    dir: Direction,
) -> Result<CapacityReport> {
    config.validate()?;
    linalg::ensure_unitary(gate.matrix(), UNITARY_TOL)?;
    let layout = config.layout()?;
    let objective = Objective::new(gate, config, dir.sign());

    let runs: Vec<(CVec, RestartOutcome)> = (0..config.restarts)
        .into_par_iter()
        .map(|idx| objective.ascend(start_state(config, idx), config))
        .collect();

    let mut best = 0;
    for (k, (_, r)) in runs.iter().enumerate().skip(1) {
        if r.value > runs[best].1.value + TIE_WINDOW {
            best = k;
        }
    }
    let best_state = PartitionedState::normalized(runs[best].0.clone(), layout)?;
    let value = dir.sign() * entanglement_change(gate, &best_state)?;
    let converged = runs[best].1.converged;
    let restarts: Vec<RestartOutcome> = runs.into_iter().map(|(_, r)| r).collect();
    Ok(CapacityReport {
        direction: dir,
        value,
        best_state,
        best_restart: best,
        per_restart_values: restarts.iter().map(|r| r.value).collect(),
        restarts,
        converged,
    })
}

fn start_state(config: &CapacitySearchConfig, idx: usize) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(idx as u64);
    let n = 4 * config.ancilla_dim_a * config.ancilla_dim_b;
    linalg::haar_vector(n, &mut rng)
}

/// `U_d^* psi^*`: loses under `U_d` exactly what `psi` gains.
pub fn conjugate_witness(ud: &Gate, maximizer: &PartitionedState) -> Result<PartitionedState> {
    let defect = linalg::max_abs_diff(ud.conjugate().matrix(), ud.adjoint().matrix());
    if defect > 1e-9 {
        return Err(Error::OutOfRange(format!(
            "gate is not in canonical form (|U* - U^dagger| = {defect:e}); decompose it first"
        )));
    }
    maximizer
        .conjugate()
        .apply_two_qubit(ud.conjugate().matrix())
}

/// Largest relative gap between the analytic directional derivative and a
/// central finite difference, over `probes` random tangent directions.
pub fn gradient_check(
    gate: &Gate,
    config: &CapacitySearchConfig,
    dir: Direction,
    probes: usize,
    step: f64,
) -> Result<f64> {
    config.validate()?;
    let objective = Objective::new(gate, config, dir.sign());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let n = objective.dim();
    let psi = linalg::haar_vector(n, &mut rng);
    let (_, grad) = objective.value_and_gradient(&psi);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let raw = linalg::haar_vector(n, &mut rng);
        // The objective is scale invariant, so only tangent directions count.
        let d = &raw - &psi * c(psi.dotc(&raw).re, 0.0);
        let analytic = real_dot(&grad, &d);
        let plus = objective.value(&(&psi + &d * c(step, 0.0)));
        let minus = objective.value(&(&psi - &d * c(step, 0.0)));
        let numeric = (plus - minus) / (2.0 * step);
        let scale = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    Ok(worst)
}

fn real_dot(a: &CVec, b: &CVec) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

struct Objective {
    full: CMat,
    rows: usize,
    cols: usize,
    sign: f64,
}

impl Objective {
    fn new(gate: &Gate, config: &CapacitySearchConfig, sign: f64) -> Objective {
        let full = linalg::kron(
            &linalg::kron(&linalg::identity(config.ancilla_dim_a), gate.matrix()),
            &linalg::identity(config.ancilla_dim_b),
        );
        Objective {
            full,
            rows: 2 * config.ancilla_dim_a,
            cols: 2 * config.ancilla_dim_b,
            sign,
        }
    }

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn reshape(&self, v: &CVec) -> CMat {
        CMat::from_fn(self.rows, self.cols, |r, k| v[r * self.cols + k])
    }

    /// Entropy of Alice's marginal of the (unnormalized) vector `v / |v|`.
    fn entropy(&self, v: &CVec) -> f64 {
        let m = self.reshape(v);
        let rho = &m * m.adjoint() / c(v.norm_squared(), 0.0);
        linalg::shannon_bits(&linalg::eigvalsh(&rho))
    }

    /// Entropy and its steepest-ascent direction at a unit vector, up to
    /// the radial term.
    fn entropy_gradient(&self, v: &CVec) -> (f64, CVec) {
        let m = self.reshape(v);
        let rho = &m * m.adjoint();
        let (vals, vecs) = linalg::eigh(&rho);
        let s = linalg::shannon_bits(&vals);
        let mut scaled = vecs.clone();
        for (k, &lam) in vals.iter().enumerate() {
            let l = lam.max(EIGEN_CLAMP).log2();
            scaled.column_mut(k).scale_mut(l);
        }
        let log_rho = scaled * vecs.adjoint();
        let g = -(log_rho * &m) * c(2.0, 0.0);
        let flat = DVector::from_fn(self.dim(), |i, _| g[(i / self.cols, i % self.cols)]);
        (s, flat)
    }

    fn value(&self, v: &CVec) -> f64 {
        let out = &self.full * v;
        self.sign * (self.entropy(&out) - self.entropy(v))
    }

    fn value_and_gradient(&self, v: &CVec) -> (f64, CVec) {
        let out = &self.full * v;
        let (s_out, g_out) = self.entropy_gradient(&out);
        let (s_in, g_in) = self.entropy_gradient(v);
        let grad = (self.full.adjoint() * g_out - g_in) * c(self.sign, 0.0);
        (self.sign * (s_out - s_in), grad)
    }

    fn ascend(&self, start: CVec, config: &CapacitySearchConfig) -> (CVec, RestartOutcome) {
        const ARMIJO: f64 = 1e-4;
        const STALL_DELTA: f64 = 1e-13;
        const STALL_RUN: usize = 30;
        let mut psi = start;
        let (mut f, mut grad) = self.value_and_gradient(&psi);
        let mut step = 0.5;
        let mut stalled = 0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < config.max_iterations {
            iterations += 1;
            let radial = psi.dotc(&grad).re;
            let tangent = &grad - &psi * c(radial, 0.0);
            let gn2 = tangent.norm_squared();
            if gn2.sqrt() < config.gradient_tolerance {
                converged = true;
                break;
            }
            let mut accepted = None;
            let mut t = step;
            while t > 1e-14 {
                let mut trial = &psi + &tangent * c(t, 0.0);
                let norm = trial.norm();
                trial /= c(norm, 0.0);
                let ft = self.value(&trial);
                if ft >= f + ARMIJO * t * gn2 {
                    accepted = Some((trial, t));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, t)) = accepted else {
                // No ascent step left: numerically stationary.
                converged = true;
                break;
            };
            psi = next;
            let (fn_, gn) = self.value_and_gradient(&psi);
            if (fn_ - f).abs() < STALL_DELTA {
                stalled += 1;
            } else {
                stalled = 0;
            }
            f = fn_;
            grad = gn;
            step = (t * 2.0).min(4.0);
            if stalled >= STALL_RUN {
                converged = true;
                break;
            }
        }
        let outcome = RestartOutcome {
            value: f,
            iterations,
            converged,
        };
        (psi, outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{cnot, identity, make_ud, random_gate, swap};

    fn quick() -> CapacitySearchConfig {
        CapacitySearchConfig {
            restarts: 8,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        let bad = CapacitySearchConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CapacitySearchConfig {
            ancilla_dim_b: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for (k, g) in [cnot(), random_gate(4), make_ud(0.3, 0.2, 0.1)]
            .iter()
            .enumerate()
        {
            let cfg = CapacitySearchConfig {
                seed: k as u64,
                ..Default::default()
            };
            for dir in [Direction::Entangling, Direction::Disentangling] {
                let err = gradient_check(g, &cfg, dir, 10, 1e-6).unwrap();
                assert!(err < 1e-5, "gate {k} {dir:?}: {err:e}");
            }
        }
    }

    #[test]
    fn identity_has_zero_capability() {
        let r = entangling_capability(&identity(), &quick()).unwrap();
        assert!(r.value.abs() < 1e-12);
        let r = disentangling_capability(&identity(), &quick()).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn cnot_creates_one_ebit() {
        let r = entangling_capability(&cnot(), &quick()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3, "{}", r.value);
        let direct = entanglement_change(&cnot(), &r.best_state).unwrap();
        assert_eq!(r.value, direct);
    }

    #[test]
    fn swap_creates_two_ebits() {
        let r = entangling_capability(&swap(), &quick()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-3, "{}", r.value);
    }

    #[test]
    fn restarts_are_reproducible() {
        let g = random_gate(1);
        let a = entangling_capability(&g, &quick()).unwrap();
        let b = entangling_capability(&g, &quick()).unwrap();
        assert_eq!(a.per_restart_values, b.per_restart_values);
        assert_eq!(a.best_restart, b.best_restart);
    }

    #[test]
    fn witness_loses_what_maximizer_gains() {
        let ud = make_ud(std::f64::consts::PI / 8.0, 0.0, 0.0);
        let r = entangling_capability(&ud, &quick()).unwrap();
        let w = conjugate_witness(&ud, &r.best_state).unwrap();
        let loss = -entanglement_change(&ud, &w).unwrap();
        assert!((loss - r.value).abs() < 1e-9);
        assert!(conjugate_witness(&random_gate(2), &r.best_state).is_err());
    }
}
