//! Closed-form error, dimension and rate bounds.

use serde::Serialize;

use super::analysis::message_fidelity;
use super::ProtocolScript;
use crate::error::{Error, Result};
use crate::qmath::{fannes_bound, Q_CONTINUITY};

/// `1 - eps_psi - 4 M sqrt(eps)`, floored at zero.
pub fn chained_fidelity_bound(m: usize, eps: f64, eps_psi: f64) -> f64 {
    (1.0 - eps_psi - 4.0 * m as f64 * eps.sqrt()).max(0.0)
}

/// Smallest gap between the target rates and the rates to beat.
pub fn rate_gap(target: (f64, f64), base: (f64, f64)) -> f64 {
    (target.0 - base.0).min(target.1 - base.1)
}

/// `max(R'_fwd, R'_bwd, 1)`.
pub fn r_max(target: (f64, f64)) -> f64 {
    target.0.max(target.1).max(1.0)
}

/// Error needed to reach `target = (R'_fwd, R'_bwd)` from a protocol with
/// rates `base = (R_fwd, R_bwd)`:
/// `min{(dR / 32 R_max)^2, (dR / 16)^4, (1 / 2e)^2}`.
pub fn epsilon_threshold(target: (f64, f64), base: (f64, f64)) -> Result<f64> {
    let all = [target.0, target.1, base.0, base.1];
    if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::OutOfRange(format!(
            "rates must be finite and nonnegative, got {all:?}"
        )));
    }
    let gap = rate_gap(target, base);
    if gap < 0.0 {
        return Err(Error::OutOfRange(format!(
            "target rates {target:?} do not exceed {base:?}"
        )));
    }
    let rm = r_max(target);
    let e = std::f64::consts::E;
    Ok((gap / (32.0 * rm))
        .powi(2)
        .min((gap / 16.0).powi(4))
        .min((1.0 / (2.0 * e)).powi(2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AncillaBound {
    /// `(2n + log2 d) / tau`.
    pub k: f64,
    /// `K M tau`, the log2 of the ancilla dimension bound.
    pub log2_dimension: f64,
    /// `2^{K M tau}`.
    pub dimension: f64,
}

/// Ancilla growth after `m` rounds of a `tau`-gate protocol sending `n`
/// bits with ancilla dimension `d`.
pub fn ancilla_bound(n: usize, d: usize, tau: usize, m: usize) -> Result<AncillaBound> {
    if d == 0 || tau == 0 {
        return Err(Error::OutOfRange("need d >= 1 and tau >= 1".into()));
    }
    let k = (2.0 * n as f64 + (d as f64).log2()) / tau as f64;
    let log2_dimension = k * (m * tau) as f64;
    Ok(AncillaBound {
        k,
        log2_dimension,
        dimension: log2_dimension.exp2(),
    })
}

/// `R' - R >= R K / (4 M E0) + C R sqrt(K) / (2M)` in each direction.
pub fn unassisted_rate_check(
    m: usize,
    k: f64,
    e0: f64,
    c: f64,
    base: (f64, f64),
    target: (f64, f64),
) -> Result<(bool, bool)> {
    if m == 0 || e0 <= 0.0 || k < 0.0 {
        return Err(Error::OutOfRange("need M >= 1, E0 > 0 and K >= 0".into()));
    }
    let m = m as f64;
    let holds = |r: f64, rp: f64| rp - r >= r * k / (4.0 * m * e0) + c * r * k.sqrt() / (2.0 * m);
    Ok((holds(base.0, target.0), holds(base.1, target.1)))
}

/// `n_b - 4 n sqrt(eps) - 4 eps^{1/4}`.
pub fn holevo_lower_bound(n_b: usize, n: usize, eps: f64) -> f64 {
    n_b as f64 - 4.0 * n as f64 * eps.sqrt() - 4.0 * eps.powf(0.25)
}

/// `sqrt(eps) (4n + K t) + Q`.
pub fn continuity_bound(eps: f64, n: usize, kt: f64) -> f64 {
    eps.sqrt() * (4.0 * n as f64 + kt) + Q_CONTINUITY
}

/// `(n_a / t, n_b / t)` when every message pair is delivered with fidelity
/// at least `1 - eps_target`.
pub fn rate_pair_achieved(script: &ProtocolScript, eps_target: f64) -> Result<Option<(f64, f64)>> {
    if script.t() == 0 {
        return Ok(None);
    }
    let eps = message_fidelity(script)?.eps;
    let t = script.t() as f64;
    Ok((eps <= eps_target).then(|| (script.n_a() as f64 / t, script.n_b() as f64 / t)))
}

/// Inputs to [`BoundsReport::evaluate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsInput {
    /// `(R_fwd, R_bwd)` achieved by the base protocol.
    pub base: (f64, f64),
    /// `(R'_fwd, R'_bwd)` to reach.
    pub target: (f64, f64),
    pub n: usize,
    pub d: usize,
    pub tau: usize,
    pub m: usize,
    pub e0: f64,
    pub c: f64,
    pub eps_psi: f64,
    /// Protocol error; the threshold is used when absent.
    pub eps: Option<f64>,
}

impl Default for BoundsInput {
    fn default() -> Self {
        BoundsInput {
            base: (1.0, 1.0),
            target: (2.0, 2.0),
            n: 2,
            d: 4,
            tau: 1,
            m: 10,
            e0: 1.0,
            c: 1.0,
            eps_psi: 0.0,
            eps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub delta_r: f64,
    pub r_max: f64,
    pub epsilon_threshold: f64,
    pub eps: f64,
    pub k: f64,
    pub k_n: f64,
    pub log2_dimension_bound: f64,
    /// `2 sqrt(eps)`, the trace distance allowed by the fidelity.
    pub fannes_t: f64,
    /// Fannes right-hand side at `fannes_t` over the message register;
    /// absent when `fannes_t > 1/e`.
    pub fannes_bound: Option<f64>,
    pub q: f64,
    pub chained_fidelity: f64,
    pub holevo_lower_bound: f64,
    pub continuity_bound: f64,
    pub rate_check: (bool, bool),
}

impl BoundsReport {
    pub fn evaluate(input: &BoundsInput) -> Result<BoundsReport> {
        let threshold = epsilon_threshold(input.target, input.base)?;
        let eps = input.eps.unwrap_or(threshold);
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::OutOfRange(format!(
                "eps must lie in [0, 1], got {eps}"
            )));
        }
        let anc = ancilla_bound(input.n, input.d, input.tau, input.m)?;
        let fannes_t = 2.0 * eps.sqrt();
        let message_dim = 1usize << input.n.min(30);
        Ok(BoundsReport {
            delta_r: rate_gap(input.target, input.base),
            r_max: r_max(input.target),
            epsilon_threshold: threshold,
            eps,
            k: anc.k,
            k_n: 2.0 * r_max(input.target),
            log2_dimension_bound: anc.log2_dimension,
            fannes_t,
            fannes_bound: fannes_bound(fannes_t, message_dim).ok(),
            q: Q_CONTINUITY,
            chained_fidelity: chained_fidelity_bound(input.m, eps, input.eps_psi),
            holevo_lower_bound: holevo_lower_bound(input.n, input.n, eps),
            continuity_bound: continuity_bound(eps, input.n, anc.k * input.tau as f64),
            rate_check: unassisted_rate_check(
                input.m,
                anc.k,
                input.e0,
                input.c,
                input.base,
                input.target,
            )?,
        })
    }
}
