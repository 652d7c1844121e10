//! Final key length, the security-budget composition, the asymptotic
//! rate check and the PLOB reference bound.

use crate::error::{Error, Result};
use crate::estimator::UntaggedEstimate;
use crate::numerics::binary_entropy;
use crate::types::{ProtocolParams, SecurityBudget};

/// Bits disclosed during error correction: f * n_t * h(E_z).
pub fn leak_ec(n_t: u128, e_z: f64, f: f64) -> Result<f64> {
    Ok(f * n_t as f64 * binary_entropy(e_z)?)
}

/// The composable key length
/// l = n_1 [1 - h(e_1ph)] - leak_EC - log2(2/eps_cor)
///     - 2 log2(1/(sqrt(2) eps_PA eps_hat)),
/// floored to an integer and clamped at zero. Returns zero whenever
/// e_1ph >= 1/2 (the entropy term leaves nothing to distill).
pub fn key_length(est: &UntaggedEstimate, leak: f64, sec: &SecurityBudget) -> u128 {
    if est.no_key || est.e_1ph >= 0.5 || est.n_1 <= 0.0 {
        return 0;
    }
    let h = binary_entropy(est.e_1ph.min(1.0)).expect("e_1ph in [0,1]");
    let l = key_length_raw(est.n_1, h, leak, sec);
    if l <= 0.0 {
        0
    } else {
        l.floor() as u128
    }
}

/// The unclamped, unfloored key length; negative values mean abort.
/// Exposed so the optimizer can use it as a smooth objective.
pub fn key_length_raw(n_1: f64, h_e1ph: f64, leak: f64, sec: &SecurityBudget) -> f64 {
    n_1 * (1.0 - h_e1ph)
        - leak
        - (2.0 / sec.eps_cor).log2()
        - 2.0 * (1.0 / (std::f64::consts::SQRT_2 * sec.eps_pa * sec.eps_hat)).log2()
}

/// The default epsilon assignment: eps_cor = eps_hat = eps_PA = xi,
/// eps_bar = eps_n1 = 4 xi, giving eps_sec = 23 xi and eps_tol = 24 xi.
pub fn security_budget(xi: f64) -> Result<SecurityBudget> {
    if !(xi > 0.0 && xi < 1.0 / 24.0) {
        return Err(Error::DomainError(format!(
            "xi must be in (0, 1/24), got {xi}"
        )));
    }
    let budget = SecurityBudget {
        xi,
        eps_cor: xi,
        eps_hat: xi,
        eps_pa: xi,
        eps_bar: 4.0 * xi,
        eps_n1: 4.0 * xi,
        eps_sec: 23.0 * xi,
        eps_tol: 24.0 * xi,
    };
    budget.validate()?;
    Ok(budget)
}

/// Asymptotic per-pulse key rate:
/// R = p_z^2 { 2 p (1-p) mu_z e^{-mu_z} s_1 [1 - h(e_1ph)] - f S_z h(E_z) }
/// with p = 1 - p_z0 the in-window sending probability and S_z the
/// counting rate per Z-window pair. The p_z^2 factor converts to
/// per-sent-pulse units for comparability with l/N.
pub fn asymptotic_rate(
    params: &ProtocolParams,
    s_z: f64,
    e_z: f64,
    s1: f64,
    e1ph: f64,
    f: f64,
) -> Result<f64> {
    let p = 1.0 - params.p_z0;
    let h1 = if e1ph >= 0.5 {
        1.0
    } else {
        binary_entropy(e1ph)?
    };
    let r = 2.0 * p * (1.0 - p) * params.mu_z * (-params.mu_z).exp() * s1 * (1.0 - h1)
        - f * s_z * binary_entropy(e_z)?;
    Ok((params.p_z * params.p_z * r).max(0.0))
}

/// The repeaterless secret-key capacity -log2(1 - eta).
pub fn plob_bound(eta_total: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta_total) {
        return Err(Error::DomainError(format!(
            "plob_bound requires eta in [0,1), got {eta_total}"
        )));
    }
    Ok(-(1.0 - eta_total).log2())
}
