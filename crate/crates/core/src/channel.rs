//! The linear channel model: deterministic expected detection statistics
//! for given protocol parameters, channel constants and fiber length.
//!
//! One printed-formula correction is applied throughout: the heralding
//! rates for the 01/02 sources use exp(-eta*mu/2), not exp(+eta*mu/2).
//! A counting rate must stay below one and the companion signal-window
//! formula carries the negative exponent; the positive sign is a typo.

use crate::error::{Error, Result};
use crate::numerics::{bessel_i0, phase_slice_integral, SliceKind};
use crate::types::{ExperimentParams, ObservedCounts, ProtocolParams};

/// A distance together with the per-arm transmittance it induces,
/// eta = 10^(-alpha_f * L / 20) * eta_d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    pub distance_km: f64,
    pub eta: f64,
}

impl ChannelPoint {
    pub fn new(distance_km: f64, exp: &ExperimentParams) -> Self {
        let eta = 10f64.powf(-exp.alpha_f * distance_km / 20.0) * exp.eta_d;
        ChannelPoint { distance_km, eta }
    }
}

/// Expected instance counts of the decoy sources and the phase slices,
/// as exact reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCounts {
    pub cap_n_00: f64,
    /// N_01 = N_10.
    pub cap_n_01: f64,
    /// N_02 = N_20.
    pub cap_n_02: f64,
    /// N_delta+- per sign.
    pub cap_n_delta: f64,
}

/// Instance counts of each source pairing and of the phase slices.
pub fn window_counts(params: &ProtocolParams) -> WindowCounts {
    let n = params.n_pulses as f64;
    let pz = params.p_z;
    let qz = 1.0 - pz;
    let (p0, p1, pz0) = (params.p_0, params.p_1, params.p_z0);
    let p2 = 1.0 - p0 - p1;
    let cap_n_00 = (qz * qz * p0 * p0 + 2.0 * qz * pz * p0 * pz0) * n;
    let cap_n_01 = (qz * qz * p0 * p1 + qz * pz * pz0 * p1) * n;
    let cap_n_02 = (qz * qz * p2 * p0 + qz * pz * pz0 * p2) * n;
    let cap_n_delta = params.delta / (2.0 * std::f64::consts::PI) * qz * qz * p1 * p1 * n;
    WindowCounts {
        cap_n_00,
        cap_n_01,
        cap_n_02,
        cap_n_delta,
    }
}

/// Per-window counting rates and error rates of the linear model,
/// independent of N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelRates {
    /// Heralding rate of the 00 source.
    pub s_00: f64,
    /// Heralding rate of the 01/10 sources.
    pub s_01: f64,
    /// Heralding rate of the 02/20 sources.
    pub s_02: f64,
    /// Z-window counting rate (per Z-window pair).
    pub s_z: f64,
    /// Z-window error rate.
    pub e_z: f64,
    /// Wrong-detector rate of the C_delta+- slices.
    pub t_delta: f64,
    /// Slice-averaged same-phase term T_X.
    pub t_x: f64,
    /// Slice-averaged total term S_X.
    pub s_x: f64,
    /// Signal (send/not-send) contribution to the Z rate, per Z pair.
    pub s_signal: f64,
    /// Error contribution to the Z rate, per Z pair.
    pub s_error: f64,
}

/// Evaluate every counting rate of the linear model at one channel point.
pub fn model_rates(params: &ProtocolParams, exp: &ExperimentParams, point: &ChannelPoint) -> ModelRates {
    let eta = point.eta;
    let pd = exp.p_d;
    let q = 1.0 - pd;
    let (mu1, mu2, muz) = (params.mu_1, params.mu_2, params.mu_z);
    let pz0 = params.p_z0;

    let s_00 = 2.0 * pd * q;
    let s_01 = 2.0 * (q * (-eta * mu1 / 2.0).exp() - q * q * (-eta * mu1).exp());
    let s_02 = 2.0 * (q * (-eta * mu2 / 2.0).exp() - q * q * (-eta * mu2).exp());

    // Per Z-window pair: n_signal / (N p_z^2) and n_error / (N p_z^2).
    let s_signal =
        4.0 * pz0 * (1.0 - pz0) * (q * (-eta * muz / 2.0).exp() - q * q * (-2.0 * eta * muz).exp());
    let s_error = 2.0
        * (1.0 - pz0)
        * (1.0 - pz0)
        * (q * (-eta * muz).exp() * bessel_i0(eta * muz) - q * q * (-2.0 * eta * muz).exp())
        + 2.0 * pz0 * pz0 * pd * q;
    let s_z = s_signal + s_error;
    let e_z = if s_z > 0.0 { s_error / s_z } else { 0.0 };

    let common = q * q * (-2.0 * eta * mu1).exp();
    let t_x = q * phase_slice_integral(SliceKind::Cos2, eta * mu1, params.delta) - common;
    let s_x = q * phase_slice_integral(SliceKind::Sin2, eta * mu1, params.delta) - common + t_x;
    let t_delta = t_x * (1.0 - 2.0 * exp.e_d) + exp.e_d * s_x;

    ModelRates {
        s_00,
        s_01,
        s_02,
        s_z,
        e_z,
        t_delta,
        t_x,
        s_x,
        s_signal,
        s_error,
    }
}

fn round_count(x: f64) -> u128 {
    debug_assert!(x >= -0.5);
    x.max(0.0).round() as u128
}

/// Produce the full set of observed counts the linear model predicts.
/// Expected counts are computed as reals and rounded to integers once,
/// here at the boundary; `cap_n_delta` stays real so small slice
/// populations do not collapse to zero.
pub fn simulate_observations(
    params: &ProtocolParams,
    exp: &ExperimentParams,
    point: &ChannelPoint,
) -> Result<ObservedCounts> {
    let wc = window_counts(params);
    let rates = model_rates(params, exp, point);
    let n = params.n_pulses as f64;
    let pz2 = params.p_z * params.p_z;

    let n_t_real = n * pz2 * rates.s_z;
    if n_t_real == 0.0 {
        return Err(Error::DegenerateChannel);
    }

    Ok(ObservedCounts {
        cap_n_00: round_count(wc.cap_n_00),
        cap_n_01: round_count(wc.cap_n_01),
        cap_n_10: round_count(wc.cap_n_01),
        cap_n_02: round_count(wc.cap_n_02),
        cap_n_20: round_count(wc.cap_n_02),
        cap_n_delta: wc.cap_n_delta,
        n_00: round_count(wc.cap_n_00 * rates.s_00),
        n_01: round_count(wc.cap_n_01 * rates.s_01),
        n_10: round_count(wc.cap_n_01 * rates.s_01),
        n_02: round_count(wc.cap_n_02 * rates.s_02),
        n_20: round_count(wc.cap_n_02 * rates.s_02),
        n_delta_plus_r: round_count(wc.cap_n_delta * rates.t_delta),
        n_delta_minus_l: round_count(wc.cap_n_delta * rates.t_delta),
        n_t: round_count(n_t_real),
        e_z: rates.e_z,
    })
}

/// Per-window rates used by the asymptotic rate check; N-independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticStats {
    /// Counting rate of Z-window pairs.
    pub s_z: f64,
    pub e_z: f64,
    pub t_x: f64,
    pub s_x: f64,
}

pub fn asymptotic_statistics(
    params: &ProtocolParams,
    exp: &ExperimentParams,
    point: &ChannelPoint,
) -> AsymptoticStats {
    let rates = model_rates(params, exp, point);
    AsymptoticStats {
        s_z: rates.s_z,
        e_z: rates.e_z,
        t_x: rates.t_x,
        s_x: rates.s_x,
    }
}
