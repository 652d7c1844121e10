//! Decoy-state parameter estimation: from observed window tallies to the
//! untagged-bit count lower bound n_1 and the phase-flip error upper
//! bound e_1^ph.
//!
//! The symmetric sources are pooled (01 with 10, 02 with 20) into single
//! Chernoff calls on the summed counts; this is what makes the 24-xi
//! failure budget of the surrounding analysis add up.

use crate::chernoff::{expected_bounds, observed_bounds};
use crate::error::{Error, Result};
use crate::types::{ObservedCounts, ProtocolParams};

/// Statistical-fluctuation handling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluctuationMode {
    /// Full Chernoff inflation, one unit xi per bound.
    Chernoff,
    /// Diagnostic mode: all deltas forced to zero, bounds equal the
    /// observed rates. Used for asymptotic convergence checks.
    Asymptotic,
}

/// Bounds on the expected counting rates of the pooled decoy sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRateBounds {
    pub s00_lo: f64,
    pub s00_hi: f64,
    /// Pooled lower bound for the 01 and 10 sources.
    pub s01_10_lo: f64,
    /// Pooled upper bound for the 02 and 20 sources.
    pub s02_20_hi: f64,
    /// Upper bound on the slice error rate T_delta.
    pub t_delta_hi: f64,
}

/// The estimated untagged-bit quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UntaggedEstimate {
    /// Lower bound on the untagged-bit count (observed-value bound).
    pub n_1: f64,
    /// Phase-flip error rate after observed-value inflation.
    pub e_1ph: f64,
    pub s1z_lower: f64,
    pub e1ph_upper_expected: f64,
    /// N_1 = 2 p_z^2 p_z0 (1 - p_z0) mu_z exp(-mu_z) N.
    pub cap_n_1: f64,
    /// Set when the bounds admit no key (s1z lower bound zero).
    pub no_key: bool,
}

/// How many Chernoff invocations fed each estimate chain. The analysis
/// budgets four per chain (eps_bar = 4 xi, eps_n1 = 4 xi).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChernoffTally {
    pub n1_chain: u32,
    pub e1ph_chain: u32,
}

/// Apply the expected-value Chernoff layer to the pooled observations.
/// Each bound consumes one unit xi.
pub fn expected_rate_bounds(
    obs: &ObservedCounts,
    xi: f64,
    mode: FluctuationMode,
) -> Result<ExpectedRateBounds> {
    if obs.cap_n_00 == 0 {
        return Err(Error::EmptySource("N_00"));
    }
    if obs.cap_n_01 + obs.cap_n_10 == 0 {
        return Err(Error::EmptySource("N_01+N_10"));
    }
    if obs.cap_n_02 + obs.cap_n_20 == 0 {
        return Err(Error::EmptySource("N_02+N_20"));
    }
    if obs.cap_n_delta <= 0.0 {
        return Err(Error::EmptySource("N_delta"));
    }

    let n00 = obs.cap_n_00 as f64;
    let n01_10 = (obs.cap_n_01 + obs.cap_n_10) as f64;
    let n02_20 = (obs.cap_n_02 + obs.cap_n_20) as f64;
    let n_delta2 = 2.0 * obs.cap_n_delta;
    let delta_sum = obs.n_delta_plus_r + obs.n_delta_minus_l;

    match mode {
        FluctuationMode::Asymptotic => Ok(ExpectedRateBounds {
            s00_lo: obs.n_00 as f64 / n00,
            s00_hi: obs.n_00 as f64 / n00,
            s01_10_lo: (obs.n_01 + obs.n_10) as f64 / n01_10,
            s02_20_hi: (obs.n_02 + obs.n_20) as f64 / n02_20,
            t_delta_hi: delta_sum as f64 / n_delta2,
        }),
        FluctuationMode::Chernoff => {
            let b00 = expected_bounds(obs.n_00, xi)?;
            let b01 = expected_bounds(obs.n_01 + obs.n_10, xi)?;
            let b02 = expected_bounds(obs.n_02 + obs.n_20, xi)?;
            let bt = expected_bounds(delta_sum, xi)?;
            Ok(ExpectedRateBounds {
                s00_lo: b00.lower / n00,
                s00_hi: b00.upper / n00,
                s01_10_lo: b01.lower / n01_10,
                s02_20_hi: b02.upper / n02_20,
                t_delta_hi: bt.upper / n_delta2,
            })
        }
    }
}

/// Lower bound on the expected untagged counting rate:
/// [mu2^2 e^mu1 (S01+S10)_lo - mu1^2 e^mu2 (S02+S20)_hi
///  - 2 (mu2^2 - mu1^2) S00_hi] / (2 mu1 mu2 (mu2 - mu1)),
/// clamped at zero (a negative value means the decoy bound is vacuous).
pub fn s1z_lower(bounds: &ExpectedRateBounds, mu_1: f64, mu_2: f64) -> f64 {
    debug_assert!(mu_1 > 0.0 && mu_1 < mu_2);
    let pooled_01 = 2.0 * bounds.s01_10_lo;
    let pooled_02 = 2.0 * bounds.s02_20_hi;
    let num = mu_2 * mu_2 * mu_1.exp() * pooled_01
        - mu_1 * mu_1 * mu_2.exp() * pooled_02
        - 2.0 * (mu_2 * mu_2 - mu_1 * mu_1) * bounds.s00_hi;
    let den = 2.0 * mu_1 * mu_2 * (mu_2 - mu_1);
    (num / den).max(0.0)
}

/// Upper bound on the expected untagged phase-flip error rate:
/// (T_delta_hi - 1/2 e^{-2 mu1} S00_lo) / (2 mu1 e^{-2 mu1} s1z_lo).
/// The numerator is clamped at zero; values above 1/2 mean no key and
/// are left to the caller to flag.
pub fn e1ph_upper(bounds: &ExpectedRateBounds, s1z_lo: f64, mu_1: f64) -> Result<f64> {
    if s1z_lo == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let attenuation = (-2.0 * mu_1).exp();
    let num = (bounds.t_delta_hi - 0.5 * attenuation * bounds.s00_lo).max(0.0);
    let den = 2.0 * mu_1 * attenuation * s1z_lo;
    Ok(num / den)
}

/// The untagged-event population N_1 = 2 p_z^2 p_z0 (1-p_z0) mu_z e^{-mu_z} N.
pub fn cap_n_1(params: &ProtocolParams) -> f64 {
    2.0 * params.p_z
        * params.p_z
        * params.p_z0
        * (1.0 - params.p_z0)
        * params.mu_z
        * (-params.mu_z).exp()
        * params.n_pulses as f64
}

/// Final observed-value layer: n_1 = phi^L(N_1 s1z_lo) and
/// e_1ph = phi^U(N_1 s1z_lo e1ph_hi) / (N_1 s1z_lo). Each bound consumes
/// one unit xi.
pub fn untagged_estimates(
    params: &ProtocolParams,
    s1z_lo: f64,
    e1ph_hi: f64,
    xi: f64,
    mode: FluctuationMode,
) -> Result<UntaggedEstimate> {
    let n1_pop = cap_n_1(params);
    let mean_n1 = n1_pop * s1z_lo;
    if mean_n1 <= 0.0 {
        return Ok(UntaggedEstimate {
            n_1: 0.0,
            e_1ph: 1.0,
            s1z_lower: s1z_lo,
            e1ph_upper_expected: e1ph_hi,
            cap_n_1: n1_pop,
            no_key: true,
        });
    }
    let (n_1, e_1ph) = match mode {
        FluctuationMode::Asymptotic => (mean_n1, e1ph_hi),
        FluctuationMode::Chernoff => {
            let n1_bound = observed_bounds(mean_n1, xi)?;
            let err_bound = observed_bounds(mean_n1 * e1ph_hi, xi)?;
            (n1_bound.lower, err_bound.upper / mean_n1)
        }
    };
    Ok(UntaggedEstimate {
        n_1,
        e_1ph,
        s1z_lower: s1z_lo,
        e1ph_upper_expected: e1ph_hi,
        cap_n_1: n1_pop,
        no_key: false,
    })
}

/// Full estimation chain from observed counts, with the Chernoff
/// invocation tally. Attribution: the n_1 chain covers the three
/// expected-value bounds feeding s1z plus its own observed-value bound;
/// the e_1ph chain covers T_delta, the reuse of the S00 lower side, the
/// already-bounded s1z input and its own observed-value bound.
pub fn estimate(
    params: &ProtocolParams,
    obs: &ObservedCounts,
    xi: f64,
    mode: FluctuationMode,
) -> Result<(UntaggedEstimate, ChernoffTally)> {
    let bounds = expected_rate_bounds(obs, xi, mode)?;
    let mut tally = ChernoffTally::default();
    tally.n1_chain += 3; // S00 (two-sided), pooled S01+S10, pooled S02+S20
    tally.e1ph_chain += 1; // T_delta upper

    let s1z_lo = s1z_lower(&bounds, params.mu_1, params.mu_2);
    if s1z_lo == 0.0 {
        let est = untagged_estimates(params, 0.0, 1.0, xi, mode)?;
        return Ok((est, tally));
    }
    let e1ph_hi = e1ph_upper(&bounds, s1z_lo, params.mu_1)?;
    tally.e1ph_chain += 2; // S00 lower side, bounded s1z input

    let est = untagged_estimates(params, s1z_lo, e1ph_hi, xi, mode)?;
    if !est.no_key && mode == FluctuationMode::Chernoff {
        tally.n1_chain += 1; // phi^L on N_1 s1z
        tally.e1ph_chain += 1; // phi^U on N_1 s1z e1ph
    }
    Ok((est, tally))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_observations, ChannelPoint};
    use crate::chernoff::expected_bounds;
    use crate::types::ExperimentParams;

    fn obs_template() -> ObservedCounts {
        ObservedCounts {
            cap_n_00: 10_000_000_000,
            cap_n_01: 10_000_000_000,
            cap_n_10: 10_000_000_000,
            cap_n_02: 10_000_000_000,
            cap_n_20: 10_000_000_000,
            cap_n_delta: 1_000_000.0,
            n_00: 0,
            n_01: 1_000_000,
            n_10: 1_000_000,
            n_02: 4_000_000,
            n_20: 4_000_000,
            n_delta_plus_r: 100,
            n_delta_minus_l: 100,
            n_t: 1_000_000,
            e_z: 0.01,
        }
    }

    #[test]
    fn zero_counts_use_zero_count_convention() {
        let mut obs = obs_template();
        obs.n_01 = 0;
        obs.n_10 = 0;
        obs.n_02 = 0;
        obs.n_20 = 0;
        obs.n_delta_plus_r = 0;
        obs.n_delta_minus_l = 0;
        let xi = 1e-10;
        let b = expected_rate_bounds(&obs, xi, FluctuationMode::Chernoff).unwrap();
        assert_eq!(b.s00_lo, 0.0);
        assert_eq!(b.s01_10_lo, 0.0);
        let ln2xi = (2.0 / xi).ln();
        assert!((b.s00_hi - ln2xi / 1e10).abs() < 1e-20);
        assert!((b.s02_20_hi - ln2xi / 2e10).abs() < 1e-20);
        assert!((b.t_delta_hi - ln2xi / 2e6).abs() < 1e-15);
    }

    #[test]
    fn pooled_lower_bound_reference() {
        // n_01 = n_10 = 1e6 over N = 1e10 each at xi = 1e-10.
        let obs = obs_template();
        let b = expected_rate_bounds(&obs, 1e-10, FluctuationMode::Chernoff).unwrap();
        let direct = expected_bounds(2_000_000, 1e-10).unwrap();
        assert!((b.s01_10_lo - direct.lower / 2e10).abs() < 1e-18);
        assert!(b.s01_10_lo > 0.99e-4 && b.s01_10_lo < 1e-4);
    }

    #[test]
    fn pooling_tightens_relative_width() {
        for count in [100u128, 10_000, 1_000_000] {
            let pooled = expected_bounds(2 * count, 1e-10).unwrap();
            let single = expected_bounds(count, 1e-10).unwrap();
            let w_pooled = (2.0 * count as f64 - pooled.lower) / (2.0 * count as f64);
            let w_single = (count as f64 - single.lower) / count as f64;
            assert!(w_pooled < w_single);
        }
    }

    #[test]
    fn empty_source_rejected() {
        let mut obs = obs_template();
        obs.cap_n_01 = 0;
        obs.cap_n_10 = 0;
        let err = expected_rate_bounds(&obs, 1e-10, FluctuationMode::Chernoff).unwrap_err();
        assert_eq!(err, Error::EmptySource("N_01+N_10"));
    }

    #[test]
    fn s1z_lower_hand_evaluation() {
        // mu1 = 0.1, mu2 = 0.2, pooled lows 1e-4 each, highs 2e-4 each,
        // S00_hi = 0: value 9.889e-4.
        let bounds = ExpectedRateBounds {
            s00_lo: 0.0,
            s00_hi: 0.0,
            s01_10_lo: 1e-4,
            s02_20_hi: 2e-4,
            t_delta_hi: 0.0,
        };
        let v = s1z_lower(&bounds, 0.1, 0.2);
        assert!((v - 9.889e-4).abs() < 1e-7, "got {v}");
    }

    #[test]
    fn s1z_lower_clamps() {
        let bounds = ExpectedRateBounds {
            s00_lo: 0.0,
            s00_hi: 1.0,
            s01_10_lo: 1e-6,
            s02_20_hi: 1e-6,
            t_delta_hi: 0.0,
        };
        assert_eq!(s1z_lower(&bounds, 0.1, 0.2), 0.0);
        let zero = ExpectedRateBounds {
            s00_lo: 0.0,
            s00_hi: 0.0,
            s01_10_lo: 0.0,
            s02_20_hi: 0.0,
            t_delta_hi: 0.0,
        };
        assert_eq!(s1z_lower(&zero, 0.1, 0.2), 0.0);
    }

    #[test]
    fn e1ph_upper_hand_evaluation() {
        let bounds = ExpectedRateBounds {
            s00_lo: 1e-5,
            s00_hi: 0.0,
            s01_10_lo: 0.0,
            s02_20_hi: 0.0,
            t_delta_hi: 1e-5,
        };
        let v = e1ph_upper(&bounds, 1e-3, 0.1).unwrap();
        assert!((v - 0.036067).abs() < 1e-5, "got {v}");
    }

    #[test]
    fn e1ph_upper_vanishing_numerator_and_zero_denominator() {
        let mut bounds = ExpectedRateBounds {
            s00_lo: 1e-5,
            s00_hi: 0.0,
            s01_10_lo: 0.0,
            s02_20_hi: 0.0,
            t_delta_hi: 0.5 * (-0.2f64).exp() * 1e-5,
        };
        assert_eq!(e1ph_upper(&bounds, 1e-3, 0.1).unwrap(), 0.0);
        bounds.t_delta_hi = 1e-5;
        assert_eq!(e1ph_upper(&bounds, 0.0, 0.1).unwrap_err(), Error::ZeroDenominator);
    }

    fn params_for_untagged() -> ProtocolParams {
        ProtocolParams {
            n_pulses: 1_000_000_000_000,
            p_z: 0.5,
            p_z0: 0.5,
            p_0: 0.5,
            p_1: 0.25,
            mu_1: 0.1,
            mu_2: 0.2,
            mu_z: 0.4,
            delta: std::f64::consts::PI / 8.0,
        }
    }

    #[test]
    fn untagged_no_key_cases() {
        let p = params_for_untagged();
        let est = untagged_estimates(&p, 0.0, 0.1, 1e-10, FluctuationMode::Chernoff).unwrap();
        assert!(est.no_key);
        assert_eq!(est.n_1, 0.0);
        assert_eq!(est.e_1ph, 1.0);

        for pz0 in [0.0, 1.0] {
            let mut p = params_for_untagged();
            p.p_z0 = pz0;
            let est = untagged_estimates(&p, 1e-3, 0.1, 1e-10, FluctuationMode::Chernoff).unwrap();
            assert_eq!(est.cap_n_1, 0.0);
            assert_eq!(est.n_1, 0.0);
            assert!(est.no_key);
        }
    }

    #[test]
    fn untagged_gaussian_width_sanity() {
        // Choose s1z so that N_1 * s1z = 1e6 exactly.
        let p = params_for_untagged();
        let pop = cap_n_1(&p);
        let s1z = 1e6 / pop;
        let xi = 1e-10;
        let est = untagged_estimates(&p, s1z, 0.05, xi, FluctuationMode::Chernoff).unwrap();
        let gaussian = 2.0 * (2.0 * 1e6 * (2.0 / xi).ln()).sqrt();
        assert!(est.n_1 < 1e6);
        assert!(est.n_1 > 1e6 - gaussian);
    }

    #[test]
    fn budget_accounting_four_per_chain() {
        let exp = ExperimentParams::default();
        let p = params_for_untagged();
        let obs = simulate_observations(&p, &exp, &ChannelPoint::new(100.0, &exp)).unwrap();
        let (_, tally) = estimate(&p, &obs, 1e-10, FluctuationMode::Chernoff).unwrap();
        assert_eq!(tally.n1_chain, 4);
        assert_eq!(tally.e1ph_chain, 4);
    }

    #[test]
    fn n1_monotone_in_heralded_counts() {
        let exp = ExperimentParams::default();
        let p = params_for_untagged();
        let obs = simulate_observations(&p, &exp, &ChannelPoint::new(100.0, &exp)).unwrap();
        let (base, _) = estimate(&p, &obs, 1e-10, FluctuationMode::Chernoff).unwrap();
        let mut boosted = obs;
        boosted.n_01 = obs.n_01 * 11 / 10;
        boosted.n_10 = obs.n_10 * 11 / 10;
        let (up, _) = estimate(&p, &boosted, 1e-10, FluctuationMode::Chernoff).unwrap();
        assert!(up.n_1 >= base.n_1);
    }

    #[test]
    fn xi_monotonicity() {
        let exp = ExperimentParams::default();
        let p = params_for_untagged();
        let obs = simulate_observations(&p, &exp, &ChannelPoint::new(100.0, &exp)).unwrap();
        let (tight, _) = estimate(&p, &obs, 1e-7, FluctuationMode::Chernoff).unwrap();
        let (loose, _) = estimate(&p, &obs, 1e-10, FluctuationMode::Chernoff).unwrap();
        assert!(loose.n_1 <= tight.n_1);
        assert!(loose.e_1ph >= tight.e_1ph);
    }

    #[test]
    fn asymptotic_mode_reproduces_exact_rates() {
        // With delta = 0 corrections, the chain reproduces the plain
        // formula evaluation on the observed rates.
        let exp = ExperimentParams::default();
        let p = params_for_untagged();
        let obs = simulate_observations(&p, &exp, &ChannelPoint::new(100.0, &exp)).unwrap();
        let bounds = expected_rate_bounds(&obs, 1e-10, FluctuationMode::Asymptotic).unwrap();
        let s00 = obs.n_00 as f64 / obs.cap_n_00 as f64;
        assert_eq!(bounds.s00_lo, s00);
        assert_eq!(bounds.s00_hi, s00);
        let (est, _) = estimate(&p, &obs, 1e-10, FluctuationMode::Asymptotic).unwrap();
        let s1z = s1z_lower(&bounds, p.mu_1, p.mu_2);
        assert_eq!(est.s1z_lower, s1z);
        assert_eq!(est.n_1, cap_n_1(&p) * s1z);
        assert_eq!(est.e_1ph, est.e1ph_upper_expected);
    }
}
