//! Central domain types shared by the whole pipeline.
//!
//! All of these are immutable value objects; tallies are kept as exact
//! integers while rates and expected values are doubles.

use crate::error::{Error, Result};

/// Everything Alice and Bob choose: source probabilities, intensities,
/// the phase-slice width and the total number of pulse pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Total number of two-sided pulse pairs, N.
    pub n_pulses: u128,
    /// Probability of choosing the signal window.
    pub p_z: f64,
    /// Probability of sending vacuum inside a signal window.
    pub p_z0: f64,
    /// Probability of vacuum in a decoy window.
    pub p_0: f64,
    /// Probability of intensity mu_1 in a decoy window.
    pub p_1: f64,
    /// Weaker decoy intensity.
    pub mu_1: f64,
    /// Stronger decoy intensity.
    pub mu_2: f64,
    /// Signal-window intensity.
    pub mu_z: f64,
    /// Phase-slice width, in radians.
    pub delta: f64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_z", self.p_z),
            ("p_z0", self.p_z0),
            ("p_0", self.p_0),
            ("p_1", self.p_1),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::ConstraintViolation(format!(
                    "{name} must be in [0,1], got {p}"
                )));
            }
        }
        if self.p_0 + self.p_1 > 1.0 {
            return Err(Error::ConstraintViolation(format!(
                "p_0+p_1 \u{2264} 1 violated: {} + {}",
                self.p_0, self.p_1
            )));
        }
        if !(self.mu_1 > 0.0 && self.mu_1 < self.mu_2) {
            return Err(Error::ConstraintViolation(format!(
                "mu_1 < mu_2 violated (need 0 < mu_1 < mu_2): mu_1={}, mu_2={}",
                self.mu_1, self.mu_2
            )));
        }
        if !(self.mu_z > 0.0) {
            return Err(Error::ConstraintViolation(format!(
                "mu_z > 0 violated: {}",
                self.mu_z
            )));
        }
        if !(self.delta > 0.0 && self.delta <= std::f64::consts::PI) {
            return Err(Error::ConstraintViolation(format!(
                "delta must be in (0, pi], got {}",
                self.delta
            )));
        }
        if self.n_pulses < 1 {
            return Err(Error::ConstraintViolation(
                "n_pulses must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Channel and detector constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    /// Dark count probability per detector per window.
    pub p_d: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Error-correction inefficiency, f >= 1.
    pub f: f64,
    /// Fiber loss coefficient in dB/km.
    pub alpha_f: f64,
    /// Error rate of the vacuum state. Kept as a field so the fixed-1/2
    /// assumption stays visible and testable.
    pub e_0: f64,
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_d", self.p_d),
            ("e_d", self.e_d),
            ("eta_d", self.eta_d),
            ("e_0", self.e_0),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::ConstraintViolation(format!(
                    "{name} must be in [0,1], got {p}"
                )));
            }
        }
        if !(self.f >= 1.0) {
            return Err(Error::ConstraintViolation(format!(
                "f \u{2265} 1 violated: {}",
                self.f
            )));
        }
        if !(self.alpha_f > 0.0) {
            return Err(Error::ConstraintViolation(format!(
                "alpha_f > 0 violated: {}",
                self.alpha_f
            )));
        }
        Ok(())
    }
}

impl Default for ExperimentParams {
    /// The simulation reference values: p_d = 1e-10, e_d = 15%,
    /// eta_d = 80%, f = 1.1, alpha_f = 0.2 dB/km, e_0 = 1/2.
    fn default() -> Self {
        ExperimentParams {
            p_d: 1.0e-10,
            e_d: 0.15,
            eta_d: 0.80,
            f: 1.1,
            alpha_f: 0.2,
            e_0: 0.5,
        }
    }
}

/// The per-use Chernoff failure probability and the epsilon assignments
/// derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityBudget {
    pub xi: f64,
    pub eps_cor: f64,
    pub eps_hat: f64,
    pub eps_pa: f64,
    pub eps_bar: f64,
    pub eps_n1: f64,
    pub eps_sec: f64,
    pub eps_tol: f64,
}

impl SecurityBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::ConstraintViolation(format!(
                "xi must be in (0,1), got {}",
                self.xi
            )));
        }
        let sec = 2.0 * self.eps_hat + 4.0 * self.eps_bar + self.eps_pa + self.eps_n1;
        if (self.eps_sec - sec).abs() > 1e-15 * sec.max(1e-300) {
            return Err(Error::ConstraintViolation(
                "eps_sec != 2*eps_hat + 4*eps_bar + eps_pa + eps_n1".into(),
            ));
        }
        let tol = self.eps_cor + self.eps_sec;
        if (self.eps_tol - tol).abs() > 1e-15 * tol.max(1e-300) {
            return Err(Error::ConstraintViolation(
                "eps_tol != eps_cor + eps_sec".into(),
            ));
        }
        Ok(())
    }
}

/// Window tallies produced by an experiment (or by the linear model).
///
/// `cap_n_*` are instance counts N_jk, `n_*` the one-detector heralded
/// events among them. `cap_n_delta` is kept as the exact real so that tiny
/// slice populations do not round to zero before entering rate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedCounts {
    pub cap_n_00: u128,
    pub cap_n_01: u128,
    pub cap_n_10: u128,
    pub cap_n_02: u128,
    pub cap_n_20: u128,
    /// N_delta+- per sign, as the exact (unrounded) expected population.
    pub cap_n_delta: f64,
    pub n_00: u128,
    pub n_01: u128,
    pub n_10: u128,
    pub n_02: u128,
    pub n_20: u128,
    /// Right-detector effective events from C_delta+.
    pub n_delta_plus_r: u128,
    /// Left-detector effective events from C_delta-.
    pub n_delta_minus_l: u128,
    /// Effective Z-window events.
    pub n_t: u128,
    /// Z-window error rate.
    pub e_z: f64,
}

impl ObservedCounts {
    pub fn validate(&self) -> Result<()> {
        let pairs: [(&str, u128, f64); 7] = [
            ("n_00", self.n_00, self.cap_n_00 as f64),
            ("n_01", self.n_01, self.cap_n_01 as f64),
            ("n_10", self.n_10, self.cap_n_10 as f64),
            ("n_02", self.n_02, self.cap_n_02 as f64),
            ("n_20", self.n_20, self.cap_n_20 as f64),
            ("n_delta_plus_r", self.n_delta_plus_r, self.cap_n_delta),
            ("n_delta_minus_l", self.n_delta_minus_l, self.cap_n_delta),
        ];
        for (name, n, cap) in pairs {
            if (n as f64) > cap + 0.5 {
                return Err(Error::ConstraintViolation(format!(
                    "{name} = {n} exceeds its instance count {cap}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.e_z) {
            return Err(Error::ConstraintViolation(format!(
                "e_z must be in [0,1], got {}",
                self.e_z
            )));
        }
        if self.cap_n_delta < 0.0 {
            return Err(Error::ConstraintViolation(
                "cap_n_delta must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// The full bounds chain for one evaluation of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateResult {
    /// Lower bound of the expected untagged counting rate.
    pub s1z_lower: f64,
    /// Upper bound of the expected untagged phase-flip error rate.
    pub e1ph_upper_expected: f64,
    /// Lower bound on the number of untagged bits.
    pub n_1: f64,
    /// Phase-flip error rate after the observed-value inflation.
    pub e_1ph: f64,
    /// Bits disclosed during error correction.
    pub leak_ec: f64,
    /// Final key length l, floored and clamped at zero.
    pub key_len: u128,
    /// R = l / N.
    pub rate_per_pulse: f64,
    /// Set when the bounds give no key (e1ph over 1/2, vacuous decoy
    /// bound, or a degenerate channel).
    pub no_key: bool,
    /// The parameters that produced this result.
    pub params: ProtocolParams,
}

/// Check every type invariant on a full configuration. Idempotent; a
/// config passing here never triggers a domain error downstream except
/// the documented degenerate-channel case.
pub fn validate(
    params: &ProtocolParams,
    exp: &ExperimentParams,
    sec: &SecurityBudget,
) -> Result<()> {
    params.validate()?;
    exp.validate()?;
    sec.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyrate::security_budget;

    fn base_params() -> ProtocolParams {
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
    fn valid_config_passes() {
        let sec = security_budget(1e-10).unwrap();
        validate(&base_params(), &ExperimentParams::default(), &sec).unwrap();
    }

    #[test]
    fn inverted_intensities_rejected() {
        let mut p = base_params();
        p.mu_1 = 0.2;
        p.mu_2 = 0.1;
        let err = p.validate().unwrap_err();
        assert!(matches!(err, Error::ConstraintViolation(ref m) if m.contains("mu_1 < mu_2")));
    }

    #[test]
    fn decoy_probability_overflow_rejected() {
        let mut p = base_params();
        p.p_0 = 0.7;
        p.p_1 = 0.5;
        let err = p.validate().unwrap_err();
        assert!(matches!(err, Error::ConstraintViolation(ref m) if m.contains("p_0+p_1")));
    }

    #[test]
    fn validate_is_idempotent() {
        let p = base_params();
        let exp = ExperimentParams::default();
        let sec = security_budget(1e-10).unwrap();
        validate(&p, &exp, &sec).unwrap();
        validate(&p, &exp, &sec).unwrap();
    }

    #[test]
    fn heralded_counts_cannot_exceed_instances() {
        let obs = ObservedCounts {
            cap_n_00: 10,
            cap_n_01: 10,
            cap_n_10: 10,
            cap_n_02: 10,
            cap_n_20: 10,
            cap_n_delta: 10.0,
            n_00: 11,
            n_01: 0,
            n_10: 0,
            n_02: 0,
            n_20: 0,
            n_delta_plus_r: 0,
            n_delta_minus_l: 0,
            n_t: 0,
            e_z: 0.0,
        };
        assert!(obs.validate().is_err());
    }
}
