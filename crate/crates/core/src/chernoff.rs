//! Bidirectional Chernoff machinery.
//!
//! `expected_bounds` confines the expected value of a sum of Bernoulli
//! variables given its observed value; `observed_bounds` confines the
//! observed value given the expectation. Both tails use xi/2 each, so one
//! call consumes one unit xi of the failure budget.
//!
//! All defining equations are solved on their logarithm: with
//! g(d) = d - (1+d) ln(1+d), the two-parameter family becomes
//!   expected:  X * g(d1) / (1+d1)   = ln(xi/2)   (lower,  d1 in (0, inf))
//!              X * g2(d2) / (1-d2)  = ln(xi/2)   (upper,  d2 in (0, 1))
//!   observed:  Y * g(d1')           = ln(xi/2)   (upper)
//!              Y * g2(d2')          = ln(xi/2)   (lower)
//! where g2(d) = -d - (1-d) ln(1-d). Every left side is strictly
//! decreasing in d, so a bisection bracket is guaranteed.

use crate::error::Result;
use crate::numerics::{solve_monotone, Tolerance};

/// A two-sided bound together with the failure probability it consumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBound {
    pub lower: f64,
    pub upper: f64,
    pub failure_prob: f64,
}

fn tol() -> Tolerance {
    Tolerance {
        rel: 1e-13,
        max_iter: 200,
    }
}

// d - (1+d) ln(1+d), the upper-tail exponent. The direct form cancels
// catastrophically for small d (the relevant regime once X is large), so
// switch to the series -sum_{k>=2} (-d)^k / (k(k-1)) there.
fn g_plus(d: f64) -> f64 {
    if d < 0.5 {
        g_series(-d)
    } else {
        d - (1.0 + d) * d.ln_1p()
    }
}

// -d - (1-d) ln(1-d), the lower-tail exponent, d in (0,1). Same series
// with the opposite sign pattern: -sum_{k>=2} d^k / (k(k-1)).
fn g_minus(d: f64) -> f64 {
    if d < 0.5 {
        g_series(d)
    } else {
        -d - (1.0 - d) * (-d).ln_1p()
    }
}

// -sum_{k>=2} s^k / (k(k-1)) for |s| < 1; equals g_plus(-s) and g_minus(s).
fn g_series(s: f64) -> f64 {
    let mut term = s * s / 2.0;
    let mut sum = term;
    let mut k = 2.0;
    loop {
        term *= s * (k - 1.0) / (k + 1.0);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            return -sum;
        }
        k += 1.0;
    }
}

// Solve lhs(d) = ln(xi/2) on [lo, hi], growing hi geometrically if the
// default bracket is not wide enough (only ever needed for very small X).
fn solve_tail<F: Fn(f64) -> f64>(lhs: F, lo: f64, mut hi: f64, hi_cap: f64, target: f64) -> Result<f64> {
    while lhs(hi) > target && hi < hi_cap {
        hi = (hi * 10.0).min(hi_cap);
    }
    solve_monotone(lhs, lo, hi, target, tol())
}

/// Solve the two tail equations of the expected-value bound for X >= 1:
/// returns (d1, d2) with
///   X g(d1)/(1+d1) = ln(xi/2)  and  X g2(d2)/(1-d2) = ln(xi/2).
pub fn expected_deltas(x: f64, xi: f64) -> Result<(f64, f64)> {
    let target = (xi / 2.0).ln();
    let d1 = solve_tail(|d| x * g_plus(d) / (1.0 + d), 1e-12, 1e6, 1e300, target)?;
    let d2 = solve_monotone(|d| x * g_minus(d) / (1.0 - d), 1e-12, 1.0 - 1e-12, target, tol())?;
    Ok((d1, d2))
}

/// Bound the expected value of a Bernoulli sum from its observed value X:
/// lower = X/(1+d1), upper = X/(1-d2).
///
/// Zero-count convention: for X = 0 the defining equations degenerate, so
/// the bound is [0, ln(2/xi)], the limiting tail of the same family.
pub fn expected_bounds(x_observed: u128, xi: f64) -> Result<IntervalBound> {
    debug_assert!(xi > 0.0 && xi < 1.0);
    if x_observed == 0 {
        return Ok(IntervalBound {
            lower: 0.0,
            upper: (2.0 / xi).ln(),
            failure_prob: xi,
        });
    }
    let x = x_observed as f64;
    let (d1, d2) = expected_deltas(x, xi)?;
    Ok(IntervalBound {
        lower: x / (1.0 + d1),
        upper: x / (1.0 - d2),
        failure_prob: xi,
    })
}

/// Bound the observed value of a Bernoulli sum from its expectation Y:
/// upper = (1+d1')Y, lower = (1-d2')Y.
///
/// When Y < ln(2/xi) the lower-tail equation has no root in (0,1); the
/// lower bound is then 0 (the d -> 1 limit). At Y = 0 the same convention
/// as `expected_bounds` applies.
pub fn observed_bounds(y_expected: f64, xi: f64) -> Result<IntervalBound> {
    debug_assert!(xi > 0.0 && xi < 1.0);
    debug_assert!(y_expected >= 0.0);
    if y_expected == 0.0 {
        return Ok(IntervalBound {
            lower: 0.0,
            upper: (2.0 / xi).ln(),
            failure_prob: xi,
        });
    }
    let y = y_expected;
    let (d1, d2) = observed_deltas(y, xi)?;
    Ok(IntervalBound {
        lower: match d2 {
            Some(d2) => (1.0 - d2) * y,
            None => 0.0,
        },
        upper: (1.0 + d1) * y,
        failure_prob: xi,
    })
}

/// Solve the tail equations of the observed-value bound for Y > 0:
/// Y g(d1') = ln(xi/2) and Y g2(d2') = ln(xi/2). The lower tail has no
/// root in (0,1) when Y < ln(2/xi) (g2 -> -1 as d -> 1); `None` is
/// returned for d2' in that case and the lower bound is 0.
pub fn observed_deltas(y: f64, xi: f64) -> Result<(f64, Option<f64>)> {
    let target = (xi / 2.0).ln();
    let d1 = solve_tail(|d| y * g_plus(d), 1e-12, 1e6, 1e300, target)?;
    let d2 = if -y > target {
        None
    } else {
        Some(solve_monotone(
            |d| y * g_minus(d),
            1e-12,
            1.0 - 1e-12,
            target,
            tol(),
        )?)
    };
    Ok((d1, d2))
}
