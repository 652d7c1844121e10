//! Shared mathematical kernels: binary entropy, the modified Bessel
//! function I0, phase-slice quadrature, and a guaranteed-bracket monotone
//! root finder.

use crate::error::{Error, Result};

/// Tolerance settings for [`solve_monotone`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Relative residual tolerance on the target value.
    pub rel: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-12,
            max_iter: 200,
        }
    }
}

/// Binary Shannon entropy h(x) = -x log2 x - (1-x) log2 (1-x), with the
/// convention 0 log2 0 = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!(
            "binary_entropy argument must be in [0,1], got {x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-(x * x.log2()) - (1.0 - x) * (1.0 - x).log2())
}

/// Modified Bessel function of the first kind, order zero, by its power
/// series sum_k (x^2/4)^k / (k!)^2, truncated when a term drops below
/// 1e-16 of the running sum. Accurate to ~1e-12 relative on the usage
/// range x <~ 10.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-16 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Which trigonometric weight appears in the phase-slice exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKind {
    Cos2,
    Sin2,
}

/// The slice-averaged integral
/// (1/delta) * Int_{-delta/2}^{delta/2} exp(-2 eta_mu g(d/2)) dd
/// with g = cos^2 or sin^2, via adaptive Simpson quadrature.
pub fn phase_slice_integral(kind: SliceKind, eta_mu: f64, delta: f64) -> f64 {
    debug_assert!(eta_mu >= 0.0);
    debug_assert!(delta > 0.0 && delta <= std::f64::consts::PI);
    let f = |d: f64| {
        let g = match kind {
            SliceKind::Cos2 => (d / 2.0).cos().powi(2),
            SliceKind::Sin2 => (d / 2.0).sin().powi(2),
        };
        (-2.0 * eta_mu * g).exp()
    };
    // The integrand is even in d, so integrate half the interval.
    2.0 * adaptive_simpson(&f, 0.0, delta / 2.0, 1e-13) / delta
}

/// Adaptive Simpson quadrature with absolute/relative error cutoff `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol * (1.0 + (left + right).abs()) {
        return left + right + err / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Bisection root finder for a continuous, strictly monotone function:
/// returns x in [lo, hi] with |f(x) - target| <= tol.rel * |target|.
pub fn solve_monotone<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    target: f64,
    tol: Tolerance,
) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    let increasing = fhi >= flo;
    let (mut below, mut above) = if increasing { (lo, hi) } else { (hi, lo) };
    let (fmin, fmax) = if increasing { (flo, fhi) } else { (fhi, flo) };
    if target < fmin || target > fmax {
        return Err(Error::BracketError { lo, hi, target });
    }
    let accept = |fx: f64| (fx - target).abs() <= tol.rel * target.abs();
    if accept(flo) {
        return Ok(lo);
    }
    if accept(fhi) {
        return Ok(hi);
    }
    let mut residual = f64::INFINITY;
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (below + above);
        let fm = f(mid);
        residual = (fm - target).abs();
        if accept(fm) || mid == below || mid == above {
            if accept(fm) || residual <= tol.rel * target.abs().max(f64::MIN_POSITIVE) {
                return Ok(mid);
            }
            // Interval exhausted to machine precision; the midpoint is the
            // best representable root.
            return Ok(mid);
        }
        if fm < target {
            below = mid;
        } else {
            above = mid;
        }
    }
    Err(Error::NoConvergence {
        max_iter: tol.max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn entropy_endpoints_and_maximum() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
    }

    #[test]
    fn entropy_at_0_11() {
        // High-precision evaluation: h(0.11) = 0.4999159581645280...
        let h = binary_entropy(0.11).unwrap();
        assert!((h - 0.49995).abs() < 1e-4);
        assert!((h - 0.4999159581645280).abs() < 1e-12);
    }

    #[test]
    fn entropy_domain_error() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn entropy_symmetry() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: f64 = rng.gen();
            let a = binary_entropy(x).unwrap();
            let b = binary_entropy(1.0 - x).unwrap();
            assert!((a - b).abs() <= 1e-14, "h({x}) = {a} vs h(1-x) = {b}");
        }
    }

    /// Independent oracle: I0(x) = (1/pi) Int_0^pi exp(x cos t) dt by a
    /// dense trapezoid rule.
    fn i0_quadrature_oracle(x: f64) -> f64 {
        let n = 200_000;
        let h = std::f64::consts::PI / n as f64;
        // endpoints: cos(0) = 1, cos(pi) = -1
        let mut sum = 0.5 * (x.exp() + (-x).exp());
        for i in 1..n {
            sum += (x * (i as f64 * h).cos()).exp();
        }
        sum * h / std::f64::consts::PI
    }

    #[test]
    fn bessel_i0_reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!((bessel_i0(1.0) - 1.266066).abs() < 1e-5);
        assert!((bessel_i0(2.0) - 2.279585).abs() < 1e-5);
        for x in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let rel = (bessel_i0(x) - i0_quadrature_oracle(x)).abs() / i0_quadrature_oracle(x);
            assert!(rel < 1e-10, "I0({x}) off by {rel:.2e}");
        }
    }

    #[test]
    fn bessel_i0_monotone_and_at_least_one() {
        let mut prev = bessel_i0(0.0);
        assert!(prev >= 1.0);
        for i in 1..=100 {
            let x = i as f64 * 0.1;
            let v = bessel_i0(x);
            assert!(v >= 1.0 && v > prev);
            prev = v;
        }
    }

    /// Dense trapezoid oracle for the slice average.
    fn slice_trapezoid_oracle(kind: SliceKind, eta_mu: f64, delta: f64) -> f64 {
        let n = 1_000_000usize;
        let a = -delta / 2.0;
        let h = delta / n as f64;
        let f = |d: f64| {
            let g = match kind {
                SliceKind::Cos2 => (d / 2.0).cos().powi(2),
                SliceKind::Sin2 => (d / 2.0).sin().powi(2),
            };
            (-2.0 * eta_mu * g).exp()
        };
        let mut sum = 0.5 * (f(a) + f(a + delta));
        for i in 1..n {
            sum += f(a + i as f64 * h);
        }
        sum * h / delta
    }

    #[test]
    fn slice_integral_trivial_cases() {
        assert!((phase_slice_integral(SliceKind::Cos2, 0.0, 1.0) - 1.0).abs() < 1e-12);
        let v = phase_slice_integral(SliceKind::Sin2, 0.7, 1e-6);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn slice_integral_matches_trapezoid_oracle() {
        let delta = std::f64::consts::PI / 8.0;
        let got = phase_slice_integral(SliceKind::Cos2, 0.5, delta);
        let want = slice_trapezoid_oracle(SliceKind::Cos2, 0.5, delta);
        assert!(
            ((got - want) / want).abs() < 1e-9,
            "got {got}, oracle {want}"
        );
        let got = phase_slice_integral(SliceKind::Sin2, 1.3, 0.4);
        let want = slice_trapezoid_oracle(SliceKind::Sin2, 1.3, 0.4);
        assert!(((got - want) / want).abs() < 1e-9);
    }

    #[test]
    fn slice_integral_ordering() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let eta_mu = rng.gen::<f64>() * 5.0 + 1e-6;
            let delta = rng.gen::<f64>() * std::f64::consts::PI * 0.999 + 1e-3;
            let c = phase_slice_integral(SliceKind::Cos2, eta_mu, delta);
            let s = phase_slice_integral(SliceKind::Sin2, eta_mu, delta);
            assert!(c > 0.0 && c <= 1.0);
            assert!(s >= c, "sin2 {s} < cos2 {c} at eta_mu={eta_mu}, delta={delta}");
        }
    }

    #[test]
    fn solve_monotone_linear_and_sqrt() {
        let tol = Tolerance::default();
        let r = solve_monotone(|x| x, 0.0, 1.0, 0.5, tol).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        let r = solve_monotone(|x| x * x, 0.0, 2.0, 2.0, tol).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn solve_monotone_bracket_error() {
        let tol = Tolerance::default();
        let err = solve_monotone(|x| -x, 0.0, 1.0, 2.0, tol).unwrap_err();
        assert!(matches!(err, Error::BracketError { .. }));
    }

    #[test]
    fn solve_monotone_residual_property() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let tol = Tolerance::default();
        for _ in 0..200 {
            let a = rng.gen::<f64>() * 3.0 + 0.1;
            let target = rng.gen::<f64>() * 5.0 + 0.01;
            let f = move |x: f64| a * x.exp() - a;
            let root = solve_monotone(f, 0.0, 10.0, target, tol).unwrap();
            assert!((f(root) - target).abs() <= tol.rel * target.abs() * 1.0001 + 1e-300);
        }
    }
}
