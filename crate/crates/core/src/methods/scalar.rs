//! Step-size coefficient of the accelerated schemes.

use crate::error::{Error, Result};
use crate::oracle::factorial;

/// Positive root `a` of `a^r = c(A + a)^{r−1}` and its relative residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficient {
    pub a: f64,
    pub c: f64,
    pub residual: f64,
}

/// `c = (p−1)!/(2^{3p−1} M)`
pub fn coefficient_scale(m: f64, p: usize) -> f64 {
    factorial(p - 1) / (2f64.powi(3 * p as i32 - 1) * m)
}

/// `|a^r − c(A+a)^{r−1}| / max(a^r, c)`
pub fn step_residual(a: f64, big_a: f64, c: f64, r: f64) -> f64 {
    let lhs = a.powf(r);
    let rhs = c * (big_a + a).powf(r - 1.0);
    (lhs - rhs).abs() / lhs.max(c)
}

/// Solves `a^{p+α} = c(A + a)^{p+α−1}` with `c = (p−1)!/(2^{3p−1}M)`.
///
/// The map `a ↦ a^r/(A+a)^{r−1}` increases strictly from 0 to ∞, so the root is
/// unique. Works on `g(a) = r ln a − ln c − (r−1) ln(A+a)`, which is increasing
/// and well scaled, bracketing upward from `max(1, c)`.
pub fn solve_a_t(big_a: f64, m: f64, p: usize, alpha: f64) -> Result<StepCoefficient> {
    if !(big_a.is_finite() && big_a >= 0.0) {
        return Err(Error::Config(format!("A must be nonnegative, got {big_a}")));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Config(format!("M must be positive, got {m}")));
    }
    if p < 1 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("invalid order/exponent p={p}, alpha={alpha}")));
    }
    let c = coefficient_scale(m, p);
    let r = p as f64 + alpha;
    if big_a == 0.0 {
        return Ok(StepCoefficient { a: c, c, residual: 0.0 });
    }
    let ln_c = c.ln();
    let g = |a: f64| r * a.ln() - ln_c - (r - 1.0) * (big_a + a).ln();
    let dg = |a: f64| r / a - (r - 1.0) / (big_a + a);

    let mut hi = c.max(1.0);
    let mut lo = 0.0;
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NonFinite("step coefficient bracket"));
        }
    }
    if lo == 0.0 {
        // Halve down until g < 0 so the bracket has finite ends.
        lo = hi;
        while g(lo) >= 0.0 {
            lo *= 0.5;
            if lo == 0.0 {
                return Err(Error::NonFinite("step coefficient bracket"));
            }
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(a);
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let newton = a - v / dg(a);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - a).abs() <= 1e-16 * a || hi - lo <= 4.0 * f64::EPSILON * hi {
            a = next;
            break;
        }
        a = next;
    }
    Ok(StepCoefficient {
        a,
        c,
        residual: step_residual(a, big_a, c, r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_accumulator_gives_scale() {
        let s = solve_a_t(0.0, 1.0 / 32.0, 2, 1.0).unwrap();
        assert_eq!(s.a, 1.0);
        assert_eq!(s.residual, 0.0);
        let s = solve_a_t(0.0, 2.0, 3, 0.5).unwrap();
        assert!((s.a - coefficient_scale(2.0, 3)).abs() < 1e-18);
    }

    #[test]
    fn cubic_example_against_bisection() {
        // a³ = (1+a)²
        let s = solve_a_t(1.0, 1.0 / 32.0, 2, 1.0).unwrap();
        let (mut lo, mut hi) = (1.0f64, 3.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) < (1.0 + mid).powi(2) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((s.a - lo).abs() < 1e-12);
        assert!((s.a - 2.1478990357047874).abs() < 1e-12);
        assert!(s.residual <= 1e-12);
    }

    #[test]
    fn doubling_m_decreases_root() {
        for big_a in [0.0, 1e-6, 0.3, 5.0, 1e4] {
            for m in [1e-3, 0.1, 1.0, 30.0] {
                let a1 = solve_a_t(big_a, m, 2, 1.0).unwrap().a;
                let a2 = solve_a_t(big_a, 2.0 * m, 2, 1.0).unwrap().a;
                assert!(a2 < a1, "A={big_a}, M={m}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_a_t(-1.0, 1.0, 2, 1.0).is_err());
        assert!(solve_a_t(1.0, 0.0, 2, 1.0).is_err());
        assert!(solve_a_t(1.0, 1.0, 2, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn residual_is_tiny(big_a in 0.0f64..1e8, log_m in -6.0f64..6.0, p in 2usize..4, alpha in 0.0f64..=1.0) {
            let s = solve_a_t(big_a, 10f64.powf(log_m), p, alpha).unwrap();
            prop_assert!(s.a > 0.0);
            prop_assert!(s.residual <= 1e-12, "residual {}", s.residual);
        }
    }
}
