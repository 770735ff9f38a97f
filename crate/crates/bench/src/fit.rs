//! Empirical decay exponents of residual traces.

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// `log residual ≈ c − exponent · log(t − t_shift)` over `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub window: [usize; 2],
    pub exponent: f64,
    pub r_squared: f64,
    pub t_shift: usize,
    pub points: usize,
}

pub const MIN_POINTS: usize = 10;
pub const MAX_SHIFT: usize = 10;

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    (slope, r2)
}

/// Grid-searches the transient `m ∈ {0, …, min(10, T/2)}` and keeps the fit
/// with the largest r² (ties go to the smaller shift). Each candidate uses all
/// points with `t > m` and a positive residual, and needs at least ten of them.
pub fn fit_rate(series: &[(usize, f64)]) -> Result<RateFit> {
    let t_max = series.iter().map(|(t, _)| *t).max().unwrap_or(0);
    let mut best: Option<RateFit> = None;
    for m in 0..=MAX_SHIFT.min(t_max / 2) {
        let pts: Vec<(usize, f64)> = series
            .iter()
            .copied()
            .filter(|(t, r)| *t > m && *r > 0.0 && r.is_finite())
            .collect();
        if pts.len() < MIN_POINTS {
            continue;
        }
        let xs: Vec<f64> = pts.iter().map(|(t, _)| ((t - m) as f64).ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, r)| r.ln()).collect();
        let (slope, r2) = least_squares(&xs, &ys);
        let cand = RateFit {
            window: [pts[0].0, pts[pts.len() - 1].0],
            exponent: -slope,
            r_squared: r2,
            t_shift: m,
            points: pts.len(),
        };
        if best.as_ref().is_none_or(|b| cand.r_squared > b.r_squared + 1e-12) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| {
        BenchError::FitUnavailable(format!(
            "need at least {MIN_POINTS} post-transient points with positive residual, trace has {}",
            series.iter().filter(|(t, r)| *t > 0 && *r > 0.0).count()
        ))
    })
}

/// Residual series `(t, residual)` from trace rows, skipping the start row.
pub fn residual_series(rows: &[crate::trace::TraceRow]) -> Vec<(usize, f64)> {
    rows.iter()
        .filter(|r| r.t > 0)
        .filter_map(|r| r.residual.map(|v| (r.t, v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_law() {
        let s: Vec<_> = (1..=60).map(|t| (t, 100.0 * (t as f64).powi(-3))).collect();
        let fit = fit_rate(&s).unwrap();
        assert!((fit.exponent - 3.0).abs() < 0.01);
        assert_eq!(fit.t_shift, 0);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<_> = (1..=80)
            .map(|t| (t, 7.0 * (t as f64).powi(-2) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
            .collect();
        let fit = fit_rate(&s).unwrap();
        assert!((fit.exponent - 2.0).abs() <= 0.1, "{}", fit.exponent);
    }

    #[test]
    fn shifted_power_law_recovers_shift() {
        let s: Vec<_> = (1..=80).filter(|t| *t > 4).map(|t| (t, ((t - 4) as f64).powi(-2))).collect();
        let fit = fit_rate(&s).unwrap();
        assert_eq!(fit.t_shift, 4);
        assert!((fit.exponent - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_residual_has_zero_slope() {
        let s: Vec<_> = (1..=30).map(|t| (t, 0.5)).collect();
        let fit = fit_rate(&s).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert!((0.0..=1.0).contains(&fit.r_squared));
    }

    #[test]
    fn too_few_points() {
        let s: Vec<_> = (1..=8).map(|t| (t, 1.0 / t as f64)).collect();
        assert!(matches!(fit_rate(&s), Err(BenchError::FitUnavailable(_))));
        let zeros: Vec<_> = (1..=30).map(|t| (t, 0.0)).collect();
        assert!(fit_rate(&zeros).is_err());
    }
}
