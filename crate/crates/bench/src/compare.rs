//! Observed residuals against the theoretical upper and lower envelopes.

use serde::{Deserialize, Serialize};
use tensor_methods::hardfn::{hard_holder_constant, lower_bound_envelope, optimum_norm_squared};
use tensor_methods::methods::MethodKind;
use tensor_methods::oracle::factorial;

use crate::error::Result;
use crate::theory::{n_nu, n_tilde_nu, TheoryInputs};
use crate::trace::{best_so_far, TraceRow};

/// Everything the envelopes need; fields left `None` make the report partial.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundContext {
    pub method: MethodKind,
    pub p: usize,
    pub nu: f64,
    pub nu_known: bool,
    pub theta: f64,
    /// Hölder constant of the p-th derivative.
    pub holder: Option<f64>,
    /// Fixed `M` for the non-adaptive schemes, `H_0` for the adaptive ones.
    pub coefficient: Option<f64>,
    pub d0: Option<f64>,
    pub r_eps: Option<f64>,
    pub eps: Option<f64>,
    /// `‖x0 − x*‖`, used by the accelerated envelopes.
    pub x0_dist: Option<f64>,
    /// `k` of a hard instance started from the origin; enables the lower envelope.
    pub hard_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: usize,
    pub residual: Option<f64>,
    pub best: Option<f64>,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    /// Running minimum fell below the lower envelope.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: String,
    pub partial: bool,
    pub missing: Vec<String>,
    /// Transient length of the basic schemes' two-phase bound.
    pub transient: Option<usize>,
    pub violations: usize,
    /// Iterations where the residual exceeded the upper envelope (informational).
    pub above_upper: usize,
    pub rows: Vec<BoundRow>,
}

impl BoundContext {
    fn alpha(&self) -> f64 {
        if self.nu_known {
            self.nu
        } else {
            1.0
        }
    }

    fn theory(&self) -> Option<TheoryInputs> {
        Some(TheoryInputs {
            p: self.p,
            nu: self.nu,
            theta: self.theta,
            holder: self.holder?,
            eps: self.eps,
            r_eps: self.r_eps,
        })
    }
}

/// `(scale, threshold)` of the basic-scheme bound `scale / (t − m)^{r−1}`,
/// with `m` the first index whose residual is below `threshold`.
fn basic_envelope(ctx: &BoundContext, missing: &mut Vec<String>) -> Option<(f64, f64)> {
    let p = ctx.p;
    let r = p as f64 + ctx.alpha();
    let d0 = ctx.d0.or_else(|| {
        missing.push("d0".into());
        None
    });
    let lead = (24.0 * p as f64 * factorial(p + 1)).powf(r - 1.0);
    let transient = (8.0 * factorial(p + 1)).powf(r - 1.0);
    let (m_eff, thresh_mult) = match ctx.method {
        MethodKind::Tensor => {
            let m = ctx.coefficient.or_else(|| {
                missing.push("m".into());
                None
            })?;
            (m, 2.0 * m)
        }
        _ => {
            let n = ctx.theory().and_then(|inp| n_nu(&inp, ctx.nu_known));
            if n.is_none() {
                missing.push(if ctx.holder.is_none() { "holder" } else { "r_eps/eps" }.into());
            }
            let h0 = ctx.coefficient.unwrap_or(1.0);
            let big = h0.max(n?);
            (2.0 * big, 4.0 * big)
        }
    };
    let d = d0?.powf(r);
    Some((lead * m_eff * d, transient * thresh_mult * d))
}

/// Numerator of the accelerated bound `scale / (t − 1)^r`, valid for `t ≥ 2`.
fn accelerated_envelope(ctx: &BoundContext, missing: &mut Vec<String>) -> Option<f64> {
    let p = ctx.p;
    let r = p as f64 + ctx.alpha();
    let dist = ctx.x0_dist.or_else(|| {
        missing.push("x0_dist".into());
        None
    });
    let mult = match ctx.method {
        MethodKind::Accelerated => {
            let m = ctx.coefficient.or_else(|| {
                missing.push("m".into());
                None
            })?;
            2f64.powi(3 * p as i32 - 1) * m
        }
        _ => {
            let n = ctx.theory().and_then(|inp| n_tilde_nu(&inp, ctx.nu_known));
            if n.is_none() {
                missing.push(if ctx.holder.is_none() { "holder" } else { "r_eps/eps" }.into());
            }
            2f64.powi(3 * p as i32) * n?.max(ctx.coefficient.unwrap_or(1.0))
        }
    };
    Some(mult * r.powf(r - 1.0) * dist?.powf(r) / factorial(p - 1))
}

pub fn compare_bounds(rows: &[TraceRow], ctx: &BoundContext) -> Result<BoundReport> {
    let mut missing = Vec::new();
    let best = best_so_far(rows);
    let r = ctx.p as f64 + ctx.alpha();

    let mut transient = None;
    let upper_at: Box<dyn Fn(usize) -> Option<f64>> = if ctx.method.is_accelerated() {
        let scale = accelerated_envelope(ctx, &mut missing);
        Box::new(move |t| scale.filter(|_| t >= 2).map(|s| s / ((t - 1) as f64).powf(r)))
    } else {
        match basic_envelope(ctx, &mut missing) {
            Some((scale, threshold)) => {
                transient = rows
                    .iter()
                    .find(|row| row.residual.is_some_and(|v| v <= threshold))
                    .map(|row| row.t);
                let m = transient;
                Box::new(move |t| match m {
                    Some(m) if t > m => Some(scale / ((t - m) as f64).powf(r - 1.0)),
                    _ => None,
                })
            }
            None => Box::new(|_| None),
        }
    };

    // Lower envelope on f_k from the origin: a method whose iterates stay in the first t
    // coordinates satisfies f_k(x_t) − f_k* ≥ f_t* − f*_{2t+1}, which dominates the envelope
    // evaluated at the distance ‖x*_{2t+1}‖ whenever 2t+1 ≤ k.
    let lower_at = |t: usize| -> Option<f64> {
        let k = ctx.hard_k?;
        if t == 0 || 2 * t + 1 > k {
            return None;
        }
        let dist = optimum_norm_squared(2 * t + 1).sqrt();
        lower_bound_envelope(ctx.p, ctx.nu, t, dist, hard_holder_constant(ctx.p, ctx.nu)).ok()
    };

    let mut out = Vec::with_capacity(rows.len());
    let (mut violations, mut above_upper) = (0, 0);
    for (row, best) in rows.iter().zip(best) {
        let upper = upper_at(row.t);
        let lower = lower_at(row.t);
        let violation = matches!((best, lower), (Some(b), Some(l)) if b < l);
        if violation {
            violations += 1;
        }
        if matches!((row.residual, upper), (Some(v), Some(u)) if v > u) {
            above_upper += 1;
        }
        out.push(BoundRow {
            t: row.t,
            residual: row.residual,
            best,
            upper,
            lower,
            violation,
        });
    }
    if rows.iter().all(|r| r.residual.is_none()) {
        missing.push("f_star".into());
    }
    missing.sort();
    missing.dedup();
    Ok(BoundReport {
        method: ctx.method.name().to_string(),
        partial: !missing.is_empty(),
        missing,
        transient,
        violations,
        above_upper,
        rows: out,
    })
}
