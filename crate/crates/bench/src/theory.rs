//! Analysis constants, evaluated from user-supplied inputs only.

use serde::{Deserialize, Serialize};
use tensor_methods::oracle::factorial;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub p: usize,
    pub nu: f64,
    pub theta: f64,
    pub holder: f64,
    pub eps: Option<f64>,
    /// `R(ε)` stand-in, needed by the universal branches.
    pub r_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    /// `max{3H_f/2, 3θ(p−1)!}`
    pub m_nu: f64,
    /// `(p+ν−1)(H_f + θ(p−1)!)`
    pub accelerated_threshold: f64,
    /// `N_ν(ε)` of the universal basic scheme (α = 1).
    pub n_universal: Option<f64>,
    /// `Ñ_ν(ε)` of the universal accelerated scheme (α = 1).
    pub n_tilde_universal: Option<f64>,
    /// `ξ_ν(ε)`, with `δ = ε`.
    pub xi: Option<f64>,
    pub ratio_check: Option<RatioCheck>,
}

/// `ε^{−1/(p+ν)} ≤ 6 ε^{−2/(3(p+ν)−2)}`: upper and lower complexity orders side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub eps: f64,
    pub upper_order: f64,
    pub lower_order: f64,
    pub factor: f64,
    pub holds: bool,
}

impl TheoryInputs {
    fn validate(&self) -> Result<()> {
        if self.p < 2 || !(0.0..=1.0).contains(&self.nu) {
            return Err(BenchError::Config(format!("need p >= 2 and nu in [0, 1], got p={}, nu={}", self.p, self.nu)));
        }
        if !(self.theta >= 0.0 && self.holder >= 0.0) || self.theta + self.holder <= 0.0 {
            return Err(BenchError::Config("theta and H_f must be nonnegative and not both zero".into()));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e < 1.0) {
                return Err(BenchError::Config(format!("eps must lie in (0, 1), got {e}")));
            }
        }
        if let Some(r) = self.r_eps {
            if !(r.is_finite() && r > 0.0) {
                return Err(BenchError::Config(format!("R must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

pub fn n_nu(inp: &TheoryInputs, alpha_is_nu: bool) -> Option<f64> {
    let p = inp.p as f64;
    let nu = inp.nu;
    if alpha_is_nu {
        return Some((1.5 * inp.holder).max(3.0 * inp.theta * factorial(inp.p - 1)));
    }
    let (eps, r) = (inp.eps?, inp.r_eps?);
    let a = (1.5 * inp.holder).powf(p / (p + nu - 1.0)) * (4.0 * r / eps).powf((1.0 - nu) / (p + nu - 1.0));
    Some(inp.theta.max(a))
}

pub fn n_tilde_nu(inp: &TheoryInputs, alpha_is_nu: bool) -> Option<f64> {
    let p = inp.p as f64;
    let nu = inp.nu;
    if alpha_is_nu {
        return Some((p + nu - 1.0) * (inp.holder + inp.theta * factorial(inp.p - 1)));
    }
    let (eps, r) = (inp.eps?, inp.r_eps?);
    let a = (4.0 * inp.holder).powf(p / (p + nu - 1.0)) * (4.0 * r / eps).powf((1.0 - nu) / (p + nu - 1.0));
    Some((4.0 * inp.theta * factorial(inp.p - 1)).max(a))
}

/// `ξ_ν(δ) = max{θ, (3H_f/2)^{p/(p+ν−1)} (4/δ)^{(1−ν)/(p+ν−1)}}`
pub fn xi_nu(inp: &TheoryInputs, delta: f64) -> f64 {
    let p = inp.p as f64;
    let nu = inp.nu;
    let a = (1.5 * inp.holder).powf(p / (p + nu - 1.0)) * (4.0 / delta).powf((1.0 - nu) / (p + nu - 1.0));
    inp.theta.max(a)
}

pub fn ratio_check(p: usize, nu: f64, eps: f64) -> RatioCheck {
    let r = p as f64 + nu;
    let upper_order = (1.0 / eps).powf(1.0 / r);
    let lower_order = (1.0 / eps).powf(2.0 / (3.0 * r - 2.0));
    RatioCheck {
        eps,
        upper_order,
        lower_order,
        factor: upper_order / lower_order,
        holds: upper_order <= 6.0 * lower_order,
    }
}

pub fn theory_constants(inp: &TheoryInputs) -> Result<TheoryConstants> {
    inp.validate()?;
    Ok(TheoryConstants {
        m_nu: n_nu(inp, true).expect("known branch"),
        accelerated_threshold: n_tilde_nu(inp, true).expect("known branch"),
        n_universal: n_nu(inp, false),
        n_tilde_universal: n_tilde_nu(inp, false),
        xi: inp.eps.map(|e| xi_nu(inp, e)),
        ratio_check: inp.eps.map(|e| ratio_check(inp.p, inp.nu, e)),
    })
}
