//! Outer schemes: basic and accelerated tensor methods, fixed or adaptive regularization.

pub mod accelerated;
pub mod basic;
pub mod estimating;
pub mod record;
pub mod scalar;

use crate::error::{Error, Result};
use crate::oracle::{factorial, DerivativeOracle, SmoothnessParams};
use crate::space::{MetricSpace, Vector};
use crate::subsolver::{SubsolverError, SubsolverOptions};

pub use accelerated::{run_accelerated, run_adaptive_accelerated};
pub use basic::{run_adaptive_tensor, run_tensor};
pub use estimating::EstimatingSequence;
pub use record::{AcceleratedStep, IterationRow, RunRecord, Status, StepRecord};
pub use scalar::{solve_a_t, StepCoefficient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Tensor,
    AdaptiveTensor,
    Accelerated,
    AdaptiveAccelerated,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::Tensor,
        MethodKind::AdaptiveTensor,
        MethodKind::Accelerated,
        MethodKind::AdaptiveAccelerated,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Tensor => "tensor",
            MethodKind::AdaptiveTensor => "adaptive-tensor",
            MethodKind::Accelerated => "accelerated",
            MethodKind::AdaptiveAccelerated => "adaptive-accelerated",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, MethodKind::AdaptiveTensor | MethodKind::AdaptiveAccelerated)
    }

    pub fn is_accelerated(&self) -> bool {
        matches!(self, MethodKind::Accelerated | MethodKind::AdaptiveAccelerated)
    }
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Termination: residual against a known optimal value, or a dual gradient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    pub eps: Option<f64>,
    pub f_star: Option<f64>,
    pub gtol: Option<f64>,
    pub max_outer_iters: usize,
}

impl StoppingRule {
    pub fn residual(eps: f64, f_star: f64, max_outer_iters: usize) -> Self {
        Self {
            eps: Some(eps),
            f_star: Some(f_star),
            gtol: None,
            max_outer_iters,
        }
    }

    pub fn gradient(gtol: f64, max_outer_iters: usize) -> Self {
        Self {
            eps: None,
            f_star: None,
            gtol: Some(gtol),
            max_outer_iters,
        }
    }

    pub fn with_gtol(mut self, gtol: f64) -> Self {
        self.gtol = Some(gtol);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let residual_rule = match (self.eps, self.f_star) {
            (Some(eps), Some(fs)) => {
                if !(eps > 0.0 && eps < 1.0) || !fs.is_finite() {
                    return Err(Error::Config(format!("eps must lie in (0, 1), got {eps}")));
                }
                true
            }
            (Some(_), None) | (None, None) | (None, Some(_)) => false,
        };
        if let Some(g) = self.gtol {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Config(format!("gtol must be nonnegative, got {g}")));
            }
        }
        if !residual_rule && self.gtol.is_none() {
            return Err(Error::Config("stopping rule needs eps with f_star, or gtol".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::Config("max_outer_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn residual_of(&self, f: f64) -> Option<f64> {
        self.f_star.map(|fs| f - fs)
    }

    pub fn reached(&self, f: f64, grad_norm: f64) -> bool {
        let by_residual = matches!((self.eps, self.f_star), (Some(e), Some(fs)) if f - fs <= e);
        let by_gradient = matches!(self.gtol, Some(g) if grad_norm <= g);
        by_residual || by_gradient
    }
}

/// Everything a run needs besides the regularization schedule.
#[derive(Clone)]
pub struct RunSetup<'a> {
    pub oracle: &'a dyn DerivativeOracle,
    pub space: &'a MetricSpace,
    pub x0: Vector,
    pub params: SmoothnessParams,
    pub stop: StoppingRule,
    pub subsolver: SubsolverOptions,
    /// Safety cap on doublings per iteration of the adaptive schemes.
    pub max_doublings: usize,
    /// Record wall-clock nanoseconds; off keeps traces reproducible.
    pub timing: bool,
}

impl<'a> RunSetup<'a> {
    pub fn new(
        oracle: &'a dyn DerivativeOracle,
        space: &'a MetricSpace,
        x0: Vector,
        params: SmoothnessParams,
        stop: StoppingRule,
    ) -> Self {
        Self {
            oracle,
            space,
            x0,
            params,
            stop,
            subsolver: SubsolverOptions::default(),
            max_doublings: 60,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.oracle.dim() != self.space.dim() || self.x0.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: self.x0.dim(),
            });
        }
        if !(2..=3).contains(&self.oracle.order()) {
            return Err(Error::UnsupportedOrder(self.oracle.order()));
        }
        self.stop.validate()?;
        self.subsolver.validate()
    }

    pub fn order(&self) -> usize {
        self.oracle.order()
    }

    pub fn power(&self) -> f64 {
        self.order() as f64 + self.params.alpha()
    }
}

/// `max{3H_f/2, 3θ(p−1)!}`: a fixed coefficient that always passes the basic descent test.
pub fn fixed_regularization_constant(_nu: f64, holder: f64, theta: f64, p: usize) -> Result<f64> {
    if !(holder >= 0.0 && theta >= 0.0) || holder + theta <= 0.0 || p < 1 {
        return Err(Error::Config(format!(
            "need H_f >= 0, theta >= 0 and not both zero (H_f={holder}, theta={theta})"
        )));
    }
    Ok((1.5 * holder).max(3.0 * theta * factorial(p - 1)))
}

/// `(p+ν−1)(H_f + θ(p−1)!)`: the accelerated counterpart.
pub fn accelerated_regularization_constant(nu: f64, holder: f64, theta: f64, p: usize) -> Result<f64> {
    if !(holder >= 0.0 && theta >= 0.0) || holder + theta <= 0.0 || p < 1 {
        return Err(Error::Config(format!(
            "need H_f >= 0, theta >= 0 and not both zero (H_f={holder}, theta={theta})"
        )));
    }
    Ok((p as f64 + nu - 1.0) * (holder + theta * factorial(p - 1)))
}

/// Two sides of a descent inequality `lhs ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl DescentCheck {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }
}

/// `f(x) − f(x⁺) ≥ ‖∇f(x⁺)‖*^{r/(r−1)} / (8(p+1)! M^{1/(r−1)})`, `r = p + α`.
pub fn basic_descent(f_center: f64, f_trial: f64, grad_norm: f64, m: f64, p: usize, alpha: f64) -> DescentCheck {
    let r = p as f64 + alpha;
    let rhs = grad_norm.powf(r / (r - 1.0)) / (8.0 * factorial(p + 1) * m.powf(1.0 / (r - 1.0)));
    DescentCheck {
        lhs: f_center - f_trial,
        rhs,
    }
}

/// `⟨∇f(x⁺), y − x⁺⟩ ≥ ¼[(p−1)!/M]^{1/(r−1)} ‖∇f(x⁺)‖*^{r/(r−1)}`.
pub fn accelerated_descent(pairing_value: f64, grad_norm: f64, m: f64, p: usize, alpha: f64) -> DescentCheck {
    let r = p as f64 + alpha;
    let rhs = 0.25 * (factorial(p - 1) / m).powf(1.0 / (r - 1.0)) * grad_norm.powf(r / (r - 1.0));
    DescentCheck {
        lhs: pairing_value,
        rhs,
    }
}

/// Fixed coefficient, or `H_t = H_0·2^{e_t}` tracked by its integer exponent.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Schedule {
    Fixed(f64),
    Adaptive { h0: f64, exponent: i64 },
}

impl Schedule {
    pub(crate) fn fixed(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Config(format!("regularization coefficient must be positive, got {m}")));
        }
        Ok(Schedule::Fixed(m))
    }

    pub(crate) fn adaptive(h0: f64) -> Result<Self> {
        if !(h0.is_finite() && h0 > 0.0) {
            return Err(Error::Config(format!("H0 must be positive, got {h0}")));
        }
        Ok(Schedule::Adaptive { h0, exponent: 0 })
    }

    pub(crate) fn current(&self) -> f64 {
        match *self {
            Schedule::Fixed(m) => m,
            Schedule::Adaptive { h0, exponent } => h0 * 2f64.powi(exponent as i32),
        }
    }

    pub(crate) fn exponent(&self) -> i64 {
        match *self {
            Schedule::Fixed(_) => 0,
            Schedule::Adaptive { exponent, .. } => exponent,
        }
    }
}

pub(crate) enum Attempt<T> {
    Accept(T),
    Reject,
    Stall,
}

/// Result of one outer iteration's search over `2^i H_t`.
pub(crate) struct Accepted<T> {
    pub value: T,
    pub doublings: usize,
    pub coefficient: f64,
}

pub(crate) fn subsolver_status(err: SubsolverError) -> std::result::Result<(), Status> {
    match err {
        SubsolverError::Stall { .. } => Ok(()),
        SubsolverError::Numerical(msg) => Err(Status::Numerical(msg)),
        SubsolverError::Oracle(e) => Err(Status::Numerical(e.to_string())),
    }
}

/// Tries `2^i H_t` for `i = 0, 1, …` (adaptive) or the single fixed `M`, and
/// updates `H_{t+1} = 2^{i_t − 1} H_t` on acceptance.
pub(crate) fn search<T>(
    schedule: &mut Schedule,
    max_doublings: usize,
    oracle_calls: &mut u64,
    mut attempt: impl FnMut(f64) -> std::result::Result<Attempt<T>, Status>,
) -> std::result::Result<Accepted<T>, Status> {
    match *schedule {
        Schedule::Fixed(m) => {
            *oracle_calls += 1;
            match attempt(m)? {
                Attempt::Accept(value) => Ok(Accepted {
                    value,
                    doublings: 0,
                    coefficient: m,
                }),
                Attempt::Reject => Err(Status::DescentFailure),
                Attempt::Stall => Err(Status::SubsolverStall),
            }
        }
        Schedule::Adaptive { h0, exponent } => {
            for i in 0..=max_doublings {
                let m = h0 * 2f64.powi((exponent + i as i64) as i32);
                *oracle_calls += 1;
                if let Attempt::Accept(value) = attempt(m)? {
                    *schedule = Schedule::Adaptive {
                        h0,
                        exponent: exponent + i as i64 - 1,
                    };
                    return Ok(Accepted {
                        value,
                        doublings: i,
                        coefficient: m,
                    });
                }
            }
            Err(Status::LineSearchBlowUp)
        }
    }
}
