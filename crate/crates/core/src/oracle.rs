//! Derivative oracles, Taylor models and their power-regularized versions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::space::{pairing, DualVector, MetricSpace, Vector};

/// Hölder exponent and constant of the top derivative, when known analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderHint {
    pub nu: f64,
    pub constant: f64,
}

/// Supplier of function values and directional derivatives up to order `p`.
///
/// Implementations must be pure: the same input always yields the same output.
/// `hessian_apply(x, h)` returns the dual vector `D²f(x)[h, ·]` and
/// `third_apply(x, h)` returns `D³f(x)[h, h, ·]`.
pub trait DerivativeOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Order `p` of the Taylor models built from this oracle (2 or 3).
    fn order(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> DualVector;

    fn hessian_apply(&self, x: &Vector, h: &Vector) -> DualVector;

    fn third_apply(&self, _x: &Vector, _h: &Vector) -> Result<DualVector> {
        Err(Error::UnsupportedOrder(3))
    }

    /// Dense Hessian, assembled column by column unless overridden.
    fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let e = Vector::from(DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 }));
            m.set_column(j, self.hessian_apply(x, &e).as_dvector());
        }
        m
    }

    fn holder_hint(&self) -> Option<HolderHint> {
        None
    }
}

/// `n!` as a float; orders here are tiny.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exponent bookkeeping for the regularizer.
///
/// `alpha` equals `nu` when the Hölder exponent is known and 1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessParams {
    nu: f64,
    alpha: f64,
    nu_known: bool,
}

impl SmoothnessParams {
    pub fn new(nu: f64, nu_known: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Config(format!("nu must lie in [0, 1], got {nu}")));
        }
        Ok(Self {
            nu,
            alpha: if nu_known { nu } else { 1.0 },
            nu_known,
        })
    }

    pub fn known(nu: f64) -> Result<Self> {
        Self::new(nu, true)
    }

    /// Universal setting: the exponent is not used by the method.
    pub fn universal() -> Self {
        Self {
            nu: 1.0,
            alpha: 1.0,
            nu_known: false,
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu_known(&self) -> bool {
        self.nu_known
    }
}

/// Degree-`p` Taylor polynomial `Φ_{x,p}` of the oracle around `center`.
#[derive(Clone)]
pub struct TaylorModel<'a> {
    oracle: &'a dyn DerivativeOracle,
    center: Vector,
    degree: usize,
    f0: f64,
    g0: DualVector,
}

impl<'a> TaylorModel<'a> {
    pub fn new(oracle: &'a dyn DerivativeOracle, center: Vector) -> Result<Self> {
        let degree = oracle.order();
        Self::with_degree(oracle, center, degree)
    }

    pub fn with_degree(oracle: &'a dyn DerivativeOracle, center: Vector, degree: usize) -> Result<Self> {
        check_dim(oracle.dim(), center.dim())?;
        if !(2..=3).contains(&degree) {
            return Err(Error::UnsupportedOrder(degree));
        }
        let f0 = oracle.value(&center);
        let g0 = oracle.gradient(&center);
        if !f0.is_finite() || !g0.is_finite() {
            return Err(Error::NonFinite("oracle output at model center"));
        }
        Ok(Self {
            oracle,
            center,
            degree,
            f0,
            g0,
        })
    }

    pub fn oracle(&self) -> &'a dyn DerivativeOracle {
        self.oracle
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn center_value(&self) -> f64 {
        self.f0
    }

    pub fn center_gradient(&self) -> &DualVector {
        &self.g0
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `Φ(x + h) - f(x)` together with `∇Φ(x + h)`.
    pub fn step_eval(&self, h: &Vector) -> Result<(f64, DualVector)> {
        check_dim(self.dim(), h.dim())?;
        let hh = self.oracle.hessian_apply(&self.center, h);
        let mut inc = pairing(&self.g0, h)? + 0.5 * pairing(&hh, h)?;
        let mut grad = &self.g0 + &hh;
        if self.degree == 3 {
            let t = self.oracle.third_apply(&self.center, h)?;
            inc += pairing(&t, h)? / 6.0;
            grad += &(&t * 0.5);
        }
        Ok((inc, grad))
    }

    pub fn value(&self, y: &Vector) -> Result<f64> {
        check_dim(self.dim(), y.dim())?;
        let (inc, _) = self.step_eval(&(y - &self.center))?;
        Ok(self.f0 + inc)
    }

    pub fn gradient(&self, y: &Vector) -> Result<DualVector> {
        check_dim(self.dim(), y.dim())?;
        let (_, g) = self.step_eval(&(y - &self.center))?;
        Ok(g)
    }

    pub fn dense_hessian(&self) -> DMatrix<f64> {
        self.oracle.hessian(&self.center)
    }
}

/// Regularized model `Ω(y) = Φ_{x,p}(y) + (H/p!)‖y − x‖^{p+α}`.
#[derive(Clone)]
pub struct RegularizedModel<'a> {
    taylor: TaylorModel<'a>,
    scale: f64,
    alpha: f64,
    space: &'a MetricSpace,
}

/// Model increment, gradient and step length at one trial step.
#[derive(Debug, Clone)]
pub struct ModelEval {
    pub increment: f64,
    pub gradient: DualVector,
    pub step_norm: f64,
}

impl<'a> RegularizedModel<'a> {
    pub fn new(taylor: TaylorModel<'a>, scale: f64, alpha: f64, space: &'a MetricSpace) -> Result<Self> {
        check_dim(space.dim(), taylor.dim())?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("regularization coefficient must be positive, got {scale}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self {
            taylor,
            scale,
            alpha,
            space,
        })
    }

    pub fn taylor(&self) -> &TaylorModel<'a> {
        &self.taylor
    }

    pub fn space(&self) -> &'a MetricSpace {
        self.space
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.taylor.degree()
    }

    /// `p + α`
    pub fn power(&self) -> f64 {
        self.order() as f64 + self.alpha
    }

    pub fn center(&self) -> &Vector {
        self.taylor.center()
    }

    /// `H / p!`
    pub fn weight(&self) -> f64 {
        self.scale / factorial(self.order())
    }

    pub fn step_eval(&self, h: &Vector) -> Result<ModelEval> {
        let (inc, mut grad) = self.taylor.step_eval(h)?;
        let r = self.space.primal_norm(h)?;
        let power = self.power();
        let mut increment = inc;
        if r > 0.0 {
            increment += self.weight() * r.powf(power);
            let coef = self.weight() * power * r.powf(power - 2.0);
            grad += &(&self.space.to_dual(h)? * coef);
        }
        Ok(ModelEval {
            increment,
            gradient: grad,
            step_norm: r,
        })
    }

    pub fn value(&self, y: &Vector) -> Result<f64> {
        check_dim(self.taylor.dim(), y.dim())?;
        Ok(self.taylor.center_value() + self.step_eval(&(y - self.center()))?.increment)
    }

    /// At the center the regularizer gradient is taken as 0 (its continuous extension).
    pub fn gradient(&self, y: &Vector) -> Result<DualVector> {
        check_dim(self.taylor.dim(), y.dim())?;
        Ok(self.step_eval(&(y - self.center()))?.gradient)
    }
}

/// Operator norm of `D²f(x) − D²f(y)` by power iteration (Euclidean norm).
fn hessian_difference_norm(oracle: &dyn DerivativeOracle, x: &Vector, y: &Vector, rng: &mut ChaCha8Rng) -> f64 {
    const ITERS: usize = 50;
    const TOL: f64 = 1e-8;
    let n = oracle.dim();
    let apply = |v: &Vector| {
        let a = oracle.hessian_apply(x, v);
        let b = oracle.hessian_apply(y, v);
        Vector::from((a - b).into_dvector())
    };
    let mut v = Vector::from(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
    let nv = v.as_dvector().norm();
    if nv == 0.0 {
        return 0.0;
    }
    v = &v * (1.0 / nv);
    let mut estimate = 0.0;
    for _ in 0..ITERS {
        let w = apply(&v);
        let nw = w.as_dvector().norm();
        if nw == 0.0 {
            return 0.0;
        }
        let converged = (nw - estimate).abs() <= TOL * nw;
        estimate = nw;
        v = &w * (1.0 / nw);
        if converged {
            break;
        }
    }
    estimate
}

/// Empirical lower estimate of the Hölder constant of the Hessian.
///
/// Pairs `(x, y)` are drawn uniformly from the box `[-1, 1]^n` with a seeded
/// generator; the result is the largest sampled quotient
/// `‖D²f(x) − D²f(y)‖ / ‖x − y‖^ν`. Only second-order oracles are supported.
pub fn estimate_holder_constant(oracle: &dyn DerivativeOracle, nu: f64, sample_pairs: usize, seed: u64) -> Result<f64> {
    if oracle.order() != 2 {
        return Err(Error::UnsupportedOrder(oracle.order()));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::Config(format!("nu must lie in [0, 1], got {nu}")));
    }
    if sample_pairs == 0 {
        return Err(Error::Config("at least one sample pair is required".into()));
    }
    let n = oracle.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..sample_pairs {
        let x = Vector::from(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
        let y = Vector::from(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
        let dist = (&x - &y).as_dvector().norm();
        if dist == 0.0 {
            continue;
        }
        let q = hessian_difference_norm(oracle, &x, &y, &mut rng) / dist.powf(nu);
        if q.is_finite() {
            best = best.max(q);
        }
    }
    Ok(best)
}
