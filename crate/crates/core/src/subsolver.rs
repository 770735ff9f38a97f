//! Inexact minimization of the regularized model `Ω`.
//!
//! A returned trial point `x⁺` always satisfies
//!
//! ```text
//! Ω(x⁺) ≤ f(center),   ‖∇Ω(x⁺)‖* ≤ θ‖x⁺ − center‖^{p+α−1}  (or ≤ inner_gtol)
//! ```
//!
//! re-checked by [`check_certificates`] from fresh model evaluations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::error::Error;
use crate::oracle::RegularizedModel;
use crate::space::{pairing, DualVector, Metric, MetricSpace, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsolverMode {
    /// Radius equation on an eigendecomposition; `p = 2` only.
    Secular,
    /// Monotone Barzilai–Borwein gradient descent with Armijo backtracking.
    FirstOrder,
    /// Secular when `p = 2` and `n ≤ dense_limit`, else FirstOrder.
    Auto,
}

/// With `theta = 0` the gradient certificate asks for an exact stationary
/// point; FirstOrder then stops at `inner_gtol` instead.
#[derive(Debug, Clone)]
pub struct SubsolverOptions {
    pub theta: f64,
    pub max_inner_iters: usize,
    pub inner_gtol: f64,
    pub mode: SubsolverMode,
    pub dense_limit: usize,
    pub record_trace: bool,
}

impl Default for SubsolverOptions {
    fn default() -> Self {
        Self {
            theta: 0.1,
            max_inner_iters: 10_000,
            inner_gtol: 1e-13,
            mode: SubsolverMode::Auto,
            dense_limit: 2000,
            record_trace: false,
        }
    }
}

impl SubsolverOptions {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::Config(format!("theta must be nonnegative, got {}", self.theta)));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::Config("max_inner_iters must be positive".into()));
        }
        if !(self.inner_gtol.is_finite() && self.inner_gtol > 0.0) {
            return Err(Error::Config("inner_gtol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverUsed {
    /// Center returned because `∇f(center) = 0`.
    Stationary,
    Secular,
    FirstOrder,
    /// Secular hit the hard case and FirstOrder finished the job.
    SecularFallback,
    /// Secular point failed the certificate numerically and was polished.
    SecularPolished,
}

#[derive(Debug, Clone)]
pub struct TrialPoint {
    pub point: Vector,
    pub model_value: f64,
    pub model_gradient_norm: f64,
    pub step_norm: f64,
    pub f_value: f64,
    pub f_gradient: DualVector,
    pub inner_iters: usize,
    pub solver: SolverUsed,
    /// `Ω` at every accepted FirstOrder iterate, when requested.
    pub model_trace: Vec<f64>,
}

#[derive(Debug, Clone, Error)]
pub enum SubsolverError {
    #[error("inner solver stalled after {iters} iterations")]
    Stall { best: Vector, model_value: f64, iters: usize },
    #[error("numerical failure in subsolver: {0}")]
    Numerical(String),
    #[error(transparent)]
    Oracle(#[from] Error),
}

/// Raw inner result before the final oracle evaluation at `x⁺`.
struct InnerResult {
    step: Vector,
    iters: usize,
    trace: Vec<f64>,
}

/// Both certificate inequalities, from fresh evaluations of `Ω`.
pub fn check_certificates(
    model: &RegularizedModel<'_>,
    f_center: f64,
    point: &Vector,
    theta: f64,
    inner_gtol: f64,
) -> Result<bool, Error> {
    let value = model.value(point)?;
    let grad = model.space().dual_norm(&model.gradient(point)?)?;
    let r = model.space().distance(model.center(), point)?;
    let bound = theta * r.powf(model.power() - 1.0);
    Ok(value <= f_center && (grad <= bound || grad <= inner_gtol))
}

fn certified(model: &RegularizedModel<'_>, f_center: f64, h: &Vector, opts: &SubsolverOptions) -> Result<bool, Error> {
    let eval = model.step_eval(h)?;
    let gnorm = model.space().dual_norm(&eval.gradient)?;
    let value_ok = model.taylor().center_value() + eval.increment <= f_center;
    let bound = opts.theta * eval.step_norm.powf(model.power() - 1.0);
    Ok(value_ok && (gnorm <= bound || gnorm <= opts.inner_gtol))
}

pub fn solve_model(
    model: &RegularizedModel<'_>,
    f_center: f64,
    opts: &SubsolverOptions,
) -> Result<TrialPoint, SubsolverError> {
    opts.validate()?;
    let space = model.space();
    let g0 = model.taylor().center_gradient();
    if space.dual_norm(g0)? <= opts.inner_gtol {
        return finish(model, Vector::zeros(model.taylor().dim()), 0, SolverUsed::Stationary, Vec::new());
    }
    let use_secular = match opts.mode {
        SubsolverMode::Secular => true,
        SubsolverMode::FirstOrder => false,
        SubsolverMode::Auto => model.order() == 2 && model.taylor().dim() <= opts.dense_limit,
    };
    if use_secular {
        match secular_step(model)? {
            Some(step) => {
                if certified(model, f_center, &step, opts)? {
                    return finish(model, step, 1, SolverUsed::Secular, Vec::new());
                }
                let inner = first_order_from(model, f_center, opts, Some(step))?;
                finish(model, inner.step, inner.iters + 1, SolverUsed::SecularPolished, inner.trace)
            }
            None => {
                let inner = first_order_from(model, f_center, opts, None)?;
                finish(model, inner.step, inner.iters, SolverUsed::SecularFallback, inner.trace)
            }
        }
    } else {
        let inner = first_order_from(model, f_center, opts, None)?;
        finish(model, inner.step, inner.iters, SolverUsed::FirstOrder, inner.trace)
    }
}

/// Near-exact global minimizer for `p = 2`. Falls back to FirstOrder in the hard case.
pub fn secular_solve_p2(
    model: &RegularizedModel<'_>,
    f_center: f64,
    opts: &SubsolverOptions,
) -> Result<TrialPoint, SubsolverError> {
    let opts = SubsolverOptions {
        mode: SubsolverMode::Secular,
        ..opts.clone()
    };
    solve_model(model, f_center, &opts)
}

pub fn first_order_inner(
    model: &RegularizedModel<'_>,
    f_center: f64,
    opts: &SubsolverOptions,
) -> Result<TrialPoint, SubsolverError> {
    let opts = SubsolverOptions {
        mode: SubsolverMode::FirstOrder,
        ..opts.clone()
    };
    solve_model(model, f_center, &opts)
}

fn finish(
    model: &RegularizedModel<'_>,
    step: Vector,
    inner_iters: usize,
    solver: SolverUsed,
    model_trace: Vec<f64>,
) -> Result<TrialPoint, SubsolverError> {
    let eval = model.step_eval(&step)?;
    let point = model.center() + &step;
    let oracle = model.taylor().oracle();
    let f_value = oracle.value(&point);
    let f_gradient = oracle.gradient(&point);
    if !f_value.is_finite() || !f_gradient.is_finite() {
        return Err(SubsolverError::Numerical("oracle returned a non-finite value at the trial point".into()));
    }
    Ok(TrialPoint {
        model_value: model.taylor().center_value() + eval.increment,
        model_gradient_norm: model.space().dual_norm(&eval.gradient)?,
        step_norm: eval.step_norm,
        point,
        f_value,
        f_gradient,
        inner_iters,
        solver,
        model_trace,
    })
}

/// `T` with `‖Tz‖_B = ‖z‖₂`, so that `h = Tz` turns the metric Euclidean.
fn whitening(space: &MetricSpace) -> DMatrix<f64> {
    let n = space.dim();
    match space.metric() {
        Metric::Identity => DMatrix::identity(n, n),
        Metric::Diagonal(d) => DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt())),
        Metric::Dense { cholesky, .. } => {
            // B = LLᵀ, T = L⁻ᵀ
            let l = cholesky.l();
            l.transpose()
                .solve_upper_triangular(&DMatrix::identity(n, n))
                .unwrap_or_else(|| DMatrix::identity(n, n))
        }
    }
}

/// Stationary point of `⟨g̃,z⟩ + ½⟨Q̃z,z⟩ + w‖z‖^{2+α}` on the branch where
/// `Q̃ + σ(r)I ⪰ 0`, `σ(r) = w(2+α)r^α`. Returns `None` in the hard case.
fn secular_step(model: &RegularizedModel<'_>) -> Result<Option<Vector>, SubsolverError> {
    if model.order() != 2 {
        return Err(Error::UnsupportedOrder(model.order()).into());
    }
    let t = whitening(model.space());
    let q = model.taylor().dense_hessian();
    let qt = t.transpose() * &q * &t;
    let qt = (&qt + qt.transpose()) * 0.5;
    let gt = t.transpose() * model.taylor().center_gradient().as_dvector();
    let eig = SymmetricEigen::new(qt);
    let lambda = eig.eigenvalues.clone();
    let ghat = eig.eigenvectors.transpose() * &gt;
    let alpha = model.alpha();
    let w = model.weight();
    let sigma = |r: f64| w * (2.0 + alpha) * r.powf(alpha);
    let lmin = lambda.min();

    let znorm = |s: f64| -> f64 {
        ghat.iter()
            .zip(lambda.iter())
            .map(|(g, l)| (g / (l + s)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let build = |s: f64| -> Vector {
        let zhat = DVector::from_fn(lambda.len(), |i, _| -ghat[i] / (lambda[i] + s));
        Vector::from(&t * (&eig.eigenvectors * zhat))
    };

    if alpha == 0.0 {
        let s = sigma(1.0);
        if lmin + s <= 0.0 {
            return Ok(None);
        }
        return Ok(Some(build(s)));
    }

    // Smallest admissible radius: σ(r_min) = max(0, −λ_min).
    let r_min = if lmin >= 0.0 {
        0.0
    } else {
        (-lmin / (w * (2.0 + alpha))).powf(1.0 / alpha)
    };
    let phi = |r: f64| znorm(sigma(r)) - r;

    // Hard case: the branch never reaches ‖z‖ = r.
    let probe = if r_min > 0.0 { r_min * (1.0 + 1e-10) } else { f64::MIN_POSITIVE };
    let phi_probe = phi(probe);
    if !(phi_probe > 0.0) {
        if phi_probe.is_nan() {
            return Err(SubsolverError::Numerical("non-finite secular function".into()));
        }
        return Ok(None);
    }
    let mut lo = probe;
    let mut hi = (2.0 * r_min).max(1.0);
    let mut doublings = 0;
    while phi(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(SubsolverError::Numerical("secular bracket diverged".into()));
        }
    }

    let dphi = |r: f64| -> f64 {
        let s = sigma(r);
        let nz = znorm(s);
        if nz == 0.0 {
            return -1.0;
        }
        let cube: f64 = ghat
            .iter()
            .zip(lambda.iter())
            .map(|(g, l)| g * g / (l + s).powi(3))
            .sum();
        let ds = w * (2.0 + alpha) * alpha * r.powf(alpha - 1.0);
        -cube * ds / nz - 1.0
    };

    let mut r = 0.5 * (lo + hi);
    for _ in 0..500 {
        let f = phi(r);
        if f.abs() <= 1e-12 * r {
            break;
        }
        if f > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let d = dphi(r);
        let newton = r - f / d;
        r = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(Some(build(sigma(r))))
}

/// Inner iterate with the pieces needed for accurate model differences.
struct InnerPoint {
    h: Vector,
    increment: f64,
    phi_gradient: DualVector,
    gradient: DualVector,
    step_norm: f64,
}

fn inner_point(model: &RegularizedModel<'_>, h: Vector) -> Result<InnerPoint, Error> {
    let (phi_inc, phi_gradient) = model.taylor().step_eval(&h)?;
    let space = model.space();
    let r = space.primal_norm(&h)?;
    let power = model.power();
    let mut increment = phi_inc;
    let mut gradient = phi_gradient.clone();
    if r > 0.0 {
        increment += model.weight() * r.powf(power);
        gradient += &(&space.to_dual(&h)? * (model.weight() * power * r.powf(power - 2.0)));
    }
    Ok(InnerPoint {
        h,
        increment,
        phi_gradient,
        gradient,
        step_norm: r,
    })
}

/// `Ω(h + s) − Ω(h)` expanded so that the result is accurate at its own scale
/// rather than at the scale of `Ω`.
fn model_difference(model: &RegularizedModel<'_>, at: &InnerPoint, s: &Vector) -> Result<f64, Error> {
    let taylor = model.taylor();
    let oracle = taylor.oracle();
    let center = taylor.center();
    let qs = oracle.hessian_apply(center, s);
    let mut phi = pairing(&at.phi_gradient, s)? + 0.5 * pairing(&qs, s)?;
    if taylor.degree() == 3 {
        let tss = oracle.third_apply(center, s)?;
        phi += 0.5 * pairing(&tss, &at.h)? + pairing(&tss, s)? / 6.0;
    }
    let space = model.space();
    let power = model.power();
    let b2 = at.step_norm * at.step_norm;
    let gap = 2.0 * pairing(&space.to_dual(&at.h)?, s)? + space.primal_norm(s)?.powi(2);
    let reg = if b2 == 0.0 {
        (b2 + gap).max(0.0).powf(power / 2.0)
    } else {
        b2.powf(power / 2.0) * ((power / 2.0) * (gap / b2).ln_1p()).exp_m1()
    };
    Ok(phi + model.weight() * reg)
}

/// Monotone BB descent on `h ↦ Ω(center + h)`, optionally warm-started.
fn first_order_from(
    model: &RegularizedModel<'_>,
    f_center: f64,
    opts: &SubsolverOptions,
    warm: Option<Vector>,
) -> Result<InnerResult, SubsolverError> {
    const ARMIJO: f64 = 1e-4;
    const SHRINK: f64 = 0.5;
    const MAX_BACKTRACK: usize = 80;

    let space = model.space();
    let f0 = model.taylor().center_value();
    let value_cap = f_center - f0;
    let power = model.power();
    let mut trace = Vec::new();

    let mut cur = match warm {
        Some(h) => inner_point(model, h)?,
        None => {
            // One safeguarded gradient step off the center.
            let d = space.to_primal(model.taylor().center_gradient())?;
            let mut c = 1.0;
            let mut found = None;
            for _ in 0..200 {
                let cand = inner_point(model, &d * (-c))?;
                if cand.increment.is_finite() && cand.increment < 0.0 {
                    found = Some(cand);
                    break;
                }
                c *= SHRINK;
            }
            found.ok_or_else(|| SubsolverError::Numerical("no descent along the negative gradient".into()))?
        }
    };
    if !cur.increment.is_finite() {
        return Err(SubsolverError::Numerical("non-finite model value".into()));
    }
    // Running value, updated by accurate differences.
    let mut value = cur.increment;
    if opts.record_trace {
        trace.push(f0 + value);
    }
    let mut prev: Option<(Vector, DualVector)> = None;
    let mut step = 1.0;

    let done = |p: &InnerPoint, value: f64| -> Result<bool, Error> {
        let gnorm = space.dual_norm(&p.gradient)?;
        let bound = opts.theta * p.step_norm.powf(power - 1.0);
        Ok(value.min(p.increment) <= value_cap && (gnorm <= bound || gnorm <= opts.inner_gtol))
    };

    for iter in 0..opts.max_inner_iters {
        if done(&cur, value)? {
            return Ok(InnerResult { step: cur.h, iters: iter, trace });
        }
        let dir = &space.to_primal(&cur.gradient)? * -1.0;
        let gnorm_sq = pairing(&cur.gradient, &dir)?.abs();
        if let Some((hp, gp)) = &prev {
            let s = &cur.h - hp;
            let y = &cur.gradient - gp;
            let sy = pairing(&y, &s)?;
            let ss = space.primal_norm(&s)?.powi(2);
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            }
        } else {
            let dn = space.primal_norm(&dir)?;
            if dn > 0.0 && cur.step_norm > 0.0 {
                step = cur.step_norm / dn;
            }
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let s = &dir * t;
            let delta = model_difference(model, &cur, &s)?;
            if !delta.is_finite() {
                return Err(SubsolverError::Numerical("non-finite model value".into()));
            }
            if delta <= -ARMIJO * t * gnorm_sq {
                accepted = Some((s, delta));
                break;
            }
            t *= SHRINK;
        }
        let Some((s, delta)) = accepted else {
            return Err(SubsolverError::Stall {
                model_value: f0 + value,
                best: model.center() + &cur.h,
                iters: iter,
            });
        };
        let next = inner_point(model, &cur.h + &s)?;
        prev = Some((cur.h, cur.gradient));
        cur = next;
        value += delta;
        if opts.record_trace {
            trace.push(f0 + value);
        }
    }
    if done(&cur, value)? {
        return Ok(InnerResult {
            step: cur.h,
            iters: opts.max_inner_iters,
            trace,
        });
    }
    Err(SubsolverError::Stall {
        model_value: f0 + value,
        best: model.center() + &cur.h,
        iters: opts.max_inner_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardfn::HardInstance;
    use crate::oracle::{DerivativeOracle, TaylorModel};
    use crate::testfns::Quadratic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn model<'a>(
        oracle: &'a dyn DerivativeOracle,
        space: &'a MetricSpace,
        center: Vector,
        h: f64,
        alpha: f64,
    ) -> RegularizedModel<'a> {
        RegularizedModel::new(TaylorModel::new(oracle, center).unwrap(), h, alpha, space).unwrap()
    }

    #[test]
    fn stationary_center_is_returned() {
        let f = Quadratic::diagonal(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let space = MetricSpace::identity(2).unwrap();
        let m = model(&f, &space, Vector::zeros(2), 1.0, 1.0);
        for mode in [SubsolverMode::Secular, SubsolverMode::FirstOrder] {
            let opts = SubsolverOptions { mode, ..Default::default() };
            let tp = solve_model(&m, 0.0, &opts).unwrap();
            assert_eq!(tp.step_norm, 0.0);
            assert_eq!(tp.solver, SolverUsed::Stationary);
            assert_eq!(tp.point.to_vec(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn linear_one_dimensional_closed_form() {
        // Ω(h) = gh + (H/2)|h|³ ⇒ |h| = (2|g|/(3H))^{1/2}
        for (g, h) in [(1.0, 1.0), (-3.0, 0.5), (0.2, 7.0)] {
            let f = Quadratic::diagonal(vec![0.0], vec![g]).unwrap();
            let space = MetricSpace::identity(1).unwrap();
            let m = model(&f, &space, v(&[0.4]), h, 1.0);
            let expected = 0.4 - (2.0 * g.abs() / (3.0 * h)).sqrt() * g.signum();
            let sec = secular_solve_p2(&m, f.value(&v(&[0.4])), &SubsolverOptions { theta: 1e-10, ..Default::default() })
                .unwrap();
            assert!((sec.point[0] - expected).abs() <= 1e-10, "{} vs {expected}", sec.point[0]);
            let fo =
                first_order_inner(&m, f.value(&v(&[0.4])), &SubsolverOptions { theta: 1e-10, ..Default::default() })
                    .unwrap();
            assert!((fo.point[0] - expected).abs() <= 1e-8, "{} vs {expected}", fo.point[0]);
        }
    }

    #[test]
    fn small_regularization_approaches_newton_point() {
        let q = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let f = Quadratic::new(q.clone(), b.clone()).unwrap();
        let space = MetricSpace::identity(3).unwrap();
        let newton = -q.clone().cholesky().unwrap().solve(&b);
        let m = model(&f, &space, Vector::zeros(3), 1e-10, 1.0);
        let tp = secular_solve_p2(&m, 0.0, &SubsolverOptions { theta: 1e-12, ..Default::default() }).unwrap();
        assert!((tp.point.as_dvector() - &newton).norm() <= 1e-8);
        assert!(tp.model_gradient_norm <= 1e-10);
    }

    #[test]
    fn certificates_hold_on_hard_instance_all_metrics() {
        let f = HardInstance::new(11, 5, 2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spaces = [
            MetricSpace::identity(11).unwrap(),
            MetricSpace::diagonal((0..11).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap(),
            MetricSpace::dense(DMatrix::from_fn(11, 11, |i, j| if i == j { 2.0 } else { 0.1 })).unwrap(),
        ];
        for space in &spaces {
            for _ in 0..10 {
                let center = Vector::from(DVector::from_fn(11, |_, _| rng.gen_range(-1.0..3.0)));
                let fc = f.value(&center);
                let m = model(&f, space, center, 12.0, 1.0);
                for mode in [SubsolverMode::Secular, SubsolverMode::FirstOrder] {
                    let opts = SubsolverOptions { mode, ..Default::default() };
                    let tp = solve_model(&m, fc, &opts).unwrap();
                    assert!(check_certificates(&m, fc, &tp.point, opts.theta, opts.inner_gtol).unwrap());
                    assert!(tp.model_value <= fc);
                    assert!((tp.f_value - f.value(&tp.point)).abs() < 1e-12);
                    if mode == SubsolverMode::Secular {
                        assert_eq!(tp.solver, SolverUsed::Secular);
                    }
                }
            }
        }
    }

    #[test]
    fn solvers_agree_with_tight_theta() {
        let f = HardInstance::new(11, 5, 2, 1.0).unwrap();
        let space = MetricSpace::identity(11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let center = Vector::from(DVector::from_fn(11, |_, _| rng.gen_range(-1.0..3.0)));
            let fc = f.value(&center);
            let m = model(&f, &space, center, 10.0, 1.0);
            let opts = SubsolverOptions { theta: 1e-8, ..Default::default() };
            let a = secular_solve_p2(&m, fc, &opts).unwrap();
            let b = first_order_inner(&m, fc, &opts).unwrap();
            assert!(space.distance(&a.point, &b.point).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn first_order_trace_is_monotone_and_first_step_descends() {
        let f = HardInstance::new(9, 6, 2, 0.5).unwrap();
        let space = MetricSpace::identity(9).unwrap();
        let center = v(&[0.5, -0.2, 1.0, 0.0, 0.3, 2.0, -1.0, 0.1, 0.0]);
        let fc = f.value(&center);
        let m = model(&f, &space, center, 3.0, 0.5);
        let opts = SubsolverOptions {
            theta: 1e-6,
            mode: SubsolverMode::FirstOrder,
            record_trace: true,
            ..Default::default()
        };
        let tp = solve_model(&m, fc, &opts).unwrap();
        assert!(tp.model_trace.len() >= 2);
        assert!(tp.model_trace[0] < fc);
        for w in tp.model_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn stall_reports_best_iterate() {
        let f = HardInstance::new(11, 11, 2, 1.0).unwrap();
        let space = MetricSpace::identity(11).unwrap();
        let m = model(&f, &space, Vector::zeros(11), 1.0, 1.0);
        let opts = SubsolverOptions {
            theta: 0.0,
            max_inner_iters: 3,
            mode: SubsolverMode::FirstOrder,
            ..Default::default()
        };
        match solve_model(&m, 0.0, &opts) {
            Err(SubsolverError::Stall { model_value, iters, .. }) => {
                assert_eq!(iters, 3);
                assert!(model_value < 0.0);
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn convex_regime_never_hits_hard_case() {
        let f = HardInstance::new(11, 5, 2, 1.0).unwrap();
        let space = MetricSpace::identity(11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let hf = f.holder_constant();
        for _ in 0..20 {
            let center = Vector::from(DVector::from_fn(11, |_, _| rng.gen_range(-4.0..4.0)));
            let fc = f.value(&center);
            let m = model(&f, &space, center, hf, 1.0);
            let tp = secular_solve_p2(&m, fc, &SubsolverOptions::default()).unwrap();
            assert_eq!(tp.solver, SolverUsed::Secular);
        }
    }

    #[test]
    fn nu_zero_regularizer_is_quadratic() {
        let f = HardInstance::new(6, 4, 2, 0.0).unwrap();
        let space = MetricSpace::identity(6).unwrap();
        let center = v(&[1.0, 0.5, -0.5, 0.2, 0.0, 1.0]);
        let fc = f.value(&center);
        let m = model(&f, &space, center, 2.0, 0.0);
        let opts = SubsolverOptions { theta: 1e-9, ..Default::default() };
        let a = secular_solve_p2(&m, fc, &opts).unwrap();
        let b = first_order_inner(&m, fc, &opts).unwrap();
        assert!(space.distance(&a.point, &b.point).unwrap() <= 1e-7);
    }

    #[test]
    fn third_order_model_uses_first_order() {
        let f = HardInstance::new(6, 4, 3, 1.0).unwrap();
        let space = MetricSpace::identity(6).unwrap();
        let center = v(&[0.3, 0.1, -0.2, 0.4, 0.0, 0.2]);
        let fc = f.value(&center);
        let m = model(&f, &space, center, 20.0, 1.0);
        let opts = SubsolverOptions::default();
        let tp = solve_model(&m, fc, &opts).unwrap();
        assert_eq!(tp.solver, SolverUsed::FirstOrder);
        assert!(check_certificates(&m, fc, &tp.point, opts.theta, opts.inner_gtol).unwrap());
    }

    #[test]
    fn model_difference_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for (p, nu) in [(2, 1.0), (2, 0.3), (3, 1.0), (3, 0.6)] {
            let f = HardInstance::new(7, 5, p, nu).unwrap();
            let space = MetricSpace::diagonal(vec![1.0, 2.0, 0.5, 1.0, 3.0, 1.0, 1.5]).unwrap();
            for _ in 0..20 {
                let center = Vector::from(DVector::from_fn(7, |_, _| rng.gen_range(0.5..2.0)));
                let m = model(&f, &space, center, 5.0, nu);
                let h = Vector::from(DVector::from_fn(7, |_, _| rng.gen_range(-0.3..0.3)));
                let s = Vector::from(DVector::from_fn(7, |_, _| rng.gen_range(-0.3..0.3)));
                let at = inner_point(&m, h.clone()).unwrap();
                let direct = m.step_eval(&(&h + &s)).unwrap().increment - m.step_eval(&h).unwrap().increment;
                let diff = model_difference(&m, &at, &s).unwrap();
                assert!((diff - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{diff} vs {direct}");
            }
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let f = Quadratic::diagonal(vec![1.0], vec![1.0]).unwrap();
        let space = MetricSpace::identity(1).unwrap();
        let m = model(&f, &space, v(&[0.0]), 1.0, 1.0);
        let opts = SubsolverOptions { theta: -1.0, ..Default::default() };
        assert!(matches!(solve_model(&m, 0.0, &opts), Err(SubsolverError::Oracle(Error::Config(_)))));
    }
}
