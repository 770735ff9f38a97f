//! Accelerated tensor method driven by estimating functions, fixed or adaptive.

use std::time::Instant;

use crate::error::Result;
use crate::oracle::{RegularizedModel, TaylorModel};
use crate::space::pairing;
use crate::subsolver::solve_model;

use super::estimating::EstimatingSequence;
use super::record::{AcceleratedStep, IterationRow, RunRecord, Status, StepRecord};
use super::scalar::solve_a_t;
use super::{accelerated_descent, search, subsolver_status, Attempt, MethodKind, RunSetup, Schedule};

/// Fixed coefficient `M`; a failed descent test ends the run with
/// [`Status::DescentFailure`]. Guarantees hold for `M ≥ (p+ν−1)(H_f + θ(p−1)!)`.
pub fn run_accelerated(setup: &RunSetup<'_>, m: f64) -> Result<RunRecord> {
    run(setup, Schedule::fixed(m)?, MethodKind::Accelerated)
}

/// Recomputes `a`, `γ` and `y` for every trial coefficient `2^i H_t`.
pub fn run_adaptive_accelerated(setup: &RunSetup<'_>, h0: f64) -> Result<RunRecord> {
    run(setup, Schedule::adaptive(h0)?, MethodKind::AdaptiveAccelerated)
}

fn num<E: std::fmt::Display>(e: E) -> Status {
    Status::Numerical(e.to_string())
}

fn run(setup: &RunSetup<'_>, mut schedule: Schedule, method: MethodKind) -> Result<RunRecord> {
    setup.validate()?;
    let start = Instant::now();
    let clock = |timing: bool| if timing { start.elapsed().as_nanos() as u64 } else { 0 };
    let space = setup.space;
    let oracle = setup.oracle;
    let p = setup.order();
    let alpha = setup.params.alpha();
    let initial_coefficient = schedule.current();

    let mut x = setup.x0.clone();
    let mut v = setup.x0.clone();
    let mut est = EstimatingSequence::new(setup.x0.clone(), setup.power());
    let mut fx = oracle.value(&x);
    let mut gnorm = space.dual_norm(&oracle.gradient(&x))?;
    let mut oracle_calls = 0u64;
    let residual = setup.stop.residual_of(fx);
    let mut rows = vec![IterationRow {
        t: 0,
        f: fx,
        residual,
        grad_norm: gnorm,
        h: schedule.current(),
        h_exponent: 0,
        inner_iters: 0,
        ls_trials: 0,
        oracle_calls,
        wall_ns: clock(setup.timing),
        best_residual: residual,
    }];
    let mut steps = Vec::new();

    let status = loop {
        if !fx.is_finite() {
            break Status::Numerical("non-finite objective value".into());
        }
        if setup.stop.reached(fx, gnorm) {
            break Status::Converged;
        }
        let t = steps.len();
        if t >= setup.stop.max_outer_iters {
            break Status::MaxIterations;
        }
        let total = est.total_weight();
        let mut inner_total = 0usize;
        let outcome = search(&mut schedule, setup.max_doublings, &mut oracle_calls, |m| {
            let coef = solve_a_t(total, m, p, alpha).map_err(num)?;
            let gamma = coef.a / (total + coef.a);
            let y = x.lerp(&v, gamma);
            let taylor = TaylorModel::new(oracle, y.clone()).map_err(num)?;
            let fy = taylor.center_value();
            let model = RegularizedModel::new(taylor, m, alpha, space).map_err(num)?;
            match solve_model(&model, fy, &setup.subsolver) {
                Ok(trial) => {
                    inner_total += trial.inner_iters;
                    let gn = space.dual_norm(&trial.f_gradient).map_err(num)?;
                    let lhs = pairing(&trial.f_gradient, &(&y - &trial.point)).map_err(num)?;
                    let check = accelerated_descent(lhs, gn, m, p, alpha);
                    Ok(if check.holds() {
                        Attempt::Accept((trial, check, gn, coef, gamma, y, fy))
                    } else {
                        Attempt::Reject
                    })
                }
                Err(e) => subsolver_status(e).map(|_| Attempt::Stall),
            }
        });
        let accepted = match outcome {
            Ok(a) => a,
            Err(status) => break status,
        };
        let (trial, check, gn, coef, gamma, y, fy) = accepted.value;
        if let Err(e) = est.add(coef.a, trial.f_value, &trial.f_gradient, &trial.point) {
            break num(e);
        }
        let v_next = match est.argmin(space) {
            Ok(v) => v,
            Err(e) => break num(e),
        };
        let argmin_residual = match est.stationarity_residual(space, &v_next) {
            Ok(r) => r,
            Err(e) => break num(e),
        };
        let x_prev = std::mem::replace(&mut x, trial.point.clone());
        let v_prev = std::mem::replace(&mut v, v_next.clone());
        fx = trial.f_value;
        gnorm = gn;
        let residual = setup.stop.residual_of(fx);
        let best = match (rows.last().and_then(|r| r.best_residual), residual) {
            (Some(b), Some(r)) => Some(b.min(r)),
            (_, r) => r,
        };
        steps.push(StepRecord {
            t,
            center: y,
            center_value: fy,
            coefficient: accepted.coefficient,
            doublings: accepted.doublings,
            trial,
            descent: check,
            accelerated: Some(AcceleratedStep {
                x_prev,
                v_prev,
                a: coef.a,
                a_residual: coef.residual,
                total_before: total,
                total_after: est.total_weight(),
                gamma,
                v_next,
                argmin_residual,
                estimate: est.clone(),
            }),
        });
        rows.push(IterationRow {
            t: t + 1,
            f: fx,
            residual,
            grad_norm: gnorm,
            h: schedule.current(),
            h_exponent: schedule.exponent(),
            inner_iters: inner_total,
            ls_trials: accepted.doublings,
            oracle_calls,
            wall_ns: clock(setup.timing),
            best_residual: best,
        });
    };

    Ok(RunRecord {
        method,
        order: p,
        alpha,
        initial_coefficient,
        rows,
        steps,
        status,
        final_point: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardfn::HardInstance;
    use crate::methods::{accelerated_regularization_constant, StoppingRule};
    use crate::oracle::{factorial, DerivativeOracle, SmoothnessParams};
    use crate::space::{MetricSpace, Vector};

    fn setup<'a>(f: &'a HardInstance, space: &'a MetricSpace, eps: f64) -> RunSetup<'a> {
        let (_, fstar) = f.optimum();
        RunSetup::new(
            f,
            space,
            Vector::zeros(f.n()),
            SmoothnessParams::known(f.nu()).unwrap(),
            StoppingRule::residual(eps, fstar, 2000),
        )
    }

    #[test]
    fn first_coefficient_is_scale() {
        let f = HardInstance::new(11, 5, 2, 1.0).unwrap();
        let space = MetricSpace::identity(11).unwrap();
        let m = accelerated_regularization_constant(1.0, f.holder_constant(), 0.1, 2).unwrap();
        let rec = run_accelerated(&setup(&f, &space, 1e-6), m).unwrap();
        let first = rec.steps[0].accelerated.as_ref().unwrap();
        assert_eq!(first.total_before, 0.0);
        assert_eq!(first.gamma, 1.0);
        assert!((first.a - factorial(1) / (32.0 * m)).abs() < 1e-18);
    }

    #[test]
    fn fixed_run_converges_with_estimating_bounds() {
        let f = HardInstance::new(11, 5, 2, 1.0).unwrap();
        let space = MetricSpace::identity(11).unwrap();
        let m = accelerated_regularization_constant(1.0, f.holder_constant(), 0.1, 2).unwrap();
        let rec = run_accelerated(&setup(&f, &space, 1e-6), m).unwrap();
        assert!(rec.converged(), "{:?}", rec.status);
        for s in &rec.steps {
            let acc = s.accelerated.as_ref().unwrap();
            assert!(s.descent.holds());
            assert!(acc.a_residual <= 1e-12);
            assert!(acc.argmin_residual <= 1e-9);
            assert!(acc.gamma > 0.0 && acc.gamma <= 1.0);
            // A_{t+1} f(x_{t+1}) ≤ ψ_{t+1}(v_{t+1})
            let lhs = acc.total_after * f.value(&s.trial.point);
            let rhs = acc.estimate.value(&space, &acc.v_next).unwrap();
            assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn adaptive_identity() {
        let f = HardInstance::new(11, 5, 2, 1.0).unwrap();
        let space = MetricSpace::identity(11).unwrap();
        let rec = run_adaptive_accelerated(&setup(&f, &space, 1e-6), 1.0).unwrap();
        assert!(rec.converged(), "{:?}", rec.status);
        for row in &rec.rows {
            assert_eq!(row.oracle_calls as i64, 2 * row.t as i64 + row.h_exponent);
        }
        assert!(rec.rows.iter().all(|r| r.best_residual.unwrap() >= 0.0 || r.best_residual.unwrap() > -1e-12));
        let _ = f.dim();
    }
}
