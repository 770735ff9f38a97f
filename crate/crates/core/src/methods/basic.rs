//! Tensor method with fixed regularization and its adaptive variant.

use std::time::Instant;

use crate::error::Result;
use crate::oracle::{RegularizedModel, TaylorModel};
use crate::subsolver::solve_model;

use super::record::{IterationRow, RunRecord, Status, StepRecord};
use super::{basic_descent, search, subsolver_status, Attempt, MethodKind, RunSetup, Schedule};

/// Fixed coefficient `M`. Guarantees hold when `M ≥ max{3H_f/2, 3θ(p−1)!}`;
/// a failed descent test ends the run with [`Status::DescentFailure`].
pub fn run_tensor(setup: &RunSetup<'_>, m: f64) -> Result<RunRecord> {
    run(setup, Schedule::fixed(m)?, MethodKind::Tensor)
}

/// Starts from `H_0` and doubles until the descent test passes, then halves once.
pub fn run_adaptive_tensor(setup: &RunSetup<'_>, h0: f64) -> Result<RunRecord> {
    run(setup, Schedule::adaptive(h0)?, MethodKind::AdaptiveTensor)
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
        let taylor = TaylorModel::new(oracle, x.clone())?;
        let mut inner_total = 0usize;
        let outcome = search(&mut schedule, setup.max_doublings, &mut oracle_calls, |m| {
            let model = RegularizedModel::new(taylor.clone(), m, alpha, space).map_err(|e| Status::Numerical(e.to_string()))?;
            match solve_model(&model, fx, &setup.subsolver) {
                Ok(trial) => {
                    inner_total += trial.inner_iters;
                    let gn = space.dual_norm(&trial.f_gradient).map_err(|e| Status::Numerical(e.to_string()))?;
                    let check = basic_descent(fx, trial.f_value, gn, m, p, alpha);
                    Ok(if check.holds() {
                        Attempt::Accept((trial, check, gn))
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
        let (trial, check, gn) = accepted.value;
        let center = std::mem::replace(&mut x, trial.point.clone());
        let center_value = fx;
        fx = trial.f_value;
        gnorm = gn;
        let residual = setup.stop.residual_of(fx);
        let best = match (rows.last().and_then(|r| r.best_residual), residual) {
            (Some(b), Some(r)) => Some(b.min(r)),
            (_, r) => r,
        };
        steps.push(StepRecord {
            t,
            center,
            center_value,
            coefficient: accepted.coefficient,
            doublings: accepted.doublings,
            trial,
            descent: check,
            accelerated: None,
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
