//! Per-iteration traces of the outer schemes.

use crate::space::Vector;
use crate::subsolver::TrialPoint;

use super::estimating::EstimatingSequence;
use super::{DescentCheck, MethodKind};

/// One row per iterate `x_t`; row 0 is the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub t: usize,
    pub f: f64,
    pub residual: Option<f64>,
    pub grad_norm: f64,
    /// `H_t` (adaptive) or the fixed `M`.
    pub h: f64,
    /// `log₂(H_t/H_0)`, exact.
    pub h_exponent: i64,
    /// Inner iterations spent producing `x_t`.
    pub inner_iters: usize,
    /// `i_{t−1}`, the doublings that produced `x_t` (0 on row 0).
    pub ls_trials: usize,
    /// Cumulative subproblem solves, `O_t`.
    pub oracle_calls: u64,
    pub wall_ns: u64,
    pub best_residual: Option<f64>,
}

/// Extra quantities of an accelerated iteration.
#[derive(Debug, Clone)]
pub struct AcceleratedStep {
    pub x_prev: Vector,
    pub v_prev: Vector,
    pub a: f64,
    pub a_residual: f64,
    pub total_before: f64,
    pub total_after: f64,
    pub gamma: f64,
    pub v_next: Vector,
    pub argmin_residual: f64,
    /// `ψ_{t+1}` after the update.
    pub estimate: EstimatingSequence,
}

/// Everything needed to re-verify an accepted step from scratch.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: usize,
    /// `x_t` (basic) or `y_t` (accelerated).
    pub center: Vector,
    pub center_value: f64,
    /// Accepted `M_t = 2^{i_t} H_t`.
    pub coefficient: f64,
    pub doublings: usize,
    pub trial: TrialPoint,
    pub descent: DescentCheck,
    pub accelerated: Option<AcceleratedStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// Fixed coefficient failed the descent test; the adaptive variant is the remedy.
    DescentFailure,
    SubsolverStall,
    /// Doubling cap reached, which points at an inconsistent oracle.
    LineSearchBlowUp,
    Numerical(String),
}

impl Status {
    pub fn is_failure(&self) -> bool {
        !matches!(self, Status::Converged | Status::MaxIterations)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max-iterations",
            Status::DescentFailure => "descent-failure",
            Status::SubsolverStall => "subsolver-stall",
            Status::LineSearchBlowUp => "line-search-blow-up",
            Status::Numerical(_) => "numerical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub method: MethodKind,
    pub order: usize,
    pub alpha: f64,
    /// `H_0` or the fixed `M`.
    pub initial_coefficient: f64,
    pub rows: Vec<IterationRow>,
    pub steps: Vec<StepRecord>,
    pub status: Status,
    pub final_point: Vector,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn last_row(&self) -> &IterationRow {
        self.rows.last().expect("a run record always holds the initial row")
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.last_row().residual
    }

    pub fn best_residual(&self) -> Option<f64> {
        self.last_row().best_residual
    }

    pub fn oracle_calls(&self) -> u64 {
        self.last_row().oracle_calls
    }
}
