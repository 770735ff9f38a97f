//! Trace CSV with the fixed column set
//! `t, f, residual, grad_norm, H, inner_iters, ls_trials, oracle_calls, wall_ns`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tensor_methods::methods::RunRecord;

use crate::error::Result;

pub const COLUMNS: [&str; 9] = [
    "t",
    "f",
    "residual",
    "grad_norm",
    "H",
    "inner_iters",
    "ls_trials",
    "oracle_calls",
    "wall_ns",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub f: f64,
    /// Empty when the optimal value is unknown.
    pub residual: Option<f64>,
    pub grad_norm: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub inner_iters: usize,
    pub ls_trials: usize,
    pub oracle_calls: u64,
    pub wall_ns: u64,
}

pub fn rows_of(record: &RunRecord) -> Vec<TraceRow> {
    record
        .rows
        .iter()
        .map(|r| TraceRow {
            t: r.t,
            f: r.f,
            residual: r.residual,
            grad_norm: r.grad_norm,
            h: r.h,
            inner_iters: r.inner_iters,
            ls_trials: r.ls_trials,
            oracle_calls: r.oracle_calls,
            wall_ns: r.wall_ns,
        })
        .collect()
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRow>> {
    read_trace(std::fs::File::open(path)?)
}

/// Running minimum of the residual column.
pub fn best_so_far(rows: &[TraceRow]) -> Vec<Option<f64>> {
    let mut best: Option<f64> = None;
    rows.iter()
        .map(|r| {
            if let Some(v) = r.residual {
                best = Some(best.map_or(v, |b| b.min(v)));
            }
            best
        })
        .collect()
}
