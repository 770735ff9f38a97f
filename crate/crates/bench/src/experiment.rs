//! One configured run: build, execute, persist.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tensor_methods::methods::{
    self, accelerated_regularization_constant, fixed_regularization_constant, MethodKind, RunRecord, RunSetup,
    StoppingRule,
};
use tensor_methods::space::MetricSpace;
use tensor_methods::subsolver::SubsolverOptions;
use tensor_methods::{SmoothnessParams, Vector};

use crate::compare::{compare_bounds, BoundContext, BoundReport};
use crate::config::{ExperimentConfig, InstanceSpec, StartSpec};
use crate::error::{BenchError, Result};
use crate::fit::{fit_rate, residual_series, RateFit};
use crate::plot::{plot_from_report, render_svg};
use crate::registry::{InstanceHandle, Registry};
use crate::trace::{rows_of, write_trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub partial: bool,
    pub missing: Vec<String>,
    pub transient: Option<usize>,
    pub violations: usize,
    pub above_upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub method: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status_detail: Option<String>,
    pub converged: bool,
    pub iterations: usize,
    pub oracle_calls: u64,
    pub alpha: f64,
    pub initial_coefficient: f64,
    pub final_f: f64,
    pub final_residual: Option<f64>,
    pub best_residual: Option<f64>,
    pub final_grad_norm: f64,
    pub fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_unavailable: Option<String>,
    pub bounds: BoundSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// A finished run before anything touches the disk.
pub struct Execution {
    pub record: RunRecord,
    pub instance: InstanceHandle,
    pub x0: Vector,
    pub bounds: BoundContext,
}

pub struct Outcome {
    pub record: RunRecord,
    pub summary: Summary,
    pub report: BoundReport,
    pub dir: PathBuf,
}

fn start_point(spec: &StartSpec, dim: usize, seed: u64) -> Result<Vector> {
    match spec {
        StartSpec::Zero => Ok(Vector::zeros(dim)),
        StartSpec::Random { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Vector::new((0..dim).map(|_| rng.gen_range(-scale..=*scale)).collect())?)
        }
        StartSpec::Point(c) => {
            if c.len() != dim {
                return Err(BenchError::Config(format!("start point has {} coordinates, instance has {dim}", c.len())));
            }
            Ok(Vector::new(c.clone())?)
        }
    }
}

/// Fixed `M` from the config, else from the instance's Hölder constant.
fn fixed_coefficient(cfg: &ExperimentConfig, inst: &InstanceHandle, kind: MethodKind) -> Result<f64> {
    if let Some(m) = cfg.params.m {
        return Ok(m);
    }
    let hint = inst.holder.ok_or_else(|| {
        BenchError::Config("fixed-coefficient method needs params.m or an instance with a known Hölder constant".into())
    })?;
    let (theta, p) = (cfg.params.theta, cfg.params.p);
    Ok(if kind.is_accelerated() {
        accelerated_regularization_constant(hint.nu, hint.constant, theta, p)?
    } else {
        fixed_regularization_constant(hint.nu, hint.constant, theta, p)?
    })
}

pub fn execute(cfg: &ExperimentConfig, registry: &Registry) -> Result<Execution> {
    cfg.validate()?;
    let inst = registry.build(&cfg.instance)?;
    let oracle = inst.oracle.as_ref();
    if oracle.order() != cfg.params.p {
        return Err(BenchError::Config(format!(
            "params.p = {} but the oracle has order {}",
            cfg.params.p,
            oracle.order()
        )));
    }
    let dim = oracle.dim();
    let space = MetricSpace::identity(dim)?;
    let x0 = start_point(&cfg.x0, dim, cfg.params.seed)?;
    let params = SmoothnessParams::new(cfg.params.nu, cfg.params.nu_known)?;
    let eps = cfg.params.eps.filter(|_| inst.f_star.is_some());
    if eps.is_none() && cfg.params.gtol.is_none() {
        return Err(BenchError::Config("eps needs a known optimal value; give gtol for this instance".into()));
    }
    let stop = StoppingRule {
        eps,
        f_star: inst.f_star,
        gtol: cfg.params.gtol,
        max_outer_iters: cfg.params.max_outer_iters,
    };
    let mut setup = RunSetup::new(oracle, &space, x0.clone(), params, stop);
    setup.subsolver = SubsolverOptions {
        theta: cfg.params.theta,
        mode: cfg.params.subsolver.into(),
        ..SubsolverOptions::default()
    };
    setup.timing = cfg.timing;

    let kind = cfg.method_kind();
    let coefficient = if kind.is_adaptive() {
        cfg.params.h0.unwrap_or(1.0)
    } else {
        fixed_coefficient(cfg, &inst, kind)?
    };
    let record = match kind {
        MethodKind::Tensor => methods::run_tensor(&setup, coefficient)?,
        MethodKind::AdaptiveTensor => methods::run_adaptive_tensor(&setup, coefficient)?,
        MethodKind::Accelerated => methods::run_accelerated(&setup, coefficient)?,
        MethodKind::AdaptiveAccelerated => methods::run_adaptive_accelerated(&setup, coefficient)?,
    };

    let x0_dist = match &inst.x_star {
        Some(xs) => Some(space.distance(&x0, xs)?),
        None => None,
    };
    let hard_k = match cfg.instance {
        InstanceSpec::Hard { k, .. } if x0.max_abs() == 0.0 => Some(k),
        _ => None,
    };
    let bounds = BoundContext {
        method: kind,
        p: cfg.params.p,
        nu: cfg.params.nu,
        nu_known: cfg.params.nu_known,
        theta: cfg.params.theta,
        holder: inst.holder.map(|h| h.constant),
        coefficient: Some(coefficient),
        d0: cfg.bounds.d0,
        r_eps: cfg.bounds.r_eps,
        eps: cfg.params.eps,
        x0_dist,
        hard_k,
    };
    Ok(Execution {
        record,
        instance: inst,
        x0,
        bounds,
    })
}

pub fn summarize(cfg: &ExperimentConfig, record: &RunRecord, report: &BoundReport) -> Summary {
    let rows = rows_of(record);
    let (fit, fit_unavailable) = match fit_rate(&residual_series(&rows)) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = record.last_row();
    Summary {
        name: cfg.name.clone(),
        method: record.method.name().to_string(),
        status: record.status.label().to_string(),
        status_detail: match &record.status {
            methods::Status::Numerical(msg) => Some(msg.clone()),
            _ => None,
        },
        converged: record.converged(),
        iterations: record.iterations(),
        oracle_calls: record.oracle_calls(),
        alpha: record.alpha,
        initial_coefficient: record.initial_coefficient,
        final_f: last.f,
        final_residual: last.residual,
        best_residual: last.best_residual,
        final_grad_norm: last.grad_norm,
        fit,
        fit_unavailable,
        bounds: BoundSummary {
            partial: report.partial,
            missing: report.missing.clone(),
            transient: report.transient,
            violations: report.violations,
            above_upper: report.above_upper,
        },
        warnings: Vec::new(),
    }
}

/// Runs `cfg` and writes `trace.csv`, `config.json`, `summary.json`, `bounds.json`
/// and `plot.svg` to its output directory. A failed method still yields `Ok`;
/// callers inspect `summary.converged` / the record status.
pub fn run_experiment(cfg: &ExperimentConfig, registry: &Registry, root_override: Option<&Path>) -> Result<Outcome> {
    let exec = execute(cfg, registry)?;
    let rows = rows_of(&exec.record);
    let report = compare_bounds(&rows, &exec.bounds)?;
    let mut summary = summarize(cfg, &exec.record, &report);

    let dir = cfg.resolve_output_dir(root_override);
    std::fs::create_dir_all(&dir)?;
    write_trace(&rows, std::fs::File::create(dir.join("trace.csv"))?)?;
    std::fs::write(dir.join("config.json"), cfg.to_json() + "\n")?;
    std::fs::write(dir.join("bounds.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    match render_svg(&plot_from_report(&cfg.name, &report)) {
        Some(svg) => std::fs::write(dir.join("plot.svg"), svg)?,
        None => summary.warnings.push("no positive residuals to plot; plot.svg skipped".into()),
    }
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(Outcome {
        record: exec.record,
        summary,
        report,
        dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "name": "unit-{method}",
                "instance": {{"kind": "hard", "n": 11, "k": 5, "p": 2, "nu": 1.0}},
                "method": "{method}",
                "params": {{"p": 2, "nu": 1.0, "eps": 1e-6 {extra}}}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn adaptive_accelerated_converges_and_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("adaptive-accelerated", "");
        let out = run_experiment(&cfg, &Registry::new(), Some(dir.path())).unwrap();
        assert!(out.summary.converged);
        for f in ["trace.csv", "config.json", "summary.json", "bounds.json", "plot.svg"] {
            assert!(out.dir.join(f).is_file(), "{f}");
        }
        let echoed = ExperimentConfig::load(&out.dir.join("config.json")).unwrap();
        assert_eq!(echoed, cfg);
        assert_eq!(out.summary.bounds.violations, 0);
        // No D0 was supplied, but the accelerated envelope only needs ‖x0 − x*‖.
        assert!(!out.summary.bounds.partial);
    }

    #[test]
    fn fixed_coefficient_derived_from_holder_constant() {
        let exec = execute(&config("tensor", ""), &Registry::new()).unwrap();
        assert!((exec.record.initial_coefficient - 8.485281374238571).abs() < 1e-12);
        let exec = execute(&config("accelerated", r#", "m": 20.0"#), &Registry::new()).unwrap();
        assert_eq!(exec.record.initial_coefficient, 20.0);
    }

    #[test]
    fn random_start_is_seeded() {
        let mut cfg = config("adaptive-tensor", r#", "seed": 9"#);
        cfg.x0 = StartSpec::Random { scale: 0.5 };
        let a = start_point(&cfg.x0, 11, cfg.params.seed).unwrap();
        let b = start_point(&cfg.x0, 11, cfg.params.seed).unwrap();
        assert_eq!(a, b);
        assert!(a.max_abs() <= 0.5 && a.max_abs() > 0.0);
        assert!(start_point(&StartSpec::Point(vec![1.0]), 11, 0).is_err());
    }
}
