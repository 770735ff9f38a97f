//! Experiment configuration: one strict JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tensor_methods::methods::MethodKind;
use tensor_methods::subsolver::SubsolverMode;

use crate::error::{BenchError, Result};

/// Environment variable overriding the root of all output directories.
pub const OUTPUT_ROOT_ENV: &str = "TENSOR_BENCH_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub instance: InstanceSpec,
    pub method: MethodName,
    pub params: Params,
    #[serde(default)]
    pub x0: StartSpec,
    /// Relative paths are resolved against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub bounds: BoundInputs,
    /// Record wall-clock time in the trace; off keeps outputs byte-identical.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    Hard {
        n: usize,
        k: usize,
        p: usize,
        nu: f64,
    },
    PowerSum {
        n: usize,
        p: usize,
        nu: f64,
    },
    Quadratic {
        diag: Vec<f64>,
        b: Vec<f64>,
    },
    /// Resolved through the plugin registry.
    External {
        name: String,
        #[serde(default)]
        args: serde_json::Value,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Tensor,
    AdaptiveTensor,
    Accelerated,
    AdaptiveAccelerated,
}

impl From<MethodName> for MethodKind {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Tensor => MethodKind::Tensor,
            MethodName::AdaptiveTensor => MethodKind::AdaptiveTensor,
            MethodName::Accelerated => MethodKind::Accelerated,
            MethodName::AdaptiveAccelerated => MethodKind::AdaptiveAccelerated,
        }
    }
}

impl From<MethodKind> for MethodName {
    fn from(m: MethodKind) -> Self {
        match m {
            MethodKind::Tensor => MethodName::Tensor,
            MethodKind::AdaptiveTensor => MethodName::AdaptiveTensor,
            MethodKind::Accelerated => MethodName::Accelerated,
            MethodKind::AdaptiveAccelerated => MethodName::AdaptiveAccelerated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SubsolverName {
    #[default]
    Auto,
    Secular,
    FirstOrder,
}

impl From<SubsolverName> for SubsolverMode {
    fn from(s: SubsolverName) -> Self {
        match s {
            SubsolverName::Auto => SubsolverMode::Auto,
            SubsolverName::Secular => SubsolverMode::Secular,
            SubsolverName::FirstOrder => SubsolverMode::FirstOrder,
        }
    }
}

fn default_theta() -> f64 {
    0.1
}

fn default_max_outer() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub p: usize,
    /// Hölder exponent; used for the model power only when `nu_known`.
    pub nu: f64,
    #[serde(default = "default_true")]
    pub nu_known: bool,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Initial coefficient of the adaptive methods (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    /// Fixed coefficient of the non-adaptive methods; derived from the
    /// instance's Hölder constant when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gtol: Option<f64>,
    #[serde(default = "default_max_outer")]
    pub max_outer_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub subsolver: SubsolverName,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum StartSpec {
    #[default]
    Zero,
    /// Uniform in `[-scale, scale]^n`, seeded by `params.seed`.
    Random { scale: f64 },
    Point(Vec<f64>),
}

/// Analysis constants that are not computable in general; reports that need
/// them are marked partial when they are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Level-set radius stand-in `D₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    /// `R(ε)` stand-in for the universal branches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_eps: Option<f64>,
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

impl InstanceSpec {
    pub fn order(&self) -> Option<usize> {
        match self {
            InstanceSpec::Hard { p, .. } | InstanceSpec::PowerSum { p, .. } => Some(*p),
            InstanceSpec::Quadratic { .. } => Some(2),
            InstanceSpec::External { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InstanceSpec::Hard { n, k, p, nu } => {
                if *k < 2 || k > n {
                    return Err(config_err(format!("hard instance needs 2 <= k <= n (k={k}, n={n})")));
                }
                check_order_nu(*p, *nu)
            }
            InstanceSpec::PowerSum { n, p, nu } => {
                if *n == 0 {
                    return Err(config_err("power-sum dimension must be positive"));
                }
                check_order_nu(*p, *nu)
            }
            InstanceSpec::Quadratic { diag, b } => {
                if diag.is_empty() || diag.len() != b.len() {
                    return Err(config_err("quadratic needs equal-length, nonempty diag and b"));
                }
                if diag.iter().chain(b.iter()).any(|v| !v.is_finite()) || diag.iter().any(|d| *d < 0.0) {
                    return Err(config_err("quadratic diag must be finite and nonnegative"));
                }
                Ok(())
            }
            InstanceSpec::External { name, .. } => {
                if name.is_empty() {
                    return Err(config_err("external instance needs a name"));
                }
                Ok(())
            }
        }
    }

    /// Parses `hard:n=11,k=5,p=2,nu=1` style specs, or a JSON object.
    pub fn parse_short(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: InstanceSpec = serde_json::from_str(s).map_err(|e| config_err(e.to_string()))?;
            spec.validate()?;
            return Ok(spec);
        }
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut fields = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| config_err(format!("malformed instance field '{part}'")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |key: &str| -> Result<String> {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| config_err(format!("instance spec missing '{key}'")))
        };
        let int = |key: &str| -> Result<usize> { take(key)?.parse().map_err(|_| config_err(format!("bad integer for '{key}'"))) };
        let real = |key: &str| -> Result<f64> { take(key)?.parse().map_err(|_| config_err(format!("bad number for '{key}'"))) };
        let spec = match kind {
            "hard" => InstanceSpec::Hard {
                n: int("n")?,
                k: int("k")?,
                p: int("p")?,
                nu: real("nu")?,
            },
            "power-sum" => InstanceSpec::PowerSum {
                n: int("n")?,
                p: int("p")?,
                nu: real("nu")?,
            },
            other => return Err(config_err(format!("unknown instance kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_order_nu(p: usize, nu: f64) -> Result<()> {
    if !(2..=3).contains(&p) {
        return Err(config_err(format!("p must be 2 or 3, got {p}")));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(config_err(format!("nu must lie in [0, 1], got {nu}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn method_kind(&self) -> MethodKind {
        self.method.into()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_err("name must be a nonempty file-name-safe string"));
        }
        self.instance.validate()?;
        let p = &self.params;
        check_order_nu(p.p, p.nu)?;
        if let Some(order) = self.instance.order() {
            if order != p.p {
                return Err(config_err(format!("params.p = {} but the instance has order {order}", p.p)));
            }
        }
        if !(p.theta.is_finite() && p.theta >= 0.0) {
            return Err(config_err(format!("theta must be nonnegative, got {}", p.theta)));
        }
        for (label, v) in [("h0", p.h0), ("m", p.m)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(config_err(format!("{label} must be positive, got {v}")));
                }
            }
        }
        if let Some(eps) = p.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(config_err(format!("eps must lie in (0, 1), got {eps}")));
            }
        }
        if let Some(g) = p.gtol {
            if !(g.is_finite() && g >= 0.0) {
                return Err(config_err(format!("gtol must be nonnegative, got {g}")));
            }
        }
        if p.eps.is_none() && p.gtol.is_none() {
            return Err(config_err("at least one of eps or gtol is required"));
        }
        if p.max_outer_iters == 0 {
            return Err(config_err("max_outer_iters must be positive"));
        }
        match &self.x0 {
            StartSpec::Zero => {}
            StartSpec::Random { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(config_err("random start needs a positive scale"));
                }
            }
            StartSpec::Point(c) => {
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(config_err("start point must be finite"));
                }
            }
        }
        for (label, v) in [("d0", self.bounds.d0), ("r_eps", self.bounds.r_eps)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(config_err(format!("{label} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// `output_dir` (default `runs/<name>`), re-rooted under the override root when set.
    pub fn resolve_output_dir(&self, root_override: Option<&Path>) -> PathBuf {
        let rel = self
            .output_dir
            .clone()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs").join(&self.name));
        match root_override {
            Some(root) if rel.is_relative() => root.join(rel),
            Some(root) => root.join(rel.file_name().unwrap_or(self.name.as_ref())),
            None => rel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "name": "hard-aat",
        "instance": {"kind": "hard", "n": 11, "k": 5, "p": 2, "nu": 1.0},
        "method": "adaptive-accelerated",
        "params": {"p": 2, "nu": 1.0, "h0": 1.0, "eps": 1e-6, "seed": 7},
        "x0": "zero"
    }"#;

    #[test]
    fn sample_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.params.theta, 0.1);
        assert!(cfg.params.nu_known);
        assert_eq!(cfg.params.max_outer_iters, 1000);
        assert_eq!(cfg.method_kind(), MethodKind::AdaptiveAccelerated);
        assert!(!cfg.timing);
    }

    #[test]
    fn round_trip_is_lossless() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        let mut other = cfg.clone();
        other.x0 = StartSpec::Point(vec![0.1; 11]);
        other.bounds.d0 = Some(3.5);
        other.instance = InstanceSpec::External {
            name: "mine".into(),
            args: serde_json::json!({"a": [1, 2]}),
        };
        other.params.p = 2;
        assert_eq!(ExperimentConfig::from_json(&other.to_json()).unwrap(), other);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("\"x0\": \"zero\"", "\"x0\": \"zero\", \"colour\": 1");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(BenchError::Config(_))));
        let bad = SAMPLE.replace("\"seed\": 7", "\"seed\": 7, \"sed\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        for (from, to) in [
            ("\"nu\": 1.0, \"h0\"", "\"nu\": 1.5, \"h0\""),
            ("\"eps\": 1e-6", "\"eps\": 2.0"),
            ("\"h0\": 1.0", "\"h0\": -1.0"),
            ("\"k\": 5", "\"k\": 12"),
            ("\"params\": {\"p\": 2", "\"params\": {\"p\": 3"),
        ] {
            let bad = SAMPLE.replace(from, to);
            assert_ne!(bad, SAMPLE);
            let err = ExperimentConfig::from_json(&bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{from} -> {to}");
        }
    }

    #[test]
    fn short_instance_specs() {
        let s = InstanceSpec::parse_short("hard:n=11,k=11,p=2,nu=1").unwrap();
        assert_eq!(s, InstanceSpec::Hard { n: 11, k: 11, p: 2, nu: 1.0 });
        let j = InstanceSpec::parse_short(r#"{"kind":"power-sum","n":3,"p":2,"nu":0.5}"#).unwrap();
        assert_eq!(j, InstanceSpec::PowerSum { n: 3, p: 2, nu: 0.5 });
        assert!(InstanceSpec::parse_short("hard:n=11,k=1,p=2,nu=1").is_err());
        assert!(InstanceSpec::parse_short("blob:n=1").is_err());
    }

    #[test]
    fn output_dir_resolution() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.resolve_output_dir(None), PathBuf::from("runs/hard-aat"));
        assert_eq!(cfg.resolve_output_dir(Some(Path::new("/tmp/x"))), PathBuf::from("/tmp/x/runs/hard-aat"));
    }
}
