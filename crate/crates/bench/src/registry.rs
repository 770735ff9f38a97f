//! Instance construction, including user-registered external oracles.

use std::collections::BTreeMap;
use std::sync::Arc;

use tensor_methods::hardfn::HardInstance;
use tensor_methods::oracle::{DerivativeOracle, HolderHint};
use tensor_methods::testfns::{PowerSum, Quadratic};
use tensor_methods::Vector;

use crate::config::InstanceSpec;
use crate::error::{BenchError, Result};

/// A ready oracle plus whatever closed-form facts are known about it.
#[derive(Clone)]
pub struct InstanceHandle {
    pub oracle: Arc<dyn DerivativeOracle>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vector>,
    pub holder: Option<HolderHint>,
    /// `(n, p, ν)` when this is a member of the hard family.
    pub hard: Option<(usize, usize, f64)>,
}

pub type Factory = Arc<dyn Fn(&serde_json::Value) -> Result<InstanceHandle> + Send + Sync>;

#[derive(Clone, Default)]
pub struct Registry {
    factories: BTreeMap<String, Factory>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&serde_json::Value) -> Result<InstanceHandle> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &InstanceSpec) -> Result<InstanceHandle> {
        spec.validate()?;
        match spec {
            InstanceSpec::Hard { n, k, p, nu } => {
                let inst = HardInstance::new(*n, *k, *p, *nu)?;
                let (x, f) = inst.optimum();
                Ok(InstanceHandle {
                    holder: inst.holder_hint(),
                    oracle: Arc::new(inst),
                    f_star: Some(f),
                    x_star: Some(x),
                    hard: Some((*n, *p, *nu)),
                })
            }
            InstanceSpec::PowerSum { n, p, nu } => {
                let inst = PowerSum::with_order(*n, *nu, *p)?;
                Ok(InstanceHandle {
                    holder: inst.holder_hint(),
                    oracle: Arc::new(inst),
                    f_star: Some(0.0),
                    x_star: Some(Vector::zeros(*n)),
                    hard: None,
                })
            }
            InstanceSpec::Quadratic { diag, b } => {
                let inst = Quadratic::diagonal(diag.clone(), b.clone())?;
                // Minimizer exists only when b vanishes on the kernel of Q.
                let solvable = diag.iter().zip(b).all(|(d, bi)| *d > 0.0 || *bi == 0.0);
                let (f_star, x_star) = if solvable {
                    let x: Vec<f64> = diag.iter().zip(b).map(|(d, bi)| if *d > 0.0 { -bi / d } else { 0.0 }).collect();
                    let f = diag.iter().zip(b).map(|(d, bi)| if *d > 0.0 { -0.5 * bi * bi / d } else { 0.0 }).sum();
                    (Some(f), Vector::new(x).ok())
                } else {
                    (None, None)
                };
                Ok(InstanceHandle {
                    holder: inst.holder_hint(),
                    oracle: Arc::new(inst),
                    f_star,
                    x_star,
                    hard: None,
                })
            }
            InstanceSpec::External { name, args } => {
                let factory = self
                    .factories
                    .get(name)
                    .ok_or_else(|| BenchError::Config(format!("no registered instance named '{name}'")))?;
                factory(args)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_instances() {
        let reg = Registry::new();
        let h = reg.build(&InstanceSpec::Hard { n: 5, k: 3, p: 2, nu: 0.5 }).unwrap();
        assert!((h.f_star.unwrap() + 1.8).abs() < 1e-12);
        assert_eq!(h.hard, Some((5, 2, 0.5)));
        let q = reg
            .build(&InstanceSpec::Quadratic {
                diag: vec![2.0, 0.0],
                b: vec![-2.0, 0.0],
            })
            .unwrap();
        assert_eq!(q.f_star, Some(-1.0));
        assert_eq!(q.x_star.unwrap().to_vec(), vec![1.0, 0.0]);
        let unbounded = reg
            .build(&InstanceSpec::Quadratic {
                diag: vec![0.0],
                b: vec![1.0],
            })
            .unwrap();
        assert!(unbounded.f_star.is_none());
    }

    #[test]
    fn external_factories() {
        let mut reg = Registry::new();
        reg.register("shifted-power", |args| {
            let n = args.get("n").and_then(|v| v.as_u64()).unwrap_or(3) as usize;
            let inst = PowerSum::new(n, 1.0)?;
            Ok(InstanceHandle {
                holder: inst.holder_hint(),
                oracle: Arc::new(inst),
                f_star: Some(0.0),
                x_star: None,
                hard: None,
            })
        });
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["shifted-power"]);
        let h = reg
            .build(&InstanceSpec::External {
                name: "shifted-power".into(),
                args: serde_json::json!({"n": 4}),
            })
            .unwrap();
        assert_eq!(h.oracle.dim(), 4);
        let missing = reg.build(&InstanceSpec::External {
            name: "nope".into(),
            args: serde_json::Value::Null,
        });
        assert!(matches!(missing, Err(BenchError::Config(_))));
    }
}
