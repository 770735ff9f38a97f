//! High-order tensor methods for convex problems with Hölder-continuous
//! derivatives: basic and accelerated schemes, their adaptive variants,
//! the regularized-model subproblem, and a family of worst-case functions.

pub mod error;
pub mod hardfn;
pub mod methods;
pub mod oracle;
pub mod space;
pub mod subsolver;
pub mod testfns;

pub use error::{Error, Result};
pub use hardfn::HardInstance;
pub use oracle::{DerivativeOracle, HolderHint, RegularizedModel, SmoothnessParams, TaylorModel};
pub use space::{DualVector, MetricSpace, Vector};
