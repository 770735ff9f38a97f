//! Primal and dual vectors over a finite-dimensional Euclidean space.
//!
//! The space carries a self-adjoint positive-definite operator `B` mapping
//! primal vectors to dual vectors. It induces the conjugate norm pair
//! `‖x‖ = ⟨Bx, x⟩^{1/2}` and `‖s‖* = ⟨s, B⁻¹s⟩^{1/2}`, so that
//! `|⟨s, x⟩| ≤ ‖s‖*·‖x‖` for every pair.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};

macro_rules! coordinate_vector {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(DVector<f64>);

        impl $name {
            /// Builds a vector from coordinates, rejecting empty or non-finite input.
            pub fn new(coords: Vec<f64>) -> Result<Self> {
                if coords.is_empty() {
                    return Err(Error::Config("vectors must have at least one coordinate".into()));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite(stringify!($name)));
                }
                Ok(Self(DVector::from_vec(coords)))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn to_vec(&self) -> Vec<f64> {
                self.0.as_slice().to_vec()
            }

            pub fn as_dvector(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_dvector(self) -> DVector<f64> {
                self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }

            /// Plain coordinate dot product (not a duality pairing).
            pub fn dot(&self, other: &Self) -> f64 {
                self.0.dot(&other.0)
            }

            /// Largest absolute coordinate.
            pub fn max_abs(&self) -> f64 {
                self.0.amax()
            }

            /// `self + scale * other`
            pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
                Self(&self.0 + &other.0 * scale)
            }

            /// Convex combination `(1 - weight) * self + weight * other`.
            pub fn lerp(&self, other: &Self, weight: f64) -> Self {
                Self(&self.0 * (1.0 - weight) + &other.0 * weight)
            }
        }

        impl From<DVector<f64>> for $name {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name(&self.0 + &rhs.0)
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name(&self.0 - &rhs.0)
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl AddAssign<&$name> for $name {
            fn add_assign(&mut self, rhs: &$name) {
                self.0 += &rhs.0;
            }
        }

        impl SubAssign<&$name> for $name {
            fn sub_assign(&mut self, rhs: &$name) {
                self.0 -= &rhs.0;
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(&self.0 * rhs)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(self.0 * rhs)
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-&self.0)
            }
        }
    };
}

coordinate_vector!(Vector);
coordinate_vector!(DualVector);

/// `⟨s, x⟩`, the value of the linear functional `s` at `x`.
pub fn pairing(s: &DualVector, x: &Vector) -> Result<f64> {
    check_dim(s.dim(), x.dim())?;
    Ok(s.0.dot(&x.0))
}

/// Representation of the metric operator `B`.
#[derive(Debug, Clone)]
pub enum Metric {
    Identity,
    /// Strictly positive diagonal entries.
    Diagonal(DVector<f64>),
    /// Symmetric positive-definite matrix with its Cholesky factor.
    Dense {
        matrix: DMatrix<f64>,
        cholesky: Cholesky<f64, Dyn>,
    },
}

/// Euclidean structure shared read-only by models and solvers.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    dim: usize,
    metric: Metric,
}

impl MetricSpace {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("space dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            metric: Metric::Identity,
        })
    }

    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("space dimension must be positive".into()));
        }
        if entries.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            dim: entries.len(),
            metric: Metric::Diagonal(DVector::from_vec(entries)),
        })
    }

    /// Dense SPD metric. Symmetry is checked to a relative tolerance of 1e-12 and
    /// positive definiteness by a successful Cholesky factorization.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metric matrix"));
        }
        let scale = matrix.amax().max(1.0);
        if (&matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let cholesky = Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            dim: n,
            metric: Metric::Dense { matrix, cholesky },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.metric, Metric::Identity)
    }

    /// `Bx`
    pub fn to_dual(&self, x: &Vector) -> Result<DualVector> {
        check_dim(self.dim, x.dim())?;
        Ok(DualVector(match &self.metric {
            Metric::Identity => x.0.clone(),
            Metric::Diagonal(d) => x.0.component_mul(d),
            Metric::Dense { matrix, .. } => matrix * &x.0,
        }))
    }

    /// `B⁻¹s`
    pub fn to_primal(&self, s: &DualVector) -> Result<Vector> {
        check_dim(self.dim, s.dim())?;
        Ok(Vector(match &self.metric {
            Metric::Identity => s.0.clone(),
            Metric::Diagonal(d) => s.0.component_div(d),
            Metric::Dense { cholesky, .. } => cholesky.solve(&s.0),
        }))
    }

    pub fn primal_norm(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        let sq = match &self.metric {
            Metric::Identity => x.0.norm_squared(),
            Metric::Diagonal(d) => x.0.iter().zip(d.iter()).map(|(v, w)| w * v * v).sum(),
            Metric::Dense { matrix, .. } => (matrix * &x.0).dot(&x.0),
        };
        Ok(sq.max(0.0).sqrt())
    }

    pub fn dual_norm(&self, s: &DualVector) -> Result<f64> {
        check_dim(self.dim, s.dim())?;
        let sq = match &self.metric {
            Metric::Identity => s.0.norm_squared(),
            Metric::Diagonal(d) => s.0.iter().zip(d.iter()).map(|(v, w)| v * v / w).sum(),
            Metric::Dense { cholesky, .. } => cholesky.solve(&s.0).dot(&s.0),
        };
        Ok(sq.max(0.0).sqrt())
    }

    /// `‖y - x‖`
    pub fn distance(&self, x: &Vector, y: &Vector) -> Result<f64> {
        check_dim(x.dim(), y.dim())?;
        self.primal_norm(&(y - x))
    }
}
