//! Small built-in objectives with closed-form derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::oracle::{DerivativeOracle, HolderHint};
use crate::space::{DualVector, Vector};

/// `f(x) = ½⟨Qx, x⟩ + ⟨b, x⟩` with symmetric positive semidefinite `Q`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: DMatrix<f64>,
    b: DVector<f64>,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::Config("quadratic matrix must be square".into()));
        }
        check_dim(q.nrows(), b.len())?;
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Config("quadratic matrix must be symmetric".into()));
        }
        Ok(Self { q, b })
    }

    /// Diagonal `Q` with the given entries.
    pub fn diagonal(diag: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_dim(diag.len(), b.len())?;
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(diag)), DVector::from_vec(b))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }
}

impl DerivativeOracle for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn order(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector) -> f64 {
        let x = x.as_dvector();
        0.5 * (&self.q * x).dot(x) + self.b.dot(x)
    }

    fn gradient(&self, x: &Vector) -> DualVector {
        DualVector::from(&self.q * x.as_dvector() + &self.b)
    }

    fn hessian_apply(&self, _x: &Vector, h: &Vector) -> DualVector {
        DualVector::from(&self.q * h.as_dvector())
    }

    fn third_apply(&self, _x: &Vector, _h: &Vector) -> Result<DualVector> {
        Ok(DualVector::zeros(self.dim()))
    }

    fn hessian(&self, _x: &Vector) -> DMatrix<f64> {
        self.q.clone()
    }

    fn holder_hint(&self) -> Option<HolderHint> {
        Some(HolderHint { nu: 1.0, constant: 0.0 })
    }
}

/// Separable power function `f(x) = Σ |x_i|^{p+ν} / (p+ν)`, minimized at 0.
#[derive(Debug, Clone)]
pub struct PowerSum {
    dim: usize,
    nu: f64,
    order: usize,
}

impl PowerSum {
    pub fn new(dim: usize, nu: f64) -> Result<Self> {
        Self::with_order(dim, nu, 2)
    }

    pub fn with_order(dim: usize, nu: f64, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Config(format!("nu must lie in [0, 1], got {nu}")));
        }
        if !(2..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self { dim, nu, order })
    }

    fn power(&self) -> f64 {
        self.order as f64 + self.nu
    }
}

impl DerivativeOracle for PowerSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn order(&self) -> usize {
        self.order
    }

    fn value(&self, x: &Vector) -> f64 {
        let r = self.power();
        x.as_slice().iter().map(|v| v.abs().powf(r)).sum::<f64>() / r
    }

    fn gradient(&self, x: &Vector) -> DualVector {
        let r = self.power();
        DualVector::from(x.as_dvector().map(|v| v.abs().powf(r - 2.0) * v))
    }

    fn hessian_apply(&self, x: &Vector, h: &Vector) -> DualVector {
        let r = self.power();
        DualVector::from(x.as_dvector().zip_map(h.as_dvector(), |v, d| (r - 1.0) * v.abs().powf(r - 2.0) * d))
    }

    fn third_apply(&self, x: &Vector, h: &Vector) -> Result<DualVector> {
        let r = self.power();
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.dim {
            let v = x[i];
            if v == 0.0 {
                if r < 3.0 && h[i] != 0.0 {
                    return Err(Error::SingularDerivative { order: 3, index: i });
                }
                continue;
            }
            out[i] = (r - 1.0) * (r - 2.0) * v.abs().powf(r - 3.0) * v.signum() * h[i] * h[i];
        }
        Ok(DualVector::from(out))
    }

    fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let r = self.power();
        DMatrix::from_diagonal(&x.as_dvector().map(|v| (r - 1.0) * v.abs().powf(r - 2.0)))
    }

    fn holder_hint(&self) -> Option<HolderHint> {
        // Π_{i=1}^{p-1}(p+ν-i)
        let constant = (1..self.order).map(|i| self.power() - i as f64).product();
        Some(HolderHint { nu: self.nu, constant })
    }
}
