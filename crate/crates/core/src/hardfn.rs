//! Chained power functions that are hard for every high-order method.
//!
//! For `2 ≤ k ≤ n` and `r = p + ν`,
//!
//! ```text
//! f_k(x) = (1/r)[Σ_{i<k} |x_i − x_{i+1}|^r + Σ_{i≥k} |x_i|^r] − x_1
//!        = η_r(A_k x) − ⟨e_1, x⟩,   η_r(u) = (1/r) Σ |u_i|^r
//! ```
//!
//! where `A_k` is the upper-bidiagonal difference operator on the first `k`
//! coordinates and the identity on the rest. The minimizer reveals one new
//! coordinate per iteration of any method whose steps stay in the span of
//! derivative information, which yields the lower-bound envelope below.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::oracle::{DerivativeOracle, HolderHint};
use crate::space::{DualVector, Vector};

/// `A_k` applied implicitly: `(A_k x)_i = x_i − x_{i+1}` for `i < k`, `x_i` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandedDifference {
    n: usize,
    k: usize,
}

impl BandedDifference {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::Config(format!("need 2 <= k <= n, got k={k}, n={n}")));
        }
        Ok(Self { n, k })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| if i + 1 < self.k { x[i] - x[i + 1] } else { x[i] })
    }

    pub fn apply_transpose(&self, w: &DVector<f64>) -> DVector<f64> {
        // Column j of A_k has +1 at row j and −1 at row j−1 when j−1 < k−1.
        DVector::from_fn(self.n, |j, _| {
            let mut v = w[j];
            if j >= 1 && j < self.k {
                v -= w[j - 1];
            }
            v
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for i in 0..self.k - 1 {
            m[(i, i + 1)] = -1.0;
        }
        m
    }

    /// Spectral norm by power iteration on `A_kᵀA_k`.
    pub fn operator_norm(&self, iters: usize) -> f64 {
        let mut v = DVector::from_fn(self.n, |i, _| 1.0 + (i as f64 * 0.7).sin());
        v /= v.norm();
        let mut sigma_sq = 0.0;
        for _ in 0..iters {
            let w = self.apply_transpose(&self.apply(&v));
            sigma_sq = w.norm();
            if sigma_sq == 0.0 {
                return 0.0;
            }
            v = w / sigma_sq;
        }
        sigma_sq.sqrt()
    }
}

/// One member `f_k` of the hard family on `ℝ^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardInstance {
    n: usize,
    k: usize,
    p: usize,
    nu: f64,
    op: BandedDifference,
}

impl HardInstance {
    pub fn new(n: usize, k: usize, p: usize, nu: f64) -> Result<Self> {
        let op = BandedDifference::new(n, k)?;
        if !(2..=3).contains(&p) {
            return Err(Error::UnsupportedOrder(p));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Config(format!("nu must lie in [0, 1], got {nu}")));
        }
        Ok(Self { n, k, p, nu, op })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn operator(&self) -> &BandedDifference {
        &self.op
    }

    fn power(&self) -> f64 {
        self.p as f64 + self.nu
    }

    /// Direct chained-sum form.
    pub fn value_direct(&self, x: &Vector) -> Result<f64> {
        check_dim(self.n, x.dim())?;
        let r = self.power();
        let c = x.as_slice();
        let chain: f64 = (0..self.k - 1).map(|i| (c[i] - c[i + 1]).abs().powf(r)).sum();
        let tail: f64 = (self.k - 1..self.n).map(|i| c[i].abs().powf(r)).sum();
        Ok((chain + tail) / r - c[0])
    }

    /// Factored form `η(A_k x) − x_1`.
    pub fn value_factored(&self, x: &Vector) -> Result<f64> {
        check_dim(self.n, x.dim())?;
        let r = self.power();
        let u = self.op.apply(x.as_dvector());
        Ok(u.iter().map(|v| v.abs().powf(r)).sum::<f64>() / r - x[0])
    }

    /// Third directional derivative; errors where it is unbounded.
    pub fn third_apply_checked(&self, x: &Vector, h: &Vector) -> Result<DualVector> {
        check_dim(self.n, x.dim())?;
        check_dim(self.n, h.dim())?;
        let r = self.power();
        let u = self.op.apply(x.as_dvector());
        let d = self.op.apply(h.as_dvector());
        let mut w = DVector::zeros(self.n);
        for i in 0..self.n {
            if u[i] == 0.0 {
                if r < 3.0 && d[i] != 0.0 {
                    return Err(Error::SingularDerivative { order: 3, index: i });
                }
                continue;
            }
            w[i] = (r - 1.0) * (r - 2.0) * u[i].abs().powf(r - 3.0) * u[i].signum() * d[i] * d[i];
        }
        Ok(DualVector::from(self.op.apply_transpose(&w)))
    }

    /// Closed-form minimizer `x*_i = (k − i + 1)_+` (1-based) and optimal value.
    pub fn optimum(&self) -> (Vector, f64) {
        let x = DVector::from_fn(self.n, |i, _| (self.k as f64 - i as f64).max(0.0));
        (Vector::from(x), optimal_value(self.k, self.p, self.nu))
    }

    /// `Π_{i=1}^{p−1}(p+ν−i) · 2^{(2+ν)/2}`, independent of `k`.
    pub fn holder_constant(&self) -> f64 {
        hard_holder_constant(self.p, self.nu)
    }
}

impl DerivativeOracle for HardInstance {
    fn dim(&self) -> usize {
        self.n
    }

    fn order(&self) -> usize {
        self.p
    }

    fn value(&self, x: &Vector) -> f64 {
        self.value_direct(x).unwrap_or(f64::NAN)
    }

    fn gradient(&self, x: &Vector) -> DualVector {
        let r = self.power();
        let u = self.op.apply(x.as_dvector());
        let mut g = self.op.apply_transpose(&u.map(|v| v.abs().powf(r - 2.0) * v));
        g[0] -= 1.0;
        DualVector::from(g)
    }

    fn hessian_apply(&self, x: &Vector, h: &Vector) -> DualVector {
        let r = self.power();
        let u = self.op.apply(x.as_dvector());
        let d = self.op.apply(h.as_dvector());
        let w = u.zip_map(&d, |ui, di| (r - 1.0) * ui.abs().powf(r - 2.0) * di);
        DualVector::from(self.op.apply_transpose(&w))
    }

    fn third_apply(&self, x: &Vector, h: &Vector) -> Result<DualVector> {
        self.third_apply_checked(x, h)
    }

    fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let r = self.power();
        let u = self.op.apply(x.as_dvector());
        let a = self.op.to_dense();
        let diag = DMatrix::from_diagonal(&u.map(|v| (r - 1.0) * v.abs().powf(r - 2.0)));
        a.transpose() * diag * a
    }

    fn holder_hint(&self) -> Option<HolderHint> {
        Some(HolderHint {
            nu: self.nu,
            constant: self.holder_constant(),
        })
    }
}

/// `f_k* = −(p+ν−1)k/(p+ν)`
pub fn optimal_value(k: usize, p: usize, nu: f64) -> f64 {
    let r = p as f64 + nu;
    -(r - 1.0) * k as f64 / r
}

/// `‖x_k*‖² = k(k+1)(2k+1)/6`
pub fn optimum_norm_squared(k: usize) -> f64 {
    let k = k as f64;
    k * (k + 1.0) * (2.0 * k + 1.0) / 6.0
}

/// Analytic Hölder constant attached to the hard family.
pub fn hard_holder_constant(p: usize, nu: f64) -> f64 {
    let r = p as f64 + nu;
    let prod: f64 = (1..p).map(|i| r - i as f64).product();
    2f64.powf((2.0 + nu) / 2.0) * prod
}

/// `C_{p,ν} = 2^{(3p+4ν+2)/2} Π_{i=0}^{p−1}(p+ν−i) / (3^{(p+ν)/2}(p+ν−1))`
pub fn lower_bound_constant(p: usize, nu: f64) -> f64 {
    let r = p as f64 + nu;
    let prod: f64 = (0..p).map(|i| r - i as f64).product();
    2f64.powf((3.0 * p as f64 + 4.0 * nu + 2.0) / 2.0) * prod / (3f64.powf(r / 2.0) * (r - 1.0))
}

/// Smallest residual a span-respecting method can guarantee after `t ≥ 1` iterations:
/// `H_f ‖x0 − x*‖^{p+ν} / (C_{p,ν} (t+1)^{(3(p+ν)−2)/2})`.
pub fn lower_bound_envelope(p: usize, nu: f64, t: usize, x0_dist: f64, holder: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::Config("lower-bound envelope needs t >= 1".into()));
    }
    let r = p as f64 + nu;
    let kappa = lower_bound_constant(p, nu) * ((t + 1) as f64).powf((3.0 * r - 2.0) / 2.0);
    Ok(holder * x0_dist.powf(r) / kappa)
}
