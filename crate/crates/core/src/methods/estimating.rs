//! Estimating functions `ψ_t(x) = ℓ_t(x) + (1/r)‖x − x0‖^r` of the accelerated schemes.

use crate::error::{check_dim, Result};
use crate::space::{pairing, DualVector, MetricSpace, Vector};

/// `ℓ_t(x) = lin_const + ⟨lin_coeff, x⟩` accumulates `Σ a_i[f(x_{i+1}) + ⟨∇f(x_{i+1}), x − x_{i+1}⟩]`.
#[derive(Debug, Clone)]
pub struct EstimatingSequence {
    x0: Vector,
    power: f64,
    lin_coeff: DualVector,
    lin_const: f64,
    total_weight: f64,
}

impl EstimatingSequence {
    pub fn new(x0: Vector, power: f64) -> Self {
        let n = x0.dim();
        Self {
            x0,
            power,
            lin_coeff: DualVector::zeros(n),
            lin_const: 0.0,
            total_weight: 0.0,
        }
    }

    pub fn anchor(&self) -> &Vector {
        &self.x0
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn lin_coeff(&self) -> &DualVector {
        &self.lin_coeff
    }

    pub fn lin_const(&self) -> f64 {
        self.lin_const
    }

    /// `A_t`
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Appends `a[f(x) + ⟨g, · − x⟩]` and adds `a` to `A`.
    pub fn add(&mut self, a: f64, f: f64, g: &DualVector, x: &Vector) -> Result<()> {
        check_dim(self.x0.dim(), x.dim())?;
        self.lin_const += a * (f - pairing(g, x)?);
        self.lin_coeff += &(g * a);
        self.total_weight += a;
        Ok(())
    }

    pub fn value(&self, space: &MetricSpace, x: &Vector) -> Result<f64> {
        let r = space.distance(&self.x0, x)?;
        Ok(self.lin_const + pairing(&self.lin_coeff, x)? + r.powf(self.power) / self.power)
    }

    pub fn gradient(&self, space: &MetricSpace, x: &Vector) -> Result<DualVector> {
        let d = x - &self.x0;
        let r = space.primal_norm(&d)?;
        let mut g = self.lin_coeff.clone();
        if r > 0.0 {
            g += &(&space.to_dual(&d)? * r.powf(self.power - 2.0));
        }
        Ok(g)
    }

    /// Closed-form minimizer `x0 − τB⁻¹c`, `τ = ‖c‖*^{(2−r)/(r−1)}`.
    pub fn argmin(&self, space: &MetricSpace) -> Result<Vector> {
        let cn = space.dual_norm(&self.lin_coeff)?;
        if cn == 0.0 {
            return Ok(self.x0.clone());
        }
        let r = self.power;
        let tau = cn.powf((2.0 - r) / (r - 1.0));
        Ok(self.x0.add_scaled(-tau, &space.to_primal(&self.lin_coeff)?))
    }

    /// `‖∇ψ(v)‖* / max(1, ‖c‖*)`
    pub fn stationarity_residual(&self, space: &MetricSpace, v: &Vector) -> Result<f64> {
        let scale = space.dual_norm(&self.lin_coeff)?.max(1.0);
        Ok(space.dual_norm(&self.gradient(space, v)?)? / scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn empty_sequence_minimized_at_anchor() {
        let space = MetricSpace::identity(2).unwrap();
        let est = EstimatingSequence::new(v(&[1.0, -2.0]), 3.0);
        assert_eq!(est.argmin(&space).unwrap().to_vec(), vec![1.0, -2.0]);
        assert_eq!(est.value(&space, &v(&[1.0, -2.0])).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_power_is_classical_prox() {
        let space = MetricSpace::diagonal(vec![2.0, 4.0]).unwrap();
        let mut est = EstimatingSequence::new(v(&[1.0, 1.0]), 2.0);
        est.add(1.0, 0.0, &DualVector::new(vec![2.0, 4.0]).unwrap(), &v(&[0.0, 0.0])).unwrap();
        let x = est.argmin(&space).unwrap();
        assert!((x[0] - 0.0).abs() < 1e-15 && (x[1] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_power_example() {
        let space = MetricSpace::identity(2).unwrap();
        let mut est = EstimatingSequence::new(Vector::zeros(2), 3.0);
        est.add(1.0, 0.0, &DualVector::new(vec![2.0, 0.0]).unwrap(), &Vector::zeros(2)).unwrap();
        let x = est.argmin(&space).unwrap();
        assert!((x[0] + 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(x[1], 0.0);
        assert!(est.stationarity_residual(&space, &x).unwrap() < 1e-15);
    }

    #[test]
    fn stored_form_matches_direct_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let space = MetricSpace::diagonal(vec![1.0, 0.5, 3.0]).unwrap();
        let x0 = v(&[0.2, -0.1, 0.4]);
        let mut est = EstimatingSequence::new(x0.clone(), 2.5);
        let mut terms = Vec::new();
        for _ in 0..15 {
            let a = rng.gen_range(0.01..3.0);
            let f = rng.gen_range(-2.0..2.0);
            let g = DualVector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let x = Vector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            est.add(a, f, &g, &x).unwrap();
            terms.push((a, f, g, x));
            for _ in 0..10 {
                let y = Vector::new((0..3).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
                let direct: f64 = terms
                    .iter()
                    .map(|(a, f, g, x)| a * (f + pairing(g, &(&y - x)).unwrap()))
                    .sum::<f64>()
                    + space.distance(&x0, &y).unwrap().powf(2.5) / 2.5;
                let stored = est.value(&space, &y).unwrap();
                assert!((stored - direct).abs() <= 1e-10 * direct.abs().max(1.0));
            }
            let vmin = est.argmin(&space).unwrap();
            assert!(est.stationarity_residual(&space, &vmin).unwrap() <= 1e-9);
        }
    }
}
