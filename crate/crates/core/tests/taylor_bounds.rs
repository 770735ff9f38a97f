use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensor_methods::space::MetricSpace;
use tensor_methods::{DerivativeOracle, HardInstance, TaylorModel, Vector};

/// `D²f_k = Aᵀ diag((1+ν)|Ax|^ν) A` and `||a|^ν − |b|^ν| ≤ |a−b|^ν` give the
/// Hölder constant `(1+ν)‖A‖^{2+ν}`.
fn provable_constant(inst: &HardInstance) -> f64 {
    let a = inst.operator().operator_norm(200) * (1.0 + 1e-9);
    (1.0 + inst.nu()) * a.powf(2.0 + inst.nu())
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::new((0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

#[test]
fn value_and_gradient_remainders() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for nu in [0.0, 0.5, 1.0] {
        let inst = HardInstance::new(9, 6, 2, nu).unwrap();
        let space = MetricSpace::identity(9).unwrap();
        let h = provable_constant(&inst);
        for _ in 0..300 {
            let x = random_vector(&mut rng, 9, 3.0);
            let dir = random_vector(&mut rng, 9, 1.0);
            let len = 10f64.powf(rng.gen_range(-3.0..0.5));
            let y = x.add_scaled(len / space.primal_norm(&dir).unwrap(), &dir);
            let taylor = TaylorModel::new(&inst, x.clone()).unwrap();
            let r = space.distance(&x, &y).unwrap();

            let value_gap = (inst.value(&y) - taylor.value(&y).unwrap()).abs();
            let value_bound = h / 2.0 * r.powf(2.0 + nu);
            assert!(value_gap <= value_bound * (1.0 + 1e-9) + 1e-12, "nu={nu}: {value_gap} > {value_bound}");

            let grad_gap = space.dual_norm(&(&inst.gradient(&y) - &taylor.gradient(&y).unwrap())).unwrap();
            let grad_bound = h * r.powf(1.0 + nu);
            assert!(grad_gap <= grad_bound * (1.0 + 1e-9) + 1e-12, "nu={nu}: {grad_gap} > {grad_bound}");
        }
    }
}

#[test]
fn remainder_scales_with_order() {
    // Halving the step cuts the value remainder by about 2^{2+ν} where the Hessian is smooth.
    let inst = HardInstance::new(7, 5, 2, 1.0).unwrap();
    let x = Vector::new(vec![2.0, 1.5, 1.0, 0.6, 0.3, 0.1, 0.0]).unwrap();
    let dir = Vector::new(vec![0.3, -0.2, 0.1, 0.05, -0.1, 0.2, 0.0]).unwrap();
    let taylor = TaylorModel::new(&inst, x.clone()).unwrap();
    let gap = |s: f64| {
        let y = x.add_scaled(s, &dir);
        (inst.value(&y) - taylor.value(&y).unwrap()).abs()
    };
    let ratio = gap(1e-2) / gap(5e-3);
    assert!((ratio - 8.0).abs() < 0.1, "ratio {ratio}");
}
