//! Random inputs shared by the integration tests.
#![allow(dead_code)]

use lancaster::kernels::Series;
use lancaster::statistics::{SubHypothesis, Variable};
use lancaster::synthdata::{DiscreteJoint, DiscreteMarginal};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

pub fn normal_series(rng: &mut impl Rng, n: usize, d: usize) -> Series {
    let v: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    Series::new(Array2::from_shape_vec((n, d), v).unwrap()).unwrap()
}

pub fn random_marginal(rng: &mut impl Rng, size: usize) -> DiscreteMarginal {
    let w: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let points: Vec<f64> = (0..size).map(|i| i as f64 + rng.random_range(-0.3..0.3)).collect();
    DiscreteMarginal::new(points, w.iter().map(|v| v / total).collect()).unwrap()
}

pub fn random_pair(rng: &mut impl Rng, r: usize, c: usize) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let mut p = Array2::from_shape_fn((r, c), |_| rng.random_range(0.0..1.0));
    p /= p.sum();
    let s1 = (0..r).map(|i| i as f64 * 0.8 - 0.5).collect();
    let s2 = (0..c).map(|i| i as f64 * 1.1 + 0.2).collect();
    (p, s1, s2)
}

/// A joint factorised as (pair of `h`) ⊗ (target of `h`).
pub fn factorised_joint(rng: &mut impl Rng, h: SubHypothesis) -> DiscreteJoint {
    let r = rng.random_range(2..=3usize);
    let c = rng.random_range(2..=3usize);
    let m = rng.random_range(2..=3usize);
    let (p, s1, s2) = random_pair(rng, r, c);
    let single = random_marginal(rng, m);
    match h.target {
        Variable::Z => DiscreteJoint::pair_xy_with_z(&p, s1, s2, &single),
        Variable::X => DiscreteJoint::x_with_pair_yz(&single, &p, s1, s2),
        Variable::Y => DiscreteJoint::pair_xz_with_y(&p, s1, &single, s2),
    }
    .unwrap()
}
