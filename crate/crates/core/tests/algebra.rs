//! Cross-checks of the fast matrix statistics against brute-force loops and
//! exact sums over small discrete joints.

mod common;

use common::{factorised_joint, normal_series, random_marginal, rel_err};
use lancaster::kernels::{center_empirical, center_matrix, gram, KernelSpec, Series};
use lancaster::oracle::{
    core_h_expectation, empirical_marginal, lancaster_measure, naive_v_statistic,
    population_centered_gram,
};
use lancaster::rng::StreamSeed;
use lancaster::statistics::{
    hsic_statistic, lancaster_statistic, KernelTriple, SubHypothesis, TripleSeries,
};
use lancaster::synthdata::DiscreteJoint;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn triple(seed: u64, n: usize) -> TripleSeries {
    let mut rng = StreamSeed::new(seed).rng();
    let x = normal_series(&mut rng, n, 1);
    let y = normal_series(&mut rng, n, 2);
    let z = normal_series(&mut rng, n, 1);
    TripleSeries::new(x, y, z).unwrap()
}

/// Empirically centred kernel by explicit feature-mean subtraction.
fn centred_by_loops(spec: &KernelSpec, s: &Series) -> Vec<Vec<f64>> {
    let n = s.len();
    let k = |i: usize, j: usize| {
        let d2: f64 = s
            .point(i)
            .iter()
            .zip(s.point(j).iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        (-d2 / (2.0 * spec.bandwidth().powi(2))).exp()
    };
    let row_mean: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k(i, j)).sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|i| (0..n).map(|j| k(i, j) - row_mean[i] - row_mean[j] + grand).collect())
        .collect()
}

#[test]
fn lancaster_statistic_matches_naive_v_statistic() {
    for (seed, n) in [(1, 20), (2, 15), (3, 7)] {
        let t = triple(seed, n);
        let k = KernelTriple::new(
            KernelSpec::gaussian(0.7).unwrap(),
            KernelSpec::default(),
            KernelSpec::gaussian(1.6).unwrap(),
        );
        let (kx, ky, kz) = (
            centred_by_loops(&k.kx, &t.x),
            centred_by_loops(&k.ky, &t.y),
            centred_by_loops(&k.kz, &t.z),
        );
        let idx: Vec<usize> = (0..n).collect();
        let v = naive_v_statistic(|&i, &j| kx[i][j] * ky[i][j] * kz[i][j], &idx).unwrap();
        let fast = lancaster_statistic(&t, &k).unwrap();
        assert!(rel_err(fast, n as f64 * v) <= 1e-9, "{fast} vs {}", n as f64 * v);
    }
}

#[test]
fn population_centering_with_empirical_marginal_feeds_the_same_statistic() {
    // Scalar series with repeated values, so the empirical marginal is a
    // genuine finite measure with weights.
    let mut rng = StreamSeed::new(4).rng();
    let n = 24;
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Series {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64 * 0.5).collect();
        Series::from_scalars(&v).unwrap()
    };
    let t = TripleSeries::new(draw(&mut rng), draw(&mut rng), draw(&mut rng)).unwrap();
    let k = KernelTriple::default();
    let c = |s: &Series| {
        population_centered_gram(s, &k.kx, &empirical_marginal(s).unwrap())
            .unwrap()
            .into_values()
    };
    let prod = c(&t.x) * c(&t.y) * c(&t.z);
    let stat = prod.sum() / n as f64;
    assert!(rel_err(stat, lancaster_statistic(&t, &k).unwrap()) <= 1e-10);
}

#[test]
fn hsic_matches_four_loop_expansion() {
    let mut rng = StreamSeed::new(5).rng();
    let n = 25;
    let a = normal_series(&mut rng, n, 2);
    let b = normal_series(&mut rng, n, 1);
    let (ka, kb) = (KernelSpec::default(), KernelSpec::gaussian(0.5).unwrap());
    let k = gram(&ka, &a).into_values();
    let l = gram(&kb, &b).into_values();
    // (1/n³)·Σᵢⱼqr kᵢⱼ·(lᵢⱼ + l_qr − 2·l_iq)
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for q in 0..n {
                for r in 0..n {
                    total += k[[i, j]] * (l[[i, j]] + l[[q, r]] - 2.0 * l[[i, q]]);
                }
            }
        }
    }
    let naive = total / (n as f64).powi(3);
    let fast = hsic_statistic(&a, &b, &ka, &kb).unwrap();
    assert!(rel_err(fast, naive) <= 1e-9, "{fast} vs {naive}");
}

#[test]
fn lancaster_measure_vanishes_on_every_factorisation() {
    let mut rng = StreamSeed::new(7).rng();
    for _ in 0..30 {
        let (a, b, c) = (
            random_marginal(&mut rng, 3),
            random_marginal(&mut rng, 2),
            random_marginal(&mut rng, 3),
        );
        let j = DiscreteJoint::product(&a, &b, &c).unwrap();
        assert!(lancaster_measure(&j).max_abs() <= 1e-14);
        for h in SubHypothesis::ALL {
            let j = factorised_joint(&mut rng, h);
            assert!(lancaster_measure(&j).max_abs() <= 1e-14, "{h:?}");
        }
    }
}

#[test]
fn core_is_degenerate_for_each_rotation() {
    let mut rng = StreamSeed::new(8).rng();
    let kernels = KernelTriple::new(
        KernelSpec::gaussian(0.8).unwrap(),
        KernelSpec::default(),
        KernelSpec::gaussian(1.5).unwrap(),
    );
    for h in SubHypothesis::ALL {
        for _ in 0..10 {
            let j = factorised_joint(&mut rng, h);
            for _ in 0..10 {
                let s = [
                    rng.random_range(-1.0..3.0),
                    rng.random_range(-1.0..3.0),
                    rng.random_range(-1.0..3.0),
                ];
                let e = core_h_expectation(&j, &kernels, s, h);
                assert!(e.abs() <= 1e-10, "{h:?} {s:?}: {e}");
            }
        }
    }
}

fn centred(spec: &KernelSpec, s: &Series) -> Array2<f64> {
    center_empirical(&gram(spec, s)).into_values()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn triple_product_equals_recentred_pair_form(seed in any::<u64>(), n in 4usize..40) {
        let t = triple(seed, n);
        let k = KernelTriple::default();
        let (kx, ky, kz) = (centred(&k.kx, &t.x), centred(&k.ky, &t.y), centred(&k.kz, &t.z));
        let direct = (&kx * &ky * &kz).sum();
        let pair = center_matrix(&(&kx * &ky)).unwrap();
        let recentred = (&pair * &kz).sum();
        prop_assert!(rel_err(direct, recentred) <= 1e-9);
        prop_assert!(rel_err(direct / n as f64, lancaster_statistic(&t, &k).unwrap()) <= 1e-9);
    }

    #[test]
    fn hsic_three_term_expansion(seed in any::<u64>(), n in 4usize..40) {
        let mut rng = StreamSeed::new(seed).rng();
        let a = normal_series(&mut rng, n, 1);
        let b = normal_series(&mut rng, n, 3);
        let spec = KernelSpec::default();
        let k = gram(&spec, &a).into_values();
        let l = gram(&spec, &b).into_values();
        let nf = n as f64;
        let expansion = (&k * &l).sum() / nf - 2.0 * k.dot(&l).sum() / (nf * nf)
            + k.sum() * l.sum() / (nf * nf * nf);
        let hsic = hsic_statistic(&a, &b, &spec, &spec).unwrap();
        prop_assert!(rel_err(expansion, hsic) <= 1e-9);
        let centred_form = (centred(&spec, &a) * centred(&spec, &b)).sum() / nf;
        prop_assert!(rel_err(centred_form, hsic) <= 1e-9);
    }

    #[test]
    fn statistic_is_invariant_to_joint_relabelling(seed in any::<u64>(), n in 4usize..30) {
        let t = triple(seed, n);
        let k = KernelTriple::default();
        let mut order: Vec<usize> = (0..n).rev().collect();
        order.rotate_left(seed as usize % n);
        let a = lancaster_statistic(&t, &k).unwrap();
        let b = lancaster_statistic(&t.reindexed(&order).unwrap(), &k).unwrap();
        prop_assert!(rel_err(a, b) <= 1e-9);
    }
}
