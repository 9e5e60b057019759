//! Lancaster, HSIC and 3-way HSIC statistics.
//!
//! All statistics are returned in normalised form, i.e. `n` times the squared
//! RKHS norm, which is `(1/n)` times the sum of all entries of the
//! corresponding core matrix. The core matrices are what the wild bootstrap
//! resamples.
//!
//! For a target variable `C` with the remaining pair `(A, B)`:
//!
//! ```text
//! Lancaster   core = H(Ã ∘ B̃)H ∘ C̃
//! 3-way HSIC  core = H(A ∘ B)H ∘ C̃
//! ```
//!
//! where `Ã = HAH` is the empirically centred Gram matrix.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec, Series};

/// Aligned observations of three processes.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleSeries {
    pub x: Series,
    pub y: Series,
    pub z: Series,
}

impl TripleSeries {
    pub fn new(x: Series, y: Series, z: Series) -> Result<Self> {
        if x.len() != y.len() || x.len() != z.len() {
            return Err(Error::LengthMismatch(format!(
                "series lengths differ: x={}, y={}, z={}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        Ok(TripleSeries { x, y, z })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn get(&self, v: Variable) -> &Series {
        match v {
            Variable::X => &self.x,
            Variable::Y => &self.y,
            Variable::Z => &self.z,
        }
    }

    /// Applies the same re-indexing to all three series.
    pub fn reindexed(&self, order: &[usize]) -> Result<Self> {
        TripleSeries::new(
            self.x.reindexed(order)?,
            self.y.reindexed(order)?,
            self.z.reindexed(order)?,
        )
    }

    /// Re-indexes only the series of `v`, leaving the other two untouched.
    pub fn with_reindexed(&self, v: Variable, order: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        let s = match v {
            Variable::X => &mut out.x,
            Variable::Y => &mut out.y,
            Variable::Z => &mut out.z,
        };
        *s = s.reindexed(order)?;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    X,
    Y,
    Z,
}

impl Variable {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// `H_X`, `H_Y` or `H_Z`: the target variable is independent of the other
/// two taken jointly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubHypothesis {
    pub target: Variable,
}

impl SubHypothesis {
    pub const X: SubHypothesis = SubHypothesis { target: Variable::X };
    pub const Y: SubHypothesis = SubHypothesis { target: Variable::Y };
    pub const Z: SubHypothesis = SubHypothesis { target: Variable::Z };
    pub const ALL: [SubHypothesis; 3] = [Self::X, Self::Y, Self::Z];

    /// The two non-target variables, in (X, Y, Z) order.
    pub fn pair(self) -> (Variable, Variable) {
        match self.target {
            Variable::X => (Variable::Y, Variable::Z),
            Variable::Y => (Variable::X, Variable::Z),
            Variable::Z => (Variable::X, Variable::Y),
        }
    }

    pub fn index(self) -> usize {
        self.target.index()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTriple {
    pub kx: KernelSpec,
    pub ky: KernelSpec,
    pub kz: KernelSpec,
}

impl KernelTriple {
    pub fn new(kx: KernelSpec, ky: KernelSpec, kz: KernelSpec) -> Self {
        KernelTriple { kx, ky, kz }
    }

    pub fn uniform(k: KernelSpec) -> Self {
        KernelTriple { kx: k, ky: k, kz: k }
    }

    pub fn get(&self, v: Variable) -> &KernelSpec {
        match v {
            Variable::X => &self.kx,
            Variable::Y => &self.ky,
            Variable::Z => &self.kz,
        }
    }
}

impl Default for KernelTriple {
    fn default() -> Self {
        KernelTriple::uniform(KernelSpec::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Lancaster,
    ThreewayHsic,
}

impl StatisticKind {
    pub fn label(self) -> &'static str {
        match self {
            StatisticKind::Lancaster => "lancaster",
            StatisticKind::ThreewayHsic => "3way-hsic",
        }
    }
}

/// Symmetric `n × n` matrix whose entry sum, divided by `n`, is a
/// normalised V-statistic; `target` is `None` for the pairwise HSIC core.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreMatrix {
    pub values: Array2<f64>,
    pub target: Option<SubHypothesis>,
}

impl CoreMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// `(1/n)·values₊₊`.
    pub fn statistic(&self) -> f64 {
        self.values.sum() / self.n() as f64
    }
}

const MIN_TRIPLE_LEN: usize = 4;

/// Raw and centred Gram matrices of a triple, computed once and shared by
/// every core built from it.
#[derive(Clone, Debug)]
pub struct GramSet {
    raw: [Array2<f64>; 3],
    centered: [Array2<f64>; 3],
}

impl GramSet {
    pub fn new(t: &TripleSeries, kernels: &KernelTriple) -> Result<Self> {
        if t.len() < MIN_TRIPLE_LEN {
            return Err(Error::invalid(format!(
                "three-variable statistics need at least {MIN_TRIPLE_LEN} observations, got {}",
                t.len()
            )));
        }
        let raw = [Variable::X, Variable::Y, Variable::Z]
            .map(|v| kernels::gram(kernels.get(v), t.get(v)).into_values());
        let centered = [0, 1, 2].map(|i| kernels::double_center(raw[i].view()));
        Ok(GramSet { raw, centered })
    }

    pub fn n(&self) -> usize {
        self.raw[0].nrows()
    }

    pub fn raw(&self, v: Variable) -> &Array2<f64> {
        &self.raw[v.index()]
    }

    pub fn centered(&self, v: Variable) -> &Array2<f64> {
        &self.centered[v.index()]
    }

    /// Double-centred product matrix of the non-target pair: `H(Ã∘B̃)H` for
    /// Lancaster, `H(A∘B)H` for 3-way HSIC.
    pub fn pair_matrix(&self, kind: StatisticKind, h: SubHypothesis) -> Array2<f64> {
        let (a, b) = h.pair();
        let prod = match kind {
            StatisticKind::Lancaster => self.centered(a) * self.centered(b),
            StatisticKind::ThreewayHsic => self.raw(a) * self.raw(b),
        };
        kernels::double_center(prod.view())
    }

    pub fn core(&self, kind: StatisticKind, h: SubHypothesis) -> CoreMatrix {
        let mut values = self.pair_matrix(kind, h);
        values *= self.centered(h.target);
        CoreMatrix {
            values,
            target: Some(h),
        }
    }

    /// `(1/n)(K̃∘L̃∘M̃)₊₊`, without the outer re-centring of the pair.
    pub fn lancaster_statistic(&self) -> f64 {
        let [k, l, m] = &self.centered;
        let sum: f64 = ndarray::Zip::from(k)
            .and(l)
            .and(m)
            .fold(0.0, |acc, &a, &b, &c| acc + a * b * c);
        sum / self.n() as f64
    }
}

/// Normalised Lancaster statistic `n‖μ̂_L‖² = (1/n)(K̃∘L̃∘M̃)₊₊`.
pub fn lancaster_statistic(t: &TripleSeries, kernels: &KernelTriple) -> Result<f64> {
    Ok(GramSet::new(t, kernels)?.lancaster_statistic())
}

pub fn lancaster_core(
    t: &TripleSeries,
    kernels: &KernelTriple,
    h: SubHypothesis,
) -> Result<CoreMatrix> {
    Ok(GramSet::new(t, kernels)?.core(StatisticKind::Lancaster, h))
}

pub fn threeway_hsic_core(
    t: &TripleSeries,
    kernels: &KernelTriple,
    h: SubHypothesis,
) -> Result<CoreMatrix> {
    Ok(GramSet::new(t, kernels)?.core(StatisticKind::ThreewayHsic, h))
}

/// Pairwise HSIC core `K̃ ∘ L̃`.
pub fn hsic_core(a: &Series, b: &Series, ka: &KernelSpec, kb: &KernelSpec) -> Result<CoreMatrix> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!(
            "HSIC needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let k = kernels::center_empirical(&kernels::gram(ka, a)).into_values();
    let l = kernels::center_empirical(&kernels::gram(kb, b)).into_values();
    Ok(CoreMatrix {
        values: k * l,
        target: None,
    })
}

/// Normalised HSIC `(1/n)(K̃∘L̃)₊₊`.
pub fn hsic_statistic(a: &Series, b: &Series, ka: &KernelSpec, kb: &KernelSpec) -> Result<f64> {
    Ok(hsic_core(a, b, ka, kb)?.statistic())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gram;
    use crate::rng::StreamSeed;
    use ndarray::Array2;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
    }

    pub(crate) fn random_triple(n: usize, seed: u64) -> TripleSeries {
        let mut rng = StreamSeed::new(seed).rng();
        let mut s = |d: usize| {
            let v: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
            Series::new(Array2::from_shape_vec((n, d), v).unwrap()).unwrap()
        };
        let x = s(1);
        let y = s(2);
        let z = s(1);
        TripleSeries::new(x, y, z).unwrap()
    }

    #[test]
    fn triple_requires_equal_lengths() {
        let a = Series::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let b = Series::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(TripleSeries::new(a.clone(), a.clone(), b).is_err());
    }

    #[test]
    fn tiny_samples_are_rejected() {
        let t = random_triple(3, 1);
        assert!(lancaster_statistic(&t, &KernelTriple::default()).is_err());
        assert!(lancaster_core(&t, &KernelTriple::default(), SubHypothesis::Z).is_err());
    }

    #[test]
    fn constant_target_gives_zero() {
        let mut t = random_triple(20, 2);
        t.z = Series::from_scalars(&[1.5; 20]).unwrap();
        let k = KernelTriple::default();
        assert!(lancaster_statistic(&t, &k).unwrap().abs() <= 1e-15);
        let core = lancaster_core(&t, &k, SubHypothesis::Z).unwrap();
        assert!(core.values.iter().all(|&v| v == 0.0));
        let core = threeway_hsic_core(&t, &k, SubHypothesis::Z).unwrap();
        assert!(core.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn core_sums_match_statistic() {
        let t = random_triple(30, 3);
        let k = KernelTriple::new(
            KernelSpec::gaussian(0.8).unwrap(),
            KernelSpec::gaussian(1.3).unwrap(),
            KernelSpec::default(),
        );
        let stat = lancaster_statistic(&t, &k).unwrap();
        for h in SubHypothesis::ALL {
            let core = lancaster_core(&t, &k, h).unwrap();
            assert!(rel_close(core.statistic(), stat, 1e-9), "{h:?}");
            for i in 0..30 {
                for j in 0..30 {
                    let (a, b) = (core.values[[i, j]], core.values[[j, i]]);
                    assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
                }
            }
        }
    }

    #[test]
    fn threeway_core_is_hsic_of_paired_variable() {
        let t = random_triple(30, 4);
        let k = KernelTriple::default();
        let core = threeway_hsic_core(&t, &k, SubHypothesis::Z).unwrap();
        // The product kernel k⊗l on (x, y) is the Gaussian on the concatenated
        // vector when both bandwidths are equal.
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| t.x.point(i).iter().chain(t.y.point(i).iter()).copied().collect())
            .collect();
        let xy = Series::from_rows(&rows).unwrap();
        let hsic = hsic_statistic(&xy, &t.z, &KernelSpec::default(), &KernelSpec::default()).unwrap();
        assert!(rel_close(core.statistic(), hsic, 1e-9));
    }

    #[test]
    fn lancaster_and_threeway_cores_differ_under_dependence() {
        let mut t = random_triple(30, 5);
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![t.x.point(i)[0] * 0.9, 0.1]).collect();
        t.y = Series::from_rows(&rows).unwrap();
        let k = KernelTriple::default();
        let a = lancaster_core(&t, &k, SubHypothesis::Z).unwrap();
        let b = threeway_hsic_core(&t, &k, SubHypothesis::Z).unwrap();
        let diff = (&a.values - &b.values).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff > 0.0);
    }

    #[test]
    fn role_rotation_matches_argument_swap() {
        let t = random_triple(25, 6);
        let k = KernelTriple::new(
            KernelSpec::gaussian(0.5).unwrap(),
            KernelSpec::gaussian(1.0).unwrap(),
            KernelSpec::gaussian(2.0).unwrap(),
        );
        // Rotating (x, y, z) -> (y, z, x) turns H_X into H_Z.
        let rotated = TripleSeries::new(t.y.clone(), t.z.clone(), t.x.clone()).unwrap();
        let kr = KernelTriple::new(k.ky, k.kz, k.kx);
        let a = lancaster_core(&t, &k, SubHypothesis::X).unwrap();
        let b = lancaster_core(&rotated, &kr, SubHypothesis::Z).unwrap();
        for (u, v) in a.values.iter().zip(b.values.iter()) {
            assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn joint_relabeling_invariance() {
        let t = random_triple(40, 7);
        let k = KernelTriple::default();
        let mut order: Vec<usize> = (0..40).collect();
        order.shuffle(&mut StreamSeed::new(70).rng());
        let p = t.reindexed(&order).unwrap();
        let a = lancaster_statistic(&t, &k).unwrap();
        let b = lancaster_statistic(&p, &k).unwrap();
        assert!(rel_close(a, b, 1e-9));
        for h in SubHypothesis::ALL {
            let a = threeway_hsic_core(&t, &k, h).unwrap().statistic();
            let b = threeway_hsic_core(&p, &k, h).unwrap().statistic();
            assert!(rel_close(a, b, 1e-9));
        }
        let a = hsic_statistic(&t.x, &t.y, &k.kx, &k.ky).unwrap();
        let b = hsic_statistic(&p.x, &p.y, &k.kx, &k.ky).unwrap();
        assert!(rel_close(a, b, 1e-9));
    }

    #[test]
    fn iid_normal_regression_values() {
        let t = random_triple(50, 2024);
        let t = TripleSeries::new(
            t.x,
            Series::new(t.y.points().column(0).to_owned().insert_axis(ndarray::Axis(1))).unwrap(),
            t.z,
        )
        .unwrap();
        let k = KernelTriple::default();
        let stats: Vec<f64> = SubHypothesis::ALL
            .iter()
            .map(|&h| lancaster_core(&t, &k, h).unwrap().statistic())
            .collect();
        // Reference value from an explicit H·G·H computation outside this crate.
        for s in &stats {
            assert!(rel_close(*s, 0.075_355_049_341_030_82, 1e-10), "{s}");
        }
        // All three rotations share the same Lancaster statistic.
        assert!(rel_close(stats[0], stats[2], 1e-9));
        assert!(rel_close(stats[1], stats[2], 1e-9));
    }

    #[test]
    fn hsic_edge_cases() {
        let t = random_triple(10, 8);
        let k = KernelSpec::default();
        let c = Series::from_scalars(&[2.0; 10]).unwrap();
        assert!(hsic_statistic(&t.x, &c, &k, &k).unwrap().abs() <= 1e-15);
        assert!(hsic_statistic(&t.x, &t.x, &k, &k).unwrap() > 0.0);
        let short = Series::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            hsic_statistic(&t.x, &short, &k, &k),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn hsic_expansion_identity() {
        for seed in 0..20 {
            let t = random_triple(15 + seed as usize, 100 + seed);
            let k = KernelSpec::gaussian(0.9).unwrap();
            let kk = gram(&k, &t.x).into_values();
            let ll = gram(&k, &t.z).into_values();
            let n = kk.nrows() as f64;
            let expansion = (&kk * &ll).sum() / n - 2.0 * kk.dot(&ll).sum() / (n * n)
                + kk.sum() * ll.sum() / (n * n * n);
            let hsic = hsic_statistic(&t.x, &t.z, &k, &k).unwrap();
            assert!(rel_close(hsic, expansion, 1e-9));
        }
    }

    #[test]
    fn scaled_target_stays_finite() {
        let t = random_triple(20, 9);
        let k = KernelTriple::default();
        let mut prev = None;
        for factor in [1e-6, 1e-3, 0.5, 1.0, 2.0, 1e3, 1e6] {
            let mut s = t.clone();
            s.z = t.z.scaled(factor).unwrap();
            let v = lancaster_statistic(&s, &k).unwrap();
            assert!(v.is_finite() && v >= -1e-9);
            prev = Some(v);
        }
        assert!(prev.is_some());
        // continuity around factor 1
        let mut s = t.clone();
        s.z = t.z.scaled(1.0 + 1e-7).unwrap();
        let a = lancaster_statistic(&t, &k).unwrap();
        let b = lancaster_statistic(&s, &k).unwrap();
        assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-12));
    }
}
