//! Seeded synthetic data.
//!
//! Three AR(1) families with standard normal innovations and `N(0, 1)`
//! initial states:
//!
//! ```text
//! weak pairwise    X_t = ½X_{t−1} + ε_t,  Y_t = ½Y_{t−1} + η_t,
//!                  Z_t = ½Z_{t−1} + d·|θ_t|·sign(X_t·Y_t) + ζ_t
//! independent      X_t = aX_{t−1} + ε_t,  Y_t = aY_{t−1} + η_t,  Z_t = aZ_{t−1} + ζ_t
//! strong pairwise  X_t = ½X_{t−1} + ε_t,  Y_t = ½Y_{t−1} + η_t,
//!                  Z_t = ½Z_{t−1} + d·(X_t + Y_t) + ζ_t
//! ```
//!
//! Each innovation sequence (and the initial state of its variable) comes
//! from its own sub-stream of the dataset seed. Plus small discrete joints
//! and a finite-state Markov chain for the exhaustive oracles.

use ndarray::Array3;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::Series;
use crate::rng::{StreamRng, StreamSeed};
use crate::statistics::TripleSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArKind {
    WeakPairwise,
    Independent,
    StrongPairwise,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArTripleSpec {
    pub kind: ArKind,
    pub n: usize,
    /// Dependence coefficient `d`, or the AR coefficient `a` for
    /// [`ArKind::Independent`].
    pub coeff: f64,
    pub burn_in: usize,
}

impl ArTripleSpec {
    pub fn new(kind: ArKind, n: usize, coeff: f64, burn_in: usize) -> Result<Self> {
        let spec = ArTripleSpec {
            kind,
            n,
            coeff,
            burn_in,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!(
                "generated series need at least 2 observations, got {}",
                self.n
            )));
        }
        if !self.coeff.is_finite() {
            return Err(Error::invalid("coefficient must be finite"));
        }
        if self.kind == ArKind::Independent && self.coeff.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "AR coefficient must satisfy |a| < 1, got {}",
                self.coeff
            )));
        }
        Ok(())
    }

    fn expect_kind(&self, kind: ArKind) -> Result<()> {
        self.validate()?;
        if self.kind != kind {
            return Err(Error::invalid(format!(
                "generator for {kind:?} called with a {:?} spec",
                self.kind
            )));
        }
        Ok(())
    }
}

struct Chain {
    rng: StreamRng,
    state: f64,
}

impl Chain {
    fn new(seed: StreamSeed) -> Self {
        let mut rng = seed.rng();
        let state = rng.sample(StandardNormal);
        Chain { rng, state }
    }

    fn innovation(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

fn run(
    spec: &ArTripleSpec,
    seed: StreamSeed,
    mut z_drive: impl FnMut(f64, f64, &mut StreamRng) -> f64,
) -> Result<TripleSeries> {
    let a = match spec.kind {
        ArKind::Independent => spec.coeff,
        _ => 0.5,
    };
    let mut x = Chain::new(seed.child(0));
    let mut y = Chain::new(seed.child(1));
    let mut z = Chain::new(seed.child(2));
    let mut extra = seed.child(3).rng();
    let total = spec.burn_in + spec.n;
    let mut out = [
        Vec::with_capacity(spec.n),
        Vec::with_capacity(spec.n),
        Vec::with_capacity(spec.n),
    ];
    for t in 0..total {
        x.state = a * x.state + x.innovation();
        y.state = a * y.state + y.innovation();
        let drive = z_drive(x.state, y.state, &mut extra);
        z.state = a * z.state + drive + z.innovation();
        if t >= spec.burn_in {
            out[0].push(x.state);
            out[1].push(y.state);
            out[2].push(z.state);
        }
    }
    let [xs, ys, zs] = out;
    TripleSeries::new(
        Series::from_scalars(&xs)?,
        Series::from_scalars(&ys)?,
        Series::from_scalars(&zs)?,
    )
}

pub fn gen_weak_pairwise(spec: &ArTripleSpec, seed: StreamSeed) -> Result<TripleSeries> {
    spec.expect_kind(ArKind::WeakPairwise)?;
    let d = spec.coeff;
    run(spec, seed, |x, y, rng| {
        let theta: f64 = rng.sample(StandardNormal);
        let prod = x * y;
        let sign = if prod == 0.0 { 0.0 } else { prod.signum() };
        d * theta.abs() * sign
    })
}

pub fn gen_independent_ar(spec: &ArTripleSpec, seed: StreamSeed) -> Result<TripleSeries> {
    spec.expect_kind(ArKind::Independent)?;
    run(spec, seed, |_, _, _| 0.0)
}

pub fn gen_strong_pairwise(spec: &ArTripleSpec, seed: StreamSeed) -> Result<TripleSeries> {
    spec.expect_kind(ArKind::StrongPairwise)?;
    let d = spec.coeff;
    run(spec, seed, |x, y, _| d * (x + y))
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &ArTripleSpec, seed: StreamSeed) -> Result<TripleSeries> {
    match spec.kind {
        ArKind::WeakPairwise => gen_weak_pairwise(spec, seed),
        ArKind::Independent => gen_independent_ar(spec, seed),
        ArKind::StrongPairwise => gen_strong_pairwise(spec, seed),
    }
}

/// Finite distribution on scalar support points.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMarginal {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteMarginal {
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::invalid("marginal needs equally many points and probabilities"));
        }
        check_probabilities(&probs)?;
        Ok(DiscreteMarginal { points, probs })
    }

    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let p = 1.0 / points.len().max(1) as f64;
        let probs = vec![p; points.len()];
        DiscreteMarginal::new(points, probs)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_probabilities<'a>(probs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::invalid(format!("probability {p} is not a nonnegative number")));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Probability tensor `p[i][j][k]` over scalar supports of X, Y and Z.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteJoint {
    probs: Array3<f64>,
    support: [Vec<f64>; 3],
}

impl DiscreteJoint {
    pub fn new(probs: Array3<f64>, sx: Vec<f64>, sy: Vec<f64>, sz: Vec<f64>) -> Result<Self> {
        let dim = probs.dim();
        if dim != (sx.len(), sy.len(), sz.len()) {
            return Err(Error::invalid(format!(
                "tensor shape {dim:?} does not match supports ({}, {}, {})",
                sx.len(),
                sy.len(),
                sz.len()
            )));
        }
        if sx.is_empty() || sy.is_empty() || sz.is_empty() {
            return Err(Error::invalid("supports must be nonempty"));
        }
        check_probabilities(probs.iter())?;
        Ok(DiscreteJoint {
            probs,
            support: [sx, sy, sz],
        })
    }

    /// `p_X ⊗ p_Y ⊗ p_Z`.
    pub fn product(px: &DiscreteMarginal, py: &DiscreteMarginal, pz: &DiscreteMarginal) -> Result<Self> {
        let probs = Array3::from_shape_fn((px.len(), py.len(), pz.len()), |(i, j, k)| {
            px.probs[i] * py.probs[j] * pz.probs[k]
        });
        DiscreteJoint::new(probs, px.points.clone(), py.points.clone(), pz.points.clone())
    }

    /// `p_XY ⊗ p_Z` (H_Z holds); `pxy` has shape `(|X|, |Y|)`.
    pub fn pair_xy_with_z(
        pxy: &ndarray::Array2<f64>,
        sx: Vec<f64>,
        sy: Vec<f64>,
        pz: &DiscreteMarginal,
    ) -> Result<Self> {
        let (a, b) = pxy.dim();
        let probs = Array3::from_shape_fn((a, b, pz.len()), |(i, j, k)| pxy[[i, j]] * pz.probs[k]);
        DiscreteJoint::new(probs, sx, sy, pz.points.clone())
    }

    /// `p_X ⊗ p_YZ` (H_X holds); `pyz` has shape `(|Y|, |Z|)`.
    pub fn x_with_pair_yz(
        px: &DiscreteMarginal,
        pyz: &ndarray::Array2<f64>,
        sy: Vec<f64>,
        sz: Vec<f64>,
    ) -> Result<Self> {
        let (b, c) = pyz.dim();
        let probs = Array3::from_shape_fn((px.len(), b, c), |(i, j, k)| px.probs[i] * pyz[[j, k]]);
        DiscreteJoint::new(probs, px.points.clone(), sy, sz)
    }

    /// `p_XZ ⊗ p_Y` (H_Y holds); `pxz` has shape `(|X|, |Z|)`.
    pub fn pair_xz_with_y(
        pxz: &ndarray::Array2<f64>,
        sx: Vec<f64>,
        py: &DiscreteMarginal,
        sz: Vec<f64>,
    ) -> Result<Self> {
        let (a, c) = pxz.dim();
        let probs = Array3::from_shape_fn((a, py.len(), c), |(i, j, k)| pxz[[i, k]] * py.probs[j]);
        DiscreteJoint::new(probs, sx, py.points.clone(), sz)
    }

    pub fn probs(&self) -> &Array3<f64> {
        &self.probs
    }

    pub fn support(&self, axis: usize) -> &[f64] {
        &self.support[axis]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.probs.dim()
    }
}

/// `n` i.i.d. draws from the tensor by inverse-CDF lookup over the cells in
/// row-major order.
pub fn sample_discrete(j: &DiscreteJoint, n: usize, seed: StreamSeed) -> Result<TripleSeries> {
    let (sx, sy, sz) = j.shape();
    let mut cdf = Vec::with_capacity(sx * sy * sz);
    let mut acc = 0.0;
    for &p in j.probs.iter() {
        acc += p;
        cdf.push(acc);
    }
    let mut rng = seed.rng();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let cell = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let (i, jj, k) = (cell / (sy * sz), (cell / sz) % sy, cell % sz);
        out[0].push(j.support[0][i]);
        out[1].push(j.support[1][jj]);
        out[2].push(j.support[2][k]);
    }
    let [xs, ys, zs] = out;
    TripleSeries::new(
        Series::from_scalars(&xs)?,
        Series::from_scalars(&ys)?,
        Series::from_scalars(&zs)?,
    )
}

/// Finite-state Markov chain that keeps its current state with probability
/// `stay` and otherwise moves to one of the other states uniformly at random.
/// Its stationary distribution is uniform over `states`, and the initial state
/// is drawn from it. With two states, `stay = 0.5` gives an i.i.d. sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct LazyChain {
    pub states: Vec<f64>,
    pub stay: f64,
}

impl LazyChain {
    pub fn new(states: Vec<f64>, stay: f64) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::invalid("chain needs at least two states"));
        }
        if !(0.0..1.0).contains(&stay) {
            return Err(Error::invalid(format!("stay probability must lie in [0, 1), got {stay}")));
        }
        Ok(LazyChain { states, stay })
    }

    pub fn stationary(&self) -> DiscreteMarginal {
        DiscreteMarginal::uniform(self.states.clone()).expect("nonempty states")
    }

    pub fn sample(&self, n: usize, seed: StreamSeed) -> Result<Series> {
        let mut rng = seed.rng();
        let m = self.states.len();
        let mut cur = rng.random_range(0..m);
        let mut out = Vec::with_capacity(n);
        for t in 0..n {
            if t > 0 && rng.random::<f64>() >= self.stay {
                cur = (cur + rng.random_range(1..m)) % m;
            }
            out.push(self.states[cur]);
        }
        Series::from_scalars(&out)
    }
}
