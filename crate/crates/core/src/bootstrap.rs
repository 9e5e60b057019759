//! Null-distribution resampling.
//!
//! The wild bootstrap multiplies the core matrix by a Gaussian AR(1)
//! multiplier vector,
//!
//! ```text
//! W_1 ~ N(0, 1)
//! W_t = exp(−1/l_n)·W_{t−1} + sqrt(1 − exp(−2/l_n))·ε_t
//! ```
//!
//! and evaluates `(1/n)·Wᵀ·core·W`. Each draw is a stationary unit-variance
//! sequence with lag-one autocorrelation `exp(−1/l_n)`. The multiplier vector
//! is used as drawn, without re-centring.
//!
//! The permutation bootstrap, valid only for i.i.d. data, shuffles the target
//! variable and recomputes the statistic.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamSeed;
use crate::statistics::{lancaster_statistic, CoreMatrix, KernelTriple, SubHypothesis, TripleSeries};

/// Default dependence length of the multiplier process.
pub const DEFAULT_LN: f64 = 20.0;

/// Bootstrap columns evaluated together in one matrix product. Chunk
/// boundaries are fixed so the floating-point result of each draw never
/// depends on the thread count.
const CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WildProcessParams {
    l_n: f64,
    n: usize,
}

impl WildProcessParams {
    pub fn new(l_n: f64, n: usize) -> Result<Self> {
        if l_n.is_nan() || l_n <= 0.0 {
            return Err(Error::invalid(format!("l_n must be positive, got {l_n}")));
        }
        if n == 0 {
            return Err(Error::invalid("multiplier length must be at least 1"));
        }
        Ok(WildProcessParams { l_n, n })
    }

    pub fn l_n(&self) -> f64 {
        self.l_n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Lag-one autocorrelation `exp(−1/l_n)`.
    pub fn autocorrelation(&self) -> f64 {
        (-1.0 / self.l_n).exp()
    }
}

pub fn draw_wild_multipliers<R: Rng + ?Sized>(p: &WildProcessParams, rng: &mut R) -> Array1<f64> {
    let rho = p.autocorrelation();
    let innovation = (1.0 - (-2.0 / p.l_n).exp()).sqrt();
    let mut w = Array1::zeros(p.n);
    let mut prev: f64 = rng.sample(StandardNormal);
    w[0] = prev;
    for t in 1..p.n {
        let eps: f64 = rng.sample(StandardNormal);
        prev = rho * prev + innovation * eps;
        w[t] = prev;
    }
    w
}

/// `(1/n)·wᵀ·core·w`.
pub fn wild_statistic(core: &CoreMatrix, w: &Array1<f64>) -> Result<f64> {
    let n = core.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
        });
    }
    Ok(w.dot(&core.values.dot(w)) / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMethod {
    Wild,
    Permutation,
}

impl BootstrapMethod {
    pub fn label(self) -> &'static str {
        match self {
            BootstrapMethod::Wild => "wild",
            BootstrapMethod::Permutation => "permutation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapDraws {
    values: Vec<f64>,
    method: BootstrapMethod,
}

impl BootstrapDraws {
    pub fn new(values: Vec<f64>, method: BootstrapMethod) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("bootstrap needs at least one draw"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite bootstrap statistic".into()));
        }
        Ok(BootstrapDraws { values, method })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> BootstrapMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `count` wild-bootstrap statistics. Draw `b` uses the multiplier stream
/// `seed.child(b)`.
pub fn wild_draws(core: &CoreMatrix, l_n: f64, count: usize, seed: StreamSeed) -> Result<BootstrapDraws> {
    let n = core.n();
    let params = WildProcessParams::new(l_n, n)?;
    if count == 0 {
        return Err(Error::invalid("bootstrap count must be at least 1"));
    }
    let n_chunks = count.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(count);
            let mut w = Array2::<f64>::zeros((n, hi - lo));
            for (col, b) in (lo..hi).enumerate() {
                let mut rng = seed.child(b as u64).rng();
                w.column_mut(col).assign(&draw_wild_multipliers(&params, &mut rng));
            }
            let cw = core.values.dot(&w);
            (0..hi - lo)
                .map(|col| w.column(col).dot(&cw.column(col)) / n as f64)
                .collect()
        })
        .collect();
    BootstrapDraws::new(chunks.concat(), BootstrapMethod::Wild)
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Lancaster statistic after re-indexing the target series by a uniform
/// random permutation; the other two series are left untouched.
pub fn permutation_statistic<R: Rng + ?Sized>(
    t: &TripleSeries,
    kernels: &KernelTriple,
    h: SubHypothesis,
    rng: &mut R,
) -> Result<f64> {
    let order = random_permutation(t.len(), rng);
    lancaster_statistic(&t.with_reindexed(h.target, &order)?, kernels)
}

/// Permutation draws from precomputed symmetric matrices: `pair` is the
/// double-centred pair matrix and `target` the centred Gram matrix of the
/// permuted variable.
/// Centring commutes with re-indexing, so each draw is
/// `(1/n)·Σᵢⱼ pair[i][j]·target[π(i)][π(j)]`, which equals
/// [`permutation_statistic`] for the same permutation. Draw `b` uses the
/// stream `seed.child(b)`.
pub fn permutation_draws(
    pair: &Array2<f64>,
    target: &Array2<f64>,
    count: usize,
    seed: StreamSeed,
) -> Result<BootstrapDraws> {
    let n = pair.nrows();
    if !pair.is_square() || target.dim() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.nrows(),
        });
    }
    if count == 0 {
        return Err(Error::invalid("bootstrap count must be at least 1"));
    }
    let pair = pair.as_standard_layout();
    let pair = pair.as_slice().expect("standard layout");
    let target = target.as_standard_layout();
    let target = target.as_slice().expect("standard layout");
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|b| {
            let order = random_permutation(n, &mut seed.child(b as u64).rng());
            // Both matrices are symmetric: sum the strict lower triangle twice.
            let mut off = 0.0;
            let mut diag = 0.0;
            for (i, &pi) in order.iter().enumerate() {
                let trow = &target[pi * n..(pi + 1) * n];
                let prow = &pair[i * n..i * n + i];
                let mut acc = [0.0; 4];
                let mut blocks = prow.chunks_exact(4).zip(order[..i].chunks_exact(4));
                for (p, o) in &mut blocks {
                    acc[0] += p[0] * trow[o[0]];
                    acc[1] += p[1] * trow[o[1]];
                    acc[2] += p[2] * trow[o[2]];
                    acc[3] += p[3] * trow[o[3]];
                }
                let tail = i - i % 4;
                for j in tail..i {
                    acc[0] += prow[j] * trow[order[j]];
                }
                off += (acc[0] + acc[1]) + (acc[2] + acc[3]);
                diag += pair[i * n + i] * trow[pi];
            }
            (2.0 * off + diag) / n as f64
        })
        .collect();
    BootstrapDraws::new(values, BootstrapMethod::Permutation)
}

/// Add-one Monte-Carlo p-value `(1 + #{b : draws[b] ≥ observed}) / (N + 1)`.
/// Ties count against rejection.
pub fn p_value(observed: f64, draws: &BootstrapDraws) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::invalid("p-value needs at least one draw"));
    }
    let exceed = draws.values().iter().filter(|&&d| d >= observed).count();
    Ok((1 + exceed) as f64 / (draws.len() + 1) as f64)
}
