//! Exhaustive small-instance oracles.
//!
//! Nothing here shares code with the matrix routines in
//! [`statistics`](crate::statistics): expectations are exact sums over finite
//! supports and V-statistics are plain double loops. They exist to check the
//! algebra of the fast paths.

use std::collections::BTreeMap;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::kernels::{Centering, GramMatrix, KernelSpec, Series};
use crate::rng::StreamSeed;
use crate::statistics::{KernelTriple, SubHypothesis, Variable};
use crate::synthdata::{DiscreteJoint, DiscreteMarginal};

/// Values of the Lancaster interaction measure on the support of a joint.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasureTable {
    pub values: Array3<f64>,
}

impl SignedMeasureTable {
    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Δ_L P = P_XYZ − P_XY·P_Z − P_XZ·P_Y − P_X·P_YZ + 2·P_X·P_Y·P_Z`, cell by
/// cell, with every marginal obtained by explicit summation.
pub fn lancaster_measure(j: &DiscreteJoint) -> SignedMeasureTable {
    let p = j.probs();
    let (a, b, c) = p.dim();
    let mut px = vec![0.0; a];
    let mut py = vec![0.0; b];
    let mut pz = vec![0.0; c];
    let mut pxy = Array2::<f64>::zeros((a, b));
    let mut pxz = Array2::<f64>::zeros((a, c));
    let mut pyz = Array2::<f64>::zeros((b, c));
    for i in 0..a {
        for jj in 0..b {
            for k in 0..c {
                let v = p[[i, jj, k]];
                px[i] += v;
                py[jj] += v;
                pz[k] += v;
                pxy[[i, jj]] += v;
                pxz[[i, k]] += v;
                pyz[[jj, k]] += v;
            }
        }
    }
    let values = Array3::from_shape_fn((a, b, c), |(i, jj, k)| {
        p[[i, jj, k]] - pxy[[i, jj]] * pz[k] - pxz[[i, k]] * py[jj] - px[i] * pyz[[jj, k]]
            + 2.0 * px[i] * py[jj] * pz[k]
    });
    SignedMeasureTable { values }
}

fn k1(spec: &KernelSpec, a: f64, b: f64) -> f64 {
    let d = a - b;
    (-d * d / (2.0 * spec.bandwidth() * spec.bandwidth())).exp()
}

/// Kernel centred at the exact mean embedding of a finite marginal:
/// `k̄(u, v) = k(u, v) − E k(u, S) − E k(v, S) + E k(S, S')`.
struct PopulationKernel<'a> {
    spec: KernelSpec,
    marginal: &'a [(f64, f64)],
    mean_mean: f64,
}

impl<'a> PopulationKernel<'a> {
    fn new(spec: KernelSpec, marginal: &'a [(f64, f64)]) -> Self {
        let mut mean_mean = 0.0;
        for &(pa, sa) in marginal {
            for &(pb, sb) in marginal {
                mean_mean += pa * pb * k1(&spec, sa, sb);
            }
        }
        PopulationKernel {
            spec,
            marginal,
            mean_mean,
        }
    }

    fn mean_at(&self, u: f64) -> f64 {
        self.marginal.iter().map(|&(p, s)| p * k1(&self.spec, u, s)).sum()
    }

    fn eval(&self, u: f64, v: f64) -> f64 {
        k1(&self.spec, u, v) - self.mean_at(u) - self.mean_at(v) + self.mean_mean
    }
}

/// Population-centred Gram matrix of a scalar series with respect to a known
/// finite marginal, by the four-term formula with exact sums.
pub fn population_centered_gram(
    series: &Series,
    spec: &KernelSpec,
    marginal: &DiscreteMarginal,
) -> Result<GramMatrix> {
    if series.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: series.dim(),
        });
    }
    let m: Vec<(f64, f64)> = marginal
        .probs
        .iter()
        .copied()
        .zip(marginal.points.iter().copied())
        .collect();
    let kbar = PopulationKernel::new(*spec, &m);
    let n = series.len();
    let xs: Vec<f64> = (0..n).map(|i| series.point(i)[0]).collect();
    let means: Vec<f64> = xs.iter().map(|&x| kbar.mean_at(x)).collect();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for jj in 0..n {
            values[[i, jj]] = k1(spec, xs[i], xs[jj]) - means[i] - means[jj] + kbar.mean_mean;
        }
    }
    Ok(GramMatrix::from_parts(values, Centering::Population))
}

/// Empirical distribution of a scalar series as a marginal.
pub fn empirical_marginal(series: &Series) -> Result<DiscreteMarginal> {
    if series.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: series.dim(),
        });
    }
    let n = series.len();
    let points: Vec<f64> = (0..n).map(|i| series.point(i)[0]).collect();
    let w = 1.0 / n as f64;
    Ok(DiscreteMarginal {
        points,
        probs: vec![w; n],
    })
}

fn marginal_of(j: &DiscreteJoint, v: Variable) -> Vec<(f64, f64)> {
    let p = j.probs();
    let axis = v.index();
    let support = j.support(axis);
    let mut probs = vec![0.0; support.len()];
    for ((i, jj, k), &val) in p.indexed_iter() {
        probs[[i, jj, k][axis]] += val;
    }
    probs.into_iter().zip(support.iter().copied()).collect()
}

fn pair_marginal(j: &DiscreteJoint, a: Variable, b: Variable) -> Vec<(f64, f64, f64)> {
    let p = j.probs();
    let (ia, ib) = (a.index(), b.index());
    let (na, nb) = (j.support(ia).len(), j.support(ib).len());
    let mut probs = Array2::<f64>::zeros((na, nb));
    for ((i, jj, k), &val) in p.indexed_iter() {
        let idx = [i, jj, k];
        probs[[idx[ia], idx[ib]]] += val;
    }
    let mut out = Vec::with_capacity(na * nb);
    for u in 0..na {
        for w in 0..nb {
            out.push((probs[[u, w]], j.support(ia)[u], j.support(ib)[w]));
        }
    }
    out
}

/// `E_S h(S, s)` for the core `h = (k̄⊗l̄)‾ ⊗ m̄` of sub-hypothesis `h_sub`,
/// summed exhaustively over the support of `j`. The non-target pair kernel
/// `k̄⊗l̄` is re-centred against the joint pair marginal of `j`; `s` is a
/// fixed point `(x, y, z)`.
pub fn core_h_expectation(
    j: &DiscreteJoint,
    kernels: &KernelTriple,
    s: [f64; 3],
    h_sub: SubHypothesis,
) -> f64 {
    let (va, vb) = h_sub.pair();
    let vc = h_sub.target;
    let ma = marginal_of(j, va);
    let mb = marginal_of(j, vb);
    let mc = marginal_of(j, vc);
    let ka = PopulationKernel::new(*kernels.get(va), &ma);
    let kb = PopulationKernel::new(*kernels.get(vb), &mb);
    let kc = PopulationKernel::new(*kernels.get(vc), &mc);
    let pab = pair_marginal(j, va, vb);

    let g = |u: (f64, f64), w: (f64, f64)| ka.eval(u.0, w.0) * kb.eval(u.1, w.1);
    let g_mean_at = |u: (f64, f64)| -> f64 { pab.iter().map(|&(p, a, b)| p * g((a, b), u)).sum() };
    let mut g_mean_mean = 0.0;
    for &(p, a, b) in &pab {
        for &(q, c, d) in &pab {
            g_mean_mean += p * q * g((a, b), (c, d));
        }
    }
    let s_ab = (s[va.index()], s[vb.index()]);
    let s_c = s[vc.index()];
    let g_mean_s = g_mean_at(s_ab);
    let gbar = |u: (f64, f64)| g(u, s_ab) - g_mean_at(u) - g_mean_s + g_mean_mean;

    let p = j.probs();
    let mut total = 0.0;
    for ((i, jj, k), &prob) in p.indexed_iter() {
        if prob == 0.0 {
            continue;
        }
        let pt = [j.support(0)[i], j.support(1)[jj], j.support(2)[k]];
        let u = (pt[va.index()], pt[vb.index()]);
        total += prob * gbar(u) * kc.eval(pt[vc.index()], s_c);
    }
    total
}

/// `V_n = (1/n²)·Σᵢ Σⱼ h(S_i, S_j)`, by a plain double loop.
pub fn naive_v_statistic<T, F>(h: F, samples: &[T]) -> Result<f64>
where
    F: Fn(&T, &T) -> f64,
{
    if samples.is_empty() {
        return Err(Error::invalid("V-statistic needs at least one sample"));
    }
    let mut total = 0.0;
    for a in samples {
        for b in samples {
            total += h(a, b);
        }
    }
    let n = samples.len() as f64;
    Ok(total / (n * n))
}

/// `‖μ̃ − μ‖²_k` for a scalar sample against a known finite marginal. Both
/// measures are merged into one signed measure on the union of their atoms,
/// so the norm is an exact finite kernel sum without cancellation between
/// large terms.
pub fn embedding_error_sq(series: &Series, spec: &KernelSpec, marginal: &DiscreteMarginal) -> Result<f64> {
    if series.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: series.dim(),
        });
    }
    // integer counts keep an exact match between sample and atoms at zero
    let mut counts: BTreeMap<u64, (f64, usize, f64)> = BTreeMap::new();
    for i in 0..series.len() {
        let x = series.point(i)[0];
        counts.entry(x.to_bits()).or_insert((x, 0, 0.0)).1 += 1;
    }
    for (&s, &p) in marginal.points.iter().zip(&marginal.probs) {
        counts.entry(s.to_bits()).or_insert((s, 0, 0.0)).2 += p;
    }
    let n = series.len() as f64;
    let atoms: Vec<(f64, f64)> = counts
        .into_values()
        .map(|(x, c, p)| (x, c as f64 / n - p))
        .collect();
    let mut total = 0.0;
    for &(a, wa) in &atoms {
        for &(b, wb) in &atoms {
            total += wa * wb * k1(spec, a, b);
        }
    }
    Ok(total.max(0.0))
}

/// Least-squares slope of `log(median ‖μ̃ − μ‖)` against `log n`, the median
/// taken over `replicates` independent series per grid size. Replicate `r` at
/// grid index `g` is generated from `seed.child(g).child(r)`.
pub fn embedding_convergence_slope<G>(
    generator: G,
    spec: &KernelSpec,
    true_marginal: &DiscreteMarginal,
    n_grid: &[usize],
    replicates: usize,
    seed: StreamSeed,
) -> Result<f64>
where
    G: Fn(usize, StreamSeed) -> Result<Series>,
{
    if n_grid.len() < 2 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n_grid needs at least two strictly increasing sizes"));
    }
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let mut log_n = Vec::with_capacity(n_grid.len());
    let mut log_err = Vec::with_capacity(n_grid.len());
    for (g, &n) in n_grid.iter().enumerate() {
        let mut errs = (0..replicates)
            .map(|r| {
                let s = generator(n, seed.child(g as u64).child(r as u64))?;
                Ok(embedding_error_sq(&s, spec, true_marginal)?.sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        errs.sort_by(f64::total_cmp);
        let m = errs.len();
        let median = if m % 2 == 1 {
            errs[m / 2]
        } else {
            0.5 * (errs[m / 2 - 1] + errs[m / 2])
        };
        if median.is_nan() || median <= 0.0 {
            return Err(Error::Degenerate(format!(
                "embedding error is zero at n = {n}; the convergence slope is undefined"
            )));
        }
        log_n.push((n as f64).ln());
        log_err.push(median.ln());
    }
    let k = log_n.len() as f64;
    let mx = log_n.iter().sum::<f64>() / k;
    let my = log_err.iter().sum::<f64>() / k;
    let sxy: f64 = log_n.iter().zip(&log_err).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = log_n.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
