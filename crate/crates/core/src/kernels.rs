//! Gaussian kernel evaluation, Gram matrices and centring transforms.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of `n ≥ 2` real vectors of common dimension `d ≥ 1`,
/// stored row-wise as an `n × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    points: Array2<f64>,
}

impl Series {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if d == 0 {
            return Err(Error::invalid("series points must have dimension >= 1"));
        }
        if n < 2 {
            return Err(Error::invalid(format!(
                "series needs at least 2 observations, got {n}"
            )));
        }
        if let Some(idx) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at observation {}",
                idx / d
            )));
        }
        Ok(Series { points })
    }

    /// One-dimensional series.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let points = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .expect("shape matches length");
        Series::new(points)
    }

    /// Series from a list of equally sized vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((rows.len(), d), flat).expect("rectangular rows");
        Series::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    /// Re-indexed copy: observation `i` of the result is observation
    /// `order[i]` of `self`.
    pub fn reindexed(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::LengthMismatch(format!(
                "re-indexing {} observations with {} indices",
                self.len(),
                order.len()
            )));
        }
        if let Some(&bad) = order.iter().find(|&&i| i >= self.len()) {
            return Err(Error::invalid(format!("index {bad} out of range")));
        }
        Ok(Series {
            points: self.points.select(Axis(0), order),
        })
    }

    /// Contiguous window `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(Error::invalid(format!(
                "window {start}..{} exceeds series length {}",
                start + len,
                self.len()
            )));
        }
        Series::new(self.points.slice(ndarray::s![start..start + len, ..]).to_owned())
    }

    /// Copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Series::new(&self.points * factor)
    }
}

/// Gaussian kernel `k(x, y) = exp(−‖x − y‖² / (2σ²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    bandwidth: f64,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!(
                "kernel bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelSpec { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    pub(crate) fn eval_views(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        let sq: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { bandwidth: 1.0 }
    }
}

pub fn evaluate(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(spec.eval_views(ArrayView1::from(x), ArrayView1::from(y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    Raw,
    Empirical,
    Population,
}

/// Symmetric `n × n` kernel matrix tagged with its centring state.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    values: Array2<f64>,
    centering: Centering,
}

impl GramMatrix {
    pub(crate) fn from_parts(values: Array2<f64>, centering: Centering) -> Self {
        debug_assert!(values.is_square());
        GramMatrix { values, centering }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Raw Gram matrix `K[i][j] = k(s_i, s_j)`. Only the upper triangle is
/// evaluated; the lower one is mirrored so the result is exactly symmetric.
pub fn gram(spec: &KernelSpec, s: &Series) -> GramMatrix {
    let n = s.len();
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let xi = s.point(i);
        values[[i, i]] = spec.eval_views(xi, xi);
        for j in (i + 1)..n {
            let v = spec.eval_views(xi, s.point(j));
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    GramMatrix::from_parts(values, Centering::Raw)
}

/// Empirical centring `H·G·H` with `H = I − (1/n)·11ᵀ`.
pub fn center_empirical(g: &GramMatrix) -> GramMatrix {
    GramMatrix::from_parts(double_center(g.values.view()), Centering::Empirical)
}

/// Double centring of an arbitrary square matrix.
pub fn center_matrix(m: &Array2<f64>) -> Result<Array2<f64>> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "centring needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(double_center(m.view()))
}

// G_ij − rowmean_i − colmean_j + grandmean, in one pass over the entries.
pub(crate) fn double_center(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = m.nrows();
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let inv = 1.0 / n as f64;
    let row_means: Array1<f64> = m.sum_axis(Axis(1)) * inv;
    let col_means: Array1<f64> = m.sum_axis(Axis(0)) * inv;
    let grand = row_means.sum() * inv;
    let mut out = m.to_owned();
    for ((i, j), v) in out.indexed_iter_mut() {
        *v = *v - row_means[i] - col_means[j] + grand;
    }
    out
}

/// Median of the Euclidean distances over all index pairs `i < j`. For an even
/// number of pairs the two middle distances are averaged.
pub fn median_heuristic_bandwidth(s: &Series) -> Result<f64> {
    let n = s.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let xi = s.point(i);
        for j in (i + 1)..n {
            let sq: f64 = xi
                .iter()
                .zip(s.point(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    let m = dists.len();
    let mid = m / 2;
    let (_, &mut upper, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if m % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::Degenerate(
            "median pairwise distance is zero; set the kernel bandwidth explicitly".into(),
        ))
    }
}
