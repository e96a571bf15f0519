//! Cross maps between shadow manifolds.
//!
//! A cross map `F: M_y -> M_x` predicts points of the X-embedding from the
//! Y-embedding. Two estimators are provided: local linear fits on k nearest
//! neighbors (whose coefficient matrix is the local Jacobian) and a global
//! Gaussian-kernel ridge regressor with an analytic Jacobian. The simplex
//! predictor used by convergent cross mapping also lives here.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::neighbors::{Metric, NeighborIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    /// Rows with `|i - t| <= theiler_window` are never neighbors of row `t`.
    /// A window of 0 excludes only the query row itself.
    pub theiler_window: usize,
}

impl KnnConfig {
    /// `4 * max(Q_x, Q_y)` neighbors, excluding one lag either side.
    pub fn for_jacobian(qx: usize, qy: usize, lag: usize) -> Self {
        KnnConfig {
            k: 4 * qx.max(qy),
            theiler_window: lag,
        }
    }
}

/// Minimum-norm least-squares solution of `a * j = b` via SVD.
pub(crate) fn lstsq_min_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, eps).expect("SVD computed with both U and V^T")
}

/// Local linear Jacobians of the cross map `Y -> X`, sharing one neighbor
/// index over the Y-embedding.
pub struct LocalJacobians<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView2<'a, f64>,
    index: NeighborIndex,
    cfg: KnnConfig,
}

impl<'a> LocalJacobians<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView2<'a, f64>, cfg: KnnConfig) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::AlignmentMismatch(format!(
                "X has {} rows, Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        let qmax = x.ncols().max(y.ncols());
        if cfg.k <= qmax {
            return Err(Error::InvalidParameter(format!(
                "k = {} must exceed max(Q_x, Q_y) = {qmax}",
                cfg.k
            )));
        }
        let index = NeighborIndex::new(y, Metric::Euclidean);
        Ok(LocalJacobians { x, y, index, cfg })
    }

    /// `Q_y x Q_x` matrix `J` minimizing `||ΔY J - ΔX||` over the neighbors of
    /// `Y_t`, so that a row tangent vector `v` maps to `v J`.
    pub fn at(&self, t: usize) -> Result<Array2<f64>> {
        let query = self.y.row(t).to_vec();
        let w = self.cfg.theiler_window;
        let neighbors = self.index.knn(&query, self.cfg.k, |i| i.abs_diff(t) <= w);
        if neighbors.len() < self.cfg.k {
            return Err(Error::NotEnoughNeighbors {
                required: self.cfg.k,
                available: neighbors.len(),
            });
        }
        let (qx, qy) = (self.x.ncols(), self.y.ncols());
        let kk = neighbors.len();
        let dy = DMatrix::from_fn(kk, qy, |r, c| self.y[[neighbors[r].index, c]] - self.y[[t, c]]);
        let dx = DMatrix::from_fn(kk, qx, |r, c| self.x[[neighbors[r].index, c]] - self.x[[t, c]]);
        if dy.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateNeighborhood(t));
        }
        let j = lstsq_min_norm(&dy, &dx);
        Ok(Array2::from_shape_fn((qy, qx), |(r, c)| j[(r, c)]))
    }
}

pub fn knn_local_jacobian(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    t: usize,
    cfg: KnnConfig,
) -> Result<Array2<f64>> {
    LocalJacobians::new(x, y, cfg)?.at(t)
}

/// Gaussian-kernel ridge regression from Y-points to X-points.
#[derive(Debug, Clone)]
pub struct KernelRidge {
    train: Array2<f64>,
    coef: Array2<f64>,
    bandwidth: f64,
    ridge: f64,
}

/// Fitted cross map.
#[derive(Debug, Clone)]
pub enum CrossMapModel {
    KernelRidge(KernelRidge),
}

impl CrossMapModel {
    pub fn input_dim(&self) -> usize {
        match self {
            CrossMapModel::KernelRidge(m) => m.train.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            CrossMapModel::KernelRidge(m) => m.coef.ncols(),
        }
    }

    pub fn predict(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        match self {
            CrossMapModel::KernelRidge(m) => m.predict(y),
        }
    }

    /// `Q_x x Q_y` Jacobian of the map at `y`.
    pub fn jacobian(&self, y: ArrayView1<'_, f64>) -> Array2<f64> {
        match self {
            CrossMapModel::KernelRidge(m) => m.jacobian(y),
        }
    }
}

impl KernelRidge {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn kernel_row(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        let scale = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        self.train
            .outer_iter()
            .map(|row| {
                let d2: f64 = row.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 * scale).exp()
            })
            .collect()
    }

    pub fn predict(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        self.kernel_row(y).dot(&self.coef)
    }

    pub fn jacobian(&self, y: ArrayView1<'_, f64>) -> Array2<f64> {
        // dk(y, y_i)/dy = -k(y, y_i) (y - y_i) / h^2
        let k = self.kernel_row(y);
        let h2 = self.bandwidth * self.bandwidth;
        let (qx, qy) = (self.coef.ncols(), self.train.ncols());
        let mut jac = Array2::zeros((qx, qy));
        for (i, row) in self.train.outer_iter().enumerate() {
            if k[i] == 0.0 {
                continue;
            }
            for m in 0..qy {
                let g = -k[i] * (y[m] - row[m]) / h2;
                for j in 0..qx {
                    jac[[j, m]] += self.coef[[i, j]] * g;
                }
            }
        }
        jac
    }
}

pub fn fit_kernel_ridge(
    y: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    bandwidth: f64,
    ridge: f64,
) -> Result<CrossMapModel> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }
    if y.nrows() != x.nrows() {
        return Err(Error::AlignmentMismatch(format!(
            "Y has {} rows, X has {}",
            y.nrows(),
            x.nrows()
        )));
    }
    let n = y.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if ridge == 0.0 && has_duplicate_rows(y) {
        return Err(Error::SingularGram);
    }
    let scale = 1.0 / (2.0 * bandwidth * bandwidth);
    let gram = DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = y
            .row(i)
            .iter()
            .zip(y.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-d2 * scale).exp() + if i == j { ridge } else { 0.0 }
    });
    let chol = gram.cholesky().ok_or(Error::SingularGram)?;
    let diag = chol.l_dirty().diagonal();
    if diag.iter().any(|d| !(d * d > 1e-14)) {
        return Err(Error::SingularGram);
    }
    let rhs = DMatrix::from_fn(n, x.ncols(), |i, j| x[[i, j]]);
    let sol = chol.solve(&rhs);
    let coef = Array2::from_shape_fn((n, x.ncols()), |(i, j)| sol[(i, j)]);
    Ok(CrossMapModel::KernelRidge(KernelRidge {
        train: y.to_owned(),
        coef,
        bandwidth,
        ridge,
    }))
}

fn has_duplicate_rows(y: ArrayView2<'_, f64>) -> bool {
    let mut rows: Vec<Vec<u64>> = y
        .outer_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort_unstable();
    rows.windows(2).any(|w| w[0] == w[1])
}

/// Median pairwise Euclidean distance over (at most) the first 1000 rows.
pub fn median_heuristic_bandwidth(y: ArrayView2<'_, f64>) -> f64 {
    let m = y.nrows().min(1000);
    let stride = (y.nrows() / m.max(1)).max(1);
    let rows: Vec<usize> = (0..m).map(|i| i * stride).collect();
    let mut d = Vec::with_capacity(m * (m - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let d2: f64 = y
                .row(i)
                .iter()
                .zip(y.row(j).iter())
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            d.push(d2.sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, median, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if *median > 0.0 {
        *median
    } else {
        1.0
    }
}

/// Simplex-weighted nearest-neighbor prediction of `x_targets` rows from the
/// Y-embedding. Each query uses its `cfg.k` nearest library rows (CCM uses
/// `k = Q_y + 1`) with weights `exp(-d_i / d_1)`.
pub fn ccm_predict(
    y: ArrayView2<'_, f64>,
    x_targets: ArrayView2<'_, f64>,
    library: &[usize],
    queries: &[usize],
    cfg: KnnConfig,
) -> Result<Array2<f64>> {
    if y.nrows() != x_targets.nrows() {
        return Err(Error::AlignmentMismatch(format!(
            "Y has {} rows, targets {}",
            y.nrows(),
            x_targets.nrows()
        )));
    }
    if library.len() < cfg.k || cfg.k == 0 {
        return Err(Error::NotEnoughNeighbors {
            required: cfg.k.max(1),
            available: library.len(),
        });
    }
    let index = NeighborIndex::with_rows(y, library, Metric::Euclidean);
    let mut out = Array2::zeros((queries.len(), x_targets.ncols()));
    let w = cfg.theiler_window;
    for (row, &t) in out.axis_iter_mut(Axis(0)).zip(queries) {
        let query = y.row(t).to_vec();
        let nbrs = index.knn(&query, cfg.k, |i| i.abs_diff(t) <= w);
        if nbrs.len() < cfg.k {
            return Err(Error::NotEnoughNeighbors {
                required: cfg.k,
                available: nbrs.len(),
            });
        }
        let weights = simplex_weights(&nbrs.iter().map(|n| n.distance).collect::<Vec<_>>());
        let mut row = row;
        for (nb, wt) in nbrs.iter().zip(&weights) {
            row.scaled_add(*wt, &x_targets.row(nb.index));
        }
    }
    Ok(out)
}

/// Exponential simplex weights for ascending distances. When the nearest
/// distance is zero the zero-distance neighbors share the weight equally.
pub fn simplex_weights(distances: &[f64]) -> Vec<f64> {
    let d1 = distances[0];
    let raw: Vec<f64> = if d1 <= 0.0 {
        distances.iter().map(|&d| if d <= 0.0 { 1.0 } else { 0.0 }).collect()
    } else {
        distances.iter().map(|&d| (-d / d1).exp()).collect()
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}
