//! Tangent space causal inference.
//!
//! The score `r_{X->Y}` pushes the Y-manifold's tangent vectors `V` through
//! the Jacobian of the cross map `F: M_y -> M_x` and measures how well they
//! line up with the X-manifold's own tangent vectors `U`. It is close to 1
//! when a cross map from `M_y` to `M_x` exists, which is the signature of
//! `x -> y`.
//!
//! Matrices are row-per-sample: `X, U` are `T x Q_x`, `Y, V` are `T x Q_y`,
//! and all four share the same time index.

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossmap::{fit_kernel_ridge, median_heuristic_bandwidth, CrossMapModel, KnnConfig, LocalJacobians};
use crate::derivatives::{embedding_with_field, DerivativeMethod};
use crate::embedding::{select_dimension_fnn, select_lag, EmbeddingParams, TimeSeries, DEFAULT_ACF_THRESHOLD};
use crate::error::{Error, Result};

/// Rows whose tangent vector norm is below this are dropped from the score.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreResult {
    pub r: f64,
    pub cosines: Vec<f64>,
    pub n_used: usize,
    pub n_dropped: usize,
    pub direction: String,
}

/// How `corr(Û, U)` is reduced to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Mean per-sample cosine similarity.
    #[default]
    Cosine,
    /// Pearson correlation over all flattened entries.
    Pearson,
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn cosine_score(u_hat: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>) -> Result<ScoreResult> {
    if u_hat.dim() != u.dim() {
        return Err(Error::AlignmentMismatch(format!(
            "pushforward is {:?}, field is {:?}",
            u_hat.dim(),
            u.dim()
        )));
    }
    if u.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut cosines = Vec::with_capacity(u.nrows());
    for (a, b) in u_hat.outer_iter().zip(u.outer_iter()) {
        let na = a.dot(&a).sqrt();
        let nb = b.dot(&b).sqrt();
        if na < DEGENERATE_NORM || nb < DEGENERATE_NORM {
            continue;
        }
        cosines.push((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0));
    }
    if cosines.is_empty() {
        return Err(Error::AllRowsDegenerate);
    }
    let n_used = cosines.len();
    let r = compensated_sum(cosines.iter().copied()) / n_used as f64;
    Ok(ScoreResult {
        r,
        cosines,
        n_used,
        n_dropped: u.nrows() - n_used,
        direction: String::new(),
    })
}

/// Pearson correlation of the flattened matrices.
pub fn pearson_score(u_hat: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>) -> Result<f64> {
    if u_hat.dim() != u.dim() {
        return Err(Error::AlignmentMismatch("shape mismatch".into()));
    }
    pearson(u_hat.iter().copied(), u.iter().copied()).ok_or(Error::AllRowsDegenerate)
}

pub(crate) fn pearson(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> Option<f64> {
    let a: Vec<f64> = a.collect();
    let b: Vec<f64> = b.collect();
    let n = a.len() as f64;
    if a.is_empty() {
        return None;
    }
    let ma = compensated_sum(a.iter().copied()) / n;
    let mb = compensated_sum(b.iter().copied()) / n;
    let cov = compensated_sum(a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)));
    let va = compensated_sum(a.iter().map(|x| (x - ma) * (x - ma)));
    let vb = compensated_sum(b.iter().map(|y| (y - mb) * (y - mb)));
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

fn check_aligned(
    x: &ArrayView2<'_, f64>,
    u: &ArrayView2<'_, f64>,
    y: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Result<()> {
    if x.dim() != u.dim() || y.dim() != v.dim() || x.nrows() != y.nrows() {
        return Err(Error::AlignmentMismatch(format!(
            "X {:?}, U {:?}, Y {:?}, V {:?}",
            x.dim(),
            u.dim(),
            y.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Pushforward `Û_t = V_t J_t` with local k-NN Jacobians.
pub fn pushforward_knn(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    cfg: KnnConfig,
) -> Result<Array2<f64>> {
    let jacobians = LocalJacobians::new(x, y, cfg)?;
    let rows: Vec<Vec<f64>> = (0..y.nrows())
        .into_par_iter()
        .map(|t| jacobians.at(t).map(|j| v.row(t).dot(&j).to_vec()))
        .collect::<Result<_>>()?;
    Ok(stack_rows(rows, x.ncols()))
}

/// Pushforward `Û_t = V_t J_F(Y_t)^T` through a fitted model.
pub fn pushforward_model(model: &CrossMapModel, y: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if model.input_dim() != y.ncols() {
        return Err(Error::AlignmentMismatch(format!(
            "model expects {} inputs, Y has {} columns",
            model.input_dim(),
            y.ncols()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..y.nrows())
        .into_par_iter()
        .map(|t| model.jacobian(y.row(t)).dot(&v.row(t)).to_vec())
        .collect();
    Ok(stack_rows(rows, model.output_dim()))
}

fn stack_rows(rows: Vec<Vec<f64>>, cols: usize) -> Array2<f64> {
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect()).expect("rows have equal length")
}

pub fn tsci_score_knn(
    x: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    cfg: KnnConfig,
) -> Result<ScoreResult> {
    check_aligned(&x, &u, &y, &v)?;
    let u_hat = pushforward_knn(x, y, v, cfg)?;
    cosine_score(u_hat.view(), u)
}

pub fn tsci_score_model(
    x: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    model: &CrossMapModel,
) -> Result<ScoreResult> {
    check_aligned(&x, &u, &y, &v)?;
    if model.output_dim() != x.ncols() {
        return Err(Error::AlignmentMismatch(format!(
            "model predicts {} outputs, X has {} columns",
            model.output_dim(),
            x.ncols()
        )));
    }
    let u_hat = pushforward_model(model, y, v)?;
    cosine_score(u_hat.view(), u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossMapMethod {
    #[default]
    Knn,
    KernelRidge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    /// `None` selects the median pairwise distance of the training inputs
    /// divided by `sqrt(Q)`, a per-coordinate length scale; the plain median
    /// oversmooths delay embeddings of high dimension.
    pub bandwidth: Option<f64>,
    pub ridge: f64,
    /// Training rows, taken evenly spaced over the trajectory.
    pub max_train: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            bandwidth: None,
            ridge: 1e-4,
            max_train: 3000,
        }
    }
}

/// Embedding, derivative and cross-map settings for a pair of series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub acf_threshold: f64,
    pub fnn_tolerance: f64,
    pub max_dim: usize,
    pub lag_x: Option<usize>,
    pub lag_y: Option<usize>,
    pub dim_x: Option<usize>,
    pub dim_y: Option<usize>,
    pub derivative: DerivativeMethod,
    pub knn_k: Option<usize>,
    pub theiler_window: Option<usize>,
    pub method: CrossMapMethod,
    pub statistic: Statistic,
    pub kernel: KernelConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            acf_threshold: DEFAULT_ACF_THRESHOLD,
            fnn_tolerance: 0.005,
            max_dim: 10,
            lag_x: None,
            lag_y: None,
            dim_x: None,
            dim_y: None,
            derivative: DerivativeMethod::Central,
            knn_k: None,
            theiler_window: None,
            method: CrossMapMethod::Knn,
            statistic: Statistic::Cosine,
            kernel: KernelConfig::default(),
        }
    }
}

/// Lag and dimension chosen for one series, with selection diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectedParams {
    pub params: EmbeddingParams,
    pub lag_capped: bool,
    pub dim_saturated: bool,
}

pub fn select_params(
    series: &TimeSeries,
    lag: Option<usize>,
    dim: Option<usize>,
    cfg: &PipelineConfig,
) -> Result<SelectedParams> {
    let (lag, lag_capped) = match lag {
        Some(l) => (l, false),
        None => {
            let sel = select_lag(series, cfg.acf_threshold)?;
            (sel.lag, sel.capped)
        }
    };
    let (dim, dim_saturated) = match dim {
        Some(d) => (d, false),
        None => {
            let sel = select_dimension_fnn(series, lag, cfg.fnn_tolerance, cfg.max_dim)?;
            (sel.dim, sel.saturated)
        }
    };
    Ok(SelectedParams {
        params: EmbeddingParams::new(lag, dim)?,
        lag_capped,
        dim_saturated,
    })
}

/// Embeddings and tangent fields of two series, cut to a common time range.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub x: Array2<f64>,
    pub u: Array2<f64>,
    pub y: Array2<f64>,
    pub v: Array2<f64>,
    pub params_x: SelectedParams,
    pub params_y: SelectedParams,
    /// Source-series index of row 0.
    pub start: usize,
}

impl PreparedPair {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    /// Contiguous row window `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> PreparedPair {
        let r = s![start..start + len, ..];
        PreparedPair {
            x: self.x.slice(r).to_owned(),
            u: self.u.slice(r).to_owned(),
            y: self.y.slice(r).to_owned(),
            v: self.v.slice(r).to_owned(),
            params_x: self.params_x,
            params_y: self.params_y,
            start: self.start + start,
        }
    }
}

pub fn prepare_pair(x: &TimeSeries, y: &TimeSeries, cfg: &PipelineConfig) -> Result<PreparedPair> {
    if (x.dt() - y.dt()).abs() > 1e-9 * x.dt().max(y.dt()) {
        return Err(Error::AlignmentMismatch(format!(
            "sampling intervals differ: {} vs {}",
            x.dt(),
            y.dt()
        )));
    }
    if x.len() != y.len() {
        return Err(Error::AlignmentMismatch(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let px = select_params(x, cfg.lag_x, cfg.dim_x, cfg)?;
    let py = select_params(y, cfg.lag_y, cfg.dim_y, cfg)?;
    prepare_with_params(x, y, px, py, cfg.derivative)
}

pub fn prepare_with_params(
    x: &TimeSeries,
    y: &TimeSeries,
    px: SelectedParams,
    py: SelectedParams,
    derivative: DerivativeMethod,
) -> Result<PreparedPair> {
    let (ex, fx) = embedding_with_field(x, px.params, derivative)?;
    let (ey, fy) = embedding_with_field(y, py.params, derivative)?;
    let start = ex.base_offset.max(ey.base_offset);
    let end = (ex.base_offset + ex.rows()).min(ey.base_offset + ey.rows());
    if end <= start {
        return Err(Error::SeriesTooShort {
            required: start,
            actual: x.len(),
        });
    }
    let cut = |m: Array2<f64>, offset: usize| m.slice(s![start - offset..end - offset, ..]).to_owned();
    Ok(PreparedPair {
        x: cut(ex.points, ex.base_offset),
        u: cut(fx.vectors, ex.base_offset),
        y: cut(ey.points, ey.base_offset),
        v: cut(fy.vectors, ey.base_offset),
        params_x: px,
        params_y: py,
        start,
    })
}

fn knn_config(cfg: &PipelineConfig, qx: usize, qy: usize, searched_lag: usize) -> KnnConfig {
    let mut knn = KnnConfig::for_jacobian(qx, qy, searched_lag);
    if let Some(k) = cfg.knn_k {
        knn.k = k;
    }
    if let Some(w) = cfg.theiler_window {
        knn.theiler_window = w;
    }
    knn
}

fn training_rows(n: usize, max_train: usize) -> Vec<usize> {
    if n <= max_train {
        return (0..n).collect();
    }
    (0..max_train).map(|i| i * n / max_train).collect()
}

/// Pushforward of `V` into the X-manifold's tangent spaces, with the
/// configured cross-map estimator.
pub fn pushforward(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    searched_lag: usize,
    cfg: &PipelineConfig,
) -> Result<Array2<f64>> {
    match cfg.method {
        CrossMapMethod::Knn => pushforward_knn(x, y, v, knn_config(cfg, x.ncols(), y.ncols(), searched_lag)),
        CrossMapMethod::KernelRidge => {
            let model = fit_model(x, y, &cfg.kernel)?;
            pushforward_model(&model, y, v)
        }
    }
}

/// Kernel-ridge cross map `Y -> X` on an evenly spaced training subset.
pub fn fit_model(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, kernel: &KernelConfig) -> Result<CrossMapModel> {
    let rows = training_rows(y.nrows(), kernel.max_train.max(1));
    let ytrain = y.select(Axis(0), &rows);
    let xtrain = x.select(Axis(0), &rows);
    let bandwidth = kernel
        .bandwidth
        .unwrap_or_else(|| median_heuristic_bandwidth(ytrain.view()) / (y.ncols() as f64).sqrt());
    fit_kernel_ridge(ytrain.view(), xtrain.view(), bandwidth, kernel.ridge)
}

/// Score one direction: `r_{X->Y}` from `(X, U)` and `(Y, V)`.
pub fn score_direction(
    x: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    searched_lag: usize,
    cfg: &PipelineConfig,
) -> Result<ScoreResult> {
    check_aligned(&x, &u, &y, &v)?;
    let u_hat = pushforward(x, y, v, searched_lag, cfg)?;
    let mut result = cosine_score(u_hat.view(), u)?;
    if cfg.statistic == Statistic::Pearson {
        result.r = pearson_score(u_hat.view(), u)?;
    }
    Ok(result)
}

/// Both directions on a prepared pair: `(r_{X->Y}, r_{Y->X})`.
pub fn score_pair(pair: &PreparedPair, cfg: &PipelineConfig) -> Result<(ScoreResult, ScoreResult)> {
    let mut xy = score_direction(
        pair.x.view(),
        pair.u.view(),
        pair.y.view(),
        pair.v.view(),
        pair.params_y.params.lag,
        cfg,
    )?;
    xy.direction = "X->Y".into();
    let mut yx = score_direction(
        pair.y.view(),
        pair.v.view(),
        pair.x.view(),
        pair.u.view(),
        pair.params_x.params.lag,
        cfg,
    )?;
    yx.direction = "Y->X".into();
    Ok((xy, yx))
}

pub fn tsci_bidirectional(x: &TimeSeries, y: &TimeSeries, cfg: &PipelineConfig) -> Result<(ScoreResult, ScoreResult)> {
    let pair = prepare_pair(x, y, cfg)?;
    score_pair(&pair, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_rows_score_one() {
        let u = array![[1.0, 2.0], [-3.0, 0.5], [0.1, 0.1]];
        let s = cosine_score(u.view(), u.view()).unwrap();
        assert!(s.cosines.iter().all(|c| (c - 1.0).abs() < 1e-15));
        assert!((s.r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_rows_score_zero() {
        let u = array![[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]];
        let uh = array![[0.0, 3.0], [-1.0, 0.0], [1.0, -1.0]];
        assert_eq!(cosine_score(uh.view(), u.view()).unwrap().r, 0.0);
    }

    #[test]
    fn antipodal_rows_score_minus_one() {
        let u = array![[1.0, 2.0], [-3.0, 0.5]];
        let uh = u.mapv(|v| -v);
        assert!((cosine_score(uh.view(), u.view()).unwrap().r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rows_are_dropped() {
        let u = array![[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]];
        let s = cosine_score(u.view(), u.view()).unwrap();
        assert_eq!((s.n_used, s.n_dropped), (2, 1));
        let zero = Array2::<f64>::zeros((3, 2));
        assert!(matches!(
            cosine_score(zero.view(), u.view()),
            Err(Error::AllRowsDegenerate)
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Array2::<f64>::ones((3, 2));
        let b = Array2::<f64>::ones((3, 3));
        assert!(matches!(
            cosine_score(a.view(), b.view()),
            Err(Error::AlignmentMismatch(_))
        ));
    }

    #[test]
    fn compensated_sum_is_order_insensitive() {
        let vals: Vec<f64> = (0..10_000)
            .map(|i| ((i * 7919) % 1000) as f64 * 1e-3 - 0.4999)
            .collect();
        let mut rev = vals.clone();
        rev.reverse();
        assert!((compensated_sum(vals) - compensated_sum(rev)).abs() < 1e-12);
    }
}
