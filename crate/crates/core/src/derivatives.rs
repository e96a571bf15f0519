//! Time-derivative estimates and the vector fields they induce on delay
//! embeddings.
//!
//! Central differences and Savitzky-Golay keep the series length (one-sided
//! stencils at the ends); forward differences drop the last sample. Every
//! derivative series shares its source's time origin, so sample `i` of the
//! derivative belongs to sample `i` of the source.

use nalgebra::DMatrix;
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::embedding::{embed_values, Embedding, EmbeddingParams, TimeSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceScheme {
    Forward,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum DerivativeMethod {
    Forward,
    #[default]
    Central,
    Savgol {
        window: usize,
        polyorder: usize,
    },
}

impl DerivativeMethod {
    /// Settings used for corrupted signals.
    pub const SAVGOL_5_2: DerivativeMethod = DerivativeMethod::Savgol {
        window: 5,
        polyorder: 2,
    };
}

pub fn derivative_series(series: &TimeSeries, scheme: DifferenceScheme) -> Result<TimeSeries> {
    let x = series.values();
    let n = x.len();
    let dt = series.dt();
    match scheme {
        DifferenceScheme::Forward => {
            let d = x.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
            TimeSeries::new(d, dt).map_err(|_| Error::SeriesTooShort { required: 2, actual: n })
        }
        DifferenceScheme::Central => {
            if n < 3 {
                return Err(Error::SeriesTooShort { required: 2, actual: n });
            }
            let mut d = Vec::with_capacity(n);
            d.push((-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt));
            d.extend(x.windows(3).map(|w| (w[2] - w[0]) / (2.0 * dt)));
            d.push((3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt));
            TimeSeries::new(d, dt)
        }
    }
}

/// First-derivative weights of a local least-squares polynomial fit, one row
/// per evaluation position inside the window (row `j` evaluates at sample `j`).
fn savgol_weights(window: usize, polyorder: usize) -> Array2<f64> {
    let half = (window / 2) as f64;
    let vander = DMatrix::from_fn(window, polyorder + 1, |i, k| (i as f64 - half).powi(k as i32));
    let pinv = vander
        .pseudo_inverse(1e-14)
        .expect("Vandermonde pseudo-inverse with a non-negative epsilon");
    let mut weights = Array2::zeros((window, window));
    for j in 0..window {
        let z = j as f64 - half;
        for i in 0..window {
            let mut w = 0.0;
            for k in 1..=polyorder {
                w += k as f64 * z.powi(k as i32 - 1) * pinv[(k, i)];
            }
            weights[[j, i]] = w;
        }
    }
    weights
}

pub fn savgol_derivative(series: &TimeSeries, window: usize, polyorder: usize) -> Result<TimeSeries> {
    if window.is_multiple_of(2) || polyorder == 0 || polyorder >= window {
        return Err(Error::InvalidFilterConfig { window, polyorder });
    }
    let x = series.values();
    let n = x.len();
    if n < window {
        return Err(Error::SeriesTooShort {
            required: window - 1,
            actual: n,
        });
    }
    let weights = savgol_weights(window, polyorder);
    let half = window / 2;
    let dt = series.dt();
    let d = (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - window);
            let row = weights.row(i - start);
            row.iter()
                .zip(&x[start..start + window])
                .map(|(w, v)| w * v)
                .sum::<f64>()
                / dt
        })
        .collect();
    TimeSeries::new(d, dt)
}

pub fn estimate_derivative(series: &TimeSeries, method: DerivativeMethod) -> Result<TimeSeries> {
    match method {
        DerivativeMethod::Forward => derivative_series(series, DifferenceScheme::Forward),
        DerivativeMethod::Central => derivative_series(series, DifferenceScheme::Central),
        DerivativeMethod::Savgol { window, polyorder } => savgol_derivative(series, window, polyorder),
    }
}

/// Tangent-vector estimates, row-aligned with an [`Embedding`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSamples {
    pub vectors: Array2<f64>,
    pub method: Option<DerivativeMethod>,
}

impl VectorFieldSamples {
    pub fn rows(&self) -> usize {
        self.vectors.nrows()
    }
}

/// Delay-embed a derivative series with the embedding's own `(τ, Q)`, so row
/// `t` is the tangent vector at embedding row `t`.
pub fn vector_field_for_embedding(deriv: &TimeSeries, params: EmbeddingParams) -> Result<VectorFieldSamples> {
    let vectors = embed_values(deriv.values(), params)?;
    if let Some((i, _)) = vectors.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(i.0));
    }
    Ok(VectorFieldSamples { vectors, method: None })
}

/// Embed `series`, estimate its derivative and return the pair truncated to
/// their common rows.
pub fn embedding_with_field(
    series: &TimeSeries,
    params: EmbeddingParams,
    method: DerivativeMethod,
) -> Result<(Embedding, VectorFieldSamples)> {
    let deriv = estimate_derivative(series, method)?;
    let embedding = crate::embedding::delay_embed(series, params)?;
    let mut field = vector_field_for_embedding(&deriv, params)?;
    field.method = Some(method);
    align_pair(embedding, field, series.dt(), deriv.dt())
}

/// Truncate an embedding and a field that share a time origin to their
/// common leading rows.
pub fn align_pair(
    mut embedding: Embedding,
    mut field: VectorFieldSamples,
    series_dt: f64,
    deriv_dt: f64,
) -> Result<(Embedding, VectorFieldSamples)> {
    if (series_dt - deriv_dt).abs() > 1e-12 * series_dt.abs().max(deriv_dt.abs()) {
        return Err(Error::AlignmentMismatch(format!(
            "derivative sampled at {deriv_dt}, series at {series_dt}"
        )));
    }
    if embedding.dim() != field.vectors.ncols() {
        return Err(Error::AlignmentMismatch(format!(
            "embedding has {} columns, field has {}",
            embedding.dim(),
            field.vectors.ncols()
        )));
    }
    let rows = embedding.rows().min(field.rows());
    if field.rows() > embedding.rows() {
        return Err(Error::AlignmentMismatch("derivative is longer than its series".into()));
    }
    embedding.points = embedding.points.slice(s![..rows, ..]).to_owned();
    field.vectors = field.vectors.slice(s![..rows, ..]).to_owned();
    Ok((embedding, field))
}
