//! Delay embeddings and automatic selection of lag and dimension.
//!
//! Rows are newest-first: row `t` of an embedding with lag `τ` and dimension
//! `Q` is `[x(s), x(s-τ), ..., x(s-(Q-1)τ)]` with `s = t + (Q-1)τ`. Every
//! module in this crate uses that convention.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::neighbors::{Metric, NeighborIndex};

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling interval must be positive, got {dt}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::SeriesTooShort {
                required: 1,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(TimeSeries { values, dt })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance (divide by N).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        TimeSeries::new(self.values[start..end].to_vec(), self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EmbeddingParams {
    pub lag: usize,
    pub dim: usize,
}

impl EmbeddingParams {
    pub fn new(lag: usize, dim: usize) -> Result<Self> {
        if lag == 0 || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "embedding lag and dimension must be >= 1 (lag {lag}, dim {dim})"
            )));
        }
        Ok(EmbeddingParams { lag, dim })
    }

    /// Index of the first source sample that has a full delay vector.
    pub fn base_offset(&self) -> usize {
        (self.dim - 1) * self.lag
    }

    /// Number of embedded rows for a series of `len` samples.
    pub fn rows_for(&self, len: usize) -> Option<usize> {
        len.checked_sub(self.base_offset()).filter(|&r| r > 0)
    }
}

/// A sampled shadow manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub points: Array2<f64>,
    pub params: EmbeddingParams,
    pub base_offset: usize,
}

impl Embedding {
    pub fn rows(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Delay-embed a raw slice. Shared by the embedding and vector-field paths.
pub(crate) fn embed_values(values: &[f64], params: EmbeddingParams) -> Result<Array2<f64>> {
    let rows = params.rows_for(values.len()).ok_or(Error::SeriesTooShort {
        required: params.base_offset(),
        actual: values.len(),
    })?;
    let offset = params.base_offset();
    Ok(Array2::from_shape_fn((rows, params.dim), |(t, q)| {
        values[t + offset - q * params.lag]
    }))
}

pub fn delay_embed(series: &TimeSeries, params: EmbeddingParams) -> Result<Embedding> {
    Ok(Embedding {
        points: embed_values(series.values(), params)?,
        params,
        base_offset: params.base_offset(),
    })
}

/// Default autocorrelation threshold for lag selection.
pub const DEFAULT_ACF_THRESHOLD: f64 = 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagSelection {
    pub lag: usize,
    /// The autocorrelation never dropped below threshold before `len / 4`.
    pub capped: bool,
}

/// Biased sample autocorrelation (lag sums divided by N, like the variance).
pub fn autocorrelation(values: &[f64], lag: usize) -> f64 {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let denom: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if lag >= n {
        return 0.0;
    }
    let num: f64 = values[..n - lag]
        .iter()
        .zip(&values[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    num / denom
}

/// Smallest lag at which the autocorrelation drops below `threshold`.
pub fn select_lag(series: &TimeSeries, threshold: f64) -> Result<LagSelection> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "autocorrelation threshold must be in (0, 1), got {threshold}"
        )));
    }
    if series.variance() <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let cap = (series.len() / 4).max(1);
    for lag in 1..=cap {
        if autocorrelation(series.values(), lag) < threshold {
            return Ok(LagSelection { lag, capped: false });
        }
    }
    log::warn!("autocorrelation stayed above {threshold} up to lag cap {cap}");
    Ok(LagSelection { lag: cap, capped: true })
}

/// Settings of the false-nearest-neighbors test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnnConfig {
    /// Neighbor-distance growth ratio above which a neighbor is false.
    pub ratio_threshold: f64,
    /// Lifted distance, in units of the series standard deviation, above
    /// which a neighbor is false.
    pub attractor_threshold: f64,
    /// Temporal exclusion radius; `None` means one embedding lag.
    pub theiler_window: Option<usize>,
}

impl Default for FnnConfig {
    fn default() -> Self {
        FnnConfig {
            ratio_threshold: 15.0,
            attractor_threshold: 2.0,
            theiler_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionSelection {
    pub dim: usize,
    /// No dimension up to `max_dim` met the tolerance.
    pub saturated: bool,
    /// False-neighbor fraction for `Q = 1, 2, ...` as far as it was evaluated.
    pub fractions: Vec<f64>,
}

/// False-neighbor fraction of dimension `dim` when lifted to `dim + 1`.
pub fn false_neighbor_fraction(values: &[f64], lag: usize, dim: usize, cfg: &FnnConfig) -> Result<f64> {
    let lifted = EmbeddingParams::new(lag, dim + 1)?;
    let points = embed_values(values, lifted)?;
    let n = points.nrows();
    let theiler = cfg.theiler_window.unwrap_or(lag);
    if n <= 2 * theiler + 2 {
        return Err(Error::SeriesTooShort {
            required: lifted.base_offset() + 2 * theiler + 2,
            actual: values.len(),
        });
    }
    let base = points.slice(ndarray::s![.., ..dim]).to_owned();
    let index = NeighborIndex::new(base.view(), Metric::Euclidean);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt();

    let mut checked = 0usize;
    let mut false_count = 0usize;
    for i in 0..n {
        let row = base.row(i);
        let q = row.as_slice().expect("row-major");
        let Some(nb) = index.knn(q, 1, |j| j.abs_diff(i) <= theiler).into_iter().next() else {
            continue;
        };
        if nb.distance <= 0.0 {
            continue;
        }
        let extra = (points[[i, dim]] - points[[nb.index, dim]]).abs();
        let lifted_dist = (nb.distance * nb.distance + extra * extra).sqrt();
        checked += 1;
        if extra / nb.distance > cfg.ratio_threshold || lifted_dist / spread > cfg.attractor_threshold {
            false_count += 1;
        }
    }
    if checked == 0 {
        return Err(Error::ZeroVariance);
    }
    Ok(false_count as f64 / checked as f64)
}

/// Smallest dimension whose false-neighbor fraction is below `tolerance`.
pub fn select_dimension_fnn(
    series: &TimeSeries,
    lag: usize,
    tolerance: f64,
    max_dim: usize,
) -> Result<DimensionSelection> {
    select_dimension_fnn_with(series, lag, tolerance, max_dim, &FnnConfig::default())
}

pub fn select_dimension_fnn_with(
    series: &TimeSeries,
    lag: usize,
    tolerance: f64,
    max_dim: usize,
    cfg: &FnnConfig,
) -> Result<DimensionSelection> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "FNN tolerance must be in (0, 1), got {tolerance}"
        )));
    }
    if lag == 0 || max_dim == 0 {
        return Err(Error::InvalidParameter("FNN lag and max_dim must be >= 1".into()));
    }
    if series.variance() <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let theiler = cfg.theiler_window.unwrap_or(lag);
    let needed = max_dim * lag + 2 * theiler + 3;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            required: needed,
            actual: series.len(),
        });
    }
    let mut fractions = Vec::with_capacity(max_dim);
    for dim in 1..=max_dim {
        let fraction = false_neighbor_fraction(series.values(), lag, dim, cfg)?;
        fractions.push(fraction);
        if fraction < tolerance {
            return Ok(DimensionSelection {
                dim,
                saturated: false,
                fractions,
            });
        }
    }
    log::warn!("false-neighbor fraction never fell below {tolerance}; using max_dim {max_dim}");
    Ok(DimensionSelection {
        dim: max_dim,
        saturated: true,
        fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, 1.0).unwrap()
    }

    fn rows(e: &Embedding) -> Vec<Vec<f64>> {
        e.points.outer_iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn embed_lag_one_dim_three() {
        let e = delay_embed(&ts(vec![0., 1., 2., 3., 4., 5.]), EmbeddingParams::new(1, 3).unwrap()).unwrap();
        assert_eq!(
            rows(&e),
            vec![vec![2., 1., 0.], vec![3., 2., 1.], vec![4., 3., 2.], vec![5., 4., 3.]]
        );
        assert_eq!(e.base_offset, 2);
    }

    #[test]
    fn embed_lag_two_dim_two() {
        let e = delay_embed(&ts(vec![0., 1., 2., 3., 4., 5.]), EmbeddingParams::new(2, 2).unwrap()).unwrap();
        assert_eq!(rows(&e), vec![vec![2., 0.], vec![3., 1.], vec![4., 2.], vec![5., 3.]]);
    }

    #[test]
    fn embed_dim_one_is_identity() {
        let e = delay_embed(&ts(vec![7., 8., 9.]), EmbeddingParams::new(1, 1).unwrap()).unwrap();
        assert_eq!(rows(&e), vec![vec![7.], vec![8.], vec![9.]]);
    }

    #[test]
    fn embed_too_short() {
        let err = delay_embed(&ts(vec![1., 2., 3.]), EmbeddingParams::new(2, 3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SeriesTooShort { .. }));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN], 1.0),
            Err(Error::NonFinite(1))
        ));
        assert!(TimeSeries::new(vec![1.0], 1.0).is_err());
        assert!(TimeSeries::new(vec![1.0, 2.0], 0.0).is_err());
        assert!(EmbeddingParams::new(0, 2).is_err());
    }

    #[test]
    fn lag_of_constant_series_is_an_error() {
        assert!(matches!(
            select_lag(&ts(vec![5.0; 50]), DEFAULT_ACF_THRESHOLD),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn lag_of_long_cosine_is_analytic() {
        // ACF of cos(2πt/100) is cos(2πℓ/100); it first drops below 1/e at ℓ = 20.
        let values: Vec<f64> = (0..400_000)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 100.0).cos())
            .collect();
        let sel = select_lag(&ts(values), DEFAULT_ACF_THRESHOLD).unwrap();
        assert_eq!(sel, LagSelection { lag: 20, capped: false });
    }

    #[test]
    fn lag_of_short_cosine_includes_finite_sample_bias() {
        // At 400 samples the biased estimate at ℓ = 19 is 0.3137, below 1/e,
        // although cos(2π·19/100) = 0.36812 sits just above it.
        let values: Vec<f64> = (0..400)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 100.0).cos())
            .collect();
        assert!((autocorrelation(&values, 19) - 0.313_692_7).abs() < 1e-6);
        assert_eq!(select_lag(&ts(values), DEFAULT_ACF_THRESHOLD).unwrap().lag, 19);
    }

    #[test]
    fn lag_cap_is_flagged() {
        let values: Vec<f64> = (0..40).map(|t| t as f64).collect();
        let sel = select_lag(&ts(values), 0.01).unwrap();
        assert_eq!(sel, LagSelection { lag: 10, capped: true });
    }

    #[test]
    fn fnn_on_a_circle_selects_two() {
        let values: Vec<f64> = (0..5000).map(|t| (t as f64 * 0.05).sin()).collect();
        let series = TimeSeries::new(values, 0.05).unwrap();
        let lag = select_lag(&series, DEFAULT_ACF_THRESHOLD).unwrap().lag;
        let sel = select_dimension_fnn(&series, lag, 0.005, 6).unwrap();
        assert_eq!(sel.dim, 2, "fractions {:?}", sel.fractions);
        assert!(!sel.saturated);
        assert!(sel.fractions[0] >= 0.005);
    }

    proptest! {
        #[test]
        fn embedding_shape(len in 2usize..200, lag in 1usize..8, dim in 1usize..6) {
            let series = ts((0..len).map(|v| v as f64).collect());
            let params = EmbeddingParams::new(lag, dim).unwrap();
            match delay_embed(&series, params) {
                Ok(e) => {
                    prop_assert_eq!(e.rows(), len - (dim - 1) * lag);
                    prop_assert_eq!(e.dim(), dim);
                    for t in 0..e.rows() {
                        for q in 0..dim {
                            prop_assert_eq!(e.points[[t, q]], (t + (dim - 1) * lag - q * lag) as f64);
                        }
                    }
                }
                Err(_) => prop_assert!(len <= (dim - 1) * lag),
            }
        }

        #[test]
        fn dim_one_round_trips(values in proptest::collection::vec(-1e3f64..1e3, 2..100)) {
            let e = delay_embed(&ts(values.clone()), EmbeddingParams::new(3, 1).unwrap()).unwrap();
            prop_assert_eq!(e.points.column(0).to_vec(), values);
        }
    }
}
