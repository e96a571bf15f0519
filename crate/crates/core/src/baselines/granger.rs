//! Bivariate Granger causality with the sum-of-squared-residuals F-test.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrangerResult {
    /// p-value of "x Granger-causes y".
    pub p_xy: f64,
    /// p-value of "y Granger-causes x".
    pub p_yx: f64,
    pub lag_order: usize,
    /// F statistics `(x -> y, y -> x)`.
    pub f_statistics: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct FTest {
    f: f64,
    p: f64,
}

/// Residual sum of squares of the least-squares fit `design * beta ≈ target`.
fn rss(design: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<f64> {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::SingularDesign);
    }
    let beta = svd.solve(target, 0.0).map_err(|_| Error::SingularDesign)?;
    let resid = target - design * beta;
    Ok(resid.iter().map(|r| r * r).sum())
}

/// Standardized lag columns `series[t - l]` for `l = 1..=max_lag`, rows
/// `t = max_lag..n`.
fn lag_columns(values: &[f64], max_lag: usize) -> Vec<Vec<f64>> {
    let n = values.len();
    (1..=max_lag)
        .map(|l| {
            let col: Vec<f64> = (max_lag..n).map(|t| values[t - l]).collect();
            standardize(col)
        })
        .collect()
}

fn standardize(mut col: Vec<f64>) -> Vec<f64> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    col.iter_mut().for_each(|v| *v = (*v - mean) / scale);
    col
}

fn design(columns: &[&Vec<f64>], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        rows,
        columns.len() + 1,
        |r, c| if c == 0 { 1.0 } else { columns[c - 1][r] },
    )
}

/// Does `cause` Granger-cause `effect`?
fn f_test(cause: &[f64], effect: &[f64], max_lag: usize) -> Result<FTest> {
    let n = effect.len();
    let rows = n - max_lag;
    let own = lag_columns(effect, max_lag);
    let other = lag_columns(cause, max_lag);
    let target = DMatrix::from_iterator(rows, 1, effect[max_lag..].iter().copied());

    let restricted: Vec<&Vec<f64>> = own.iter().collect();
    let unrestricted: Vec<&Vec<f64>> = own.iter().chain(other.iter()).collect();
    let rss_r = rss(&design(&restricted, rows), &target)?;
    let rss_u = rss(&design(&unrestricted, rows), &target)?;
    // nested models; clamp round-off
    let rss_u = rss_u.min(rss_r);
    let df_num = max_lag as f64;
    let df_den = (rows - 2 * max_lag - 1) as f64;
    if rss_u <= 0.0 {
        return Err(Error::SingularDesign);
    }
    let f = ((rss_r - rss_u) / df_num) / (rss_u / df_den);
    let dist = FisherSnedecor::new(df_num, df_den).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let p = dist.sf(f).clamp(0.0, 1.0);
    Ok(FTest { f: f.max(0.0), p })
}

pub fn granger_f_test(x: &TimeSeries, y: &TimeSeries, max_lag: usize) -> Result<GrangerResult> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter("max_lag must be >= 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::AlignmentMismatch(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let required = 3 * max_lag + 1;
    if x.len() <= required {
        return Err(Error::SeriesTooShort {
            required,
            actual: x.len(),
        });
    }
    let xy = f_test(x.values(), y.values(), max_lag)?;
    let yx = f_test(y.values(), x.values(), max_lag)?;
    Ok(GrangerResult {
        p_xy: xy.p,
        p_yx: yx.p,
        lag_order: max_lag,
        f_statistics: (xy.f, yx.f),
    })
}
