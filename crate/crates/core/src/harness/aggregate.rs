use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 5th percentile, median and 95th percentile of a set of trial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub p5: f64,
    pub median: f64,
    pub p95: f64,
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of sorted values.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn aggregate_trials(values: &[f64]) -> Result<TrialSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("trial value is NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(TrialSummary {
        p5: percentile_sorted(&sorted, 5.0),
        median: percentile_sorted(&sorted, 50.0),
        p95: percentile_sorted(&sorted, 95.0),
    })
}
