//! Convergent cross mapping: cross-map skill and its dependence on library
//! length.
//!
//! `r_{X->Y}` predicts the scalar `x(t)` from the Y-embedding with simplex
//! weights on `Q_y + 1` neighbors drawn from a contiguous library window, and
//! correlates the predictions with the truth over every row outside the
//! library.

use ndarray::{s, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossmap::{ccm_predict, KnnConfig};
use crate::embedding::{delay_embed, EmbeddingParams, TimeSeries};
use crate::error::{Error, Result};
use crate::harness::aggregate::{aggregate_trials, TrialSummary};
use crate::seeds::derive_seed;
use crate::tsci::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CcmParams {
    pub x: EmbeddingParams,
    pub y: EmbeddingParams,
    /// `None` excludes one lag of the searched embedding.
    pub theiler_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcmConfig {
    pub library_lengths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl CcmConfig {
    fn validate(&self, available: usize) -> Result<()> {
        if self.trials == 0 || self.library_lengths.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one trial and one library length".into(),
            ));
        }
        if self.library_lengths.windows(2).any(|w| w[0] >= w[1]) || self.library_lengths[0] == 0 {
            return Err(Error::InvalidParameter(
                "library lengths must be positive and strictly increasing".into(),
            ));
        }
        let max = *self.library_lengths.last().expect("non-empty");
        if max > available {
            return Err(Error::LibraryTooLong {
                library: max,
                available,
            });
        }
        Ok(())
    }
}

/// Delay embeddings of both series restricted to their common time range.
pub fn aligned_embeddings(x: &TimeSeries, y: &TimeSeries, params: &CcmParams) -> Result<(Array2<f64>, Array2<f64>)> {
    if x.len() != y.len() {
        return Err(Error::AlignmentMismatch(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let ex = delay_embed(x, params.x)?;
    let ey = delay_embed(y, params.y)?;
    let start = ex.base_offset.max(ey.base_offset);
    let end = x.len();
    if end <= start {
        return Err(Error::SeriesTooShort {
            required: start,
            actual: end,
        });
    }
    Ok((
        ex.points
            .slice(s![start - ex.base_offset..end - ex.base_offset, ..])
            .to_owned(),
        ey.points
            .slice(s![start - ey.base_offset..end - ey.base_offset, ..])
            .to_owned(),
    ))
}

/// Cross-map skill of predicting column 0 of `x` from `y` with a random
/// contiguous library of `library_length` rows. When the library covers every
/// row, each row is predicted from the others (outside its exclusion window).
pub fn skill_on_embeddings(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    theiler_window: usize,
    library_length: usize,
    seed: u64,
) -> Result<f64> {
    let n = y.nrows();
    if library_length > n {
        return Err(Error::LibraryTooLong {
            library: library_length,
            available: n,
        });
    }
    let k = y.ncols() + 1;
    if library_length < k {
        return Err(Error::NotEnoughNeighbors {
            required: k,
            available: library_length,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..=n - library_length);
    let library: Vec<usize> = (start..start + library_length).collect();
    let queries: Vec<usize> = if library_length == n {
        library.clone()
    } else {
        (0..start).chain(start + library_length..n).collect()
    };
    let targets = x.slice(s![.., 0..1]);
    let cfg = KnnConfig { k, theiler_window };
    let pred = ccm_predict(y, targets, &library, &queries, cfg)?;
    let truth = queries.iter().map(|&q| x[[q, 0]]);
    Ok(pearson(pred.column(0).iter().copied(), truth).unwrap_or(0.0))
}

pub fn ccm_skill(x: &TimeSeries, y: &TimeSeries, params: &CcmParams, library_length: usize, seed: u64) -> Result<f64> {
    let (ex, ey) = aligned_embeddings(x, y, params)?;
    let theiler = params.theiler_window.unwrap_or(params.y.lag);
    skill_on_embeddings(ex.view(), ey.view(), theiler, library_length, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub library_length: usize,
    pub direction: String,
    pub summary: TrialSummary,
}

/// Skill percentiles over seeded trials for each library length, in both
/// directions. Rows are ordered by length, then `X->Y` before `Y->X`.
pub fn ccm_convergence(
    x: &TimeSeries,
    y: &TimeSeries,
    params: &CcmParams,
    cfg: &CcmConfig,
) -> Result<Vec<ConvergenceRow>> {
    let (ex, ey) = aligned_embeddings(x, y, params)?;
    cfg.validate(ey.nrows())?;
    let theiler_y = params.theiler_window.unwrap_or(params.y.lag);
    let theiler_x = params.theiler_window.unwrap_or(params.x.lag);
    let mut rows = Vec::with_capacity(cfg.library_lengths.len() * 2);
    for (li, &length) in cfg.library_lengths.iter().enumerate() {
        for (di, direction) in ["X->Y", "Y->X"].into_iter().enumerate() {
            let skills: Vec<f64> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let seed = derive_seed(cfg.seed, &[li as u64, di as u64, trial as u64]);
                    if di == 0 {
                        skill_on_embeddings(ex.view(), ey.view(), theiler_y, length, seed)
                    } else {
                        skill_on_embeddings(ey.view(), ex.view(), theiler_x, length, seed)
                    }
                })
                .collect::<Result<_>>()?;
            rows.push(ConvergenceRow {
                library_length: length,
                direction: direction.to_string(),
                summary: aggregate_trials(&skills)?,
            });
        }
    }
    Ok(rows)
}
