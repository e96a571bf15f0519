//! Kraskov-Stögbauer-Grassberger mutual information estimator (variant 1).
//!
//! For each sample the max-norm distance `eps` to its k-th neighbor in the
//! joint space is found; `n_a` and `n_b` count marginal neighbors strictly
//! closer than `eps`. Then
//! `I = ψ(k) + ψ(T) - <ψ(n_a + 1) + ψ(n_b + 1)>`.
//!
//! Duplicate points make those counts ill-defined, so inputs with repeated
//! rows (or `B` identical to `A`) get a seeded jitter of relative size 1e-10
//! and are flagged as degenerate.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::neighbors::{Metric, NeighborIndex};

const JITTER_SCALE: f64 = 1e-10;
const JITTER_SEED: u64 = 0x6b73_675f_6a69_7474;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiEstimate {
    /// Estimate in nats.
    pub nats: f64,
    /// Inputs contained duplicate points and were jittered.
    pub degenerate: bool,
}

fn has_duplicates(m: ArrayView2<'_, f64>) -> bool {
    let mut rows: Vec<Vec<u64>> = m
        .outer_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort_unstable();
    rows.windows(2).any(|w| w[0] == w[1])
}

fn jitter(m: &mut Array2<f64>, rng: &mut ChaCha8Rng) {
    for mut col in m.columns_mut() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let scale = JITTER_SCALE * if sd > 0.0 { sd } else { 1.0 };
        col.iter_mut().for_each(|v| *v += scale * rng.random_range(-1.0..1.0));
    }
}

pub fn ksg_mutual_information(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, k: usize) -> Result<MiEstimate> {
    let t = a.nrows();
    if b.nrows() != t {
        return Err(Error::AlignmentMismatch(format!("A has {t} rows, B has {}", b.nrows())));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if t <= k + 1 {
        return Err(Error::TooFewSamples {
            required: k + 1,
            actual: t,
        });
    }
    let mut a = a.to_owned();
    let mut b = b.to_owned();
    let degenerate = has_duplicates(a.view()) || has_duplicates(b.view()) || a == b;
    if degenerate {
        log::warn!("duplicate samples in mutual information input; applying jitter");
        let mut rng = ChaCha8Rng::seed_from_u64(JITTER_SEED);
        jitter(&mut a, &mut rng);
        jitter(&mut b, &mut rng);
    }
    let joint = concatenate(Axis(1), &[a.view(), b.view()]).expect("equal row counts");
    let joint_index = NeighborIndex::new(joint.view(), Metric::Chebyshev);
    let a_index = NeighborIndex::new(a.view(), Metric::Chebyshev);
    let b_index = NeighborIndex::new(b.view(), Metric::Chebyshev);

    let terms: Vec<f64> = (0..t)
        .into_par_iter()
        .map(|i| {
            let q = joint.row(i).to_vec();
            let eps = joint_index.knn(&q, k, |j| j == i)[k - 1].distance;
            let qa = a.row(i).to_vec();
            let qb = b.row(i).to_vec();
            let na = a_index.count_within(&qa, eps, true, |j| j == i);
            let nb = b_index.count_within(&qb, eps, true, |j| j == i);
            digamma(na as f64 + 1.0) + digamma(nb as f64 + 1.0)
        })
        .collect();
    let mean = crate::tsci::compensated_sum(terms) / t as f64;
    Ok(MiEstimate {
        nats: digamma(k as f64) + digamma(t as f64) - mean,
        degenerate,
    })
}

/// Mutual information between the native tangent vectors and their
/// pushforward, as an alternative to the cosine score.
pub fn mi_pushforward_score(u: ArrayView2<'_, f64>, u_hat: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    if u.dim() != u_hat.dim() {
        return Err(Error::AlignmentMismatch(format!(
            "U is {:?}, Û is {:?}",
            u.dim(),
            u_hat.dim()
        )));
    }
    Ok(ksg_mutual_information(u, u_hat, k)?.nats)
}
