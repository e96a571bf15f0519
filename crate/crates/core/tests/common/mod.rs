#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsci::derivatives::{embedding_with_field, DerivativeMethod};
use tsci::systems::rk4_step;
use tsci::{EmbeddingParams, TimeSeries};

pub fn lorenz_rhs(z: &[f64; 3]) -> [f64; 3] {
    [
        10.0 * (z[1] - z[0]),
        z[0] * (28.0 - z[2]) - z[1],
        z[0] * z[1] - 8.0 / 3.0 * z[2],
    ]
}

/// Lorenz states sampled every `dt` (integrated at `dt / 10`), after a
/// transient of 20 time units, from a seeded initial condition.
pub fn lorenz(n: usize, dt: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = [
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
        rng.random_range(10.0..30.0),
    ];
    let h = dt / 10.0;
    for _ in 0..(20.0 / h) as usize {
        z = rk4_step(lorenz_rhs, &z, h);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(z);
        for _ in 0..10 {
            z = rk4_step(lorenz_rhs, &z, h);
        }
    }
    out
}

pub fn lorenz_x(n: usize, dt: f64, seed: u64) -> TimeSeries {
    TimeSeries::new(lorenz(n, dt, seed).iter().map(|z| z[0]).collect(), dt).unwrap()
}

/// Delay embedding of Lorenz `x` with its central-difference field.
pub fn lorenz_manifold(n: usize, seed: u64, lag: usize, dim: usize) -> (Array2<f64>, Array2<f64>) {
    let x = lorenz_x(n + (dim - 1) * lag, 0.01, seed);
    let (e, f) = embedding_with_field(&x, EmbeddingParams::new(lag, dim).unwrap(), DerivativeMethod::Central).unwrap();
    (e.points, f.vectors)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Random matrix with `|det| >= 0.3` after adding the identity.
pub fn invertible(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    loop {
        let a = random_matrix(n, n, rng) * 0.5 + Array2::<f64>::eye(n);
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        if m.determinant().abs() >= 0.3 {
            return a;
        }
    }
}
