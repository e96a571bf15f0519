mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tsci::embedding::{select_dimension_fnn, select_lag};
use tsci::{delay_embed, EmbeddingParams, TimeSeries};

fn white_noise(n: usize, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TimeSeries::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect(), 1.0).unwrap()
}

#[test]
fn lorenz_embeds_in_three_dimensions() {
    let x = common::lorenz_x(4000, 0.01, 50);
    let sel = select_dimension_fnn(&x, 10, 0.005, 10).unwrap();
    assert_eq!(sel.dim, 3, "{:?}", sel.fractions);
    assert!(!sel.saturated);
}

#[test]
fn lorenz_false_neighbor_fractions_fall_with_dimension() {
    let x = common::lorenz_x(4000, 0.01, 51);
    let sel = select_dimension_fnn(&x, 10, 1e-6, 6).unwrap();
    let inversions = sel.fractions.windows(2).filter(|w| w[1] > w[0] + 1e-12).count();
    assert!(inversions <= 1, "{:?}", sel.fractions);
}

#[test]
fn white_noise_saturates_fnn_and_decorrelates_at_lag_one() {
    let noise = white_noise(2000, 52);
    let sel = select_dimension_fnn(&noise, 1, 0.005, 6).unwrap();
    assert!(sel.saturated);
    assert_eq!(sel.dim, 6);
    let lag = select_lag(&noise, 1.0 / std::f64::consts::E).unwrap();
    assert_eq!(lag.lag, 1);
    assert!(!lag.capped);
}

#[test]
fn embedding_rows_are_newest_first() {
    let s = TimeSeries::new((0..20).map(f64::from).collect(), 0.1).unwrap();
    let e = delay_embed(&s, EmbeddingParams::new(3, 4).unwrap()).unwrap();
    assert_eq!(e.rows(), 11);
    assert_eq!(e.points.row(0).to_vec(), vec![9.0, 6.0, 3.0, 0.0]);
    assert_eq!(e.points.row(10).to_vec(), vec![19.0, 16.0, 13.0, 10.0]);
}
