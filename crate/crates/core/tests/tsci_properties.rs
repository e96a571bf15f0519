mod common;

use approx::assert_abs_diff_eq;
use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{invertible, lorenz_manifold, random_matrix};
use tsci::crossmap::{fit_kernel_ridge, knn_local_jacobian, median_heuristic_bandwidth, KnnConfig};
use tsci::systems::{rk4_integrate, SimulationConfig};
use tsci::tsci::{cosine_score, tsci_bidirectional, tsci_score_knn, tsci_score_model, CrossMapMethod, PipelineConfig};

const LAG: usize = 10;

fn knn(q: usize) -> KnnConfig {
    KnnConfig::for_jacobian(q, q, LAG)
}

#[test]
fn self_map_scores_one() {
    let (x, u) = lorenz_manifold(2000, 1, LAG, 3);
    let r = tsci_score_knn(x.view(), u.view(), x.view(), u.view(), knn(3)).unwrap();
    assert!(1.0 - r.r < 1e-6, "{}", r.r);
    assert_eq!(r.n_used + r.n_dropped, 2000);
}

#[test]
fn independent_lorenz_trajectories_score_near_zero() {
    let passes = (0..10)
        .filter(|&s| {
            let (x, u) = lorenz_manifold(2000, 100 + s, LAG, 3);
            let (y, v) = lorenz_manifold(2000, 200 + s, LAG, 3);
            let xy = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), knn(3))
                .unwrap()
                .r;
            let yx = tsci_score_knn(y.view(), v.view(), x.view(), u.view(), knn(3))
                .unwrap()
                .r;
            xy.abs() < 0.3 && yx.abs() < 0.3
        })
        .count();
    assert!(passes >= 9, "{passes}/10");
}

#[test]
fn linear_copy_of_a_manifold_scores_near_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, u) = lorenz_manifold(2000, 2, LAG, 3);
    let a = invertible(3, &mut rng);
    let y = x.dot(&a.t());
    let v = u.dot(&a.t());
    let r = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), knn(3))
        .unwrap()
        .r;
    assert!(r >= 0.99, "{r}");
}

#[test]
fn tanh_of_linear_copy_scores_high() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (x, u) = lorenz_manifold(2000, 3, LAG, 3);
    let a = invertible(3, &mut rng) / 20.0;
    let pre = x.dot(&a.t());
    let y = pre.mapv(f64::tanh);
    // d/dt tanh(Ax) = (1 - tanh^2) * (A u)
    let v = y.mapv(|t| 1.0 - t * t) * u.dot(&a.t());
    let r = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), knn(3))
        .unwrap()
        .r;
    assert!(r >= 0.95, "{r}");
}

#[test]
fn model_pushforward_on_a_linear_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (y, v) = lorenz_manifold(600, 4, LAG, 3);
    let a = invertible(3, &mut rng);
    let x = y.dot(&a.t());
    let u = v.dot(&a.t());
    let model = fit_kernel_ridge(y.view(), x.view(), median_heuristic_bandwidth(y.view()), 1e-8).unwrap();
    let r = tsci_score_model(x.view(), u.view(), y.view(), v.view(), &model)
        .unwrap()
        .r;
    assert!(r > 0.99, "{r}");

    let noise = random_matrix(600, 3, &mut rng);
    let norms = noise.map_axis(Axis(1), |row| row.dot(&row).sqrt());
    let unit = &noise / &norms.insert_axis(Axis(1));
    let r = tsci_score_model(x.view(), u.view(), y.view(), unit.view(), &model)
        .unwrap()
        .r;
    assert!(r.abs() < 0.1, "{r}");
}

#[test]
fn random_tangents_through_a_model_average_out() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (y, _) = lorenz_manifold(2000, 5, LAG, 3);
    let a = invertible(3, &mut rng);
    let x = y.dot(&a.t());
    let sub: Vec<usize> = (0..2000).step_by(4).collect();
    let model = fit_kernel_ridge(
        y.select(Axis(0), &sub).view(),
        x.select(Axis(0), &sub).view(),
        20.0,
        1e-6,
    )
    .unwrap();
    let u = random_matrix(2000, 3, &mut rng);
    let v = random_matrix(2000, 3, &mut rng);
    let r = tsci_score_model(x.view(), u.view(), y.view(), v.view(), &model)
        .unwrap()
        .r;
    assert!(r.abs() < 0.1, "{r}");
}

#[test]
fn scores_are_scale_free() {
    let (x, u) = lorenz_manifold(1500, 9, LAG, 3);
    let (y, v) = lorenz_manifold(1500, 10, LAG, 3);
    let base = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), knn(3)).unwrap();
    let scaled_u = &u * 7.5;
    let scaled_v = &v * 0.02;
    let other = tsci_score_knn(x.view(), scaled_u.view(), y.view(), scaled_v.view(), knn(3)).unwrap();
    assert_eq!(base.n_used, other.n_used);
    for (a, b) in base.cosines.iter().zip(&other.cosines) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(base.r, other.r, epsilon = 1e-12);
}

#[test]
fn direction_swap_has_no_shared_state() {
    let (x, u) = lorenz_manifold(1000, 11, LAG, 3);
    let (y, v) = lorenz_manifold(1000, 12, LAG, 2);
    let cfg = KnnConfig::for_jacobian(3, 2, LAG);
    let xy1 = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), cfg).unwrap();
    let yx1 = tsci_score_knn(y.view(), v.view(), x.view(), u.view(), cfg).unwrap();
    let yx2 = tsci_score_knn(y.view(), v.view(), x.view(), u.view(), cfg).unwrap();
    let xy2 = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), cfg).unwrap();
    assert_eq!(xy1, xy2);
    assert_eq!(yx1, yx2);
}

#[test]
fn mean_of_cosines_is_the_score() {
    let (x, u) = lorenz_manifold(800, 13, LAG, 3);
    let (y, v) = lorenz_manifold(800, 14, LAG, 3);
    let r = tsci_score_knn(x.view(), u.view(), y.view(), v.view(), knn(3)).unwrap();
    let mean = r.cosines.iter().sum::<f64>() / r.cosines.len() as f64;
    assert_abs_diff_eq!(r.r, mean, epsilon = 1e-12);
    assert!(r.cosines.iter().all(|c| (-1.0..=1.0).contains(c)));
}

#[test]
fn identical_series_score_one_both_ways() {
    let x = common::lorenz_x(3000, 0.01, 21);
    let cfg = PipelineConfig {
        lag_x: Some(LAG),
        lag_y: Some(LAG),
        ..PipelineConfig::default()
    };
    let (xy, yx) = tsci_bidirectional(&x, &x, &cfg).unwrap();
    assert!(xy.r > 0.999 && yx.r > 0.999, "{} {}", xy.r, yx.r);
}

fn benchmark(coupling: f64, seed: u64) -> (tsci::TimeSeries, tsci::TimeSeries) {
    let traj = rk4_integrate(&SimulationConfig {
        coupling,
        seed,
        ..SimulationConfig::default()
    })
    .unwrap();
    (traj.z(2).clone(), traj.z(4).clone())
}

#[test]
fn uncoupled_benchmark_scores_near_zero() {
    let (x, y) = benchmark(0.0, 31);
    let (xy, yx) = tsci_bidirectional(&x, &y, &PipelineConfig::default()).unwrap();
    assert!(xy.r.abs() < 0.3 && yx.r.abs() < 0.3, "{} {}", xy.r, yx.r);
}

#[test]
fn coupled_benchmark_separates_directions() {
    let (x, y) = benchmark(1.0, 32);
    let (xy, yx) = tsci_bidirectional(&x, &y, &PipelineConfig::default()).unwrap();
    assert!(yx.r <= 0.4, "{}", yx.r);
    assert!(xy.r - yx.r > 0.3, "{} {}", xy.r, yx.r);

    let model_cfg = PipelineConfig {
        method: CrossMapMethod::KernelRidge,
        ..PipelineConfig::default()
    };
    let (mxy, _) = tsci_bidirectional(&x, &y, &model_cfg).unwrap();
    assert!((mxy.r - xy.r).abs() < 0.1, "kernel {} vs knn {}", mxy.r, xy.r);
}

#[test]
fn kernel_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let (y, _) = lorenz_manifold(400, 41, LAG, 3);
    let x = y.mapv(|v| (v / 10.0).sin()).dot(&random_matrix(3, 2, &mut rng)) + y.dot(&random_matrix(3, 2, &mut rng));
    let model = fit_kernel_ridge(y.view(), x.view(), median_heuristic_bandwidth(y.view()), 1e-3).unwrap();
    let h = 1e-5;
    let queries = random_matrix(100, 3, &mut rng);
    let mut worst: f64 = 0.0;
    for q in queries.outer_iter() {
        let q = &q + &y.row(rng.random_range(0..400));
        let jac = model.jacobian(q.view());
        for c in 0..3 {
            let mut plus = q.clone();
            let mut minus = q.clone();
            plus[c] += h;
            minus[c] -= h;
            let fd = (model.predict(plus.view()) - model.predict(minus.view())) / (2.0 * h);
            for r in 0..2 {
                worst = worst.max((fd[r] - jac[[r, c]]).abs());
            }
        }
    }
    assert!(worst <= 1e-5, "{worst}");
}

use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn local_jacobian_is_exact_on_global_linear_maps(
        seed in 0u64..1000,
        qy in 1usize..5,
        qx in 1usize..5,
        extra in 1usize..8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_matrix(150, qy, &mut rng) * 3.0;
        let a = random_matrix(qx, qy, &mut rng);
        let x: Array2<f64> = y.dot(&a.t());
        let cfg = KnnConfig { k: qx.max(qy) + extra, theiler_window: 0 };
        let t = rng.random_range(0..150);
        let j = knn_local_jacobian(x.view(), y.view(), t, cfg).unwrap();
        for (got, want) in j.iter().zip(a.t().iter()) {
            prop_assert!((got - want).abs() < 1e-8, "{} vs {}", got, want);
        }
    }

    #[test]
    fn cosine_score_ignores_positive_row_scaling(seed in 0u64..1000, scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(50, 3, &mut rng);
        let b = random_matrix(50, 3, &mut rng);
        let base = cosine_score(a.view(), b.view()).unwrap();
        let scaled = &a * scale;
        let other = cosine_score(scaled.view(), b.view()).unwrap();
        prop_assert!((base.r - other.r).abs() < 1e-12);
    }
}
