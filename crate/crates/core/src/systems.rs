//! Benchmark data: the unidirectionally coupled Rössler-Lorenz system and
//! signal corruption utilities.
//!
//! State layout is `[z1, z2, z3 | z4, z5, z6]`: a Rössler oscillator driving a
//! Lorenz system through the term `C * z2^2` in the `z5` equation. The last
//! Lorenz component is `z4 * z5 - 8 z6 / 3`, the standard Lorenz form.
//!
//! The `z2` equation has two readings, see [`RosslerForm`]. Simulations use
//! the chaotic standard form unless configured otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};

pub type SystemState = [f64; 6];

/// Absolute value beyond which an integration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// How the `z2` equation of the Rössler block is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RosslerForm {
    /// `6 z1 + 0.2 z2`: growth rate 0.1, a period-1 limit cycle that
    /// entrains the Lorenz block at moderate coupling.
    Literal,
    /// `6 (z1 + 0.2 z2)`: the chaotic Rössler band.
    #[default]
    Standard,
}

/// Right-hand side with the `z2` equation read literally as `6 z1 + 0.2 z2`.
pub fn rossler_lorenz_rhs(z: &SystemState, coupling: f64) -> SystemState {
    rossler_lorenz_rhs_with(z, coupling, RosslerForm::Literal)
}

pub fn rossler_lorenz_rhs_with(z: &SystemState, coupling: f64, form: RosslerForm) -> SystemState {
    let dz2 = match form {
        RosslerForm::Literal => 6.0 * z[0] + 0.2 * z[1],
        RosslerForm::Standard => 6.0 * (z[0] + 0.2 * z[1]),
    };
    [
        -6.0 * (z[1] + z[2]),
        dz2,
        6.0 * (0.2 + z[2] * (z[0] - 5.7)),
        10.0 * (z[4] - z[3]),
        28.0 * z[3] - z[4] - z[3] * z[5] + coupling * z[1] * z[1],
        z[3] * z[4] - 8.0 * z[5] / 3.0,
    ]
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize, F>(f: F, z: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], h: f64, b: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| a[i] + h * b[i]) };
    let k1 = f(z);
    let k2 = f(&axpy(z, 0.5 * dt, &k1));
    let k3 = f(&axpy(z, 0.5 * dt, &k2));
    let k4 = f(&axpy(z, dt, &k3));
    std::array::from_fn(|i| z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Fixed(SystemState),
    /// Drawn from the seed: Rössler block in `[-1,1]^2 x [0,0.5]`, Lorenz
    /// block in `[-10,10]^2 x [10,30]`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub coupling: f64,
    pub dt_integrate: f64,
    pub dt_sample: f64,
    pub n_samples: usize,
    pub transient_time: f64,
    pub initial_state: InitialState,
    pub seed: u64,
    pub rossler_form: RosslerForm,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            coupling: 1.0,
            dt_integrate: 0.001,
            dt_sample: 0.05,
            n_samples: 10_000,
            transient_time: 50.0,
            initial_state: InitialState::Random,
            seed: 0,
            rossler_form: RosslerForm::default(),
        }
    }
}

impl SimulationConfig {
    /// Integration steps per retained sample.
    pub fn stride(&self) -> Result<usize> {
        let ratio = self.dt_sample / self.dt_integrate;
        let stride = ratio.round();
        if !(stride >= 1.0 && (ratio - stride).abs() <= 1e-9 * ratio) {
            return Err(Error::InvalidParameter(format!(
                "dt_sample / dt_integrate must be a positive integer, got {ratio}"
            )));
        }
        Ok(stride as usize)
    }

    fn validate(&self) -> Result<()> {
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be >= 0, got {}",
                self.coupling
            )));
        }
        if !(self.dt_integrate > 0.0 && self.dt_sample > 0.0) {
            return Err(Error::InvalidParameter("time steps must be positive".into()));
        }
        if !(self.transient_time >= 0.0) {
            return Err(Error::InvalidParameter("transient time must be >= 0".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter("n_samples must be >= 2".into()));
        }
        self.stride().map(|_| ())
    }

    pub fn initial(&self) -> SystemState {
        match self.initial_state {
            InitialState::Fixed(z) => z,
            InitialState::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..0.5),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(10.0..30.0),
                ]
            }
        }
    }
}

/// Six sampled coordinates of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub components: Vec<TimeSeries>,
}

impl Trajectory {
    pub const NAMES: [&'static str; 6] = ["z1", "z2", "z3", "z4", "z5", "z6"];

    /// Coordinate `z_i`, 1-based.
    pub fn z(&self, i: usize) -> &TimeSeries {
        &self.components[i - 1]
    }

    pub fn dt(&self) -> f64 {
        self.components[0].dt()
    }

    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn rk4_integrate(cfg: &SimulationConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let stride = cfg.stride()?;
    let h = cfg.dt_integrate;
    let transient_steps = (cfg.transient_time / h).round() as usize;
    let mut z = cfg.initial();
    let mut columns: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(cfg.n_samples));
    let rhs = |s: &SystemState| rossler_lorenz_rhs_with(s, cfg.coupling, cfg.rossler_form);
    let total = transient_steps + (cfg.n_samples - 1) * stride;
    for step in 0..=total {
        if step >= transient_steps && (step - transient_steps).is_multiple_of(stride) {
            for (col, v) in columns.iter_mut().zip(z) {
                col.push(v);
            }
        }
        if step == total {
            break;
        }
        z = rk4_step(rhs, &z, h);
        if z.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
            return Err(Error::Divergence { step: step + 1 });
        }
    }
    let components = columns
        .into_iter()
        .map(|c| TimeSeries::new(c, cfg.dt_sample))
        .collect::<Result<_>>()?;
    Ok(Trajectory { components })
}

/// Power of the fluctuating part of a signal (its population variance).
pub fn signal_power(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Add white Gaussian noise at the given signal-to-noise ratio. An infinite
/// SNR returns the input unchanged.
pub fn corrupt_additive_noise(series: &TimeSeries, snr_db: f64, seed: u64) -> Result<TimeSeries> {
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("SNR is NaN".into()));
    }
    let power = signal_power(series.values());
    if power <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    if snr_db == f64::INFINITY {
        return Ok(series.clone());
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = series.values().iter().map(|v| v + noise.sample(&mut rng)).collect();
    TimeSeries::new(values, series.dt())
}

/// Add `A sin(2πt / period)` with `A^2 / 2` set `relative_power_db` decibels
/// relative to the signal power. Time is `i * dt`. Negative infinity adds
/// nothing.
pub fn corrupt_sine(series: &TimeSeries, relative_power_db: f64, period: f64) -> Result<TimeSeries> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "period must be positive, got {period}"
        )));
    }
    if relative_power_db.is_nan() || relative_power_db == f64::INFINITY {
        return Err(Error::InvalidParameter(format!(
            "invalid sine power {relative_power_db} dB"
        )));
    }
    let power = signal_power(series.values());
    if power <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let amplitude = sine_amplitude(power, relative_power_db);
    let dt = series.dt();
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v + amplitude * (std::f64::consts::TAU * i as f64 * dt / period).sin())
        .collect();
    TimeSeries::new(values, dt)
}

pub fn sine_amplitude(signal_power: f64, relative_power_db: f64) -> f64 {
    (2.0 * signal_power * 10f64.powf(relative_power_db / 10.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_at_ones() {
        let d = rossler_lorenz_rhs(&[1.0; 6], 1.0);
        let expect = [-12.0, 6.2, -27.0, 0.0, 27.0, -5.0 / 3.0];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn rhs_at_origin() {
        for c in [0.0, 1.0, 3.0] {
            let d = rossler_lorenz_rhs(&[0.0; 6], c);
            assert!((d[2] - 1.2).abs() < 1e-15);
            assert!(d.iter().enumerate().all(|(i, v)| i == 2 || *v == 0.0));
        }
    }

    #[test]
    fn uncoupled_lorenz_ignores_rossler_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let mut z: SystemState = std::array::from_fn(|_| rng.random_range(-20.0..20.0));
            let a = rossler_lorenz_rhs(&z, 0.0);
            z[0] = rng.random_range(-20.0..20.0);
            z[1] = rng.random_range(-20.0..20.0);
            z[2] = rng.random_range(-20.0..20.0);
            let b = rossler_lorenz_rhs(&z, 0.0);
            assert_eq!(a[3..], b[3..]);
        }
    }

    #[test]
    fn rk4_exponential_step() {
        let z = rk4_step(|z: &[f64; 1]| [z[0]], &[1.0], 0.1);
        // 1 + h + h^2/2 + h^3/6 + h^4/24
        assert!((z[0] - 1.105_170_833_333_333_3).abs() < 1e-15);
    }

    #[test]
    fn rk4_error_order() {
        let err = |h: f64| (rk4_step(|z: &[f64; 1]| [z[0]], &[1.0], h)[0] - h.exp()).abs();
        let ratio = err(0.1) / err(0.05);
        assert!((28.0..=36.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn rossler_block_is_unaffected_by_lorenz_initial_state() {
        let base = SimulationConfig {
            coupling: 0.0,
            n_samples: 500,
            transient_time: 1.0,
            initial_state: InitialState::Fixed([0.5, -0.3, 0.1, 1.0, 2.0, 20.0]),
            ..Default::default()
        };
        let other = SimulationConfig {
            initial_state: InitialState::Fixed([0.5, -0.3, 0.1, -7.0, 3.0, 15.0]),
            ..base.clone()
        };
        let a = rk4_integrate(&base).unwrap();
        let b = rk4_integrate(&other).unwrap();
        for i in 1..=3 {
            assert_eq!(a.z(i).values(), b.z(i).values());
        }
        assert_ne!(a.z(4).values(), b.z(4).values());
    }

    #[test]
    fn sampling_stride_and_length() {
        let cfg = SimulationConfig {
            n_samples: 20,
            transient_time: 0.0,
            initial_state: InitialState::Fixed([0.1; 6]),
            ..Default::default()
        };
        let t = rk4_integrate(&cfg).unwrap();
        assert_eq!(t.len(), 20);
        assert_eq!(t.dt(), 0.05);
        assert_eq!(t.z(1).values()[0], 0.1);
        let bad = SimulationConfig {
            dt_sample: 0.0015,
            ..cfg
        };
        assert!(matches!(rk4_integrate(&bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn divergence_is_detected() {
        let cfg = SimulationConfig {
            dt_integrate: 0.05,
            dt_sample: 0.05,
            n_samples: 1000,
            transient_time: 0.0,
            initial_state: InitialState::Fixed([1e5; 6]),
            ..Default::default()
        };
        assert!(matches!(rk4_integrate(&cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn noise_sentinels_and_determinism() {
        let s = TimeSeries::new((0..100).map(|i| (i as f64).sin()).collect(), 0.1).unwrap();
        assert_eq!(corrupt_additive_noise(&s, f64::INFINITY, 3).unwrap(), s);
        assert_eq!(
            corrupt_additive_noise(&s, 10.0, 3).unwrap(),
            corrupt_additive_noise(&s, 10.0, 3).unwrap()
        );
        assert_ne!(
            corrupt_additive_noise(&s, 10.0, 3).unwrap(),
            corrupt_additive_noise(&s, 10.0, 4).unwrap()
        );
        let zero = TimeSeries::new(vec![0.0; 10], 0.1).unwrap();
        assert!(matches!(
            corrupt_additive_noise(&zero, 10.0, 1),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn zero_db_noise_matches_signal_power() {
        let s = TimeSeries::new((0..100_000).map(|i| (i as f64 * 0.01).sin()).collect(), 0.01).unwrap();
        let noisy = corrupt_additive_noise(&s, 0.0, 11).unwrap();
        let noise: Vec<f64> = noisy.values().iter().zip(s.values()).map(|(a, b)| a - b).collect();
        let ratio = signal_power(&noise) / signal_power(s.values());
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn sine_corruption() {
        let s = TimeSeries::new(vec![1.0, -1.0, 1.0, -1.0], 0.5).unwrap();
        assert_eq!(corrupt_sine(&s, f64::NEG_INFINITY, 6.0).unwrap(), s);
        assert!((sine_amplitude(1.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        let zero = TimeSeries::new(vec![0.0; 4], 0.5).unwrap();
        assert!(matches!(corrupt_sine(&zero, 0.0, 6.0), Err(Error::ZeroVariance)));
        let out = corrupt_sine(&s, 0.0, std::f64::consts::TAU).unwrap();
        assert!((out.values()[1] - (-1.0 + 2f64.sqrt() * 0.5f64.sin())).abs() < 1e-15);
    }
}
