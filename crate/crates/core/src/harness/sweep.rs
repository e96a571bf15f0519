//! Parameter sweeps over the Rössler-Lorenz benchmark.
//!
//! Every `(grid value, trial)` pair is an independent job with its own seeds;
//! jobs run in parallel and are reduced in grid order, so the output depends
//! only on the [`SweepSpec`].
//!
//! Trajectory seeds come from `(seed, grid_index, trial)` for coupling sweeps
//! and from `(seed, trial)` otherwise, so sweeps that do not change the system
//! compare every grid value on the same trajectories. Corruption noise and
//! library placement always use `(seed, grid_index, trial, stream)`.

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::granger::granger_f_test;
use crate::baselines::ksg::mi_pushforward_score;
use crate::ccm::skill_on_embeddings;
use crate::derivatives::DerivativeMethod;
use crate::embedding::TimeSeries;
use crate::error::{Error, Result};
use crate::harness::aggregate::aggregate_trials;
use crate::harness::io::read_csv;
use crate::seeds::derive_seed;
use crate::systems::{corrupt_additive_noise, corrupt_sine, rk4_integrate, SimulationConfig};
use crate::tsci::{
    prepare_with_params, pushforward, score_direction, select_params, CrossMapMethod, PipelineConfig, PreparedPair,
    SelectedParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Coupling,
    LibraryLength,
    Snr,
    SinePower,
    EmbedDim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    TsciKnn,
    TsciModel,
    Ccm,
    Granger,
    Mi,
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::TsciKnn => "tsci_knn",
            SweepMethod::TsciModel => "tsci_model",
            SweepMethod::Ccm => "ccm",
            SweepMethod::Granger => "granger",
            SweepMethod::Mi => "mi",
        }
    }
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DIRECTIONS: [&str; 2] = ["X->Y", "Y->X"];

/// Where a job's `(x, y)` pair comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// Simulate the coupled system and observe `z_{x_component}`, `z_{y_component}`.
    Simulate { x_component: usize, y_component: usize },
    /// Load two named columns from a trajectory CSV.
    Csv { path: PathBuf, x: String, y: String },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Simulate {
            x_component: 2,
            y_component: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<SweepMethod>,
    pub seed: u64,
    pub data: DataSource,
    pub system: SimulationConfig,
    pub pipeline: PipelineConfig,
    /// Derivative estimate for the noise and sine sweeps.
    pub corrupted_derivative: DerivativeMethod,
    /// CCM library length outside library-length sweeps; `None` uses half of
    /// the embedded rows.
    pub ccm_library: Option<usize>,
    pub granger_max_lag: usize,
    /// Leading samples used by the Granger test; `None` uses all of them.
    pub granger_samples: Option<usize>,
    pub mi_k: usize,
    pub sine_period: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            kind: SweepKind::Coupling,
            grid: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            trials: 10,
            methods: vec![SweepMethod::TsciKnn, SweepMethod::Ccm],
            seed: 0,
            data: DataSource::default(),
            system: SimulationConfig::default(),
            pipeline: PipelineConfig::default(),
            corrupted_derivative: DerivativeMethod::SAVGOL_5_2,
            ccm_library: None,
            granger_max_lag: 5,
            granger_samples: None,
            mi_k: 4,
            sine_period: std::f64::consts::TAU,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        if self.grid.iter().any(|g| g.is_nan()) {
            return Err(Error::InvalidParameter("grid contains NaN".into()));
        }
        let integral = matches!(self.kind, SweepKind::LibraryLength | SweepKind::EmbedDim);
        if integral && self.grid.iter().any(|g| !(*g >= 1.0 && g.fract() == 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "{:?} grid values must be positive integers",
                self.kind
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub method: String,
    pub direction: String,
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
    pub trials: usize,
}

/// One method's value in one direction for one job.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialValue {
    pub grid_index: usize,
    pub trial: usize,
    pub method: SweepMethod,
    pub direction: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub values: Vec<TrialValue>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    Ok(run_sweep_detailed(spec)?.rows)
}

pub fn run_sweep_detailed(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..spec.trials).map(move |t| (g, t)))
        .collect();
    let results: Vec<Vec<TrialValue>> = jobs
        .par_iter()
        .map(|&(g, t)| run_job(spec, g, t))
        .collect::<Result<_>>()?;
    let values: Vec<TrialValue> = results.into_iter().flatten().collect();

    let mut rows = Vec::with_capacity(spec.grid.len() * spec.methods.len() * 2);
    for (g, &value) in spec.grid.iter().enumerate() {
        for &method in &spec.methods {
            for direction in DIRECTIONS {
                let trial_values: Vec<f64> = values
                    .iter()
                    .filter(|v| v.grid_index == g && v.method == method && v.direction == direction)
                    .map(|v| v.value)
                    .collect();
                let summary = aggregate_trials(&trial_values)?;
                rows.push(ResultRow {
                    sweep_value: value,
                    method: method.name().to_string(),
                    direction: direction.to_string(),
                    median: summary.median,
                    p5: summary.p5,
                    p95: summary.p95,
                    trials: trial_values.len(),
                });
            }
        }
    }
    Ok(SweepOutput { rows, values })
}

const STREAM_NOISE_X: u64 = 1;
const STREAM_NOISE_Y: u64 = 2;
const STREAM_LIBRARY: u64 = 3;
const STREAM_CCM: u64 = 4;

fn load_pair(spec: &SweepSpec, grid_index: usize, trial: usize) -> Result<(TimeSeries, TimeSeries)> {
    match &spec.data {
        DataSource::Simulate {
            x_component,
            y_component,
        } => {
            if !(1..=6).contains(x_component) || !(1..=6).contains(y_component) {
                return Err(Error::InvalidParameter("observed components must be in 1..=6".into()));
            }
            let mut sim = spec.system.clone();
            sim.seed = match spec.kind {
                SweepKind::Coupling => derive_seed(spec.seed, &[grid_index as u64, trial as u64]),
                _ => derive_seed(spec.seed, &[trial as u64]),
            };
            if spec.kind == SweepKind::Coupling {
                sim.coupling = spec.grid[grid_index];
            }
            let traj = rk4_integrate(&sim)?;
            Ok((traj.z(*x_component).clone(), traj.z(*y_component).clone()))
        }
        DataSource::Csv { path, x, y } => {
            let series = read_csv(path)?;
            let find = |name: &str| {
                series
                    .iter()
                    .find(|s| s.name == name)
                    .map(|s| s.series.clone())
                    .ok_or_else(|| Error::Parse(format!("column {name:?} not found in {}", path.display())))
            };
            Ok((find(x)?, find(y)?))
        }
    }
}

fn corrupt(
    spec: &SweepSpec,
    grid_index: usize,
    trial: usize,
    x: TimeSeries,
    y: TimeSeries,
) -> Result<(TimeSeries, TimeSeries)> {
    let level = spec.grid[grid_index];
    let seed = |stream| derive_seed(spec.seed, &[grid_index as u64, trial as u64, stream]);
    match spec.kind {
        SweepKind::Snr => Ok((
            corrupt_additive_noise(&x, level, seed(STREAM_NOISE_X))?,
            corrupt_additive_noise(&y, level, seed(STREAM_NOISE_Y))?,
        )),
        SweepKind::SinePower => Ok((
            corrupt_sine(&x, level, spec.sine_period)?,
            corrupt_sine(&y, level, spec.sine_period)?,
        )),
        _ => Ok((x, y)),
    }
}

fn run_job(spec: &SweepSpec, grid_index: usize, trial: usize) -> Result<Vec<TrialValue>> {
    let ctx = |method: &str| format!("grid value {}, trial {trial}, {method}", spec.grid[grid_index]);
    let (x, y) = load_pair(spec, grid_index, trial).map_err(|e| e.context(ctx("data")))?;
    let (x, y) = corrupt(spec, grid_index, trial, x, y).map_err(|e| e.context(ctx("corruption")))?;

    let mut pipeline = spec.pipeline.clone();
    if matches!(spec.kind, SweepKind::Snr | SweepKind::SinePower) {
        pipeline.derivative = spec.corrupted_derivative;
    }

    let needs_embedding = spec.methods.iter().any(|m| *m != SweepMethod::Granger);
    // (pair scored for X->Y, pair scored for Y->X); identical except for embed_dim sweeps
    let pairs = if needs_embedding {
        Some(prepare_pairs(spec, grid_index, trial, &x, &y, &pipeline).map_err(|e| e.context(ctx("embedding")))?)
    } else {
        None
    };

    let mut out = Vec::new();
    for &method in &spec.methods {
        let values = method_values(spec, grid_index, trial, method, &x, &y, pairs.as_ref(), &pipeline)
            .map_err(|e| e.context(ctx(method.name())))?;
        for (direction, value) in DIRECTIONS.into_iter().zip(values) {
            out.push(TrialValue {
                grid_index,
                trial,
                method,
                direction,
                value,
            });
        }
    }
    Ok(out)
}

fn prepare_pairs(
    spec: &SweepSpec,
    grid_index: usize,
    trial: usize,
    x: &TimeSeries,
    y: &TimeSeries,
    pipeline: &PipelineConfig,
) -> Result<(PreparedPair, PreparedPair)> {
    let px = select_params(x, pipeline.lag_x, pipeline.dim_x, pipeline)?;
    let py = select_params(y, pipeline.lag_y, pipeline.dim_y, pipeline)?;
    let (forward, backward) = if spec.kind == SweepKind::EmbedDim {
        // the putative effect's dimension is swept: Q_y for X->Y, Q_x for Y->X
        let q = spec.grid[grid_index] as usize;
        let with_dim = |p: SelectedParams| SelectedParams {
            params: crate::embedding::EmbeddingParams { dim: q, ..p.params },
            dim_saturated: false,
            ..p
        };
        (
            prepare_with_params(x, y, px, with_dim(py), pipeline.derivative)?,
            prepare_with_params(x, y, with_dim(px), py, pipeline.derivative)?,
        )
    } else {
        let pair = prepare_with_params(x, y, px, py, pipeline.derivative)?;
        (pair.clone(), pair)
    };
    if spec.kind == SweepKind::LibraryLength {
        let len = spec.grid[grid_index] as usize;
        let rows = forward.rows();
        if len > rows {
            return Err(Error::LibraryTooLong {
                library: len,
                available: rows,
            });
        }
        let seed = derive_seed(spec.seed, &[grid_index as u64, trial as u64, STREAM_LIBRARY]);
        let start = (seed % (rows - len + 1) as u64) as usize;
        return Ok((forward.window(start, len), backward.window(start, len)));
    }
    Ok((forward, backward))
}

#[allow(clippy::too_many_arguments)]
fn method_values(
    spec: &SweepSpec,
    grid_index: usize,
    trial: usize,
    method: SweepMethod,
    x: &TimeSeries,
    y: &TimeSeries,
    pairs: Option<&(PreparedPair, PreparedPair)>,
    pipeline: &PipelineConfig,
) -> Result<[f64; 2]> {
    if method == SweepMethod::Granger {
        let n = spec.granger_samples.unwrap_or(x.len()).min(x.len());
        let r = granger_f_test(&x.slice(0, n)?, &y.slice(0, n)?, spec.granger_max_lag)?;
        return Ok([r.p_xy, r.p_yx]);
    }
    let (fwd, bwd) = pairs.expect("embedding prepared for non-Granger methods");
    match method {
        SweepMethod::TsciKnn | SweepMethod::TsciModel => {
            let cfg = PipelineConfig {
                method: if method == SweepMethod::TsciKnn {
                    CrossMapMethod::Knn
                } else {
                    CrossMapMethod::KernelRidge
                },
                ..pipeline.clone()
            };
            let xy = score_direction(
                fwd.x.view(),
                fwd.u.view(),
                fwd.y.view(),
                fwd.v.view(),
                fwd.params_y.params.lag,
                &cfg,
            )?;
            let yx = score_direction(
                bwd.y.view(),
                bwd.v.view(),
                bwd.x.view(),
                bwd.u.view(),
                bwd.params_x.params.lag,
                &cfg,
            )?;
            Ok([xy.r, yx.r])
        }
        SweepMethod::Ccm => {
            let seed = |d: u64| derive_seed(spec.seed, &[grid_index as u64, trial as u64, STREAM_CCM, d]);
            let library = |rows: usize| match spec.kind {
                SweepKind::LibraryLength => rows,
                _ => spec.ccm_library.unwrap_or(rows / 2).min(rows),
            };
            let theiler = |lag: usize| pipeline.theiler_window.unwrap_or(lag);
            let xy = skill_on_embeddings(
                fwd.x.view(),
                fwd.y.view(),
                theiler(fwd.params_y.params.lag),
                library(fwd.rows()),
                seed(0),
            )?;
            let yx = skill_on_embeddings(
                bwd.y.view(),
                bwd.x.view(),
                theiler(bwd.params_x.params.lag),
                library(bwd.rows()),
                seed(1),
            )?;
            Ok([xy, yx])
        }
        SweepMethod::Mi => {
            let cfg = PipelineConfig {
                method: CrossMapMethod::Knn,
                ..pipeline.clone()
            };
            let uh = pushforward(fwd.x.view(), fwd.y.view(), fwd.v.view(), fwd.params_y.params.lag, &cfg)?;
            let xy = mi_pushforward_score(fwd.u.view(), uh.view(), spec.mi_k)?;
            let vh = pushforward(bwd.y.view(), bwd.x.view(), bwd.u.view(), bwd.params_x.params.lag, &cfg)?;
            let yx = mi_pushforward_score(bwd.v.view(), vh.view(), spec.mi_k)?;
            Ok([xy, yx])
        }
        SweepMethod::Granger => unreachable!("handled above"),
    }
}

/// Result rows as CSV with columns
/// `sweep_value,method,direction,median,p5,p95,trials`.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("sweep_value,method,direction,median,p5,p95,trials\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.sweep_value, r.method, r.direction, r.median, r.p5, r.p95, r.trials
        ));
    }
    out
}

pub fn rows_to_json(rows: &[ResultRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"
}
