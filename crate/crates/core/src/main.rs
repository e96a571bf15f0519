//! Command-line front end.
//!
//! Configuration precedence, lowest to highest: built-in defaults, the JSON
//! document given with `--config` (field names follow `SweepSpec`), then
//! command-line flags.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tsci::baselines::granger::granger_f_test;
use tsci::baselines::ksg::mi_pushforward_score;
use tsci::ccm::{ccm_convergence, CcmConfig, CcmParams};
use tsci::harness::io::{read_csv, trajectory_series, write_csv_to};
use tsci::harness::sweep::{rows_to_csv, rows_to_json, run_sweep, DataSource, SweepKind, SweepMethod, SweepSpec};
use tsci::systems::{rk4_integrate, RosslerForm};
use tsci::tsci::{prepare_pair, pushforward, score_pair, select_params, CrossMapMethod};
use tsci::{Error, Result, TimeSeries};

#[derive(Parser, Debug)]
#[command(
    name = "tsci",
    version,
    about = "Causal direction from tangent-space and cross-map analyses"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Trajectory CSV with a leading `time` column.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Methods, comma separated.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,
    /// Coupling strength of simulated data.
    #[arg(long, global = true)]
    coupling: Option<f64>,
    /// Number of retained samples of simulated data.
    #[arg(long, global = true)]
    n_samples: Option<usize>,
    /// Read of the Rössler `z2` equation for simulated data.
    #[arg(long, global = true, value_enum)]
    rossler_form: Option<FormArg>,
    /// Column of the putative cause.
    #[arg(long, global = true)]
    x: Option<String>,
    /// Column of the putative effect.
    #[arg(long, global = true)]
    y: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    TsciKnn,
    TsciModel,
    Ccm,
    Granger,
    Mi,
}

impl From<MethodArg> for SweepMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::TsciKnn => SweepMethod::TsciKnn,
            MethodArg::TsciModel => SweepMethod::TsciModel,
            MethodArg::Ccm => SweepMethod::Ccm,
            MethodArg::Granger => SweepMethod::Granger,
            MethodArg::Mi => SweepMethod::Mi,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FormArg {
    Literal,
    Standard,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
enum KindArg {
    Coupling,
    LibraryLength,
    Snr,
    SinePower,
    EmbedDim,
}

impl From<KindArg> for SweepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Coupling => SweepKind::Coupling,
            KindArg::LibraryLength => SweepKind::LibraryLength,
            KindArg::Snr => SweepKind::Snr,
            KindArg::SinePower => SweepKind::SinePower,
            KindArg::EmbedDim => SweepKind::EmbedDim,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the coupled Rössler-Lorenz system and write its trajectory.
    Simulate,
    /// Report the selected lag and dimension of every input column.
    EmbedParams,
    /// Tangent space causal inference in both directions.
    Tsci,
    /// Cross-map skill in both directions, optionally over library lengths.
    Ccm {
        /// Library lengths, comma separated; half of the rows when absent.
        #[arg(long, value_delimiter = ',')]
        library: Vec<usize>,
    },
    /// Granger F-test p-values in both directions.
    Granger {
        #[arg(long)]
        max_lag: Option<usize>,
    },
    /// KSG mutual information between tangent vectors and their pushforward.
    Mi {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run a full parameter sweep.
    Sweep {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Grid values, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Vec<f64>,
    },
}

fn load_spec(common: &Common) -> Result<SweepSpec> {
    let mut spec = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))?
        }
        None => SweepSpec::default(),
    };
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(trials) = common.trials {
        spec.trials = trials;
    }
    if !common.method.is_empty() {
        spec.methods = common.method.iter().map(|&m| m.into()).collect();
    }
    if let Some(c) = common.coupling {
        spec.system.coupling = c;
    }
    if let Some(form) = common.rossler_form {
        spec.system.rossler_form = match form {
            FormArg::Literal => RosslerForm::Literal,
            FormArg::Standard => RosslerForm::Standard,
        };
    }
    if let Some(n) = common.n_samples {
        spec.system.n_samples = n;
    }
    if let Some(path) = &common.input {
        let (x, y) = match &spec.data {
            DataSource::Csv { x, y, .. } => (x.clone(), y.clone()),
            DataSource::Simulate { .. } => (String::new(), String::new()),
        };
        spec.data = DataSource::Csv {
            path: path.clone(),
            x,
            y,
        };
    }
    if let DataSource::Csv { x, y, .. } = &mut spec.data {
        if let Some(name) = &common.x {
            *x = name.clone();
        }
        if let Some(name) = &common.y {
            *y = name.clone();
        }
    }
    Ok(spec)
}

/// The analysed pair: simulated with the configured seed, or read from a CSV
/// (first two data columns unless named).
fn load_pair(spec: &SweepSpec) -> Result<(TimeSeries, TimeSeries)> {
    match &spec.data {
        DataSource::Simulate {
            x_component,
            y_component,
        } => {
            if !(1..=6).contains(x_component) || !(1..=6).contains(y_component) {
                return Err(Error::InvalidParameter("observed components must be in 1..=6".into()));
            }
            let mut sim = spec.system.clone();
            sim.seed = spec.seed;
            let traj = rk4_integrate(&sim)?;
            Ok((traj.z(*x_component).clone(), traj.z(*y_component).clone()))
        }
        DataSource::Csv { path, x, y } => {
            let series = read_csv(path)?;
            let pick = |name: &str, fallback: usize| {
                if name.is_empty() {
                    series
                        .get(fallback)
                        .map(|s| s.series.clone())
                        .ok_or_else(|| Error::Parse(format!("{} needs at least two data columns", path.display())))
                } else {
                    series
                        .iter()
                        .find(|s| s.name == name)
                        .map(|s| s.series.clone())
                        .ok_or_else(|| Error::Parse(format!("column {name:?} not found in {}", path.display())))
                }
            };
            Ok((pick(x, 0)?, pick(y, 1)?))
        }
    }
}

#[derive(Debug, Serialize)]
struct EmbedRow {
    name: String,
    lag: usize,
    dim: usize,
    lag_capped: bool,
    dim_saturated: bool,
}

#[derive(Debug, Serialize)]
struct PairRow {
    method: &'static str,
    direction: &'static str,
    value: f64,
}

#[derive(Debug, Serialize)]
struct CcmRow {
    library_length: usize,
    direction: String,
    median: f64,
    p5: f64,
    p95: f64,
    trials: usize,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => Ok(serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(e).context(path.display().to_string())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn simulate(spec: &SweepSpec, format: Format) -> Result<String> {
    let mut sim = spec.system.clone();
    sim.seed = spec.seed;
    let traj = rk4_integrate(&sim)?;
    let series = trajectory_series(&traj);
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv_to(&mut buf, &series)?;
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
        Format::Json => {
            let mut columns = serde_json::Map::new();
            let time: Vec<f64> = (0..traj.len()).map(|i| i as f64 * traj.dt()).collect();
            columns.insert("time".into(), time.into());
            for s in &series {
                columns.insert(s.name.clone(), s.series.values().to_vec().into());
            }
            Ok(serde_json::to_string_pretty(&columns).expect("columns serialize") + "\n")
        }
    }
}

fn embed_params(spec: &SweepSpec, input: Option<&Path>, format: Format) -> Result<String> {
    let named: Vec<(String, TimeSeries)> = match input {
        Some(path) => read_csv(path)?.into_iter().map(|s| (s.name, s.series)).collect(),
        None => {
            let (x, y) = load_pair(spec)?;
            vec![("x".into(), x), ("y".into(), y)]
        }
    };
    let rows = named
        .iter()
        .map(|(name, series)| {
            let sel = select_params(series, None, None, &spec.pipeline).map_err(|e| e.context(name.clone()))?;
            Ok(EmbedRow {
                name: name.clone(),
                lag: sel.params.lag,
                dim: sel.params.dim,
                lag_capped: sel.lag_capped,
                dim_saturated: sel.dim_saturated,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    render(&rows, format)
}

/// TSCI variants named with `--method`, else the configured cross map.
fn tsci_pair(spec: &SweepSpec, requested: &[MethodArg], format: Format) -> Result<String> {
    let (x, y) = load_pair(spec)?;
    let pair = prepare_pair(&x, &y, &spec.pipeline)?;
    let mut methods: Vec<SweepMethod> = requested
        .iter()
        .map(|&m| SweepMethod::from(m))
        .filter(|m| matches!(m, SweepMethod::TsciKnn | SweepMethod::TsciModel))
        .collect();
    if !requested.is_empty() && methods.is_empty() {
        return Err(Error::InvalidParameter(
            "tsci accepts --method tsci_knn or tsci_model".into(),
        ));
    }
    if methods.is_empty() {
        methods.push(match spec.pipeline.method {
            CrossMapMethod::Knn => SweepMethod::TsciKnn,
            CrossMapMethod::KernelRidge => SweepMethod::TsciModel,
        });
    }
    let mut rows = Vec::new();
    for method in methods {
        let mut cfg = spec.pipeline.clone();
        cfg.method = if method == SweepMethod::TsciKnn {
            CrossMapMethod::Knn
        } else {
            CrossMapMethod::KernelRidge
        };
        let (xy, yx) = score_pair(&pair, &cfg)?;
        rows.push(PairRow {
            method: method.name(),
            direction: "X->Y",
            value: xy.r,
        });
        rows.push(PairRow {
            method: method.name(),
            direction: "Y->X",
            value: yx.r,
        });
    }
    render(&rows, format)
}

fn ccm_pair(spec: &SweepSpec, library: &[usize], format: Format) -> Result<String> {
    let (x, y) = load_pair(spec)?;
    let px = select_params(&x, spec.pipeline.lag_x, spec.pipeline.dim_x, &spec.pipeline)?;
    let py = select_params(&y, spec.pipeline.lag_y, spec.pipeline.dim_y, &spec.pipeline)?;
    let params = CcmParams {
        x: px.params,
        y: py.params,
        theiler_window: spec.pipeline.theiler_window,
    };
    let library_lengths = if library.is_empty() {
        let rows = x.len() - px.params.base_offset().max(py.params.base_offset());
        vec![spec.ccm_library.unwrap_or(rows / 2).min(rows)]
    } else {
        library.to_vec()
    };
    let cfg = CcmConfig {
        library_lengths,
        trials: spec.trials,
        seed: spec.seed,
    };
    let rows: Vec<CcmRow> = ccm_convergence(&x, &y, &params, &cfg)?
        .into_iter()
        .map(|r| CcmRow {
            library_length: r.library_length,
            direction: r.direction,
            median: r.summary.median,
            p5: r.summary.p5,
            p95: r.summary.p95,
            trials: cfg.trials,
        })
        .collect();
    render(&rows, format)
}

fn granger_pair(spec: &SweepSpec, max_lag: Option<usize>, format: Format) -> Result<String> {
    let (x, y) = load_pair(spec)?;
    let n = spec.granger_samples.unwrap_or(x.len()).min(x.len());
    let r = granger_f_test(
        &x.slice(0, n)?,
        &y.slice(0, n)?,
        max_lag.unwrap_or(spec.granger_max_lag),
    )?;
    let rows = [
        PairRow {
            method: "granger",
            direction: "X->Y",
            value: r.p_xy,
        },
        PairRow {
            method: "granger",
            direction: "Y->X",
            value: r.p_yx,
        },
    ];
    render(&rows, format)
}

fn mi_pair(spec: &SweepSpec, k: Option<usize>, format: Format) -> Result<String> {
    let (x, y) = load_pair(spec)?;
    let pair = prepare_pair(&x, &y, &spec.pipeline)?;
    let mut cfg = spec.pipeline.clone();
    cfg.method = CrossMapMethod::Knn;
    let k = k.unwrap_or(spec.mi_k);
    let uh = pushforward(
        pair.x.view(),
        pair.y.view(),
        pair.v.view(),
        pair.params_y.params.lag,
        &cfg,
    )?;
    let vh = pushforward(
        pair.y.view(),
        pair.x.view(),
        pair.u.view(),
        pair.params_x.params.lag,
        &cfg,
    )?;
    let rows = [
        PairRow {
            method: "mi",
            direction: "X->Y",
            value: mi_pushforward_score(pair.u.view(), uh.view(), k)?,
        },
        PairRow {
            method: "mi",
            direction: "Y->X",
            value: mi_pushforward_score(pair.v.view(), vh.view(), k)?,
        },
    ];
    render(&rows, format)
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let mut spec = load_spec(common)?;
    let text = match cli.command {
        Command::Simulate => simulate(&spec, common.format)?,
        Command::EmbedParams => embed_params(&spec, common.input.as_deref(), common.format)?,
        Command::Tsci => tsci_pair(&spec, &common.method, common.format)?,
        Command::Ccm { library } => ccm_pair(&spec, &library, common.format)?,
        Command::Granger { max_lag } => granger_pair(&spec, max_lag, common.format)?,
        Command::Mi { k } => mi_pair(&spec, k, common.format)?,
        Command::Sweep { kind, grid } => {
            if let Some(kind) = kind {
                spec.kind = kind.into();
            }
            if !grid.is_empty() {
                spec.grid = grid;
            }
            let rows = run_sweep(&spec)?;
            match common.format {
                Format::Csv => rows_to_csv(&rows),
                Format::Json => rows_to_json(&rows),
            }
        }
    };
    emit(common.output.as_deref(), &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
