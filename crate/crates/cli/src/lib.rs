//! Command-line driver: synthetic data, fitting, prediction and benchmarks.
//!
//! [`run`] takes the argument list (program name first) and returns the
//! process exit code; `main.rs` only forwards to it.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use rpls::admm::{self, RplsConfig, RplsOverrides};
use rpls::baselines::{self, FitOptions, MethodTag};
use rpls::datagen::{self, OutlierKind, OutlierSpec, SynthSpec};
use rpls::eval::{self, ExperimentData, ExperimentReport, MethodSettings, Split};
use rpls::io::{self, DatasetFile, SavedModel};
use rpls::projection::ProjectionRegressor;
use rpls::DenseMatrix;

/// Coverage of the emitted score ellipses.
pub const ELLIPSE_COVERAGE: f64 = 0.95;

#[derive(Parser, Debug)]
#[command(
    name = "rpls",
    version,
    about = "Robust partial least squares and baseline regressors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic predictors and responses, optionally with outliers
    Synth(SynthArgs),
    /// Fit one method and save the model as JSON
    Fit(FitArgs),
    /// Predict responses with a saved model
    Predict(PredictArgs),
    /// Compare methods on a train/test split
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Outliers {
    None,
    Sparse,
    #[value(alias = "low-tail")]
    Lowtail,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Predictor CSV (one row per sample)
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Response CSV (same row count as --x)
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Skip the first line of each CSV
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    /// Latent components
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Initial penalty for both constraints
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Do not mean-center before fitting
    #[arg(long)]
    pub no_center: bool,
    /// Do not scale RPLS columns to unit variance
    #[arg(long)]
    pub no_scale: bool,
    /// Scale predictors to unit variance in MLR, PCR and PLS
    #[arg(long)]
    pub scale_baselines: bool,
    /// JSON file with RPLS settings; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub p: usize,
    #[arg(long, default_value_t = 4)]
    pub r: usize,
    /// Latent dimension of the predictors
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub n_collinear: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 5)]
    pub predictors_per_response: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Outliers::None)]
    pub outliers: Outliers,
    #[command(flatten)]
    pub outlier_params: OutlierArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct OutlierArgs {
    /// Fraction of entries hit by sparse outliers
    #[arg(long, default_value_t = 0.02)]
    pub fraction: f64,
    /// Sparse outlier size in column standard deviations
    #[arg(long, default_value_t = 10.0)]
    pub magnitude: f64,
    /// Fraction of rows per response column hit by low-tail outliers
    #[arg(long, default_value_t = 0.10)]
    pub tail_fraction: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tail_multiplier: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// rpls, mlr, pcr, plsr or pls-proj
    #[arg(long, value_parser = parse_method, default_value = "rpls")]
    pub method: MethodTag,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model JSON written by `fit`
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Output CSV (defaults to <out-dir>/predictions.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Uses synthetic data from --seed when --x/--y are absent
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated methods (default: all)
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<MethodTag>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Training fraction
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outliers injected into the fitting data; scoring uses the clean data
    #[arg(long, value_enum, default_value_t = Outliers::None)]
    pub outliers: Outliers,
    #[command(flatten)]
    pub outlier_params: OutlierArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<MethodTag, String> {
    MethodTag::from_str(s).map_err(|e| e.to_string())
}

/// Parses `args`, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("rpls: error: {msg}");
            1
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Fit(a) => fit(&a),
        Command::Predict(a) => predict(&a),
        Command::Bench(a) => bench(&a),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn load(path: &Path, data: &DataArgs) -> Result<DenseMatrix> {
    let delimiter = u8::try_from(data.delimiter)
        .ok()
        .filter(u8::is_ascii)
        .with_context(|| {
            format!(
                "delimiter '{}' is not a single ASCII character",
                data.delimiter
            )
        })?;
    let file = DatasetFile::new(path)
        .with_header(data.header)
        .with_delimiter(delimiter);
    io::load_csv(&file).with_context(|| format!("reading {}", path.display()))
}

fn load_xy(data: &DataArgs) -> Result<(DenseMatrix, DenseMatrix)> {
    let (Some(xp), Some(yp)) = (&data.x, &data.y) else {
        bail!("both --x and --y are required");
    };
    let x = load(xp, data)?;
    let y = load(yp, data)?;
    if x.nrows() != y.nrows() {
        bail!("X has {} rows but Y has {}", x.nrows(), y.nrows());
    }
    Ok((x, y))
}

fn write(path: &Path, m: &DenseMatrix) -> Result<()> {
    io::write_csv(path, m, None).with_context(|| format!("writing {}", path.display()))
}

fn outlier_spec(kind: Outliers, params: &OutlierArgs, seed: u64) -> Option<OutlierSpec> {
    let kind = match kind {
        Outliers::None => return None,
        Outliers::Sparse => OutlierKind::SparseRandom,
        Outliers::Lowtail => OutlierKind::LowTail,
    };
    Some(OutlierSpec {
        kind,
        fraction: params.fraction,
        magnitude: params.magnitude,
        tail_fraction: params.tail_fraction,
        tail_multiplier: params.tail_multiplier,
        seed,
    })
}

/// Outliers use a stream separate from the data's.
fn outlier_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

impl SolverArgs {
    /// Config file settings overlaid with the flags.
    pub fn overrides(&self) -> Result<RplsOverrides> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<RplsOverrides>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => RplsOverrides::default(),
        };
        let flags = RplsOverrides {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            alpha1_0: self.alpha0,
            alpha2_0: self.alpha0,
            rho: self.rho,
            alpha_max: self.alpha_max,
            tol: self.tol,
            k: self.k,
            max_iter: self.max_iter,
            center: self.no_center.then_some(false),
            scale: self.no_scale.then_some(false),
        };
        Ok(file.merge(flags))
    }

    fn settings(&self, default_k: usize) -> Result<MethodSettings> {
        let rpls = self.overrides()?;
        Ok(MethodSettings {
            k: rpls.k.unwrap_or(default_k),
            baseline: FitOptions {
                scale: self.scale_baselines,
            },
            rpls,
        })
    }
}

/// Components used when neither a flag nor the config file sets `k`.
pub const DEFAULT_K: usize = 5;

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n: a.n,
        p: a.p,
        r: a.r,
        k_true: a.k,
        n_collinear: a.n_collinear,
        noise_sigma: a.noise,
        predictors_per_response: a.predictors_per_response,
        seed: a.seed,
    };
    let data = datagen::generate(&spec)?;
    ensure_dir(&a.out_dir)?;
    let dir = &a.out_dir;
    let (x, y) = match outlier_spec(a.outliers, &a.outlier_params, outlier_seed(a.seed)) {
        Some(os) => {
            let c = datagen::inject(&data.x, &data.y, &os)?;
            write(&dir.join("x_clean.csv"), &data.x)?;
            write(&dir.join("y_clean.csv"), &data.y)?;
            write(&dir.join("x_outliers.csv"), &mask_matrix(&c.x_mask))?;
            write(&dir.join("y_outliers.csv"), &mask_matrix(&c.y_mask))?;
            (c.x, c.y)
        }
        None => (data.x.clone(), data.y.clone()),
    };
    write(&dir.join("x.csv"), &x)?;
    write(&dir.join("y.csv"), &y)?;
    write(&dir.join("theta_true.csv"), &data.truth.theta_true)?;
    write(&dir.join("q_true.csv"), &data.truth.q_true)?;
    write(&dir.join("loadings_true.csv"), &data.truth.loadings)?;
    println!(
        "wrote {}x{} predictors and {}x{} responses to {}",
        x.nrows(),
        x.ncols(),
        y.nrows(),
        y.ncols(),
        dir.display()
    );
    Ok(())
}

fn mask_matrix(mask: &datagen::CorruptionMask) -> DenseMatrix {
    let (rows, cols) = mask.shape();
    DenseMatrix::from_fn(rows, cols, |i, j| if mask.get(i, j) { 1.0 } else { 0.0 })
}

/// Fits `method` on `(x, y)`; RPLS also returns its residual trace.
pub fn fit_method(
    method: MethodTag,
    x: &DenseMatrix,
    y: &DenseMatrix,
    settings: &MethodSettings,
) -> Result<SavedModel> {
    let k = settings.k;
    let opts = &settings.baseline;
    Ok(match method {
        MethodTag::Mlr => SavedModel::Linear(baselines::fit_mlr_with(x, y, opts)?),
        MethodTag::Pcr => SavedModel::Linear(baselines::fit_pcr_with(x, y, k, opts)?),
        MethodTag::Plsr => SavedModel::Linear(baselines::fit_pls_nipals_with(x, y, k, opts)?.1),
        MethodTag::PlsProj => {
            let (factors, _) = baselines::fit_pls_nipals_with(x, y, k, opts)?;
            SavedModel::Linear(ProjectionRegressor::from_pls(&factors)?.to_linear_model())
        }
        MethodTag::RplsProj => {
            let cfg: RplsConfig = settings.rpls.resolve(x, y, k);
            SavedModel::Rpls(admm::fit(x, y, &cfg)?)
        }
    })
}

fn fit(a: &FitArgs) -> Result<()> {
    let (x, y) = load_xy(&a.data)?;
    let settings = a.solver.settings(DEFAULT_K)?;
    let model = fit_method(a.method, &x, &y, &settings)?;
    ensure_dir(&a.out_dir)?;
    let model_path = a.out_dir.join("model.json");
    model
        .save(&model_path)
        .with_context(|| format!("writing {}", model_path.display()))?;
    match &model {
        SavedModel::Rpls(m) => {
            let trace = DenseMatrix::from_fn(m.residual_trace.len(), 4, |i, j| {
                let t = &m.residual_trace[i];
                [t.iter as f64, t.residual, t.alpha1, t.alpha2][j]
            });
            let header: Vec<String> = ["iter", "residual", "alpha1", "alpha2"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let trace_path = a.out_dir.join("trace.csv");
            io::write_csv(&trace_path, &trace, Some(&header))
                .with_context(|| format!("writing {}", trace_path.display()))?;
            println!(
                "RPLS_PROJ k={} converged={} iterations={} residual={}",
                m.state.q.ncols(),
                m.converged,
                m.iterations(),
                io::format_f64(m.final_residual())
            );
        }
        SavedModel::Linear(m) => {
            println!(
                "{} k={} rank_deficient={}",
                m.method, m.n_components, m.rank_deficient
            );
        }
    }
    info!("model written to {}", model_path.display());
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<()> {
    let model = SavedModel::load(&a.model)
        .with_context(|| format!("reading model {}", a.model.display()))?;
    let Some(xp) = &a.data.x else {
        bail!("--x is required");
    };
    let x = load(xp, &a.data)?;
    let y_hat = model.predict(&x)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => {
            ensure_dir(&a.out_dir)?;
            a.out_dir.join("predictions.csv")
        }
    };
    write(&out, &y_hat)?;
    println!(
        "wrote {}x{} predictions to {}",
        y_hat.nrows(),
        y_hat.ncols(),
        out.display()
    );
    Ok(())
}

/// Loads or synthesizes the data, injects outliers into the fitting copy
/// and runs every requested method.
pub fn run_bench(a: &BenchArgs) -> Result<ExperimentReport> {
    let (x, y, tag) = match (&a.data.x, &a.data.y) {
        (None, None) => {
            let spec = SynthSpec {
                seed: a.seed,
                ..SynthSpec::default()
            };
            let d = datagen::generate(&spec)?;
            (d.x, d.y, format!("synthetic(seed={})", a.seed))
        }
        _ => {
            let (x, y) = load_xy(&a.data)?;
            let tag = a
                .data
                .x
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default();
            (x, y, tag)
        }
    };
    let data = match outlier_spec(a.outliers, &a.outlier_params, outlier_seed(a.seed)) {
        Some(os) => {
            let c = datagen::inject(&x, &y, &os)?;
            ExperimentData::with_clean_reference(c.x, c.y, x, y)
        }
        None => ExperimentData::new(x, y),
    };
    let split = Split::shuffled(data.x_fit.nrows(), a.split, a.seed)?;
    let methods = if a.methods.is_empty() {
        MethodTag::ALL.to_vec()
    } else {
        a.methods.clone()
    };
    let settings = a.solver.settings(DEFAULT_K)?;
    Ok(eval::run_experiment(
        &data, &split, &methods, &settings, &tag,
    )?)
}

fn bench(a: &BenchArgs) -> Result<()> {
    let report = run_bench(a)?;
    ensure_dir(&a.out_dir)?;
    let dir = &a.out_dir;
    io::write_report_csv(dir.join("report.csv"), &report).context("writing report.csv")?;
    io::write_report_json(dir.join("report.json"), &report).context("writing report.json")?;
    write_scores(&dir.join("scores.csv"), &report)?;
    write_ellipses(&dir.join("ellipses.csv"), &report)?;
    for (method, outcome) in &report.results {
        match outcome {
            Ok(o) => {
                let conv = o
                    .converged
                    .map_or(String::new(), |c| format!(" converged={c}"));
                println!("{method} NMSE {}{conv}", io::format_f64(o.nmse));
            }
            Err(e) => println!("{method} failed: {e}"),
        }
    }
    Ok(())
}

/// `method,sample,score1,score2` for every method with a 2-D latent space.
fn write_scores(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["method", "sample", "score1", "score2"])?;
    for (method, outcome) in &report.results {
        let Some(scores) = outcome.as_ref().ok().and_then(|o| o.train_scores.as_ref()) else {
            continue;
        };
        for (i, row) in report.split.train().iter().enumerate() {
            w.write_record([
                method.as_str().to_string(),
                row.to_string(),
                io::format_f64(scores[(i, 0)]),
                io::format_f64(scores[(i, 1)]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_ellipses(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "method",
        "coverage",
        "center1",
        "center2",
        "semi_major",
        "semi_minor",
        "angle",
    ])?;
    for (method, outcome) in &report.results {
        let Some(scores) = outcome.as_ref().ok().and_then(|o| o.train_scores.as_ref()) else {
            continue;
        };
        let e = match eval::confidence_ellipse(scores, ELLIPSE_COVERAGE) {
            Ok(e) => e,
            Err(err) => {
                info!("{method}: no ellipse ({err})");
                continue;
            }
        };
        w.write_record([
            method.as_str().to_string(),
            io::format_f64(ELLIPSE_COVERAGE),
            io::format_f64(e.center[0]),
            io::format_f64(e.center[1]),
            io::format_f64(e.semi_axes[0]),
            io::format_f64(e.semi_axes[1]),
            io::format_f64(e.rotation_angle),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

/// Initializes logging from `RPLS_LOG` (`off`, `info`, `trace`, ...).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("RPLS_LOG", "off");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}
