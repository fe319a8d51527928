//! `specinv`: command-line access to the eigensolver, the spectral
//! transforms, inversion and model fitting.
//!
//! Results go to stdout in full round-trip precision. Failures print one
//! line `error[<class>]: <message>` to stderr and exit with the class's code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use spectral_inversion::dataio::{self, DataSet, Format, PlotSource, BUILTIN_LABELS};
use spectral_inversion::{
    build_curve, energy_curve, estimate_critical_coupling, fit_coulomb_with, invert, k_function_from_shape,
    solve_state, Config, EigenProblem, Error, FitOptions, Shape, SolverOptions,
};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SPECINV_OUT";

#[derive(Parser, Debug)]
#[command(name = "specinv", version, about = "Geometric spectral inversion and shifted-Coulomb model fitting")]
struct Cli {
    /// TOML file overriding the built-in defaults; flags override it in turn.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound-state energy of -Δ/m + v f(r).
    Solve {
        #[arg(long)]
        potential: String,
        #[arg(long)]
        coupling: f64,
        #[arg(long)]
        mass: Option<f64>,
        /// Radial quantum number.
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        l: usize,
    },
    /// Ground-state energy curve (v, F) on a coupling grid.
    Curve {
        #[arg(long)]
        potential: String,
        /// `lo:hi:n`, or `lo:hi:n:log` for geometric spacing.
        #[arg(long)]
        couplings: String,
        #[arg(long)]
        mass: Option<f64>,
    },
    /// K-function (r, K) of a potential shape.
    Kfun {
        #[arg(long)]
        potential: String,
        #[arg(long)]
        radii: Option<String>,
        #[arg(long)]
        couplings: Option<String>,
        #[arg(long)]
        mass: Option<f64>,
    },
    /// Reconstruct a potential shape from binding-energy data.
    Invert {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Critical coupling; estimated from the data when absent.
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        mass: Option<f64>,
        /// Directory for the run files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the shifted-Coulomb model to binding-energy data.
    Fit {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        mass: Option<f64>,
        /// Polish the closed-form fit by Gauss-Newton.
        #[arg(long)]
        refine: bool,
    },
    /// List the embedded datasets.
    Datasets,
    /// Write plot series for a stored run or a model fit.
    EmitPlot {
        #[arg(long, conflicts_with = "fit")]
        run: Option<PathBuf>,
        /// Embedded dataset to fit and plot.
        #[arg(long)]
        fit: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Input {
    /// Embedded dataset label (S1, S2, P1, P2, V).
    #[arg(long)]
    dataset: Option<String>,
    /// `.csv` with a `v,E` header, or `.toml` record.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mass: Option<f64>,
    seed: Option<String>,
    iterations: Option<usize>,
    convergence_tol: Option<f64>,
    residual_tol: Option<f64>,
    extrapolation: Option<f64>,
    extension_cap: Option<f64>,
    lower_extension_cap: Option<f64>,
    radii: Option<String>,
    couplings: Option<String>,
    grid_points: Option<usize>,
    rel_tol: Option<f64>,
    out: Option<PathBuf>,
}

/// Error classes with their exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Io,
    Parameter,
    Unbound,
    Numerical,
    Inversion,
}

impl ErrorClass {
    pub fn code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Io => 4,
            ErrorClass::Parameter => 5,
            ErrorClass::Unbound => 6,
            ErrorClass::Numerical => 7,
            ErrorClass::Inversion => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Usage => "usage",
            ErrorClass::Data => "data",
            ErrorClass::Io => "io",
            ErrorClass::Parameter => "parameter",
            ErrorClass::Unbound => "unbound",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Inversion => "inversion",
        }
    }
}

#[derive(Debug)]
struct Failure {
    class: ErrorClass,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Usage, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let class = match &e {
            Error::Parse(_) | Error::UnknownDataset(_) | Error::NonMonotoneAbscissae | Error::TooFewPoints { .. } => {
                ErrorClass::Data
            }
            Error::Io(_) => ErrorClass::Io,
            Error::NonPositiveRadius(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::EmptyDomain(_) => {
                ErrorClass::Parameter
            }
            Error::NoBoundState { .. } | Error::StateNotBound { .. } | Error::HulthenNotBound { .. } => {
                ErrorClass::Unbound
            }
            Error::NonConvergence(_) | Error::NotConcave | Error::NoRoot(_) => ErrorClass::Numerical,
            Error::Inversion(_) => ErrorClass::Inversion,
        };
        Self { class, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { class: ErrorClass::Io, message: e.to_string() }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line `argv` (including the program name) and returns
/// the exit status.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let line: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            return report(stderr, Failure::usage(line.join(" ").trim_start_matches("error: ")));
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(f) => report(stderr, f),
    }
}

fn report(stderr: &mut dyn Write, f: Failure) -> i32 {
    let message = f.message.replace('\n', " ");
    let _ = writeln!(stderr, "error[{}]: {message}", f.class.name());
    f.class.code()
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        class: ErrorClass::Io,
        message: format!("{}: {e}", path.display()),
    })?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {}", path.display(), e.message())))
}

/// `lo:hi:n` (linear) or `lo:hi:n:log` (geometric).
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::usage(format!("grid '{spec}' is not lo:hi:n or lo:hi:n:log"));
    let parts: Vec<&str> = spec.split(':').collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3] == "log" => true,
        _ => return Err(bad()),
    };
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !(hi > lo) || (log && lo <= 0.0) {
        return Err(Failure::usage(format!("grid '{spec}' needs hi > lo, n >= 2 and lo > 0 for log spacing")));
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect())
}

fn parse_shape(spec: &str) -> Result<Shape, Failure> {
    Shape::parse_spec(spec).map_err(|e| Failure::usage(e.to_string()))
}

fn solver_options(cfg: &FileConfig) -> SolverOptions<f64> {
    let mut opts = SolverOptions::default();
    if let Some(n) = cfg.grid_points {
        opts.grid_points = n;
    }
    if let Some(t) = cfg.rel_tol {
        opts.rel_tol = t;
    }
    opts
}

fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::usage(format!("--{name} must be positive, got {x}")))
    }
}

fn read_input(input: &Input) -> Result<DataSet, Failure> {
    match (&input.dataset, &input.data) {
        (Some(label), _) => Ok(dataio::builtin(label)?),
        (None, Some(path)) => Ok(dataio::load(path, Format::from_path(path))?),
        (None, None) => Err(Failure::usage("one of --dataset or --data is required")),
    }
}

fn out_dir(flag: Option<PathBuf>, cfg: &FileConfig) -> Option<PathBuf> {
    flag.or_else(|| cfg.out.clone()).or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
}

#[derive(Serialize)]
struct InvertSummary {
    dataset: String,
    v0: f64,
    seed: String,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    residual_history: Vec<f64>,
    changes: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abort_reason: Option<String>,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

#[derive(Serialize)]
struct DatasetEntry {
    label: String,
    points: usize,
    v_min: f64,
    v_max: f64,
    metadata: dataio::Metadata,
}

#[derive(Serialize)]
struct DatasetList {
    dataset: Vec<DatasetEntry>,
}

fn to_toml<T: Serialize>(value: &T) -> Result<String, Failure> {
    toml::to_string(value).map_err(|e| Failure { class: ErrorClass::Io, message: e.to_string() })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Outcome {
    let cfg = load_config(cli.config.as_deref())?;
    let opts = solver_options(&cfg);
    match cli.command {
        Command::Solve { potential, coupling, mass, n, l } => {
            let shape = parse_shape(&potential)?;
            let mass = positive("mass", mass.or(cfg.mass).unwrap_or(1.0))?;
            let coupling = positive("coupling", coupling)?;
            let r = solve_state(&EigenProblem::new(&shape, coupling).with_mass(mass).with_state(n, l), &opts)?;
            writeln!(out, "{}", r.energy)?;
        }
        Command::Curve { potential, couplings, mass } => {
            let shape = parse_shape(&potential)?;
            let grid = parse_grid(&couplings)?;
            let mass = positive("mass", mass.or(cfg.mass).unwrap_or(1.0))?;
            let curve = energy_curve(&shape, &grid, mass, &opts)?;
            write!(out, "{}", curve.to_text())?;
        }
        Command::Kfun { potential, radii, couplings, mass } => {
            let shape = parse_shape(&potential)?;
            let radii = parse_grid(radii.as_deref().or(cfg.radii.as_deref()).unwrap_or("0.5:5:10:log"))?;
            let couplings = parse_grid(couplings.as_deref().or(cfg.couplings.as_deref()).unwrap_or("0.05:100:80:log"))?;
            let mass = positive("mass", mass.or(cfg.mass).unwrap_or(1.0))?;
            let k = k_function_from_shape(&shape, mass, &radii, &couplings, &opts)?;
            write!(out, "{}", k.to_text(&potential))?;
        }
        Command::Invert { input, seed, iterations, v0, mass, out: dir } => {
            let seed = seed.or(cfg.seed.clone()).map(|s| parse_shape(&s)).transpose()?;
            let data = read_input(&input)?;
            let mut config = Config { seed, solver: opts, ..Default::default() };
            config.mass = positive("mass", mass.or(cfg.mass).unwrap_or(data.metadata.mass))?;
            if let Some(n) = iterations.or(cfg.iterations) {
                config.max_iterations = n;
            }
            config.convergence_tol = cfg.convergence_tol.unwrap_or(config.convergence_tol);
            config.residual_tol = cfg.residual_tol.unwrap_or(config.residual_tol);
            config.extrapolation = cfg.extrapolation.unwrap_or(config.extrapolation);
            config.extension_cap = cfg.extension_cap.unwrap_or(config.extension_cap);
            config.lower_extension_cap = cfg.lower_extension_cap.unwrap_or(config.lower_extension_cap);
            if let Some(r) = &cfg.radii {
                config.r_grid = Some(parse_grid(r)?);
            }
            let dir = out_dir(dir, &cfg);

            let v0 = match v0 {
                Some(v) => v,
                None => estimate_critical_coupling(data.points())?,
            };
            config.v0 = Some(v0);
            let curve = build_curve(data.points(), Some(v0))?;
            let run = invert(&curve, &config)?;
            if let Some(dir) = &dir {
                dataio::save_run(dir, &run, &data, &config)?;
            }
            let summary = InvertSummary {
                dataset: data.label.clone(),
                v0,
                seed: run.iterates[0].to_string(),
                iterations: run.iterates.len() - 1,
                converged: run.converged,
                final_residual: run.final_residual().unwrap_or(f64::NAN),
                residual_history: run.residual_history.clone(),
                changes: run.changes.clone(),
                abort_reason: run.abort_reason.clone(),
                warnings: run.warnings.clone(),
                out: dir.map(|d| d.display().to_string()),
            };
            write!(out, "{}", to_toml(&summary)?)?;
        }
        Command::Fit { input, mass, refine } => {
            let data = read_input(&input)?;
            let mass = positive("mass", mass.or(cfg.mass).unwrap_or(data.metadata.mass))?;
            let report = fit_coulomb_with(data.points(), mass, &FitOptions { refine, ..Default::default() })?;
            writeln!(out, "dataset = \"{}\"", data.label)?;
            write!(out, "{report}")?;
        }
        Command::Datasets => {
            let mut list = DatasetList { dataset: Vec::new() };
            for label in BUILTIN_LABELS {
                let d = dataio::builtin(label)?;
                let p = d.points();
                list.dataset.push(DatasetEntry {
                    label: d.label.clone(),
                    points: p.len(),
                    v_min: p[0].0,
                    v_max: p[p.len() - 1].0,
                    metadata: d.metadata.clone(),
                });
            }
            write!(out, "{}", to_toml(&list)?)?;
        }
        Command::EmitPlot { run, fit, out: dir } => {
            let dir = out_dir(dir, &cfg).ok_or_else(|| Failure::usage(format!("--out is required unless {OUT_ENV} is set")))?;
            let written = match (run, fit) {
                (Some(run_dir), _) => {
                    let stored = dataio::load_run(&run_dir)?;
                    dataio::emit_plot_data(PlotSource::Run(&stored), &dir)?
                }
                (None, Some(label)) => {
                    let data = dataio::builtin(&label)?;
                    let report = fit_coulomb_with(data.points(), cfg.mass.unwrap_or(data.metadata.mass), &FitOptions::default())?;
                    dataio::emit_plot_data(PlotSource::Fit { report: &report, data: &data }, &dir)?
                }
                (None, None) => dataio::emit_plot_data(PlotSource::Empty, &dir)?,
            };
            for path in written {
                writeln!(out, "{}", path.display())?;
            }
        }
    }
    Ok(())
}
