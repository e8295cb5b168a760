//! Command-line front end.
//!
//! Every command validates its inputs, computes the full result in memory and
//! only then writes it, so a failing run leaves no partial output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bai::{bai_bound, clamped_params, default_params, BaiConfig};
use crate::error::Error;
use crate::inversion::{cdf_from_g, default_x_grid, kolmogorov, CdfTable, InversionConfig, SemicircleLaw};
use crate::measure::{normalize_family, Measure};
use crate::rates::{lyapunov4, rate_sweep};
use crate::subordination::{convolve_to_measure, diagnostics, solve, FreeSum, SolverConfig};
use crate::tolerances;
use crate::transform::HalfPlanePoint;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "freeclt", version, about = "Free additive convolution and free CLT rate tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the Cauchy transform of a free sum on a grid.
    Convolve {
        #[command(flatten)]
        measures: MeasureArgs,
        /// `re_min:re_max:count@im`, or a file of `re im` lines.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Kolmogorov distance of a free sum to the standard semicircle law.
    Kolmogorov {
        #[command(flatten)]
        measures: MeasureArgs,
        #[command(flatten)]
        inversion: InversionArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Distribution function of a free sum, by Stieltjes inversion.
    Cdf {
        #[command(flatten)]
        measures: MeasureArgs,
        #[command(flatten)]
        inversion: InversionArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Empirical Berry-Esseen rates over a list of n (bases cycle per component).
    RateSweep {
        #[command(flatten)]
        measures: MeasureArgs,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[command(flatten)]
        inversion: InversionArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Right-hand side of Bai's smoothing inequality for a normalized free sum.
    BaiBound {
        #[command(flatten)]
        measures: MeasureArgs,
        #[arg(long, default_value_t = 1.0)]
        c5: f64,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        /// Use this L4n instead of the value computed from the measures.
        #[arg(long)]
        l4n: Option<f64>,
        /// Fail instead of capping v when L4n is too large for the default schedule.
        #[arg(long)]
        strict_params: bool,
        #[arg(long, default_value_t = tolerances::DEFAULT_TRUNCATION)]
        truncation: f64,
        #[arg(long, default_value_t = tolerances::DEFAULT_QUAD_TOL)]
        quad_tol: f64,
        #[arg(long, default_value_t = tolerances::DEFAULT_X_GRID_DENSITY)]
        x_grid_density: usize,
        #[command(flatten)]
        inversion: InversionArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Functional-equation diagnostics of a normalized family on a grid.
    Diagnostics {
        #[command(flatten)]
        measures: MeasureArgs,
        /// `re_min:re_max:count@im`, or a file of `re im` lines.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Path to a JSON measure spec, or the spec inline:
    /// {"atoms": [[x, w], ...]} or {"preset": "bernoulli"|"semicircle", "variance": v}.
    #[arg(long = "measure")]
    pub specs: Vec<String>,
    /// Rescale the family to total variance 1 first.
    #[arg(long)]
    pub normalize: bool,
    /// Density grid size for semicircle presets.
    #[arg(long, default_value_t = tolerances::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
}

#[derive(Debug, Args)]
pub struct InversionArgs {
    /// Comma-separated, strictly decreasing heights for the density extrapolation.
    #[arg(long, value_delimiter = ',')]
    pub y_levels: Option<Vec<f64>>,
    #[arg(long, default_value_t = tolerances::DEFAULT_X_POINTS)]
    pub x_points: usize,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = tolerances::DEFAULT_SOLVER_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = tolerances::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum MeasureSpec {
    Atoms { atoms: Vec<(f64, f64)> },
    Preset { preset: Preset, variance: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    Bernoulli,
    Semicircle,
}

/// Parses one `--measure` value: inline JSON when it starts with `{`,
/// otherwise a path to a JSON file.
pub fn parse_measure(spec: &str, grid_points: usize) -> Result<Measure, CliError> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_owned()
    } else {
        std::fs::read_to_string(spec).map_err(|e| input(format!("cannot read measure file {spec}: {e}")))?
    };
    let parsed: MeasureSpec =
        serde_json::from_str(&text).map_err(|e| input(format!("bad measure spec {spec}: {e}")))?;
    let m = match parsed {
        MeasureSpec::Atoms { atoms } => {
            let (xs, ws): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
            Measure::make_atomic(&xs, &ws)?
        }
        MeasureSpec::Preset { preset: Preset::Bernoulli, variance } => Measure::bernoulli(variance)?,
        MeasureSpec::Preset { preset: Preset::Semicircle, variance } => {
            Measure::semicircle(variance, grid_points)?
        }
    };
    Ok(m)
}

impl MeasureArgs {
    fn load(&self) -> Result<Vec<Measure>, CliError> {
        if self.specs.is_empty() {
            return Err(input("at least one --measure is required"));
        }
        let ms = self
            .specs
            .iter()
            .map(|s| parse_measure(s, self.grid_points))
            .collect::<Result<Vec<_>, _>>()?;
        if self.normalize {
            Ok(normalize_family(&ms)?)
        } else {
            Ok(ms)
        }
    }
}

impl InversionArgs {
    fn config(&self) -> Result<InversionConfig, CliError> {
        let mut cfg = InversionConfig { x_points: self.x_points, ..InversionConfig::default() };
        if let Some(y) = &self.y_levels {
            cfg.y_levels = y.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl CommonArgs {
    fn solver(&self) -> Result<SolverConfig, CliError> {
        let cfg = SolverConfig { tol: self.tol, max_iter: self.max_iter, ..SolverConfig::default() };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `re_min:re_max:count@im`, or a file with one `re im` (or `re,im`) pair per line.
pub fn parse_grid(spec: &str) -> Result<Vec<HalfPlanePoint>, CliError> {
    if let Some((range, im)) = spec.split_once('@') {
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(input(format!("grid {spec}: expected re_min:re_max:count@im")));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| input(format!("grid {spec}: bad number {s}")));
        let (lo, hi, im) = (num(lo)?, num(hi)?, num(im)?);
        let count: usize = count.trim().parse().map_err(|_| input(format!("grid {spec}: bad count {count}")))?;
        if count == 0 || (count > 1 && !(hi >= lo)) {
            return Err(input(format!("grid {spec}: need count >= 1 and re_max >= re_min")));
        }
        let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
        return (0..count)
            .map(|k| Ok(HalfPlanePoint::new(lo + k as f64 * step, im)?))
            .collect();
    }
    let text = std::fs::read_to_string(spec).map_err(|e| input(format!("cannot read grid file {spec}: {e}")))?;
    let points = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let [re, im] = fields[..] else {
                return Err(input(format!("{spec}:{}: expected two numbers", i + 1)));
            };
            let re: f64 = re.parse().map_err(|_| input(format!("{spec}:{}: bad number {re}", i + 1)))?;
            let im: f64 = im.parse().map_err(|_| input(format!("{spec}:{}: bad number {im}", i + 1)))?;
            Ok(HalfPlanePoint::new(re, im)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if points.is_empty() {
        return Err(input(format!("grid file {spec} has no points")));
    }
    Ok(points)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| input(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| input(format!("csv: {e}")))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| input(format!("json: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| input(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| input(format!("stdout: {e}")))
        }
    }
}

fn reject_degenerate(measures: &[Measure]) -> Result<(), CliError> {
    for (i, m) in measures.iter().enumerate() {
        if !(m.moments().variance > 0.0) {
            return Err(input(format!("measure {} has variance 0", i + 1)));
        }
    }
    Ok(())
}

fn f(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize)]
struct GRowOut {
    re_z: f64,
    im_z: f64,
    re_g: f64,
    im_g: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct DistanceOut {
    delta: f64,
    uncertainty: f64,
    at: f64,
}

#[derive(Serialize)]
struct CdfOut {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    atoms: Vec<(f64, f64)>,
    est_error: f64,
}

#[derive(Serialize)]
struct DiagnosticsOut {
    re_z: f64,
    im_z: f64,
    r_abs: Vec<f64>,
    q_abs: f64,
    q_at_z1_abs: f64,
    z1_minus_omega2: f64,
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn execute(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Convolve { measures, grid, common } => {
            let ms = measures.load()?;
            let grid = parse_grid(grid)?;
            let solver = common.solver()?;
            let rows = if ms.len() == 1 {
                grid.iter().map(|&z| (z, ms[0].cauchy_at(z.to_complex()), 0)).collect::<Vec<_>>()
            } else {
                convolve_to_measure(&ms, &grid, &solver)?
                    .into_iter()
                    .map(|r| (r.z, r.g, r.iterations))
                    .collect()
            };
            let out: Vec<GRowOut> = rows
                .iter()
                .map(|(z, g, it)| GRowOut { re_z: z.re(), im_z: z.im(), re_g: g.re, im_g: g.im, iterations: *it })
                .collect();
            let bytes = match common.format {
                Format::Json => json_bytes(&out)?,
                Format::Csv => csv_bytes(
                    &["re_z", "im_z", "re_G", "im_G", "iterations"].map(String::from),
                    &out.iter()
                        .map(|r| vec![f(r.re_z), f(r.im_z), f(r.re_g), f(r.im_g), r.iterations.to_string()])
                        .collect::<Vec<_>>(),
                )?,
            };
            emit(common.out.as_deref(), &bytes)
        }
        Command::Kolmogorov { measures, inversion, common } => {
            let ms = measures.load()?;
            reject_degenerate(&ms)?;
            let table = invert(&ms, inversion, common)?;
            let k = kolmogorov(&table, &SemicircleLaw::default())?;
            let out = DistanceOut { delta: k.value, uncertainty: k.uncertainty, at: k.at };
            let bytes = match common.format {
                Format::Json => json_bytes(&out)?,
                Format::Csv => csv_bytes(
                    &["delta", "uncertainty", "at"].map(String::from),
                    &[vec![f(out.delta), f(out.uncertainty), f(out.at)]],
                )?,
            };
            emit(common.out.as_deref(), &bytes)
        }
        Command::Cdf { measures, inversion, common } => {
            let ms = measures.load()?;
            let table = invert(&ms, inversion, common)?;
            let bytes = match common.format {
                Format::Json => json_bytes(&CdfOut {
                    atoms: table.atoms.iter().map(|a| (a.position, a.weight)).collect(),
                    est_error: table.est_error,
                    xs: table.xs,
                    cdf: table.cdf,
                })?,
                Format::Csv => csv_bytes(
                    &["x", "cdf"].map(String::from),
                    &table.xs.iter().zip(&table.cdf).map(|(&x, &c)| vec![f(x), f(c)]).collect::<Vec<_>>(),
                )?,
            };
            emit(common.out.as_deref(), &bytes)
        }
        Command::RateSweep { measures, ns, eps, inversion, common } => {
            let bases = measures.load()?;
            reject_degenerate(&bases)?;
            let report = rate_sweep(&bases, ns, *eps, &common.solver()?, &inversion.config()?)?;
            match common.format {
                Format::Json => emit(common.out.as_deref(), &json_bytes(&report)?),
                Format::Csv => {
                    let rows: Vec<Vec<String>> = report
                        .entries
                        .iter()
                        .map(|e| vec![e.n.to_string(), f(e.l3n), f(e.l4n), f(e.delta), f(e.delta_uncertainty)])
                        .collect();
                    let table = csv_bytes(&["n", "L3n", "L4n", "delta", "delta_uncertainty"].map(String::from), &rows)?;
                    let summary = json_bytes(&serde_json::json!({
                        "fitted_exponent": report.fitted_exponent,
                        "c_eps_estimate": report.c_eps_estimate,
                        "eps_used": report.eps_used,
                    }))?;
                    match &common.out {
                        Some(p) => {
                            emit(Some(p), &table)?;
                            emit(Some(&summary_path(p)), &summary)
                        }
                        None => {
                            emit(None, &table)?;
                            eprint!("{}", String::from_utf8_lossy(&summary));
                            Ok(())
                        }
                    }
                }
            }
        }
        Command::BaiBound {
            measures,
            c5,
            k,
            l4n,
            strict_params,
            truncation,
            quad_tol,
            x_grid_density,
            inversion,
            common,
        } => {
            let raw = measures.load()?;
            reject_degenerate(&raw)?;
            let l4n = match l4n {
                Some(v) => *v,
                None => {
                    let mom: Vec<_> = raw.iter().map(Measure::moments).collect();
                    let s2: Vec<f64> = mom.iter().map(|m| m.variance).collect();
                    let m4: Vec<f64> = mom.iter().map(|m| m.m4).collect();
                    lyapunov4(&s2, &m4)?
                }
            };
            let params = if *strict_params {
                default_params(l4n, *k, *c5)?
            } else {
                clamped_params(l4n, *k, *c5)?
            };
            let normalized = normalize_family(&raw)?;
            let cfg = BaiConfig {
                solver: common.solver()?,
                inversion: inversion.config()?,
                truncation: *truncation,
                quad_tol: *quad_tol,
                x_grid_density: *x_grid_density,
            };
            let report = bai_bound(&normalized, &params, &cfg)?;
            let bytes = match common.format {
                Format::Json => json_bytes(&report)?,
                Format::Csv => {
                    let p = &report.params;
                    csv_bytes(
                        &[
                            "a", "gamma", "v", "eps", "c_gamma", "term_v", "term_eps", "integral_real",
                            "integral_vertical_sup", "bound", "measured_delta", "measured_delta_uncertainty",
                            "bound_uncertainty", "dominated",
                        ]
                        .map(String::from),
                        &[vec![
                            f(p.a),
                            f(p.gamma),
                            f(p.v),
                            f(p.eps),
                            f(report.c_gamma),
                            f(report.term_v),
                            f(report.term_eps),
                            f(report.integral_real),
                            f(report.integral_vertical_sup),
                            f(report.bound),
                            f(report.measured_delta),
                            f(report.measured_delta_uncertainty),
                            f(report.bound_uncertainty),
                            report.dominated.to_string(),
                        ]],
                    )?
                }
            };
            emit(common.out.as_deref(), &bytes)
        }
        Command::Diagnostics { measures, grid, common } => {
            let ms = measures.load()?;
            let grid = parse_grid(grid)?;
            let solver = common.solver()?;
            if ms.len() < 2 {
                return Err(input("diagnostics need at least two measures"));
            }
            use rayon::prelude::*;
            let rows = grid
                .par_iter()
                .map(|&z| {
                    let sol = solve(&ms, z, &solver)?;
                    let d = diagnostics(&ms, &sol)?;
                    Ok(DiagnosticsOut {
                        re_z: z.re(),
                        im_z: z.im(),
                        r_abs: d.r.iter().map(|r| r.norm()).collect(),
                        q_abs: d.q.norm(),
                        q_at_z1_abs: d.q_at_z1.norm(),
                        z1_minus_omega2: d.root_gap,
                    })
                })
                .collect::<crate::Result<Vec<_>>>()?;
            let bytes = match common.format {
                Format::Json => json_bytes(&rows)?,
                Format::Csv => {
                    let mut header = vec!["re_z".to_string(), "im_z".to_string()];
                    header.extend((1..=ms.len()).map(|i| format!("abs_r_{i}")));
                    header.extend(["abs_q", "abs_Q_z1", "abs_z1_minus_omega2"].map(String::from));
                    let body: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            let mut v = vec![f(r.re_z), f(r.im_z)];
                            v.extend(r.r_abs.iter().map(|&x| f(x)));
                            v.extend([f(r.q_abs), f(r.q_at_z1_abs), f(r.z1_minus_omega2)]);
                            v
                        })
                        .collect();
                    csv_bytes(&header, &body)?
                }
            };
            emit(common.out.as_deref(), &bytes)
        }
    }
}

fn invert(
    ms: &[Measure],
    inversion: &InversionArgs,
    common: &CommonArgs,
) -> Result<CdfTable, CliError> {
    let inv = inversion.config()?;
    let sum = FreeSum::new(ms.to_vec(), common.solver()?)?;
    let xs = default_x_grid(ms, inv.x_points);
    Ok(cdf_from_g(&sum, &xs, &inv.y_levels, inv.cell_tol)?)
}

fn threads_of(cmd: &Command) -> usize {
    match cmd {
        Command::Convolve { common, .. }
        | Command::Kolmogorov { common, .. }
        | Command::Cdf { common, .. }
        | Command::RateSweep { common, .. }
        | Command::BaiBound { common, .. }
        | Command::Diagnostics { common, .. } => common.threads,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads_of(&cli.command)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("input error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
