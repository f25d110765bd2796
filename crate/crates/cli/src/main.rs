//! `geodepth`: geometric quantiles, halfspace depth and tail diagnostics.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geodepth::asymptotics::{
    classify_tail, first_order_curve, hd_decay_curve, hd_ratio_curve, y_curve, CurveRequest,
    CurveSource, DepthMethod, DiagnosticCurve, NPolicy, TailVerdict, SAMPLE_STREAM,
};
use geodepth::depth::{default_directions, depth_approx, depth_exact_2d, DepthValue};
use geodepth::io::{
    curve_series, read_curve_csv, read_data_csv, render_svg, write_curve_csv, write_data_csv,
    PlotOptions, XAxis,
};
use geodepth::quantile::{solve, SolverOptions};
use geodepth::samplers::sample;
use geodepth::{Dataset, Error, Exec, RngSpec, UnitDirection, Vector};
use serde::Serialize;

use config::{parse_distribution, AxisKind, ExperimentConfig, PRESETS, SCHEMA};

/// Stream id for the random directions of `depth --method approx`.
const DIRECTION_STREAM: u64 = 0xd1e5_0001;

#[derive(Parser)]
#[command(name = "geodepth", version, about = "Geometric quantiles, halfspace depth and tail diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded sample and write it as CSV.
    Sample {
        /// Distribution, e.g. `gaussian:1,1`, `pareto:2.2`, or a JSON object.
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_header: bool,
    },
    /// Solve for the sample geometric quantile at index vector `direction`.
    Quantile(RunArgs),
    /// Halfspace depth of the point `direction`.
    Depth(RunArgs),
    /// Compute a diagnostic curve as CSV, optionally with an SVG plot.
    Curve {
        kind: CurveKind,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        plot: PlotArgs,
        /// Write curve metadata (moments, checks, flagged points) as JSON.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Light/heavy tail verdict for a depth-decay curve CSV.
    Classify { curve: PathBuf },
    /// Plot one or more curve CSVs (`path` or `path=label`) into one SVG.
    Plot {
        #[arg(required = true)]
        curves: Vec<String>,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// List the built-in presets, or print one as JSON.
    Presets { name: Option<String> },
    /// Print the JSON schema of experiment configs.
    Schema,
    /// Brute-force reference values (test builds only).
    #[cfg(feature = "oracle")]
    Oracle {
        kind: OracleKind,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = geodepth::oracle::DEFAULT_LEVELS)]
        levels: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in config: fig3, fig4, fig5, fig6 or fig7.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Data CSV; replaces the configured distribution.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Distribution; replaces the configured data or distribution.
    #[arg(long, conflicts_with = "data")]
    dist: Option<String>,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Sample size when drawing from a distribution.
    #[arg(long)]
    n: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, value_enum)]
    x_axis: Option<AxisArg>,
    #[arg(long)]
    y_log: bool,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Linear,
    Log,
    Index,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CurveKind {
    Y,
    FirstOrder,
    HdDecay,
    HdRatio,
}

#[cfg(feature = "oracle")]
#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Quantile,
    Depth,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::NonConvergence(_)) { 2 } else { 1 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GEODEPTH_THREADS") else {
        return Ok(());
    };
    if v.trim().is_empty() {
        return Ok(());
    }
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| fail(format!("GEODEPTH_THREADS must be a positive integer (got `{v}`)")))?;
    if n == 0 {
        return Err(fail("GEODEPTH_THREADS must be a positive integer (got `0`)"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| fail(e.to_string()))
}

fn run(cmd: Command) -> CliResult<u8> {
    match cmd {
        Command::Sample {
            dist,
            n,
            seed,
            out,
            no_header,
        } => {
            let spec = parse_distribution(&dist)?;
            let data = sample(&spec, n, RngSpec::new(seed, SAMPLE_STREAM))?;
            let mut w = output(out.as_deref())?;
            write_data_csv(&mut w, &data, !no_header)?;
            w.flush()?;
            Ok(0)
        }
        Command::Quantile(args) => cmd_quantile(&args),
        Command::Depth(args) => cmd_depth(&args),
        Command::Curve {
            kind,
            run,
            plot,
            meta,
        } => cmd_curve(kind, &run, &plot, meta.as_deref()),
        Command::Classify { curve } => {
            let c = read_curve_csv(open(&curve)?)?;
            let fit = classify_tail(&c)?;
            print_json(&ClassifyOut {
                verdict: fit.verdict,
                index_estimate: fit.index_estimate,
                fit_scores: FitScores {
                    light: fit.fit_scores[0],
                    heavy: fit.fit_scores[1],
                },
                points_used: fit.points_used,
            })?;
            Ok(0)
        }
        Command::Plot { curves, plot } => {
            let svg = plot
                .svg
                .as_deref()
                .ok_or_else(|| fail("plot needs --svg <path>"))?;
            let mut series = Vec::new();
            for arg in &curves {
                let (path, label) = match arg.split_once('=') {
                    Some((p, l)) => (PathBuf::from(p), l.to_string()),
                    None => {
                        let p = PathBuf::from(arg);
                        let l = p
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_else(|| arg.clone());
                        (p, l)
                    }
                };
                let c = read_curve_csv(open(&path)?)?;
                series.push(curve_series(&label, &c));
            }
            write_svg(svg, &series, &plot, None)?;
            Ok(0)
        }
        Command::Presets { name } => {
            match name {
                None => {
                    for (n, _) in PRESETS {
                        let cfg = ExperimentConfig::preset(n)?;
                        emit(&format!("{n}\t{}\n", cfg.description.unwrap_or_default()))?;
                    }
                }
                Some(n) => {
                    let text = PRESETS
                        .iter()
                        .find(|(p, _)| *p == n)
                        .map(|(_, t)| *t)
                        .ok_or_else(|| fail(format!("unknown preset `{n}`")))?;
                    emit(text)?;
                }
            }
            Ok(0)
        }
        Command::Schema => {
            emit(SCHEMA)?;
            Ok(0)
        }
        #[cfg(feature = "oracle")]
        Command::Oracle { kind, run, levels } => cmd_oracle(kind, &run, levels),
    }
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| fail(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json<T: Serialize>(v: &T) -> CliResult<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| fail(e.to_string()))?;
    emit(&(s + "\n"))
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> CliResult<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Config from `--config`/`--preset` (or an empty one), with flag overrides.
fn load_config(args: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::parse(r#"{"schema": 1}"#)?,
    };
    if let Some(d) = &args.data {
        cfg.data = Some(d.clone());
        cfg.distribution = None;
    }
    if let Some(s) = &args.dist {
        cfg.distribution = Some(parse_distribution(s)?);
        cfg.data = None;
    }
    if let Some(d) = &args.direction {
        cfg.direction = Some(d.clone());
    }
    if let Some(s) = &args.seeds {
        if s.is_empty() {
            return Err(fail("--seeds must not be empty"));
        }
        cfg.seeds = s.clone();
    }
    if args.n.is_some() {
        cfg.n = args.n;
    }
    Ok(cfg)
}

fn exec_of(cfg: &ExperimentConfig) -> Exec {
    if cfg.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn solver_of(cfg: &ExperimentConfig) -> SolverOptions {
    let mut opts = SolverOptions::default();
    if let Some(t) = cfg.tol {
        opts.tol = t;
    }
    if let Some(m) = cfg.max_iter {
        opts.max_iter = m;
    }
    opts.exec = exec_of(cfg);
    opts
}

/// The configured data file, or a sample of size `n` from the distribution.
fn load_data(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    if let Some(p) = &cfg.data {
        return Ok(read_data_csv(open(p)?)?);
    }
    let spec = cfg
        .distribution
        .as_ref()
        .ok_or_else(|| fail("config: `data` or `distribution` is required"))?;
    let n = cfg
        .n
        .ok_or_else(|| fail("config: `n` is required when sampling from a distribution"))?;
    Ok(sample(spec, n, RngSpec::new(cfg.seeds[0], SAMPLE_STREAM))?)
}

#[derive(Serialize)]
struct ClassifyOut {
    verdict: TailVerdict,
    index_estimate: Option<f64>,
    fit_scores: FitScores,
    points_used: usize,
}

#[derive(Serialize)]
struct FitScores {
    light: f64,
    heavy: f64,
}

#[derive(Serialize)]
struct QuantileOut {
    q: Vec<f64>,
    residual_norm: f64,
    iterations: usize,
    atoms: usize,
    n: usize,
    converged: bool,
}

fn cmd_quantile(args: &RunArgs) -> CliResult<u8> {
    let cfg = load_config(args)?;
    let data = load_data(&cfg)?;
    let u = Vector::new(cfg.direction()?.to_vec())?;
    let sol = solve(&data, &u, &solver_of(&cfg))?;
    print_json(&QuantileOut {
        q: sol.q.coords().to_vec(),
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        atoms: sol.atom_hits,
        n: sol.n,
        converged: sol.converged,
    })?;
    if sol.converged {
        Ok(0)
    } else {
        eprintln!(
            "error: solver did not converge within {} iterations",
            sol.iterations
        );
        Ok(2)
    }
}

#[derive(Serialize)]
struct DepthOut {
    value: String,
    reduced: String,
    decimal: f64,
    k: usize,
    n: usize,
    method: &'static str,
    directions_used: Option<usize>,
}

fn depth_out(v: &DepthValue, method: &'static str) -> DepthOut {
    let (k, n) = v.count().expect("empirical depth");
    let (a, b) = v.reduced().expect("empirical depth");
    DepthOut {
        value: format!("{k}/{n}"),
        reduced: format!("{a}/{b}"),
        decimal: v.value,
        k,
        n,
        method,
        directions_used: v.directions_used,
    }
}

fn cmd_depth(args: &RunArgs) -> CliResult<u8> {
    let cfg = load_config(args)?;
    let data = load_data(&cfg)?;
    let x = Vector::new(cfg.direction()?.to_vec())?;
    let method = cfg.depth.unwrap_or(if data.dim() == 2 {
        DepthMethod::Exact2d
    } else {
        DepthMethod::Approx {
            directions: default_directions(data.dim(), data.len()),
        }
    });
    let out = match method {
        DepthMethod::Exact2d => depth_out(&depth_exact_2d(&data, &x)?, "exact2d"),
        DepthMethod::Approx { directions } => {
            let rng = RngSpec::new(cfg.seeds[0], DIRECTION_STREAM);
            depth_out(
                &depth_approx(&data, &x, directions, rng, exec_of(&cfg))?,
                "approx",
            )
        }
    };
    print_json(&out)?;
    Ok(0)
}

fn curve_request(cfg: &ExperimentConfig) -> CliResult<CurveRequest> {
    let source = match (&cfg.distribution, &cfg.data) {
        (Some(s), _) => CurveSource::Spec(s.clone()),
        (None, Some(p)) => CurveSource::Data(read_data_csv(open(p)?)?),
        (None, None) => return Err(fail("config: `data` or `distribution` is required")),
    };
    let direction = UnitDirection::normalize(&Vector::new(cfg.direction()?.to_vec())?)?;
    let mut solver = solver_of(cfg);
    solver.exec = Exec::Sequential;
    Ok(CurveRequest {
        source,
        direction,
        seeds: cfg.seeds.clone(),
        n_policy: cfg.n_policy.unwrap_or(NPolicy::Growing),
        aggregation: cfg.aggregation,
        solver,
        exec: exec_of(cfg),
    })
}

fn source_label(cfg: &ExperimentConfig) -> String {
    match (&cfg.distribution, &cfg.data) {
        (Some(s), _) => s.label(),
        (None, Some(p)) => p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        (None, None) => String::new(),
    }
}

fn cmd_curve(
    kind: CurveKind,
    args: &RunArgs,
    plot: &PlotArgs,
    meta: Option<&Path>,
) -> CliResult<u8> {
    let cfg = load_config(args)?;
    let req = curve_request(&cfg)?;
    let depth_method = || {
        cfg.depth.unwrap_or(if req.direction.dim() == 2 {
            DepthMethod::Exact2d
        } else {
            let n = match req.n_policy {
                NPolicy::Fixed(n) => n,
                NPolicy::Growing => 100_000,
            };
            DepthMethod::Approx {
                directions: default_directions(req.direction.dim(), n),
            }
        })
    };
    let curve = match kind {
        CurveKind::Y => y_curve(&req, &cfg.alpha_schedule()?)?,
        CurveKind::FirstOrder => first_order_curve(&req, &cfg.alpha_schedule()?)?,
        CurveKind::HdDecay => hd_decay_curve(&req, &cfg.t_schedule()?, depth_method())?,
        CurveKind::HdRatio => hd_ratio_curve(&req, &cfg.t_schedule()?, depth_method())?,
    };
    let m = &curve.meta;
    if m.nonconverged > 0 {
        eprintln!(
            "warning: {} of {} solves did not converge and were left out",
            m.nonconverged, m.solves
        );
    }
    if !m.flagged.is_empty() {
        eprintln!(
            "warning: {} point(s) fall outside the schedule's validity range",
            m.flagged.len()
        );
    }

    let csv_path = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.csv.clone()));
    let mut w = output(csv_path.as_deref())?;
    write_curve_csv(&mut w, &curve)?;
    w.flush()?;
    drop(w);

    if let Some(p) = meta {
        let text = serde_json::to_string_pretty(&curve.meta).map_err(|e| fail(e.to_string()))?;
        std::fs::write(p, text + "\n").map_err(|e| fail(format!("{}: {e}", p.display())))?;
    }
    let svg = plot
        .svg
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.svg.clone()));
    if let Some(svg) = svg {
        let series = [curve_series(&source_label(&cfg), &curve)];
        write_svg(&svg, &series, plot, Some((&cfg, kind, &curve)))?;
    }
    Ok(0)
}

fn write_svg(
    path: &Path,
    series: &[geodepth::io::Series],
    plot: &PlotArgs,
    ctx: Option<(&ExperimentConfig, CurveKind, &DiagnosticCurve)>,
) -> CliResult<()> {
    let cfg_out = ctx.and_then(|(c, _, _)| c.output.clone()).unwrap_or_default();
    let x_axis = match plot.x_axis {
        Some(AxisArg::Linear) => XAxis::Linear,
        Some(AxisArg::Log) => XAxis::Log,
        Some(AxisArg::Index) => XAxis::Index,
        None => match cfg_out.x_axis.unwrap_or_default() {
            AxisKind::Linear => XAxis::Linear,
            AxisKind::Log => XAxis::Log,
            AxisKind::Index => XAxis::Index,
        },
    };
    let (x_label, y_label) = match ctx.map(|(_, k, _)| k) {
        Some(CurveKind::Y) => ("α", "y(α)"),
        Some(CurveKind::FirstOrder) => ("α", "first-order residual"),
        Some(CurveKind::HdDecay) => ("t", "HD(t x, Pn)"),
        Some(CurveKind::HdRatio) => ("t", "HD(t x, Pn) / HD(t x, P)"),
        None => ("", ""),
    };
    let opts = PlotOptions {
        x_axis,
        y_log: plot.y_log || cfg_out.y_log,
        title: plot
            .title
            .clone()
            .or_else(|| ctx.and_then(|(c, _, _)| c.description.clone()))
            .unwrap_or_default(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        ..PlotOptions::default()
    };
    let text = render_svg(series, &opts)?;
    std::fs::write(path, text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(feature = "oracle")]
fn cmd_oracle(kind: OracleKind, args: &RunArgs, levels: usize) -> CliResult<u8> {
    use geodepth::oracle::{brute_depth_2d, brute_quantile};
    let cfg = load_config(args)?;
    let data = load_data(&cfg)?;
    let v = Vector::new(cfg.direction()?.to_vec())?;
    match kind {
        OracleKind::Quantile => {
            let r = brute_quantile(&data, &v, levels)?;
            print_json(&serde_json::json!({
                "q": r.value.q,
                "objective": r.value.objective,
                "evaluations": r.evaluations,
                "grid_spec": r.grid_spec,
            }))?;
        }
        OracleKind::Depth => {
            let r = brute_depth_2d(&data, &v)?;
            let out = depth_out(&r.value, "brute");
            print_json(&serde_json::json!({
                "value": out.value,
                "reduced": out.reduced,
                "decimal": out.decimal,
                "k": out.k,
                "n": out.n,
                "evaluations": r.evaluations,
                "grid_spec": r.grid_spec,
            }))?;
        }
    }
    Ok(0)
}
