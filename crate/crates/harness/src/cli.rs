//! The `whittle` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use whittle_core::estimator::{
    estimate_range_and_magnitude, estimate_smoothness, EstimationResult, RangeOptions, SmoothnessOptions,
};
use whittle_core::geometry::{design_diagnostics, Domain, DomainPoint, PointSet};
use whittle_core::kernels::{Normalization, SmoothnessFamily, SpectralParams, SpectralRangeFamily, DEFAULT_TRUNCATION};
use whittle_core::measures::{kakutani_classify, match_microergodic, KakutaniRule, DEFAULT_KAKUTANI_TERMS};
use whittle_core::sampler::{sample_kl, DEFAULT_T_DF};

use crate::config::{parse_domain, parse_law, parse_normalization, DesignKind, ScenarioConfig, ScenarioKind};
use crate::output::{emit_csv, fmt_f64, write_kakutani, write_summary};
use crate::plot::emit_violin_svg;
use crate::scenario::{build_design, kakutani_matrix, kakutani_system, run_scenario, KakutaniRow, ScenarioOutcome};

pub const WORKERS_ENV: &str = "WHITTLE_WORKERS";

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, missing or malformed input files. Exit code 1.
    Config(String),
    /// Failure while computing or writing results. Exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn cfg_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "whittle", about = "Whittle-Matern field simulation and smoothness estimation")]
struct Cli {
    /// Worker threads; defaults to $WHITTLE_WORKERS, then the core count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a field at a design and write point values as CSV.
    Simulate(SimulateArgs),
    /// Estimate smoothness (or range and magnitude) from a point-value CSV.
    Estimate(EstimateArgs),
    /// Run a scenario config: records, summary and violin plots.
    Scenario(ScenarioArgs),
    /// Equivalence/orthogonality report for pairs of parameter sets.
    Kakutani(KakutaniArgs),
    /// Fill distance, separation radius and mesh ratio of a design.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "sphere")]
    domain: String,
    #[arg(long, default_value_t = 5.0)]
    s: f64,
    #[arg(long, default_value_t = 20.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value = "unit_diagonal")]
    normalization: String,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    truncation: usize,
}

impl ModelArgs {
    fn domain(&self) -> Result<Domain, CliError> {
        parse_domain(&self.domain).map_err(CliError::Config)
    }
    fn normalization(&self) -> Result<Normalization, CliError> {
        parse_normalization(&self.normalization).map_err(CliError::Config)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "gaussian")]
    law: String,
    #[arg(long, default_value_t = DEFAULT_T_DF)]
    t_df: f64,
    /// `regular` (deterministic placement) or `random`.
    #[arg(long, default_value = "regular")]
    design: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// `spectral`, `matern` or `wendland`; `range` estimates τ and σ² at fixed s.
    #[arg(long, default_value = "spectral")]
    family: String,
    /// Support radius of the Wendland family.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0 + 1e-7)]
    lo: f64,
    #[arg(long, default_value_t = 30.0)]
    hi: f64,
    #[arg(long)]
    profile_magnitude: bool,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KakutaniArgs {
    /// CSV with columns d,s1,tau1,sigma2_1,s2,tau2,sigma2_2; `sigma2_2` may be
    /// `matched`. Without a table the standard 12-case matrix is run.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    law: String,
    #[arg(long, default_value_t = DEFAULT_T_DF)]
    t_df: f64,
    #[arg(long, default_value_t = DEFAULT_KAKUTANI_TERMS)]
    terms: usize,
    /// Base parameters of the standard matrix.
    #[arg(long, default_value_t = 3.0)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 3.0)]
    alt_tau: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnosticsArgs {
    /// Point CSV (as written by `simulate`; a `value` column is ignored).
    #[arg(long, conflicts_with = "regular")]
    points: Option<PathBuf>,
    /// Diagnose the regular design of this size instead of a file.
    #[arg(long)]
    regular: Option<usize>,
    #[arg(long, default_value = "sphere")]
    domain: String,
    /// Candidate points for the fill distance; defaults to 50 per design point.
    #[arg(long)]
    resolution: Option<usize>,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(p) => Ok(Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", p.display()))
        })?))),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

/// Point coordinates and optional values, from a CSV whose header names
/// `x,y,z` (sphere) or `x` (interval) and optionally `value`.
pub fn read_point_csv(path: &Path) -> Result<(PointSet, Option<Vec<f64>>), CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut rd = csv::Reader::from_reader(file);
    let header: Vec<String> = rd.headers().map_err(cfg_err)?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (x, y, z, v) = (col("x"), col("y"), col("z"), col("value"));
    let sphere = match (x, y, z) {
        (Some(_), Some(_), Some(_)) => true,
        (Some(_), None, None) => false,
        _ => {
            return Err(CliError::Config(format!(
                "{}: header must name x,y,z or x (got {header:?})",
                path.display()
            )))
        }
    };
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(cfg_err)?;
        let num = |k: usize| -> Result<f64, CliError> {
            row.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad number on line {}", path.display(), i + 2)))
        };
        let p = if sphere {
            DomainPoint::sphere([num(x.unwrap())?, num(y.unwrap())?, num(z.unwrap())?])
        } else {
            DomainPoint::interval(num(x.unwrap())?)
        }
        .map_err(cfg_err)?;
        pts.push(p);
        if let Some(k) = v {
            vals.push(num(k)?);
        }
    }
    let domain = if sphere { Domain::Sphere } else { Domain::Interval };
    let ps = PointSet::new(domain, pts).map_err(cfg_err)?;
    Ok((ps, v.map(|_| vals)))
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let domain = a.model.domain()?;
    let law = parse_law(&a.law, a.t_df).map_err(CliError::Config)?;
    let design = match a.design.as_str() {
        "regular" => DesignKind::Regular,
        "random" => DesignKind::Random,
        d => return Err(CliError::Config(format!("unknown design '{d}'"))),
    };
    let cfg = ScenarioConfig {
        domain,
        design,
        seed: a.seed,
        ..ScenarioConfig::default()
    };
    let ps = Arc::new(build_design(&cfg, a.n).map_err(cfg_err)?);
    let params = SpectralParams::new(a.model.s, a.model.tau, a.model.sigma2, a.model.normalization()?);
    let field = sample_kl(params, a.model.truncation, law, Arc::clone(&ps), a.seed).map_err(cfg_err)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(&a.out)?);
    let io = |e: csv::Error| run_err(e);
    match domain {
        Domain::Sphere => w.write_record(["x", "y", "z", "value"]).map_err(io)?,
        Domain::Interval => w.write_record(["x", "value"]).map_err(io)?,
    }
    for (p, v) in ps.points().iter().zip(&field.values) {
        let row: Vec<String> = match p {
            DomainPoint::Sphere(u) => vec![fmt_f64(u[0]), fmt_f64(u[1]), fmt_f64(u[2]), fmt_f64(*v)],
            DomainPoint::Interval(x) => vec![fmt_f64(*x), fmt_f64(*v)],
        };
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(run_err)
}

fn print_result(out: &mut dyn Write, r: &EstimationResult) -> std::io::Result<()> {
    writeln!(out, "s_hat = {}", fmt_f64(r.s_hat))?;
    writeln!(out, "sigma2_hat = {}", fmt_f64(r.sigma2_hat))?;
    if let Some(t) = r.tau_hat {
        writeln!(out, "tau_hat = {}", fmt_f64(t))?;
    }
    if let Some(m) = r.microergodic {
        writeln!(out, "microergodic = {}", fmt_f64(m))?;
    }
    writeln!(out, "loglik = {}", fmt_f64(r.loglik))?;
    writeln!(out, "boundary = {}", r.boundary)?;
    writeln!(out, "cond_min = {}", fmt_f64(r.chol_min))?;
    writeln!(out, "cond_max = {}", fmt_f64(r.chol_max))?;
    writeln!(out, "final_width = {}", fmt_f64(r.trace.final_width))?;
    Ok(())
}

fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let (ps, vals) = read_point_csv(&a.input)?;
    let u = vals.ok_or_else(|| CliError::Config(format!("{} has no value column", a.input.display())))?;
    let domain = ps.domain();
    let m = &a.model;
    let result = if a.family == "range" {
        let fam = SpectralRangeFamily {
            domain,
            s: m.s,
            sigma2: m.sigma2,
            normalization: m.normalization()?,
            truncation: m.truncation,
        };
        estimate_range_and_magnitude(&fam, &ps, &u, (a.lo, a.hi), &RangeOptions::default())
    } else {
        let family = match a.family.as_str() {
            "spectral" => SmoothnessFamily::Spectral {
                domain,
                tau: m.tau,
                sigma2: m.sigma2,
                normalization: m.normalization()?,
                truncation: m.truncation,
            },
            "matern" => SmoothnessFamily::Matern {
                domain,
                tau: m.tau,
                sigma2: m.sigma2,
            },
            "wendland" => SmoothnessFamily::Wendland {
                domain,
                beta: a.beta,
                sigma2: m.sigma2,
                mu: None,
            },
            f => return Err(CliError::Config(format!("unknown family '{f}'"))),
        };
        let opts = SmoothnessOptions {
            profile_magnitude: a.profile_magnitude,
            ..SmoothnessOptions::default()
        };
        estimate_smoothness(&family, &ps, &u, (a.lo, a.hi), &opts)
    };
    let r = result.map_err(|e| match e {
        whittle_core::estimator::EstimationError::Setup(m) => CliError::Config(m),
        other => run_err(other),
    })?;
    let mut out = sink(&a.out)?;
    print_result(out.as_mut(), &r).map_err(run_err)
}

fn scenario(a: &ScenarioArgs) -> Result<(), CliError> {
    let mut cfg = ScenarioConfig::from_file(&a.config).map_err(cfg_err)?;
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    let outcome = run_scenario(&cfg).map_err(|e| match e {
        crate::scenario::ScenarioError::Config(c) => cfg_err(c),
        other => run_err(other),
    })?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let dir = &cfg.output_dir;
    let mut stdout = std::io::stdout().lock();
    match outcome {
        ScenarioOutcome::Kakutani(rows) => {
            let f = std::fs::File::create(dir.join("kakutani.csv")).map_err(run_err)?;
            write_kakutani(&rows, f).map_err(run_err)?;
            write_kakutani(&rows, &mut stdout).map_err(run_err)?;
        }
        ScenarioOutcome::Replications(out) => {
            emit_csv(&out.records, &dir.join("records.csv")).map_err(run_err)?;
            let f = std::fs::File::create(dir.join("summary.csv")).map_err(run_err)?;
            write_summary(&out.summary, f).map_err(run_err)?;
            write_summary(&out.summary, &mut stdout).map_err(run_err)?;
            for s in &out.sizes {
                if s.realized != s.requested {
                    let _ = writeln!(stdout, "# n = {} realized {} design points", s.requested, s.realized);
                }
            }
            for f in &out.fits {
                let _ = writeln!(
                    stdout,
                    "# {} fit: scale = {}, sigma2 = {}, relative residual = {}",
                    f.family.as_str(),
                    fmt_f64(f.fit.scale),
                    fmt_f64(f.fit.sigma2),
                    fmt_f64(f.fit.relative_residual)
                );
            }
            let (reference, column) = if cfg.scenario == ScenarioKind::MicroergodicClt {
                (out.sigma2_reference, true)
            } else {
                (cfg.s0, false)
            };
            let mut labels: Vec<&str> = out.records.iter().map(|r| r.scenario.as_str()).collect();
            labels.dedup();
            for label in labels {
                let mut ns: Vec<usize> = out.records.iter().filter(|r| r.scenario == label).map(|r| r.n).collect();
                ns.dedup();
                let groups: Vec<(usize, Vec<f64>)> = ns
                    .iter()
                    .map(|&n| {
                        let v = out
                            .records
                            .iter()
                            .filter(|r| r.scenario == label && r.n == n)
                            .map(|r| if column { r.sigma2_hat } else { r.s_hat })
                            .collect();
                        (n, v)
                    })
                    .collect();
                let file = dir.join(format!("violin_{}.svg", label.replace([':', '='], "_")));
                if let Err(e) = emit_violin_svg(&file, label, &groups, reference) {
                    eprintln!("warning: no plot for {label}: {e}");
                }
            }
        }
    }
    Ok(())
}

fn kakutani(a: &KakutaniArgs) -> Result<(), CliError> {
    let law = parse_law(&a.law, a.t_df).map_err(CliError::Config)?;
    let rows: Vec<KakutaniRow> = match &a.table {
        None => {
            let base = SpectralParams::new(a.s, a.tau, 1.0, Normalization::Power);
            kakutani_matrix(base, a.alt_tau, law, a.terms).map_err(run_err)?
        }
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
            let mut rd = csv::Reader::from_reader(file);
            let mut rows = Vec::new();
            for (i, rec) in rd.records().enumerate() {
                let rec = rec.map_err(cfg_err)?;
                let bad = || CliError::Config(format!("{}: malformed row on line {}", path.display(), i + 2));
                if rec.len() != 7 {
                    return Err(bad());
                }
                let num = |k: usize| rec[k].trim().parse::<f64>().map_err(|_| bad());
                let d: usize = rec[0].trim().parse().map_err(|_| bad())?;
                if !(1..=4).contains(&d) {
                    return Err(CliError::Config(format!("line {}: d must be 1..4", i + 2)));
                }
                let es = kakutani_system(d, a.terms);
                let p1 = SpectralParams::new(num(1)?, num(2)?, num(3)?, Normalization::Power);
                let mut p2 = SpectralParams::new(num(4)?, num(5)?, 1.0, Normalization::Power);
                if rec[6].trim() == "matched" {
                    p2 = match_microergodic(&p1, &p2, &es).map_err(cfg_err)?;
                } else {
                    p2.sigma2 = num(6)?;
                }
                let r = kakutani_classify(&p1, &p2, law, &es, a.terms, &KakutaniRule::default()).map_err(cfg_err)?;
                rows.push(KakutaniRow::from_report("table", &r));
            }
            rows
        }
    };
    write_kakutani(&rows, sink(&a.out)?).map_err(run_err)
}

fn diagnostics(a: &DiagnosticsArgs) -> Result<(), CliError> {
    let ps = match (&a.points, a.regular) {
        (Some(p), _) => read_point_csv(p)?.0,
        (None, Some(n)) => {
            let cfg = ScenarioConfig {
                domain: parse_domain(&a.domain).map_err(CliError::Config)?,
                ..ScenarioConfig::default()
            };
            build_design(&cfg, n).map_err(cfg_err)?
        }
        (None, None) => return Err(CliError::Config("give --points FILE or --regular N".into())),
    };
    let res = a.resolution.unwrap_or(50 * ps.len());
    let d = design_diagnostics(&ps, res).map_err(cfg_err)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "n = {}", ps.len());
    let _ = writeln!(out, "fill_distance = {}", fmt_f64(d.fill_distance));
    let _ = writeln!(out, "separation_radius = {}", fmt_f64(d.separation_radius));
    let _ = writeln!(out, "mesh_ratio = {}", fmt_f64(d.mesh_ratio));
    Ok(())
}

/// Worker count from the flag, then the environment.
pub fn worker_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(w) = flag {
        return Ok(Some(w));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = worker_count(cli.workers).and_then(|w| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = w {
            if w == 0 {
                return Err(CliError::Config("worker count must be at least 1".into()));
            }
            b = b.num_threads(w);
        }
        let pool = b.build().map_err(run_err)?;
        pool.install(|| match &cli.command {
            Command::Simulate(a) => simulate(a),
            Command::Estimate(a) => estimate(a),
            Command::Scenario(a) => scenario(a),
            Command::Kakutani(a) => kakutani(a),
            Command::Diagnostics(a) => diagnostics(a),
        })
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
