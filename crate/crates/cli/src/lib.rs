//! Command-line front end for `tailbound`.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure,
//! 3 oracle mismatch.

pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tailbound::bounds::Exceedance;
use tailbound::comparison::{self, ratio_r};
use tailbound::oracle::oracle_check;
use tailbound::simulate::{simulate_paths, FamilyKind, IncrementFamily};
use tailbound::{BinomialSpec, ComparisonConstants, MartingaleBounds, Query, SupermartingaleSpec, TailTable};

pub use output::{fmt_g, Cell, Format, Output, Record, Results};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_ORACLE_MISMATCH: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] tailbound::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "tailbound", version, about = "Tail bounds for supermartingales with differences bounded above")]
pub struct Cli {
    /// Output format [default: csv for sweep, table otherwise]
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All bounds at one or more thresholds
    Bound {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Sum of P(X_i >= d), adds the truncation bound
        #[arg(long)]
        exceedance: Option<f64>,
    },
    /// New and old bound and their ratio on a grid of lattice coordinates
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_negative_numbers = true)]
        start: f64,
        #[arg(long, allow_negative_numbers = true)]
        stop: f64,
        #[arg(long)]
        step: f64,
    },
    /// The comparison constants, c2 and c3
    Constants,
    /// Where the new bound provably improves on the old one
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Monte Carlo check of the bounds
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Thresholds in martingale units [default: lattice points with tail >= 1e-4]
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        y: Vec<f64>,
        /// Increment families [default: all three]
        #[arg(long, value_delimiter = ',')]
        family: Vec<String>,
        /// Subtracted from every increment
        #[arg(long, default_value_t = 0.0)]
        drift: f64,
        /// Replace increments by their martingale tilt
        #[arg(long)]
        tilt: bool,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; results do not depend on it
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare the closed-form majorant with a brute-force concave hull
    OracleCheck {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Grid step of the hull samples
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
}

/// Either `--n --p`, or `--n --d --sigma`, or `--d --sigma-list`.
#[derive(Debug, Args, Clone, Default)]
pub struct ProblemArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sigma_list: Option<Vec<f64>>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct QueryArgs {
    /// Thresholds in martingale units
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub y: Vec<f64>,
    /// Thresholds as lattice coordinates
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Vec<f64>,
}

impl ProblemArgs {
    pub fn spec(&self) -> Result<SupermartingaleSpec, CliError> {
        match (self.n, self.p, self.d, self.sigma, &self.sigma_list) {
            (Some(n), Some(p), None, None, None) => {
                Ok(SupermartingaleSpec::from_lattice(BinomialSpec::new(n, p)?))
            }
            (Some(n), None, Some(d), Some(s), None) => Ok(SupermartingaleSpec::homogeneous(n, d, s)?),
            (n, None, Some(d), None, Some(list)) => {
                if n.is_some_and(|n| n != list.len() as u64) {
                    return usage(format!("--n is {} but --sigma-list has {} entries", n.unwrap(), list.len()));
                }
                Ok(SupermartingaleSpec::new(d, list.clone())?)
            }
            _ => usage(
                "give exactly one problem: --n with --p, --n with --d and --sigma, or --d with --sigma-list",
            ),
        }
    }

    fn record(&self) -> Record {
        let mut r = Record::new();
        if let Some(n) = self.n {
            r.push("n", n);
        }
        if let Some(p) = self.p {
            r.push("p", p);
        }
        if let Some(d) = self.d {
            r.push("d", d);
        }
        if let Some(s) = self.sigma {
            r.push("sigma", s);
        }
        if let Some(list) = &self.sigma_list {
            r.push("sigma_list", list.iter().map(|v| fmt_g(*v, 17)).collect::<Vec<_>>().join(","));
        }
        r
    }
}

fn spec_record(mut r: Record, spec: &SupermartingaleSpec) -> Record {
    r.push("lattice_n", spec.n());
    r.push("lattice_p", spec.p());
    r.push("h", spec.h());
    r
}

fn bound_record(report: &tailbound::BoundReport) -> Record {
    Record::new()
        .with("y", report.y)
        .with("x", report.x)
        .with("new_bound", report.new_bound)
        .with("log10_new_bound", report.log10_new_bound)
        .with("old_bound", report.old_bound)
        .with("log10_old_bound", report.log10_old_bound)
        .with("ratio", report.ratio)
        .with("gaussian_bound", report.gaussian_bound)
        .with("log10_gaussian_bound", report.log10_gaussian_bound)
        .with("hoeffding_baseline", report.hoeffding_baseline)
        .with("log10_hoeffding_baseline", report.log10_hoeffding_baseline)
        .with("clipped_new", report.clipped_new)
        .with("clipped_old", report.clipped_old)
        .with("underflow_new", report.underflow_new)
        .with("underflow_old", report.underflow_old)
}

pub fn run_bound(problem: &ProblemArgs, query: &QueryArgs, exceedance: Option<f64>) -> Result<Output, CliError> {
    let spec = problem.spec()?;
    let queries: Vec<Query> = match (query.y.is_empty(), query.x.is_empty()) {
        (false, true) => query.y.iter().map(|&y| Query::Y(y)).collect(),
        (true, false) => query.x.iter().map(|&x| Query::X(x)).collect(),
        _ => return usage("give thresholds with exactly one of --y or --x"),
    };
    if let Some(q) = queries.iter().map(|q| match q {
        Query::X(v) | Query::Y(v) => *v,
    }).find(|v| !v.is_finite())
    {
        return usage(format!("thresholds must be finite, got {q}"));
    }
    let bounds = MartingaleBounds::new(spec.clone())?;
    let mut rows = Vec::with_capacity(queries.len());
    for q in queries {
        let report = bounds.report(q);
        let mut row = bound_record(&report);
        if let Some(e) = exceedance {
            row.push("truncation_bound", bounds.truncation_bound(report.y, &Exceedance::Sum(e))?);
        }
        rows.push(row);
    }
    let mut inputs = spec_record(problem.record(), &spec);
    if let Some(e) = exceedance {
        inputs.push("exceedance", e);
    }
    Ok(Output { command: "bound".into(), inputs, results: Results::Many(rows) })
}

/// `start, start + step, ...` up to `stop` (inclusive within rounding).
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step.is_finite()) {
        return usage(format!("--step must be positive, got {step}"));
    }
    if !(start.is_finite() && stop.is_finite() && start <= stop) {
        return usage(format!("need finite --start <= --stop, got {start} and {stop}"));
    }
    let count = ((stop - start) / step + 1e-9).floor();
    if count > 1e7 {
        return usage("grid has more than 10^7 points");
    }
    Ok((0..=count as u64).map(|i| start + i as f64 * step).collect())
}

pub fn run_sweep(problem: &ProblemArgs, start: f64, stop: f64, step: f64) -> Result<Output, CliError> {
    let spec = problem.spec()?;
    let xs = grid(start, stop, step)?;
    let bounds = MartingaleBounds::new(spec.clone())?;
    let n = spec.n() as f64;
    let mut rows = Vec::with_capacity(xs.len());
    for x in xs {
        let new = bounds.log_new_at(x).clip_one();
        let old = bounds.log_old_at(x).clip_one();
        let r = if x <= n { Some(ratio_r(bounds.majorant(), x)?) } else { None };
        let log10 = |v: tailbound::LogValue| (!v.is_zero()).then(|| v.log10());
        rows.push(
            Record::new()
                .with("x", x)
                .with("r", r)
                .with("q_new", new.exp())
                .with("q_old", old.exp())
                .with("log10_q_new", log10(new))
                .with("log10_q_old", log10(old)),
        );
    }
    let inputs = spec_record(problem.record(), &spec).with("start", start).with("stop", stop).with("step", step);
    Ok(Output { command: "sweep".into(), inputs, results: Results::Many(rows) })
}

pub fn run_constants() -> Output {
    let k = ComparisonConstants::get();
    let results = Record::new()
        .with("u_star", k.u_star)
        .with("u_double_star", k.u_double_star)
        .with("inverse_u_double_star", k.inverse_u_double_star())
        .with("alpha_star", k.alpha_star)
        .with("r_alpha_star", k.r_alpha_star)
        .with("exp_r_alpha_star_minus_one", k.exp_r_minus_one)
        .with("c2", tailbound::bounds::c2())
        .with("c3", tailbound::bounds::c3());
    Output { command: "constants".into(), inputs: Record::new(), results: Results::One(results) }
}

pub fn run_compare(problem: &ProblemArgs) -> Result<Output, CliError> {
    let spec = problem.spec()?;
    let (n, p) = (spec.n(), spec.p());
    let jss = comparison::j_double_star(n, p)?;
    let bounds = MartingaleBounds::new(spec.clone())?;
    let r_at = if jss >= 0 { Some(ratio_r(bounds.majorant(), jss as f64)?) } else { None };
    let results = Record::new()
        .with("u_star", comparison::u_star())
        .with("u_double_star", comparison::u_double_star())
        .with("j_double_star", jss)
        .with("y_double_star", spec.unscale(jss as f64))
        .with("all_x_threshold", p / spec.q() / comparison::u_double_star())
        .with("dominance_all_x", comparison::dominance_all_x(n, p)?)
        .with("r_at_j_double_star", r_at);
    Ok(Output { command: "compare".into(), inputs: spec_record(problem.record(), &spec), results: Results::One(results) })
}

/// Settings of one `verify` run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub problem: ProblemArgs,
    pub y: Vec<f64>,
    pub families: Vec<FamilyKind>,
    pub drift: f64,
    pub tilt: bool,
    pub trials: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

const ALL_FAMILIES: [FamilyKind; 3] =
    [FamilyKind::TwoPointExtremal, FamilyKind::BoundedUniform, FamilyKind::TruncatedShifted];

fn family_name(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::TwoPointExtremal => "two_point_extremal",
        FamilyKind::BoundedUniform => "bounded_uniform",
        FamilyKind::TruncatedShifted => "truncated_shifted",
    }
}

pub fn parse_families(names: &[String]) -> Result<Vec<FamilyKind>, CliError> {
    if names.is_empty() {
        return Ok(ALL_FAMILIES.to_vec());
    }
    names.iter().map(|s| s.parse::<FamilyKind>().map_err(CliError::from)).collect()
}

/// Lattice thresholds `y_j` with exact tail `q_j >= 1e-4` (at most 12,
/// evenly spread), preceded by one far to the left.
pub fn default_thresholds(spec: &SupermartingaleSpec) -> Vec<f64> {
    let table = TailTable::new(spec.binomial().clone());
    let js: Vec<i64> = (0..=spec.n() as i64).filter(|&j| table.log_tail(j).exp() >= 1e-4).collect();
    let stride = js.len().div_ceil(12).max(1);
    let mut ys = vec![-(spec.n() as f64 * spec.h() + 1.0)];
    ys.extend(js.iter().step_by(stride).map(|&j| spec.unscale(j as f64)));
    ys
}

/// Slack that absorbs rounding of simulated sums landing exactly on a
/// lattice threshold; counting `S >= y - eps` can only raise the estimate.
fn hit_slack(y: f64, spec: &SupermartingaleSpec) -> f64 {
    1e-9 * (y.abs() + spec.n() as f64 * spec.h())
}

/// Runs the Monte Carlo check; the flag is false when any row fails.
pub fn run_verify(cfg: &VerifyConfig) -> Result<(Output, bool), CliError> {
    let spec = cfg.problem.spec()?;
    if cfg.trials == 0 {
        return usage("--trials must be at least 1");
    }
    if cfg.threads == Some(0) {
        return usage("--threads must be at least 1");
    }
    let ys = if cfg.y.is_empty() { default_thresholds(&spec) } else { cfg.y.clone() };
    let bounds = MartingaleBounds::new(spec.clone())?;
    let half_d = spec.d() / 2.0;
    let truncated = MartingaleBounds::new(SupermartingaleSpec::new(half_d, spec.sigmas().to_vec())?)?;
    let homogeneous = spec.sigmas().iter().all(|&s| s == spec.sigmas()[0]);
    let table = TailTable::new(spec.binomial().clone());

    let mut rows = Vec::new();
    let mut all_pass = true;
    for &kind in &cfg.families {
        let family = IncrementFamily::new(kind).with_drift(cfg.drift).with_tilt(cfg.tilt);
        let paths = simulate_paths(&spec, &family, cfg.trials, cfg.seed, cfg.threads)?;
        let exceed = family.exceedances(&spec, half_d);
        for &y in &ys {
            let y_hit = y - hit_slack(y, &spec);
            let est = paths.tail(y_hit, false);
            let est_max = paths.tail(y_hit, true);
            let new = bounds.new_bound(y);
            let old = bounds.old_bound(y);
            let trunc = truncated.truncation_bound(y, &exceed)?;
            let k = 3.0;
            let bounds_ok = [new, old, trunc].iter().all(|&b| !est.exceeds(b, k) && !est_max.exceeds(b, k));

            let x = spec.rescale(y);
            let lattice = (x - x.round()).abs() < 1e-9;
            let exact = (kind == FamilyKind::TwoPointExtremal && cfg.drift == 0.0 && homogeneous && lattice)
                .then(|| table.log_tail(x.round() as i64).exp());
            let exact_ok = exact.is_none_or(|q| {
                let se = (q * (1.0 - q) / cfg.trials as f64).sqrt();
                (est.point - q).abs() <= 4.0 * se + 1e-12
            });
            let pass = bounds_ok && exact_ok;
            all_pass &= pass;
            rows.push(
                Record::new()
                    .with("family", family_name(kind))
                    .with("y", y)
                    .with("x", x)
                    .with("estimate", est.point)
                    .with("ci_low", est.ci_low)
                    .with("ci_high", est.ci_high)
                    .with("std_error", est.std_error())
                    .with("estimate_max", est_max.point)
                    .with("exact", exact)
                    .with("exact_in_ci", exact.map(|q| Cell::Bool(est.ci_low <= q && q <= est.ci_high)).unwrap_or(Cell::Empty))
                    .with("new_bound", new)
                    .with("old_bound", old)
                    .with("truncation_bound", trunc)
                    .with("pass", pass),
            );
        }
    }
    let inputs = spec_record(cfg.problem.record(), &spec)
        .with("trials", cfg.trials)
        .with("seed", cfg.seed)
        .with("drift", cfg.drift)
        .with("tilt", cfg.tilt)
        .with("truncation_level", half_d);
    Ok((Output { command: "verify".into(), inputs, results: Results::Many(rows) }, all_pass))
}

pub const ORACLE_TOLERANCE: f64 = 1e-6;

/// Oracle comparison; the flag is false on a mismatch.
pub fn run_oracle_check(problem: &ProblemArgs, step: f64) -> Result<(Output, bool), CliError> {
    let spec = problem.spec()?;
    let bounds = MartingaleBounds::new(spec.clone())?;
    let check = oracle_check(bounds.majorant(), step)?;
    let pass = check.max_log_discrepancy <= ORACLE_TOLERANCE;
    let results = Record::new()
        .with("points", check.points as u64)
        .with("max_log_discrepancy", check.max_log_discrepancy)
        .with("worst_x", check.worst_x)
        .with("tolerance", ORACLE_TOLERANCE)
        .with("pass", pass);
    let inputs = spec_record(problem.record(), &spec).with("step", step);
    Ok((Output { command: "oracle-check".into(), inputs, results: Results::One(results) }, pass))
}

/// Executes a parsed command and returns its output and exit code.
pub fn execute(command: &Command) -> Result<(Output, i32), CliError> {
    Ok(match command {
        Command::Bound { problem, query, exceedance } => (run_bound(problem, query, *exceedance)?, EXIT_OK),
        Command::Sweep { problem, start, stop, step } => (run_sweep(problem, *start, *stop, *step)?, EXIT_OK),
        Command::Constants => (run_constants(), EXIT_OK),
        Command::Compare { problem } => (run_compare(problem)?, EXIT_OK),
        Command::Verify { problem, y, family, drift, tilt, trials, seed, threads } => {
            let cfg = VerifyConfig {
                problem: problem.clone(),
                y: y.clone(),
                families: parse_families(family)?,
                drift: *drift,
                tilt: *tilt,
                trials: *trials,
                seed: *seed,
                threads: *threads,
            };
            let (out, pass) = run_verify(&cfg)?;
            (out, if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::OracleCheck { problem, step } => {
            let (out, pass) = run_oracle_check(problem, *step)?;
            (out, if pass { EXIT_OK } else { EXIT_ORACLE_MISMATCH })
        }
    })
}

/// Full program: parse, run, write; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (out, code) = match execute(&cli.command) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let default = if matches!(cli.command, Command::Sweep { .. }) { Format::Csv } else { Format::Table };
    let bytes = out.render(cli.format.unwrap_or(default));
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &bytes),
        None => stdout.write_all(&bytes),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {}", CliError::Io(e));
        return EXIT_USAGE;
    }
    code
}
