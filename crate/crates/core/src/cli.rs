//! Command-line front end. Every command writes a JSON report (to `--out` or stdout)
//! that starts with the [`RunConfig`] it ran under. `fiber` prints its sample CSV on
//! stdout unless `--out-csv` is given, and then sends the report to stderr if `--out`
//! is missing.
//!
//! Exit codes: 0 success, 1 certificate or solver failure, 2 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::anosov::{
    barbot_twist, conic_position_check, flow_nesting_certify, gap_scan, octagon_fuchsian,
    Representation,
};
use crate::certificate::{pushforward_check, sweep, CertGrid, C64};
use crate::error::{Error, Result};
use crate::hitchin::{
    beta_field, max_principle_check, solve, BoundaryData, DomainSpec, HiggsDatum, ScalarField,
    DEFAULT_DISK_RADIUS, DEFAULT_TOL,
};
use crate::plane::{conic_eval, dual_conic_eval, fiber_over_interior, PlanePoint};
use crate::symspace::act_on_flag;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Pass threshold on the minimum certificate margin.
pub const MARGIN_FLOOR: f64 = -1e-9;
/// Pass threshold on the closed-form versus commutator deviation.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "barbot", version, about = "Anosov certificates for cyclic SL(3,R) representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the pointwise certificate margin over a grid.
    Lemma64(Lemma64Args),
    /// Solve the scalar Hitchin equation on a torus or disk.
    Solve(SolveArgs),
    /// Singular and eigenvalue gap scan of a genus-two representation.
    GapScan(GapScanArgs),
    /// Pushforward and multicone nesting checks along the flow.
    CertifyFlow(CertifyFlowArgs),
    /// Sample conic fibers and optionally check limit flags against the conic.
    Fiber(FiberArgs),
    /// Replay a command from a JSON run configuration.
    Run(RunArgs),
}

#[derive(Args, Debug, Serialize)]
struct Lemma64Args {
    #[arg(long, default_value_t = 0.95)]
    beta_max: f64,
    #[arg(long, default_value_t = 0.1)]
    beta_step: f64,
    #[arg(long, default_value_t = 16)]
    beta_phases: usize,
    #[arg(long, default_value_t = 64)]
    z_steps: usize,
    #[arg(long, default_value_t = 5.0)]
    d_max: f64,
    #[arg(long, default_value_t = 0.05)]
    d_step: f64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DomainKind {
    Torus,
    Disk,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "torus")]
    domain: DomainKind,
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// `|t|^2 = c^2`.
    #[arg(long, group = "datum")]
    t_const: Option<f64>,
    #[arg(long, group = "datum")]
    t_zero: bool,
    /// `t = c z^k`, given as `c,k` (disk only).
    #[arg(long, group = "datum")]
    t_monomial: Option<String>,
    /// `fuchsian` or a CSV field; defaults to `fuchsian` for `t = 0` on the disk.
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long, default_value_t = DEFAULT_DISK_RADIUS)]
    radius: f64,
    /// Torus periods `p1,p2`.
    #[arg(long, default_value = "1,1")]
    periods: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Constant added to the initial guess.
    #[arg(long, default_value_t = 0.0)]
    u0_offset: f64,
    #[arg(long)]
    #[serde(skip)]
    out_field: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FamilyKind {
    Red,
    Irr,
    Barbot,
}

#[derive(Args, Debug, Serialize)]
struct GapScanArgs {
    #[arg(long, value_enum)]
    family: FamilyKind,
    /// Character values `u1,u2,u3,u4` on the generators (barbot only).
    #[arg(long)]
    chi: Option<String>,
    #[arg(long, default_value_t = 5)]
    max_len: usize,
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CertifyFlowArgs {
    /// Comma-separated values, each `re` or `re:im`.
    #[arg(long, default_value = "0,0.5,0.9")]
    betas: String,
    #[arg(long, default_value_t = 1e-3)]
    t_step: f64,
    #[arg(long, default_value_t = 512)]
    samples: usize,
    #[arg(long, default_value = "0.1,0.5,1,2")]
    times: String,
    /// Axis angle of the model multicone.
    #[arg(long, default_value_t = 0.0)]
    axis: f64,
    /// Target number of boundary samples for the nesting checks.
    #[arg(long, default_value_t = 1000)]
    nest_samples: usize,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FiberArgs {
    #[arg(long, default_value_t = 256)]
    theta_steps: usize,
    /// Plane point `a,b,c` with `ab - c^2 = 1`.
    #[arg(long, default_value = "1,1,0")]
    point: String,
    #[arg(long)]
    conic_position: bool,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// What a command ran with. Parameters use the long flag names with underscores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Tolerance flags such as `tol`, merged into the parameters on replay.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    fn capture<T: Serialize>(command: &str, args: &T, out: Option<&Path>) -> Self {
        let mut params: BTreeMap<String, Value> = match serde_json::to_value(args) {
            Ok(Value::Object(m)) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        let seed = params.remove("seed").and_then(|v| v.as_u64()).unwrap_or(0);
        let mut tolerances = BTreeMap::new();
        if let Some(t) = params.remove("tol").and_then(|v| v.as_f64()) {
            tolerances.insert("tol".to_string(), t);
        }
        Self {
            command: command.to_string(),
            params,
            out: out.map(|p| p.display().to_string()),
            seed,
            tolerances,
        }
    }

    /// Command-line arguments reproducing this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec!["barbot".to_string(), self.command.clone()];
        let flag = |k: &str| format!("--{}", k.replace('_', "-"));
        for (k, v) in &self.params {
            match v {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => args.push(flag(k)),
                Value::String(s) => args.extend([flag(k), s.clone()]),
                other => args.extend([flag(k), other.to_string()]),
            }
        }
        for (k, v) in &self.tolerances {
            args.extend([flag(k), v.to_string()]);
        }
        if self.seed != 0 {
            args.extend(["--seed".to_string(), self.seed.to_string()]);
        }
        if let Some(o) = &self.out {
            args.extend(["--out".to_string(), o.clone()]);
        }
        args
    }
}

/// A failure together with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_)
            | Error::OutOfRegime(_)
            | Error::ShapeMismatch(_)
            | Error::Precondition(_)
            | Error::Csv(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Lemma64(a) => cmd_lemma64(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::GapScan(a) => cmd_gap_scan(&a),
        Command::CertifyFlow(a) => cmd_certify_flow(&a),
        Command::Fiber(a) => cmd_fiber(&a),
        Command::Run(a) => cmd_run(&a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.config.display())))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid run configuration: {e}")))?;
    if cfg.command == "run" {
        return Err(usage("a run configuration cannot replay itself"));
    }
    Ok(run(cfg.to_args()))
}

fn write_json(path: Option<&Path>, value: &Value) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| Failure {
            code: EXIT_FAILURE,
            message: format!("cannot write {}: {e}", p.display()),
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: EXIT_FAILURE,
        message: format!("cannot create {}: {e}", path.display()),
    })
}

/// Plain decimals in a readable range, scientific notation outside it.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn parse_list(s: &str, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn parse_complex(s: &str) -> std::result::Result<C64, Failure> {
    let bad = || usage(format!("bad complex value {s:?}"));
    match s.split_once(':') {
        Some((re, im)) => Ok(C64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        )),
        None => Ok(C64::new(s.trim().parse().map_err(|_| bad())?, 0.0)),
    }
}

fn cmd_lemma64(a: &Lemma64Args) -> CmdResult {
    let config = RunConfig::capture("lemma64", a, a.out.as_deref());
    let grid = CertGrid::with_beta_max(a.beta_max, a.beta_step, a.beta_phases, a.z_steps, a.d_max, a.d_step)?;
    let report = sweep(&grid)?;
    let passed = report.min_margin >= MARGIN_FLOOR && report.oracle_dev <= ORACLE_TOL;
    write_json(
        a.out.as_deref(),
        &json!({
            "config": config,
            "passed": passed,
            "thresholds": { "min_margin": MARGIN_FLOOR, "oracle_dev": ORACLE_TOL },
            "report": report,
        }),
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let config = RunConfig::capture("solve", a, a.out.as_deref());
    let nonzero_t = !a.t_zero && (a.t_const.is_some() || a.t_monomial.is_some());
    if !a.t_zero && a.t_const.is_none() && a.t_monomial.is_none() {
        return Err(usage("choose one of --t-const, --t-zero, --t-monomial"));
    }
    let dom = match a.domain {
        DomainKind::Torus => {
            let p = parse_list(&a.periods, "period")?;
            if p.len() != 2 {
                return Err(usage("--periods takes two values"));
            }
            DomainSpec::torus(p[0], p[1], a.n)?
        }
        DomainKind::Disk => {
            let boundary = match a.boundary.as_deref() {
                None if nonzero_t => return Err(usage("disk solves with t != 0 need --boundary")),
                None | Some("fuchsian") => BoundaryData::Fuchsian,
                Some(path) => {
                    let f = File::open(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
                    BoundaryData::Tabulated(ScalarField::read_csv(f)?)
                }
            };
            DomainSpec::disk(a.radius, a.n, boundary)?
        }
    };
    let datum = if a.t_zero {
        HiggsDatum::zero(&dom)
    } else if let Some(c) = a.t_const {
        HiggsDatum::constant(&dom, c)?
    } else {
        let parts: Vec<&str> = a.t_monomial.as_deref().unwrap_or("").split(',').collect();
        let c = parts.first().and_then(|s| s.trim().parse::<f64>().ok());
        let k = parts.get(1).and_then(|s| s.trim().parse::<u32>().ok());
        match (c, k, parts.len()) {
            (Some(c), Some(k), 2) => HiggsDatum::monomial(&dom, c, k)?,
            _ => return Err(usage("--t-monomial takes c,k")),
        }
    };
    let n = dom.n();
    let mut u0 = match &dom {
        DomainSpec::Disk { boundary: BoundaryData::Tabulated(f), .. } => f.clone(),
        DomainSpec::Disk { .. } => dom.fuchsian_profile()?,
        DomainSpec::Torus { .. } => ScalarField::constant(n, n, 0.0),
    };
    u0 = u0.map(|v| v + a.u0_offset);
    let reference = match (&dom, a.t_zero) {
        (DomainSpec::Disk { boundary: BoundaryData::Fuchsian, .. }, true) => Some(dom.fuchsian_profile()?),
        _ => None,
    };

    match solve(&dom, &datum, &u0, a.tol) {
        Ok((u, report)) => {
            if let Some(p) = &a.out_field {
                u.write_csv(create(p)?)?;
            }
            let mp = max_principle_check(&beta_field(&u, &datum)?, &dom)?;
            let reference_error = reference.map(|r| {
                u.values.iter().zip(&r.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            });
            write_json(
                a.out.as_deref(),
                &json!({
                    "config": config,
                    "converged": true,
                    "report": report,
                    "max_principle": mp,
                    "reference_error": reference_error,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Err(Error::Precondition(message)) => {
            write_json(
                a.out.as_deref(),
                &json!({ "config": config, "converged": false, "error": message }),
            )?;
            Ok(EXIT_FAILURE)
        }
        Err(Error::Solver { message, last_residual, iterations }) => {
            write_json(
                a.out.as_deref(),
                &json!({
                    "config": config,
                    "converged": false,
                    "error": message,
                    "last_residual": last_residual,
                    "iterations": iterations,
                }),
            )?;
            Ok(EXIT_FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_gap_scan(a: &GapScanArgs) -> CmdResult {
    let config = RunConfig::capture("gap-scan", a, a.out.as_deref());
    let rep = match a.family {
        FamilyKind::Red => {
            if a.chi.is_some() {
                return Err(usage("--chi applies to the barbot family only"));
            }
            Representation::reducible_fuchsian()
        }
        FamilyKind::Irr => {
            if a.chi.is_some() {
                return Err(usage("--chi applies to the barbot family only"));
            }
            Representation::irreducible_fuchsian()
        }
        FamilyKind::Barbot => {
            let chi = parse_list(a.chi.as_deref().ok_or_else(|| usage("barbot needs --chi"))?, "chi")?;
            let chi: [f64; 4] = chi.try_into().map_err(|_| usage("--chi takes four values"))?;
            barbot_twist(&octagon_fuchsian(), chi)?
        }
    };
    let scan = gap_scan(&rep, a.max_len, a.budget, a.seed)?;
    if let Some(p) = &a.out_csv {
        let mut w = create(p)?;
        scan.write_csv(&mut w)?;
        w.flush().map_err(Error::from)?;
    }
    write_json(
        a.out.as_deref(),
        &json!({
            "config": config,
            "relation": rep.presentation.relation.to_string(),
            "relation_residual": rep.relation_residual(),
            "summary": scan,
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_certify_flow(a: &CertifyFlowArgs) -> CmdResult {
    let config = RunConfig::capture("certify-flow", a, a.out.as_deref());
    if !(a.t_step > 0.0 && a.t_step.is_finite()) {
        return Err(usage("--t-step must be positive"));
    }
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let betas: Vec<C64> = a.betas.split(',').map(parse_complex).collect::<std::result::Result<_, _>>()?;
    let times = parse_list(&a.times, "time")?;
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(usage("--times must be positive"));
    }
    let pushforward = betas
        .iter()
        .map(|b| pushforward_check(*b, a.t_step, a.samples))
        .collect::<Result<Vec<_>>>()?;
    let flow = flow_nesting_certify(a.axis, &times, a.nest_samples)?;
    let pushed_inside = pushforward.iter().all(|r| r.inside == r.samples);
    let passed = pushed_inside && flow.all_nested;
    write_json(
        a.out.as_deref(),
        &json!({
            "config": config,
            "passed": passed,
            "pushforward": pushforward,
            "flow_nesting": flow,
        }),
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_fiber(a: &FiberArgs) -> CmdResult {
    let config = RunConfig::capture("fiber", a, a.out.as_deref());
    let p = parse_list(&a.point, "point")?;
    if p.len() != 3 {
        return Err(usage("--point takes a,b,c"));
    }
    let x = PlanePoint::new(p[0], p[1], p[2])?;
    if a.theta_steps == 0 {
        return Err(usage("--theta-steps must be positive"));
    }
    let back = x.sqrt_elem().inverse();
    let mut rows = Vec::with_capacity(a.theta_steps);
    let mut max_conic: f64 = 0.0;
    for k in 0..a.theta_steps {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / a.theta_steps as f64;
        let f = fiber_over_interior(&x, theta);
        let model = act_on_flag(&back, &f)?;
        let c = conic_eval(&model.line);
        let d = dual_conic_eval(&model.plane);
        max_conic = max_conic.max(c.abs()).max(d.abs());
        rows.push((theta, f, c, d));
    }
    let mut w: Box<dyn Write> = match &a.out_csv {
        Some(path) => Box::new(create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let mut wr = csv::Writer::from_writer(&mut w);
    wr.write_record(["theta", "x1", "x2", "x3", "y1", "y2", "y3", "conic_eval", "dual_conic_eval"])
        .map_err(Error::from)?;
    for (theta, f, c, d) in &rows {
        let (x, y) = (f.line.coords(), f.plane.coords());
        wr.write_record(
            [*theta, x[0], x[1], x[2], y[0], y[1], y[2], *c, *d].iter().map(|v| fmt_float(*v)),
        )
        .map_err(Error::from)?;
    }
    wr.flush().map_err(Error::from)?;
    drop(wr);
    let conic = if a.conic_position {
        Some(conic_position_check(&Representation::reducible_fuchsian(), a.samples, a.seed)?)
    } else {
        None
    };
    let passed = conic
        .as_ref()
        .is_none_or(|r| r.lines_outside == r.samples && r.planes_meet_interior == r.samples);
    let report = json!({
        "config": config,
        "rows": rows.len(),
        "max_abs_conic_eval": max_conic,
        "conic_position": conic,
        "passed": passed,
    });
    if a.out.is_none() && a.out_csv.is_none() {
        // Stdout carries the CSV.
        eprintln!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        write_json(a.out.as_deref(), &report)?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}
