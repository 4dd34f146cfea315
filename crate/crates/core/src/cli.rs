//! Command-line front end. Reports go to stdout as JSON, profiles to CSV.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::ball::{
    build_green, continue_in_amplitude, estimate_lambda_star, monotone_iterate, ContinuationOptions,
};
use crate::entire::{fit_power_law, multistart, solve_entire, EntireOptions, InitialGuess, Method};
use crate::error::{Error, Result};
use crate::exponents::{classify, first_eigenvalue, ProblemParams, Verdict};
use crate::io::{parse_config, read_profile, write_profile};
use crate::radial::{AngularOptions, RadialGrid, RieszOperator};
use crate::special::{kelvin_sigma, kelvin_transform, singular_solution};
use crate::verify::{
    check_pohozaev_energy, check_pohozaev_full_m1, check_ring, check_serrin_zou, check_sph, Nonlinearity,
    VerificationReport,
};

#[derive(Parser, Debug)]
#[command(name = "polyhenon", version, about = "Polyharmonic Hardy-Henon laboratory")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regime certificate for one parameter point.
    Classify(ParamArgs),
    /// Certificates over a (sigma, p) lattice.
    Sweep(SweepArgs),
    /// Entire solution on R^n or minimal ball solution at one lambda.
    Solve(SolveArgs),
    /// Minimal branch, lambda* bracket and optional continuation.
    Branch(BranchArgs),
    /// Checks on a profile CSV.
    Verify(VerifyArgs),
    /// Kelvin image of a profile CSV.
    Kelvin(KelvinArgs),
    /// Singular solution C0 |x|^-theta.
    Singular(SingularArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ParamArgs {
    #[arg(short = 'n')]
    n: Option<u32>,
    #[arg(short = 'm')]
    m: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(short = 'p', allow_negative_numbers = true)]
    p: Option<f64>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct GridArgs {
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// `lo:hi:count`
    #[arg(long, allow_hyphen_values = true, default_value = "0:4:9")]
    sigma_range: String,
    #[arg(long, allow_hyphen_values = true, default_value = "1.5:9:16")]
    p_range: String,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Newton,
    Picard,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, conflicts_with = "ball")]
    entire: bool,
    #[arg(long)]
    ball: bool,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Number of multi-start runs; 1 solves from the bubble guess.
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for profile.csv and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BranchArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Bracket width for lambda*.
    #[arg(long)]
    tol: Option<f64>,
    /// Continue past the fold until u(0) reaches this value.
    #[arg(long)]
    continue_to: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    profile: PathBuf,
    /// Comma list of sph, pohozaev, pohozaev-m1, serrin-zou, ring.
    #[arg(long, value_delimiter = ',', default_value = "sph,serrin-zou,ring")]
    checks: Vec<String>,
    /// Ball problem parameter; selects `λ|x|^σ(1+u)^p` as right-hand side.
    #[arg(long)]
    lambda: Option<f64>,
    /// Lowest enforced SPH order.
    #[arg(long, default_value_t = 1)]
    ell: u32,
    /// Outer radius for pohozaev-m1; defaults to the last node.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct KelvinArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SingularArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Validated parameters plus the remaining config entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ProblemParams,
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    fn grid(&self, g: &GridArgs, default: (f64, f64, usize)) -> Result<RadialGrid> {
        let lo = self.pick(g.r_min, "r_min", default.0)?;
        let hi = self.pick(g.r_max, "r_max", default.1)?;
        let count = self.pick(g.nodes, "nodes", default.2)?;
        RadialGrid::geometric(lo, hi, count)
    }
}

impl ParamArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let entries = match &self.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        let partial = RunConfig { params: ProblemParams::new(0, 0, 0.0, 0.0), entries };
        let need = |what: &str| Error::InvalidParams(format!("missing parameter {what}"));
        let n = self.n.or(partial.get("n")?).ok_or_else(|| need("n"))?;
        let m = self.m.or(partial.get("m")?).ok_or_else(|| need("m"))?;
        let sigma = self.sigma.or(partial.get("sigma")?).ok_or_else(|| need("sigma"))?;
        let p = self.p.or(partial.get("p")?).ok_or_else(|| need("p"))?;
        let params = ProblemParams::new(n, m, sigma, p);
        params.validate()?;
        Ok(RunConfig { params, ..partial })
    }
}

const ENTIRE_GRID: (f64, f64, usize) = (1e-3, 1e3, 513);
const BALL_GRID: (f64, f64, usize) = (1e-8, 1.0, 384);

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn out_dir(dir: &Option<PathBuf>) -> Result<Option<&Path>> {
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    Ok(dir.as_deref())
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("range {s:?}: expected lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(match k {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    })
}

fn cmd_classify(a: &ParamArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.resolve()?;
    emit(out, &classify(&cfg.params)?)?;
    Ok(0)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::NoneExists => "none",
        Verdict::Exists => "exists",
        Verdict::Unknown => "unknown",
    }
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let mut base = a.params.clone();
    base.sigma = base.sigma.or(Some(0.0));
    base.p = base.p.or(Some(2.0));
    let cfg = base.resolve()?;
    let (n, m) = (cfg.params.n, cfg.params.m);
    let sigmas = parse_range(&a.sigma_range)?;
    let ps = parse_range(&a.p_range)?;
    let jobs: Vec<(f64, f64)> = sigmas.iter().flat_map(|&s| ps.iter().map(move |&p| (s, p))).collect();
    let rows: Vec<Value> = jobs
        .par_iter()
        .map(|&(sigma, p)| {
            let params = ProblemParams::new(n, m, sigma, p);
            match classify(&params) {
                Ok(c) => json!({
                    "sigma": sigma,
                    "p": p,
                    "theta": c.exponents.theta,
                    "p_sobolev": c.exponents.p_sobolev,
                    "p_serrin": c.exponents.p_serrin,
                    "distributional": verdict_name(c.distributional.verdict),
                    "classical": verdict_name(c.classical.verdict),
                    "punctured": verdict_name(c.punctured.verdict),
                }),
                Err(e) => json!({ "sigma": sigma, "p": p, "error": e.to_string() }),
            }
        })
        .collect();
    if a.csv {
        writeln!(out, "sigma,p,theta,distributional,classical,punctured")?;
        for r in &rows {
            let cell = |k: &str| match &r[k] {
                Value::String(s) => s.clone(),
                Value::Null => "invalid".into(),
                v => v.to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                cell("sigma"),
                cell("p"),
                cell("theta"),
                cell("distributional"),
                cell("classical"),
                cell("punctured")
            )?;
        }
    } else {
        emit(out, &json!({ "n": n, "m": m, "rows": rows }))?;
    }
    Ok(0)
}

fn entire_options(cfg: &RunConfig, a: &SolveArgs) -> Result<EntireOptions> {
    let mut opts = EntireOptions::default();
    opts.tol = cfg.pick(a.tol, "tol", opts.tol)?;
    opts.max_iter = cfg.pick(a.max_iter, "max_iter", opts.max_iter)?;
    let method = match a.method {
        Some(m) => m,
        None => match cfg.entries.get("method").map(String::as_str) {
            None | Some("newton") => MethodArg::Newton,
            Some("picard") => MethodArg::Picard,
            Some(other) => return Err(Error::Parse(format!("unknown method {other:?}"))),
        },
    };
    opts.method = match method {
        MethodArg::Newton => Method::Newton,
        MethodArg::Picard => Method::Picard { damping: cfg.pick(a.damping, "damping", 0.5)? },
    };
    Ok(opts)
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.params.resolve()?;
    let params = cfg.params;
    let dir = out_dir(&a.out)?;
    if a.ball {
        let lambda = a
            .lambda
            .or(cfg.get("lambda")?)
            .ok_or_else(|| Error::InvalidParams("--ball needs --lambda".into()))?;
        let grid = cfg.grid(&a.grid, BALL_GRID)?;
        let op = build_green(params.n, params.m, &grid)?;
        let point = monotone_iterate(&op, &params, lambda)?;
        let report = json!({
            "lambda": point.lambda,
            "sup_norm": point.sup_norm,
            "iterations": point.iterations,
            "u_at_zero": point.u_at_zero(),
        });
        if let Some(d) = dir {
            write_profile(&d.join("profile.csv"), &point.u, &[])?;
            write_json(&d.join("report.json"), &report)?;
        }
        emit(out, &report)?;
        return Ok(0);
    }
    let cert = classify(&params)?;
    let grid = cfg.grid(&a.grid, ENTIRE_GRID)?;
    let op = RieszOperator::build_env(params.n, params.m, &grid, AngularOptions::default())?;
    let opts = entire_options(&cfg, a)?;
    let starts = cfg.pick(a.starts, "starts", 1)?;
    if starts > 1 {
        let seed = cfg.pick(a.seed, "seed", 0)?;
        let outcomes = multistart(&params, &op, &opts, starts, seed)?;
        let found = outcomes.iter().any(|o| o.converged && o.classical);
        let report = json!({
            "starts": outcomes,
            "classical_found": found,
            "classical_verdict": cert.classical,
        });
        if let Some(d) = dir {
            write_json(&d.join("report.json"), &report)?;
        }
        emit(out, &report)?;
        return Ok(if found { 0 } else { 1 });
    }
    let init = InitialGuess::Bubble.build(&params, &grid)?;
    match solve_entire(&params, &init, &op, &opts) {
        Ok((u, report)) => {
            if let Some(d) = dir {
                write_profile(&d.join("profile.csv"), &u, &[])?;
                write_json(&d.join("report.json"), &report)?;
            }
            emit(out, &report)?;
            Ok(0)
        }
        Err(Error::NonConvergence(msg)) => {
            let mut report = json!({ "converged": false, "message": msg });
            if cert.classical.verdict == Verdict::NoneExists {
                report["evidence_for"] = json!(cert.classical.statement);
            }
            if let Some(d) = dir {
                write_json(&d.join("report.json"), &report)?;
            }
            emit(out, &report)?;
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_branch(a: &BranchArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.params.resolve()?;
    let params = cfg.params;
    let tol = cfg.pick(a.tol, "tol", 1e-3)?;
    let grid = cfg.grid(&a.grid, BALL_GRID)?;
    let op = build_green(params.n, params.m, &grid)?;
    let ((lo, hi), mut branch) = estimate_lambda_star(&op, &params, tol)?;
    let lambda_one = first_eigenvalue(params.n, params.m, params.sigma, &op)?;
    if let Some(s_max) = a.continue_to.or(cfg.get("continue_to")?) {
        let start = branch.points.last().expect("branch has a converged point").clone();
        let opts = ContinuationOptions { s_max, ..Default::default() };
        branch.continuation = continue_in_amplitude(&op, &params, &start, opts)?;
    }
    let report = json!({
        "lambda_star_bracket": [lo, hi],
        "lambda_one": lambda_one,
        "eigenvalue_bound": lambda_one / params.p,
        "bound_holds": lo <= lambda_one / params.p + tol,
        "points": branch.points,
        "continuation": branch.continuation,
        "warnings": branch.warnings,
    });
    if let Some(d) = out_dir(&a.out)? {
        for (i, p) in branch.points.iter().chain(&branch.continuation).enumerate() {
            write_profile(&d.join(format!("branch_{i:03}.csv")), &p.u, &[])?;
        }
        write_json(&d.join("branch.json"), &report)?;
    }
    emit(out, &report)?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.params.resolve()?;
    let params = cfg.params;
    let u = read_profile(&a.profile)?;
    let f = match a.lambda.or(cfg.get("lambda")?) {
        Some(lambda) => Nonlinearity::HardyHenon { lambda, sigma: params.sigma, p: params.p, shift: 1.0 },
        None => Nonlinearity::pure(&params),
    };
    let mut rep = VerificationReport::default();
    for name in &a.checks {
        let part = match name.trim() {
            "sph" => check_sph(&u, &params, a.ell)?,
            "pohozaev" => {
                let op = build_green(params.n, params.m, &RadialGrid::geometric(1e-3, 1.0, 32)?)?;
                check_pohozaev_energy(&u, &op, &f, a.threshold.unwrap_or(1e-4))?
            }
            "pohozaev-m1" => {
                let radius = a.radius.unwrap_or(u.grid().r_max());
                check_pohozaev_full_m1(&u, &params, &f, radius, a.threshold.unwrap_or(1e-3))?
            }
            "serrin-zou" => check_serrin_zou(&u, &params)?,
            "ring" => check_ring(&u, &params)?,
            other => return Err(Error::InvalidParams(format!("unknown check {other:?}"))),
        };
        rep.merge(part);
    }
    let passed = rep.passed();
    emit(out, &json!({ "passed": passed, "report": rep }))?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_kelvin(a: &KelvinArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.params.resolve()?;
    let params = cfg.params;
    let u = read_profile(&a.profile)?;
    let v = kelvin_transform(&u, params.n, params.m);
    let g = v.grid();
    let inner = fit_power_law(&v, (g.r_min(), g.r_min() * 10.0)).ok();
    let outer = fit_power_law(&v, (g.r_max() / 10.0, g.r_max())).ok();
    let report = json!({
        "sigma_tilde": kelvin_sigma(&params),
        "inner_fit": inner,
        "tail_fit": outer,
        "inner_law": v.inner_law,
        "tail_law": v.tail_law,
    });
    if let Some(path) = &a.out {
        write_profile(path, &v, &[])?;
    }
    emit(out, &report)?;
    Ok(0)
}

fn cmd_singular(a: &SingularArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.params.resolve()?;
    let s = singular_solution(&cfg.params)?;
    if let Some(path) = &a.out {
        let grid = cfg.grid(&a.grid, ENTIRE_GRID)?;
        write_profile(path, &s.profile(&grid), &[])?;
    }
    emit(out, &s)?;
    Ok(0)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
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
    let result = match &cli.command {
        Command::Classify(a) => cmd_classify(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Branch(a) => cmd_branch(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Kelvin(a) => cmd_kelvin(a, out),
        Command::Singular(a) => cmd_singular(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(std::iter::once("polyhenon").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn classify_examples() {
        let (code, text) = run_str(&["classify", "-n", "7", "-m", "2", "--sigma", "0", "-p", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["distributional"]["verdict"], "NoneExists");
        let (_, text) = run_str(&["classify", "-n", "7", "-m", "2", "--sigma", "0", "-p", "4"]);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["classical"]["verdict"], "Exists");
        let (code, _) = run_str(&["classify", "-n", "3", "-m", "1", "--sigma", "-2", "-p", "2"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_and_malformed_input() {
        assert_eq!(run_str(&["classify", "-n", "7", "-m", "2", "-p", "2"]).0, 2);
        assert_eq!(run_str(&["classify", "-n", "x"]).0, 2);
        assert_eq!(run_str(&["sweep", "-n", "7", "-m", "2", "--p-range", "1:2"]).0, 2);
    }

    #[test]
    fn config_file_and_override() {
        let dir = std::env::temp_dir().join(format!("polyhenon-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "n = 7\nm = 2\nsigma = 0\np = 2 # distributional none\n").unwrap();
        let cfg = path.to_str().unwrap();
        let (code, text) = run_str(&["classify", "--config", cfg]);
        assert_eq!(code, 0);
        assert!(text.contains("NoneExists"));
        let (_, text) = run_str(&["classify", "--config", cfg, "-p", "4"]);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["params"]["p"], 4.0);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sweep_is_deterministic() {
        let args = ["sweep", "-n", "7", "-m", "2", "--sigma-range", "-1:2:4", "--p-range", "1.5:6:10"];
        let (c1, a) = run_str(&args);
        let (c2, b) = run_str(&args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 40);
        let (_, csv) = run_str(&["sweep", "-n", "7", "-m", "2", "--sigma-range", "0:0:1", "--p-range", "2:4:2", "--csv"]);
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn singular_reports_constant() {
        let (code, text) = run_str(&["singular", "-n", "7", "-m", "2", "--sigma", "0", "-p", "3"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!((v["C0"].as_f64().unwrap() - 24f64.sqrt()).abs() < 1e-12);
        let (code, _) = run_str(&["singular", "-n", "7", "-m", "2", "--sigma", "0", "-p", "2"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("-1:1:1").unwrap(), vec![-1.0]);
        assert!(parse_range("a:b:c").is_err());
    }
}
