use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use qpvi::arith::{Field, GaussRat, Mat2, RatFunQ, ToJson, DEFAULT_DEGREE_CAP};
use qpvi::birkhoff::{birkhoff_matrix, schlesinger_pair, SAMPLE_TOL};
use qpvi::confluence::{an_bn_at_one, confluence_rows, make_confluent, p6_taylor, ConfluenceInit};
use qpvi::fuchsian_diff::ThetaDiff;
use qpvi::fuchsian_q::{assemble_qa, compute_b0_c, qlax_residual, qschlesinger_step_with, sigma_lambda, ThetaQ, TripleQ};
use qpvi::ode::OdeOptions;
use qpvi::okamoto::{
    diagram_diff, diagram_omega_limit, diagram_q, diagram_q_modified, integrate_okamoto, trajectory_csv, uv_from_yz, Beta,
    OkaPoint,
};
use qpvi::qp6_dynamics::{
    change_coordinates, discrete_solution, discrete_solution_numeric, CoordChange, Gamma, OrbitPoint, QP6State, SakaiPoint, P1,
};
use qpvi::verify;

type C = Complex64;

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

/// Raised when a checked assertion fails.
#[derive(Debug)]
struct AssertionFailed(String);

impl std::fmt::Display for AssertionFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AssertionFailed {}

#[derive(Parser, Debug)]
#[command(name = "qpvi", version, about = "Discrete and continuous sixth Painleve equations, exactly")]
struct Cli {
    /// JSON config with a "command" key and one key per flag; excludes flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discrete solution of qP_VI as JSON lines.
    Orbit(OrbitArgs),
    /// Coefficients a_n(1), b_n(1) against the Taylor solution.
    Confluence(ConfluenceArgs),
    /// Residual of the q-Lax pair after one q-Schlesinger step.
    Lax(LaxArgs),
    /// Okamoto space: trajectory (CSV) or boundary diagram (DOT/JSON).
    Okamoto(OkamotoArgs),
    /// Birkhoff connection matrix report.
    Birkhoff(BirkhoffArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct QData {
    /// Differential exponents th0,th1,tht,thinf; Theta = 1 + (q-1) th/2.
    #[arg(long, conflicts_with = "big_theta", allow_hyphen_values = true)]
    theta: Option<String>,
    /// Theta0,Theta1,Thetat,Thetainf with Theta_bar = 1/Theta.
    #[arg(long = "Theta", allow_hyphen_values = true)]
    big_theta: Option<String>,
    /// Explicit Theta_bar values (with --Theta).
    #[arg(long = "Theta-bar", requires = "big_theta", allow_hyphen_values = true)]
    theta_bar: Option<String>,
    /// Dilation; `q` itself keeps it symbolic (exact orbits only).
    #[arg(long, allow_hyphen_values = true)]
    q: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Exact,
    Numeric,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[command(flatten)]
    data: QData,
    #[arg(long, allow_hyphen_values = true)]
    t0: String,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    #[arg(long, conflicts_with = "big_z0", allow_hyphen_values = true)]
    z0: Option<String>,
    /// Modified coordinate Z at t0.
    #[arg(long = "Z0", allow_hyphen_values = true)]
    big_z0: Option<String>,
    /// Start on the exceptional line over this center, e.g. gamma_1^+.
    #[arg(long, requires = "e", conflicts_with = "y0", allow_hyphen_values = true)]
    exceptional: Option<String>,
    /// Coordinate on the exceptional line ("inf" allowed).
    #[arg(long, allow_hyphen_values = true)]
    e: Option<String>,
    /// Forward steps.
    #[arg(long, default_value_t = 10)]
    steps: i64,
    /// Backward steps.
    #[arg(long, default_value_t = 0)]
    back: i64,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    /// Degree cap in q for symbolic orbits (`--q q`).
    #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConfluenceArgs {
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[arg(long, allow_hyphen_values = true)]
    t0: String,
    #[arg(long, allow_hyphen_values = true)]
    y0: String,
    #[arg(long = "Z0", allow_hyphen_values = true)]
    big_z0: String,
    #[arg(long, default_value_t = 5)]
    n_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TripleArgs {
    #[arg(long, allow_hyphen_values = true)]
    t: String,
    #[arg(long, allow_hyphen_values = true)]
    lambda: String,
    #[arg(long, allow_hyphen_values = true)]
    y: String,
    #[arg(long = "Z", allow_hyphen_values = true)]
    big_z: String,
}

#[derive(Args, Debug)]
struct LaxArgs {
    #[command(flatten)]
    data: QData,
    #[command(flatten)]
    triple: TripleArgs,
    /// Sample points in x.
    #[arg(long, default_value = "7/3,-5/2,11/4,-2/7+3/5i,1/3+i", allow_hyphen_values = true)]
    x: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BirkhoffArgs {
    #[command(flatten)]
    data: QData,
    #[command(flatten)]
    triple: TripleArgs,
    /// Sample points in x (floats allowed).
    #[arg(long, default_value = "0.7+0.3i,1.7i,-2.3+0.4i,4+i,1.3-2.1i", allow_hyphen_values = true)]
    x: String,
    /// Truncation order of the local solutions.
    #[arg(long, default_value_t = 24)]
    order: usize,
    /// Transport the diagonalizer from t to qt.
    #[arg(long)]
    transported: bool,
    /// Also sample the variant built from the q-logarithm normal form.
    #[arg(long)]
    tilde: bool,
    /// Add this multiple of E12 to A(x, qt).
    #[arg(long, allow_hyphen_values = true)]
    perturb: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OkamotoArgs {
    #[command(subcommand)]
    mode: OkamotoMode,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DiagramKind {
    Q,
    QModified,
    Diff,
    Omega,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DiagramFormat {
    Dot,
    Json,
}

#[derive(Subcommand, Debug)]
enum OkamotoMode {
    /// Integrate the regularized field from t0 to t1; CSV output.
    Trajectory {
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, allow_hyphen_values = true)]
        t0: String,
        #[arg(long, allow_hyphen_values = true)]
        t1: String,
        #[arg(long, requires = "z0", allow_hyphen_values = true)]
        y0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z0: Option<String>,
        /// Start on the exceptional line over this base point, e.g. beta_0^-.
        #[arg(long, requires = "e", conflicts_with = "y0", allow_hyphen_values = true)]
        exceptional: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        e: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        rtol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary intersection diagram.
    Diagram {
        #[arg(long, value_enum)]
        kind: DiagramKind,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long = "Theta", allow_hyphen_values = true)]
        big_theta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, value_enum, default_value_t = DiagramFormat::Dot)]
        format: DiagramFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// "all" or a comma-separated list of criterion ids.
    #[arg(long, default_value = "all", allow_hyphen_values = true)]
    suite: String,
    /// Write the JSON summary here.
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Parsing

/// Exact scalar: `p/q`, integers, optional imaginary part; no floats.
fn exact(s: &str) -> Result<GaussRat> {
    scalar(s, false)
}

/// Scalar as a Gaussian rational; decimals are read exactly when `floats` is set.
fn scalar(s: &str, floats: bool) -> Result<GaussRat> {
    if !floats && s.contains(['.', 'e', 'E']) {
        bail!("{s:?}: floats are accepted only by numeric commands; use p/q");
    }
    Ok(s.parse::<GaussRat>()?)
}

/// Numeric scalar: anything `exact` accepts, decimals or a real float.
fn numeric(s: &str) -> Result<C> {
    if let Ok(v) = s.parse::<GaussRat>() {
        return Ok(v.to_c64());
    }
    let re: f64 = s.trim().parse().map_err(|_| anyhow!("{s:?} is not a number"))?;
    Ok(C::new(re, 0.0))
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|x| f(x.trim())).collect()
}

fn four<T>(s: &str, what: &str, f: impl Fn(&str) -> Result<T>) -> Result<[T; 4]> {
    let v = list(s, f)?;
    let n = v.len();
    v.try_into().map_err(|_| anyhow!("--{what} needs 4 values, got {n}"))
}

fn theta_diff(s: &str) -> Result<ThetaDiff<GaussRat>> {
    let [a, b, c, d] = four(s, "theta", exact)?;
    Ok(ThetaDiff::new(a, b, c, d))
}

fn theta_diff_numeric(s: &str) -> Result<ThetaDiff<C>> {
    let [a, b, c, d] = four(s, "theta", numeric)?;
    Ok(ThetaDiff::new(a, b, c, d))
}

impl QData {
    fn exact(&self) -> Result<(ThetaQ<GaussRat>, GaussRat)> {
        self.parse(false)
    }

    fn parse(&self, floats: bool) -> Result<(ThetaQ<GaussRat>, GaussRat)> {
        let sc = |s: &str| scalar(s, floats);
        let q = sc(&self.q)?;
        let th = match (&self.theta, &self.big_theta) {
            (Some(s), None) => {
                let [a, b, c, d] = four(s, "theta", sc)?;
                ThetaQ::from_diff(&ThetaDiff::new(a, b, c, d), &q)?
            }
            (None, Some(s)) => {
                let th = four(s, "Theta", sc)?;
                match &self.theta_bar {
                    Some(b) => ThetaQ::general(th, four(b, "Theta-bar", sc)?)?,
                    None => {
                        let [a, b, c, d] = th;
                        ThetaQ::inverse(a, b, c, d)?
                    }
                }
            }
            _ => bail!("give exactly one of --theta and --Theta"),
        };
        Ok((th, q))
    }
}

fn triple(a: &TripleArgs, q: &GaussRat, floats: bool) -> Result<TripleQ<GaussRat>> {
    let sc = |s: &str| scalar(s, floats);
    Ok(TripleQ::new(sc(&a.lambda)?, sc(&a.y)?, sc(&a.big_z)?, sc(&a.t)?, q.clone()))
}

fn theta_q_c(th: &ThetaQ<GaussRat>) -> Result<ThetaQ<C>> {
    let c = |v: &GaussRat| v.to_c64();
    Ok(ThetaQ::general([c(&th.th0), c(&th.th1), c(&th.tht), c(&th.thinf)], [
        c(&th.th0b),
        c(&th.th1b),
        c(&th.thtb),
        c(&th.thinfb),
    ])?)
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Commands

/// Initial state over `F`, with scalars lifted from the command line.
fn orbit_state<F: Field>(a: &OrbitArgs, th: ThetaQ<F>, q: F, lift: impl Fn(GaussRat) -> F) -> Result<QP6State<F>> {
    let floats = a.backend == BackendArg::Numeric;
    let sc = |s: &str| Ok::<F, anyhow::Error>(lift(scalar(s, floats)?));
    let t0 = sc(&a.t0)?;
    let point = match (&a.exceptional, &a.y0) {
        (Some(tag), None) => {
            let e = match a.e.as_deref().expect("required by clap") {
                "inf" => P1::Inf,
                v => P1::Fin(sc(v)?),
            };
            SakaiPoint::Exc { tag: Gamma::from_name(tag)?, e }
        }
        (None, Some(y)) => {
            let y = sc(y)?;
            let z = match (&a.z0, &a.big_z0) {
                (Some(z), None) => sc(z)?,
                (None, Some(bz)) => change_coordinates((&y, &sc(bz)?), CoordChange::BigZToZ, &t0, &q, &th)?.1,
                _ => bail!("give exactly one of --z0 and --Z0"),
            };
            SakaiPoint::base(y, z)
        }
        _ => bail!("give --y0 with --z0/--Z0, or --exceptional with --e"),
    };
    Ok(QP6State { theta: th, q, t: t0, point })
}

fn json_lines<F: Field + ToJson>(orbit: &[OrbitPoint<F>], q: &F, th: &ThetaQ<F>) -> Result<String> {
    let mut body = String::new();
    for p in orbit {
        body.push_str(&p.to_json_line(q, th)?.to_string());
        body.push('\n');
    }
    Ok(body)
}

fn orbit(a: &OrbitArgs) -> Result<()> {
    if a.steps < 0 || a.back < 0 {
        bail!("--steps and --back must be nonnegative");
    }
    let body = match a.backend {
        BackendArg::Exact if a.data.q == "q" => {
            let k = |v: GaussRat| RatFunQ::constant(v);
            let q = RatFunQ::q();
            let th = match (&a.data.theta, &a.data.big_theta, &a.data.theta_bar) {
                (Some(s), None, _) => ThetaQ::from_diff(&theta_diff(s)?.map(|v| k(v.clone())), &q)?,
                (None, Some(s), None) => {
                    let [x0, x1, xt, xi] = four(s, "Theta", exact)?.map(k);
                    ThetaQ::inverse(x0, x1, xt, xi)?
                }
                (None, Some(s), Some(b)) => ThetaQ::general(four(s, "Theta", exact)?.map(k), four(b, "Theta-bar", exact)?.map(k))?,
                _ => bail!("give exactly one of --theta and --Theta"),
            };
            let init = orbit_state(a, th, q, k)?;
            json_lines(&discrete_solution(&init, -a.back, a.steps, a.cap)?, &init.q, &init.theta)?
        }
        BackendArg::Exact => {
            let (th, q) = a.data.exact()?;
            let init = orbit_state(a, th, q, |v| v)?;
            json_lines(&discrete_solution(&init, -a.back, a.steps, a.cap)?, &init.q, &init.theta)?
        }
        BackendArg::Numeric => {
            let (th, q) = a.data.parse(true)?;
            let init = orbit_state(a, theta_q_c(&th)?, q.to_c64(), |v| v.to_c64())?;
            json_lines(&discrete_solution_numeric(&init, -a.back, a.steps)?, &init.q, &init.theta)?
        }
    };
    emit(&a.out, &body)
}

fn confluence(a: &ConfluenceArgs) -> Result<()> {
    let th = theta_diff(&a.theta)?;
    let (t0, y0, z0) = (exact(&a.t0)?, exact(&a.y0)?, exact(&a.big_z0)?);
    let init = ConfluenceInit::constant(y0.clone(), z0.clone(), t0.clone());
    let vals = an_bn_at_one(&init, &make_confluent(&th), a.n_max)?;
    let (ys, zs) = p6_taylor(&y0, &z0, &t0, &th, a.n_max + 1)?;
    let rows = confluence_rows(&vals, &ys, &zs);
    let v = json!({
        "theta": th.to_json(),
        "t0": t0.to_json(),
        "y0": y0.to_json(),
        "Z0": z0.to_json(),
        "rows": rows.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        "all_equal": rows.iter().all(|r| r.equal()),
        "all_equal_delta": rows.iter().all(|r| r.equal_delta()),
    });
    emit(&a.out, &pretty(&v))
}

fn lax(a: &LaxArgs) -> Result<()> {
    let (th, q) = a.data.exact()?;
    let tr = triple(&a.triple, &q, false)?;
    let f = assemble_qa(&tr, &th)?;
    let sl = sigma_lambda(&tr, &th)?;
    let (b0, cg) = compute_b0_c(&f, &tr, &th, &sl)?;
    let fq = qschlesinger_step_with(&f, &tr, &th, &b0, &cg)?;
    let xs = list(&a.x, exact)?;
    let rep = qlax_residual(&f, &fq, &q, &th, &b0, &cg, &xs)?;
    let v = json!({"A_t": f.to_json(), "A_qt": fq.to_json(), "B0": b0.to_json(), "report": rep.to_json()});
    emit(&a.out, &pretty(&v))
}

fn birkhoff(a: &BirkhoffArgs) -> Result<()> {
    let (th, q) = a.data.parse(true)?;
    let tr = triple(&a.triple, &q, true)?;
    let mut pair = schlesinger_pair(&tr, &th, |v| v.to_c64())?;
    if let Some(e) = &a.perturb {
        let z = C::new(0.0, 0.0);
        pair = pair.perturbed(Mat2::new(z, numeric(e)?, z, z));
    }
    let xs = list(&a.x, numeric)?;
    let (ft, fq) = pair.fundamentals(a.order, a.transported)?;
    let rep = birkhoff_matrix(&ft, &fq, &xs, Some(&pair.lax), SAMPLE_TOL)?;
    let mut v = json!({
        "report": rep.to_json(),
        "max_pseudo": rep.max_pseudo(),
        "max_b0_binf": rep.max_b0_binf(),
        "max_rational": rep.max_rational(),
        "equivalence_holds": rep.equivalence_holds(1e-8),
    });
    if a.tilde {
        let tilde = xs.iter().map(|x| Ok(ft.birkhoff_tilde(*x)?.to_json())).collect::<Result<Vec<_>>>()?;
        v["tilde"] = Value::Array(tilde);
    }
    emit(&a.out, &pretty(&v))
}

fn okamoto(a: &OkamotoArgs) -> Result<()> {
    match &a.mode {
        OkamotoMode::Trajectory { theta, t0, t1, y0, z0, exceptional, e, rtol, out } => {
            let th = theta_diff_numeric(theta)?;
            let (t0, t1) = (numeric(t0)?, numeric(t1)?);
            let p0 = match (exceptional, y0, z0) {
                (Some(b), None, _) => {
                    let e = e.as_deref().expect("required by clap");
                    let w = if e == "inf" { P1::Inf } else { P1::Fin(numeric(e)?) };
                    OkaPoint::exceptional(Beta::from_name(b)?, w)
                }
                (None, Some(y), Some(z)) => OkaPoint::hirz(uv_from_yz(&numeric(y)?, &numeric(z)?, &t0)),
                _ => bail!("give --y0 and --z0, or --exceptional with --e"),
            };
            let opts = OdeOptions { rtol: *rtol, ..OdeOptions::default() };
            let nodes = integrate_okamoto(&p0, t0, t1, &th, &opts)?;
            emit(out, &trajectory_csv(&nodes))
        }
        OkamotoMode::Diagram { kind, theta, big_theta, q, t, format, out } => {
            let t = exact(t)?;
            let data = |q: &Option<String>| -> Result<(ThetaQ<GaussRat>, GaussRat)> {
                let q = q.clone().ok_or_else(|| anyhow!("--q is required for q diagrams"))?;
                QData { theta: theta.clone(), big_theta: big_theta.clone(), theta_bar: None, q }.exact()
            };
            let diff = || -> Result<ThetaDiff<GaussRat>> {
                theta_diff(theta.as_deref().ok_or_else(|| anyhow!("--theta is required for this diagram"))?)
            };
            let d = match kind {
                DiagramKind::Q => {
                    let (th, q) = data(q)?;
                    diagram_q(&t, &q, &th)?
                }
                DiagramKind::QModified => {
                    let (th, q) = data(q)?;
                    diagram_q_modified(&t, &q, &th)?
                }
                DiagramKind::Diff => diagram_diff(&diff()?, &t)?,
                DiagramKind::Omega => diagram_omega_limit(&diff()?, &t)?,
            };
            let body = match format {
                DiagramFormat::Dot => d.to_dot(),
                DiagramFormat::Json => pretty(&d.to_json()),
            };
            emit(out, &body)
        }
    }
}

fn run_verify(a: &VerifyArgs) -> Result<()> {
    let ids = if a.suite == "all" {
        verify::criterion_ids()
    } else {
        list(&a.suite, |s| s.parse::<u8>().map_err(|_| anyhow!("bad criterion id {s:?}")))?
    };
    let known = verify::criterion_ids();
    if let Some(bad) = ids.iter().find(|i| !known.contains(i)) {
        bail!("unknown criterion {bad}");
    }
    let mut reports = Vec::new();
    for id in ids {
        let r = verify::run(id)?;
        println!("{}", r.line());
        reports.push(r);
    }
    if let Some(p) = &a.out {
        fs::write(p, pretty(&verify::suite_json(&reports))).with_context(|| format!("writing {}", p.display()))?;
    }
    let failing: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if !failing.is_empty() {
        return Err(AssertionFailed(format!("failing criteria: {}", failing.join(", "))).into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Config files

/// Turns `{"command": "orbit", "t0": "2", "transported": true, ...}` into argv.
fn config_argv(v: &Value) -> Result<Vec<String>> {
    let obj = v.as_object().ok_or_else(|| anyhow!("config must be a JSON object"))?;
    let cmd = obj.get("command").and_then(Value::as_str).ok_or_else(|| anyhow!("config needs a string \"command\""))?;
    let mut argv = vec!["qpvi".to_string()];
    argv.extend(cmd.split_whitespace().map(String::from));
    for (k, val) in obj {
        if k == "command" {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match val {
            Value::Bool(true) => argv.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => argv.extend([flag, s.clone()]),
            Value::Number(n) => argv.extend([flag, n.to_string()]),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(anyhow!("config key {k:?}: list items must be strings or numbers")),
                    })
                    .collect::<Result<_>>()?;
                argv.extend([flag, parts.join(",")]);
            }
            Value::Object(_) => bail!("config key {k:?}: nested objects are not supported"),
        }
    }
    Ok(argv)
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Orbit(a) => orbit(a),
        Command::Confluence(a) => confluence(a),
        Command::Lax(a) => lax(a),
        Command::Okamoto(a) => okamoto(a),
        Command::Birkhoff(a) => birkhoff(a),
        Command::Verify(a) => run_verify(a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<AssertionFailed>().is_some() {
        return EXIT_ASSERTION;
    }
    match e.downcast_ref::<qpvi::Error>() {
        Some(err) if err.is_resource() => EXIT_RESOURCE,
        _ => EXIT_CONFIG,
    }
}

fn resolve(cli: Cli) -> Result<Command> {
    match (cli.config, cli.command) {
        (Some(_), Some(_)) => bail!("--config and command-line flags are mutually exclusive"),
        (None, None) => bail!("no command given; see --help"),
        (None, Some(c)) => Ok(c),
        (Some(path), None) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let parsed = Cli::try_parse_from(config_argv(&v)?).map_err(|e| anyhow!("config {}: {e}", path.display()))?;
            parsed.command.ok_or_else(|| anyhow!("config names no command"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|c| dispatch(&c));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
