//! `cflab`: stability coefficients, von Neumann curves and perturbation
//! growth experiments for explicit Euler-equation time steppers.

mod output;

use anyhow::{anyhow, bail, Context, Result};
use cflab::coeffs::{
    compute_s, expand_perturbation, multistep_profile, principal_root_series, taylor_alpha, CoefficientReport,
};
use cflab::experiments::{
    cfl_scan, check_bound, default_c_thresh, measure_growth, scheme_profile, GrowthConfig, GrowthMode,
    GrowthOutcome, ScanOptions, ScanResult,
};
use cflab::integrate::{simulate, write_trajectory_csv, FlowState};
use cflab::rational;
use cflab::scheme::{parse_tableau, Scheme, SchemeId, TaylorScheme};
use cflab::spectral::skewness_defect;
use cflab::von_neumann::{
    amplification, multistep_roots, stable_interval_end, write_csv, AmplificationSample,
};
use cflab::{Field, Grid, Profile, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use output::Sink;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "cflab", version, about = "CFL-type stability laboratory for explicit Euler schemes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Seed for every random choice (perturbation phases, test fields).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write artifacts and a manifest.json here instead of stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Machine-readable output format. Without --out-dir the artifact is
    /// printed instead of the summary table.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Stability verdict constant: stable iff rho <= 1 + cthresh * dt
    /// [default: 2 * A1 + 1 for the base flow]
    #[arg(long, global = true)]
    cthresh: Option<f64>,
    /// Simulated time T for growth runs.
    #[arg(long, global = true, default_value_t = cflab::experiments::DEFAULT_HORIZON)]
    horizon: f64,
    /// How the perturbation is evolved.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Linearized)]
    mode: ModeArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Linearized,
    Nonlinear,
}

impl From<ModeArg> for GrowthMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linearized => GrowthMode::Linearized,
            ModeArg::Nonlinear => GrowthMode::NonlinearDifference,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SchemeArg {
    /// Built-in scheme: explicit-euler, centered-2, rk4, ab2.
    scheme: Option<String>,
    /// Plain-text tableau file instead of a built-in scheme.
    #[arg(long, conflicts_with = "scheme")]
    tableau: Option<PathBuf>,
}

impl SchemeArg {
    fn resolve(&self) -> Result<Scheme> {
        match (&self.scheme, &self.tableau) {
            (Some(name), None) => Ok(name.parse::<SchemeId>()?.scheme()),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let mut t = parse_tableau(&text).with_context(|| path.display().to_string())?;
                if t.name.is_empty() {
                    t.name = path.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned());
                }
                t.validate().into_result()?;
                Ok(Scheme::OneStep(t))
            }
            _ => bail!("give a scheme name or --tableau FILE"),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact perturbation coefficients alpha, beta, S and the predicted CFL exponent.
    Coeffs {
        #[command(flatten)]
        scheme: SchemeArg,
        /// Pure Taylor truncation of order M instead of a scheme.
        #[arg(long, value_name = "M", conflicts_with_all = ["scheme", "tableau"])]
        taylor: Option<usize>,
    },
    /// Amplification factor |xi(theta)|^2 for constant advection.
    Vn {
        #[command(flatten)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 3.0)]
        theta_max: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
    },
    /// Discrete skewness <v, (u.grad) v> on random divergence-free pairs.
    SkewCheck {
        n: usize,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
    /// Integrates the Euler equations and logs energy and max|u|.
    Simulate {
        scheme: String,
        n: usize,
        dt: f64,
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Init::TaylorGreen)]
        init: Init,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1)]
        log_every: usize,
    },
    /// Per-step growth rate of a smallest-scale perturbation on Taylor-Green.
    Growth {
        scheme: String,
        n: usize,
        dt: f64,
        /// Also compare rho with the analytic bound.
        #[arg(long)]
        bound: bool,
    },
    /// Largest stable dt on each grid and the fitted exponent of dt* against dx.
    CflScan {
        #[command(flatten)]
        scheme: SchemeArg,
        /// Comma-separated grid sizes, e.g. 32,64,128,256.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        #[arg(long, default_value_t = cflab::experiments::BISECTION_ITERATIONS)]
        iterations: usize,
        /// Fail unless the fitted exponent lies in LO:HI.
        #[arg(long, value_name = "LO:HI")]
        expect: Option<String>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Init {
    TaylorGreen,
    TwoVortex,
}

/// Verdicts collected by a command; empty means nothing failed.
#[derive(Default)]
struct Verdicts {
    failures: Vec<String>,
}

impl Verdicts {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

fn q(x: &Rational) -> String {
    format!("{:>12}  {:>+.6e}", rational::format(x), rational::to_f64(x))
}

fn coeffs(common: &Common, scheme: &SchemeArg, taylor: Option<usize>, sink: &mut Sink) -> Result<()> {
    let (name, expansion, profile) = match taylor {
        Some(m) => {
            let e = taylor_alpha(TaylorScheme::new(m)?);
            let p = compute_s(&e)?;
            (format!("taylor-{m}"), Some(e), p)
        }
        None => match scheme.resolve()? {
            Scheme::OneStep(t) => {
                let e = expand_perturbation(&t)?;
                let p = compute_s(&e)?;
                (t.name.clone(), Some(e), p)
            }
            Scheme::Multistep(m) => {
                let p = multistep_profile(&m, 8)?;
                let alpha = principal_root_series(&m, 8);
                let e = cflab::coeffs::AmplificationExpansion { alpha, beta: rational::int(1) };
                (m.name.clone(), Some(e), p)
            }
        },
    };
    let report = CoefficientReport::new(&name, expansion.as_ref(), &profile);
    match (common.format, sink.has_dir()) {
        (Some(Format::Json), _) | (None, true) => {
            let mut text = serde_json::to_vec_pretty(&report)?;
            text.push(b'\n');
            sink.emit("coeffs.json", &text)?;
        }
        (Some(Format::Csv), _) => {
            let mut out = String::from("kind,index,value,decimal\n");
            if let Some(e) = &expansion {
                for (i, a) in e.alpha.iter().enumerate() {
                    out += &format!("alpha,{i},{},{:e}\n", rational::format(a), rational::to_f64(a));
                }
                out += &format!("beta,,{},{:e}\n", rational::format(&e.beta), rational::to_f64(&e.beta));
            }
            for (l, s) in profile.s.iter().enumerate() {
                out += &format!("S,{l},{},{:e}\n", rational::format(s), rational::to_f64(s));
            }
            sink.emit("coeffs.csv", out.as_bytes())?;
        }
        (None, false) => {}
    }
    if common.format.is_none() || sink.has_dir() {
        print_coeffs(&name, expansion.as_ref(), &profile);
    }
    Ok(())
}

fn print_coeffs(name: &str, e: Option<&cflab::Expansion>, p: &Profile) {
    println!("scheme {name}");
    if let Some(e) = e {
        for (i, a) in e.alpha.iter().enumerate() {
            println!("  alpha_{i:<2} {}", q(a));
        }
        println!("  beta     {}", q(&e.beta));
    }
    for (l, s) in p.s.iter().enumerate() {
        println!("  S_{l:<6} {}", q(s));
    }
    match (p.r, &p.cfl_exponent) {
        (Some(r), Some(x)) => println!(
            "r = {r}, sign(S_r) = {:+}, predicted CFL exponent {} ({:.6})",
            p.sign_r,
            rational::format(x),
            rational::to_f64(x)
        ),
        _ => println!("all S_l with l >= 1 vanish: no growth at any order"),
    }
}

fn vn(common: &Common, scheme: &SchemeArg, theta_max: f64, points: usize, sink: &mut Sink) -> Result<()> {
    if points < 2 || !(theta_max > 0.0) {
        bail!("need at least 2 points and a positive --theta-max");
    }
    let scheme = scheme.resolve()?;
    let thetas = (0..points).map(|i| theta_max * i as f64 / (points - 1) as f64);
    let (samples, end): (Vec<AmplificationSample<f64>>, Option<f64>) = match &scheme {
        Scheme::OneStep(t) => {
            let e = expand_perturbation(t)?;
            let samples = thetas.map(|th| amplification(&e, th)).collect();
            let p = compute_s(&e)?;
            let end = (p.sign_r < 0).then(|| stable_interval_end(&e, 10.0 * theta_max, 1e-3)).flatten();
            (samples, end)
        }
        Scheme::Multistep(m) => {
            let samples = thetas
                .map(|th| {
                    let [a, b] = multistep_roots(m, th)?;
                    let xi = if a.norm_sqr() >= b.norm_sqr() { a } else { b };
                    Ok(AmplificationSample { theta: th, xi, modulus_sq: xi.norm_sqr() })
                })
                .collect::<Result<Vec<_>>>()?;
            (samples, None)
        }
    };
    match (common.format, sink.has_dir()) {
        (Some(Format::Json), _) => sink.emit("vn.json", &serde_json::to_vec_pretty(&samples)?)?,
        (Some(Format::Csv), _) | (None, true) => {
            let mut buf = Vec::new();
            write_csv(&samples, &mut buf)?;
            sink.emit("vn.csv", &buf)?;
        }
        (None, false) => {}
    }
    if common.format.is_none() || sink.has_dir() {
        let worst = samples.iter().map(|s| s.modulus_sq).fold(f64::MIN, f64::max);
        let least = samples.iter().map(|s| s.modulus_sq).fold(f64::MAX, f64::min);
        println!("scheme {}: {} samples on [0, {theta_max}]", scheme.name(), samples.len());
        println!("  min |xi|^2 = {least:.12}, max |xi|^2 = {worst:.12}");
        if let Some(t) = end {
            println!("  |xi|^2 <= 1 up to theta* = {t:.12}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SkewReport {
    n: usize,
    pairs: usize,
    worst_defect: f64,
    no_dealiasing_defect: f64,
    tolerance: f64,
}

fn skew_check(common: &Common, n: usize, pairs: usize, sink: &mut Sink, v: &mut Verdicts) -> Result<()> {
    let worst = |g: &Grid, rng: &mut ChaCha8Rng| -> Result<f64> {
        let mut w = 0.0f64;
        for _ in 0..pairs {
            let a = Field::random_divfree(g, rng);
            let b = Field::random_divfree(g, rng);
            w = w.max(skewness_defect(&a, &b)?);
        }
        Ok(w)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let report = SkewReport {
        n,
        pairs,
        worst_defect: worst(&Grid::new(n)?, &mut rng)?,
        no_dealiasing_defect: worst(&Grid::without_dealiasing(n)?, &mut rng)?,
        tolerance: 1e-10,
    };
    v.check(report.worst_defect <= report.tolerance, format!("skewness defect {:e}", report.worst_defect));
    emit_json_or_csv(common, sink, "skew", &report, || {
        format!(
            "n,pairs,worst_defect,no_dealiasing_defect\n{},{},{:e},{:e}\n",
            report.n, report.pairs, report.worst_defect, report.no_dealiasing_defect
        )
    })?;
    if common.format.is_none() || sink.has_dir() {
        println!(
            "n = {n}, {pairs} pairs: worst defect {:.3e} (tolerance 1e-10), without dealiasing {:.3e}",
            report.worst_defect, report.no_dealiasing_defect
        );
    }
    Ok(())
}

fn emit_json_or_csv<T: Serialize>(
    common: &Common,
    sink: &mut Sink,
    stem: &str,
    value: &T,
    csv: impl FnOnce() -> String,
) -> Result<()> {
    match (common.format, sink.has_dir()) {
        (Some(Format::Json), _) | (None, true) => {
            let mut text = serde_json::to_vec_pretty(value)?;
            text.push(b'\n');
            sink.emit(&format!("{stem}.json"), &text)
        }
        (Some(Format::Csv), _) => sink.emit(&format!("{stem}.csv"), csv().as_bytes()),
        (None, false) => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    common: &Common,
    scheme: &str,
    n: usize,
    dt: f64,
    t_end: f64,
    init: Init,
    amplitude: f64,
    log_every: usize,
    sink: &mut Sink,
    v: &mut Verdicts,
) -> Result<()> {
    let scheme = scheme.parse::<SchemeId>()?.scheme();
    let grid = Grid::new(n)?;
    let u0 = match init {
        Init::TaylorGreen => Field::taylor_green(&grid, amplitude),
        Init::TwoVortex => Field::two_vortex(&grid, amplitude),
    };
    let e0 = u0.energy();
    match simulate(&scheme, FlowState::new(u0)?, dt, t_end, log_every) {
        Ok((state, rows)) => {
            let mut buf = Vec::new();
            write_trajectory_csv(&rows, &mut buf)?;
            if common.format.is_some() || sink.has_dir() {
                sink.emit("trajectory.csv", &buf)?;
            }
            if common.format.is_none() || sink.has_dir() {
                let drift = (state.u.energy() - e0) / e0;
                println!(
                    "{} on n = {n}: t = {:.6}, energy {:.12e} (relative drift {drift:.3e}), max|u| {:.6}",
                    scheme.name(),
                    state.t,
                    state.u.energy(),
                    state.u.max_abs()
                );
            }
        }
        Err(cflab::Error::BlowUp { stage, reason }) => {
            v.check(false, format!("blow-up at stage {stage}: {reason}"));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn growth_config(common: &Common, scheme: Scheme, n: usize, dt: f64) -> GrowthConfig {
    let mut cfg = GrowthConfig::new(scheme, n, dt);
    cfg.horizon = common.horizon;
    cfg.mode = common.mode.into();
    cfg.seed = common.seed;
    cfg.c_thresh = common.cthresh.unwrap_or_else(|| default_c_thresh(cfg.amplitude));
    cfg
}

#[derive(Serialize)]
struct GrowthReport {
    scheme: String,
    n: usize,
    dt: f64,
    steps: usize,
    rho: Option<f64>,
    stable: bool,
    blow_up_step: Option<usize>,
    bound: Option<f64>,
    log_growth: Vec<f64>,
}

fn growth(common: &Common, scheme: &str, n: usize, dt: f64, bound: bool, sink: &mut Sink, v: &mut Verdicts) -> Result<()> {
    let scheme = scheme.parse::<SchemeId>()?.scheme();
    let cfg = growth_config(common, scheme.clone(), n, dt);
    let out = measure_growth(&cfg)?;
    let stable = out.is_stable(cfg.c_thresh, dt);
    v.check(stable, format!("rho above 1 + {} dt", cfg.c_thresh));
    let bound = if bound {
        let check = check_bound(&cfg, &scheme_profile(&scheme)?)?;
        v.check(check.pass, format!("rho above the analytic bound {}", check.predicted));
        Some(check.predicted)
    } else {
        None
    };
    let report = GrowthReport {
        scheme: scheme.name().to_string(),
        n,
        dt,
        steps: out.steps(),
        rho: out.rho(),
        stable,
        blow_up_step: match out {
            GrowthOutcome::Unstable { step } => Some(step),
            GrowthOutcome::Completed { .. } => None,
        },
        bound,
        log_growth: match &out {
            GrowthOutcome::Completed { log_growth, .. } => log_growth.clone(),
            GrowthOutcome::Unstable { .. } => Vec::new(),
        },
    };
    emit_json_or_csv(common, sink, "growth", &report, || {
        let mut s = String::from("step,log_growth\n");
        for (i, g) in report.log_growth.iter().enumerate() {
            s += &format!("{},{g:e}\n", i + 1);
        }
        s
    })?;
    if common.format.is_none() || sink.has_dir() {
        match report.rho {
            Some(rho) => println!(
                "{} n = {n} dt = {dt:e}: rho = {rho:.9} over {} steps, limit {:.9} -> {}",
                report.scheme,
                report.steps,
                1.0 + cfg.c_thresh * dt,
                if stable { "stable" } else { "unstable" }
            ),
            None => println!("{} n = {n} dt = {dt:e}: blow-up at step {}", report.scheme, report.steps),
        }
        if let Some(b) = bound {
            println!("  analytic bound {b:.9}");
        }
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("expected LO:HI, got `{s}`"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn scan(
    common: &Common,
    scheme: &SchemeArg,
    grids: &[usize],
    iterations: usize,
    expect: Option<&str>,
    sink: &mut Sink,
    v: &mut Verdicts,
) -> Result<()> {
    let expect = expect.map(parse_range).transpose()?;
    let scheme = scheme.resolve()?;
    let opts = ScanOptions {
        horizon: common.horizon,
        c_thresh: common.cthresh.unwrap_or_else(|| default_c_thresh(1.0)),
        mode: common.mode.into(),
        seed: common.seed,
        iterations,
        ..ScanOptions::default()
    };
    let result: ScanResult = cfl_scan(&scheme, grids, &opts)?;
    for row in &result.rows {
        v.check(row.verdict == "stable", format!("n = {}: verdict {}", row.n, row.verdict));
    }
    if let Some((lo, hi)) = expect {
        v.check(
            (lo..=hi).contains(&result.fitted_exponent),
            format!("fitted exponent {} outside [{lo}, {hi}]", result.fitted_exponent),
        );
    }
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    match (common.format, sink.has_dir()) {
        (_, true) => {
            sink.emit("scan.csv", &csv)?;
            let mut json = serde_json::to_vec_pretty(&result)?;
            json.push(b'\n');
            sink.emit("scan.json", &json)?;
            let mut plot = Vec::new();
            result.write_loglog(&mut plot)?;
            sink.emit("scan_loglog.dat", &plot)?;
        }
        (Some(Format::Csv), false) => sink.emit("scan.csv", &csv)?,
        (Some(Format::Json), false) => sink.emit("scan.json", &serde_json::to_vec_pretty(&result)?)?,
        (None, false) => {}
    }
    if common.format.is_none() || sink.has_dir() {
        println!("{:>6} {:>6} {:>12} {:>12} {:>12}  verdict", "n", "k_max", "dx", "dt*", "rho");
        for r in &result.rows {
            println!("{:>6} {:>6} {:>12.5e} {:>12.5e} {:>12.8}  {}", r.n, r.k_max, r.dx, r.dt_star, r.rho, r.verdict);
        }
        println!(
            "fitted exponent {:.4} +- {:.4}, predicted {}",
            result.fitted_exponent,
            result.stderr,
            result.predicted_exponent.map_or("none".into(), |p| format!("{p:.4}"))
        );
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Coeffs { .. } => "coeffs",
        Command::Vn { .. } => "vn",
        Command::SkewCheck { .. } => "skew-check",
        Command::Simulate { .. } => "simulate",
        Command::Growth { .. } => "growth",
        Command::CflScan { .. } => "cfl-scan",
    }
}

fn config_json(cli: &Cli) -> serde_json::Value {
    let args = match &cli.command {
        Command::Coeffs { scheme, taylor } => serde_json::json!({ "scheme": scheme, "taylor": taylor }),
        Command::Vn { scheme, theta_max, points } => {
            serde_json::json!({ "scheme": scheme, "theta_max": theta_max, "points": points })
        }
        Command::SkewCheck { n, pairs } => serde_json::json!({ "n": n, "pairs": pairs }),
        Command::Simulate { scheme, n, dt, t_end, init, amplitude, log_every } => serde_json::json!({
            "scheme": scheme, "n": n, "dt": dt, "t_end": t_end, "init": init,
            "amplitude": amplitude, "log_every": log_every,
        }),
        Command::Growth { scheme, n, dt, bound } => {
            serde_json::json!({ "scheme": scheme, "n": n, "dt": dt, "bound": bound })
        }
        Command::CflScan { scheme, grids, iterations, expect } => serde_json::json!({
            "scheme": scheme, "grids": grids, "iterations": iterations, "expect": expect,
        }),
    };
    serde_json::json!({ "common": cli.common, "args": args })
}

fn run(cli: &Cli) -> Result<Verdicts> {
    let mut sink = Sink::new(cli.common.out_dir.clone())?;
    let mut v = Verdicts::default();
    let c = &cli.common;
    match &cli.command {
        Command::Coeffs { scheme, taylor } => coeffs(c, scheme, *taylor, &mut sink)?,
        Command::Vn { scheme, theta_max, points } => vn(c, scheme, *theta_max, *points, &mut sink)?,
        Command::SkewCheck { n, pairs } => skew_check(c, *n, *pairs, &mut sink, &mut v)?,
        Command::Simulate { scheme, n, dt, t_end, init, amplitude, log_every } => {
            run_simulate(c, scheme, *n, *dt, *t_end, *init, *amplitude, *log_every, &mut sink, &mut v)?
        }
        Command::Growth { scheme, n, dt, bound } => growth(c, scheme, *n, *dt, *bound, &mut sink, &mut v)?,
        Command::CflScan { scheme, grids, iterations, expect } => {
            scan(c, scheme, grids, *iterations, expect.as_deref(), &mut sink, &mut v)?
        }
    }
    sink.finish(command_name(&cli.command), config_json(cli), v.failures.is_empty())?;
    Ok(v)
}

fn failure_summary(command: &str, failures: &[String]) -> String {
    serde_json::json!({ "status": "fail", "command": command, "failures": failures }).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    match run(&cli) {
        Ok(v) if v.failures.is_empty() => ExitCode::SUCCESS,
        Ok(v) => {
            eprintln!("{}", failure_summary(name, &v.failures));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("{}", failure_summary(name, &[format!("{e:#}")]));
            ExitCode::from(2)
        }
    }
}
