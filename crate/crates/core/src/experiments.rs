//! Perturbation-growth experiments on the pseudo-spectral solver.
//!
//! A small smallest-scale perturbation is evolved on top of a Taylor-Green
//! base flow (a steady Euler solution, so `max|u|` and `max|grad u|` stay
//! fixed) and its per-step L2 amplification is measured. A run is stable
//! when the mean rate satisfies `rho <= 1 + c_thresh * dt`; bisecting over
//! `dt` for several grids and fitting `log dt*` against `log dx` gives the
//! empirical CFL exponent.

use crate::coeffs::{compute_s, expand_perturbation, multistep_profile, StabilityProfile};
use crate::integrate::{multistep_tangent_step, FlowState, MultistepPerturbation, RealTableau, BLOW_UP_FACTOR};
use crate::integrate::step_multistep;
use crate::scheme::Scheme;
use crate::spectral::{FrozenFlow, Grid, SpectralField};
use crate::{rational, Error, Rational, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

/// How the perturbation is evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthMode {
    /// Linear map around the frozen base flow: the retained
    /// `dt^i F^i(e)` / `dt G(e)` families for one-step schemes, the exact
    /// tangent for multistep schemes.
    Linearized,
    /// Two full nonlinear solutions whose difference is renormalized each
    /// step.
    NonlinearDifference,
}

impl FromStr for GrowthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linearized" => Ok(GrowthMode::Linearized),
            "nonlinear" | "nonlinear-difference" => Ok(GrowthMode::NonlinearDifference),
            _ => Err(Error::Domain(format!(
                "unknown mode `{s}` (valid: linearized, nonlinear)"
            ))),
        }
    }
}

impl fmt::Display for GrowthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthMode::Linearized => "linearized",
            GrowthMode::NonlinearDifference => "nonlinear-difference",
        })
    }
}

pub const DEFAULT_HORIZON: f64 = 5.0;
pub const DEFAULT_PERTURBATION: f64 = 1e-6;
pub const DEFAULT_MAX_STEPS: usize = 40_000;
pub const BISECTION_ITERATIONS: usize = 20;
/// Slack on the growth term when comparing against the analytic bound.
pub const BOUND_SLACK: f64 = 0.25;

/// `2 * A_1 + 1` for the given base-flow gradient bound.
pub fn default_c_thresh(a1: f64) -> f64 {
    2.0 * a1 + 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub dt: f64,
    /// Total simulated time `T`.
    pub horizon: f64,
    /// Taylor-Green amplitude `A0`.
    pub amplitude: f64,
    /// Perturbation L2 norm relative to the base flow.
    pub perturbation: f64,
    pub renormalize: bool,
    pub mode: GrowthMode,
    pub seed: u64,
    /// Verdict constant: stable iff `rho <= 1 + c_thresh * dt`.
    pub c_thresh: f64,
    /// Upper bound on the number of steps, whatever `horizon / dt` says.
    pub max_steps: usize,
}

impl GrowthConfig {
    pub fn new(scheme: Scheme, n: usize, dt: f64) -> Self {
        Self {
            scheme,
            n,
            dt,
            horizon: DEFAULT_HORIZON,
            amplitude: 1.0,
            perturbation: DEFAULT_PERTURBATION,
            renormalize: true,
            mode: GrowthMode::Linearized,
            seed: 0,
            c_thresh: default_c_thresh(1.0),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if self.horizon < 10.0 * self.dt {
            return Err(Error::Domain(format!(
                "horizon {} shorter than 10 steps of {}",
                self.horizon, self.dt
            )));
        }
        if !(0.0..=1e-4).contains(&self.perturbation) {
            return Err(Error::Domain(format!(
                "relative perturbation {} outside [0, 1e-4]",
                self.perturbation
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps actually run.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0).min(self.max_steps as f64) as usize
    }
}

/// Result of a growth run.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthOutcome {
    Completed {
        /// `exp(mean per-step log growth)`.
        rho: f64,
        steps: usize,
        /// Cumulative log growth after each step.
        log_growth: Vec<f64>,
    },
    /// The run left the stable envelope by more than [`BLOW_UP_FACTOR`] or
    /// produced non-finite values at `step` (1-based).
    Unstable { step: usize },
}

impl GrowthOutcome {
    pub fn rho(&self) -> Option<f64> {
        match self {
            GrowthOutcome::Completed { rho, .. } => Some(*rho),
            GrowthOutcome::Unstable { .. } => None,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            GrowthOutcome::Completed { steps, .. } => *steps,
            GrowthOutcome::Unstable { step } => *step,
        }
    }

    pub fn is_stable(&self, c_thresh: f64, dt: f64) -> bool {
        self.rho().is_some_and(|rho| rho <= 1.0 + c_thresh * dt)
    }
}

enum Evolver {
    OneStep(RealTableau<f64>),
    Multistep(crate::scheme::MultistepScheme),
}

/// Evolves the perturbation and measures its mean per-step growth.
pub fn measure_growth(cfg: &GrowthConfig) -> Result<GrowthOutcome> {
    cfg.validate()?;
    let grid = Grid::new(cfg.n)?;
    let base = SpectralField::taylor_green(&grid, cfg.amplitude);
    let phase = ChaCha8Rng::seed_from_u64(cfg.seed).gen_range(0.0..std::f64::consts::TAU);
    let delta = cfg.perturbation * base.norm_l2();
    let e0 = SpectralField::inject_perturbation(&grid, delta, phase);
    let evolver = match &cfg.scheme {
        Scheme::OneStep(t) => Evolver::OneStep(RealTableau::new(t)?),
        Scheme::Multistep(m) => Evolver::Multistep(m.clone()),
    };
    let steps = cfg.steps();
    // A stable run grows by at most (1 + c dt)^n; far beyond that it is
    // declared unstable without finishing.
    let envelope = |n: usize| n as f64 * (cfg.c_thresh * cfg.dt).ln_1p() + 0.5 * BLOW_UP_FACTOR.ln();
    let mut log_growth = Vec::with_capacity(steps);
    let mut total = 0.0;
    let mut record = |n: usize, factor: f64| -> bool {
        total += factor.ln();
        log_growth.push(total);
        factor.is_finite() && total <= envelope(n)
    };
    let ratio = |new: f64, old: f64| if old == 0.0 && new == 0.0 { 1.0 } else { new / old };

    match (cfg.mode, &evolver) {
        (GrowthMode::Linearized, Evolver::OneStep(t)) => {
            let flow = FrozenFlow::new(&base)?;
            let mut e = e0;
            for n in 1..=steps {
                let old = e.norm_l2();
                let mut next = t.linearized_step(&flow, &e, cfg.dt)?;
                let new = next.norm_l2();
                if !record(n, ratio(new, old)) {
                    return Ok(GrowthOutcome::Unstable { step: n });
                }
                if cfg.renormalize && new > 0.0 {
                    next.scale(delta / new);
                }
                e = next;
            }
        }
        (GrowthMode::Linearized, Evolver::Multistep(m)) => {
            let flow = FrozenFlow::new(&base)?;
            let mut state = MultistepPerturbation::new(e0);
            for n in 1..=steps {
                let old = state.e.norm_l2();
                let mut next = multistep_tangent_step(m, &flow, &state, cfg.dt)?;
                let new = next.e.norm_l2();
                if !record(n, ratio(new, old)) {
                    return Ok(GrowthOutcome::Unstable { step: n });
                }
                if cfg.renormalize && new > 0.0 {
                    next.scale(delta / new);
                }
                state = next;
            }
        }
        (GrowthMode::NonlinearDifference, _) => {
            let mut reference = FlowState::new(base.clone())?;
            let mut perturbed = FlowState::new(SpectralField::linear_combination(&[(1.0, &base), (1.0, &e0)])?)?;
            perturbed.initial_energy = reference.initial_energy;
            let advance = |s: &FlowState<f64>| match &evolver {
                Evolver::OneStep(t) => t.step(s, cfg.dt),
                Evolver::Multistep(m) => step_multistep(m, s, cfg.dt),
            };
            let mut old = e0.norm_l2();
            for n in 1..=steps {
                let (r, p) = match (advance(&reference), advance(&perturbed)) {
                    (Ok(r), Ok(p)) => (r, p),
                    (Err(Error::BlowUp { .. }), _) | (_, Err(Error::BlowUp { .. })) => {
                        return Ok(GrowthOutcome::Unstable { step: n });
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                };
                let mut diff = p.u.sub(&r.u)?;
                let new = diff.norm_l2();
                if !record(n, ratio(new, old)) {
                    return Ok(GrowthOutcome::Unstable { step: n });
                }
                perturbed = p;
                if cfg.renormalize && new > 0.0 {
                    diff.scale(delta / new);
                    perturbed.u = SpectralField::linear_combination(&[(1.0, &r.u), (1.0, &diff)])?;
                    if let (Some(hp), Some(hr)) = (&perturbed.history, &r.history) {
                        // Rescale the history difference by the same factor.
                        let hd = hp.sub(hr)?.scaled(delta / new);
                        perturbed.history = Some(SpectralField::linear_combination(&[(1.0, hr), (1.0, &hd)])?);
                    }
                    old = delta;
                } else {
                    old = new;
                }
                reference = r;
            }
        }
    }
    let rho = (total / steps as f64).exp();
    Ok(GrowthOutcome::Completed {
        rho,
        steps,
        log_growth,
    })
}

/// Analytic per-step growth bound
/// `1 + (A1 + S_r dt^(2r-1) A0^(2r) / (2 dx^(2r))) dt (1 + slack)`.
pub fn growth_bound(profile: &StabilityProfile<Rational>, a0: f64, a1: f64, dt: f64, dx: f64, slack: f64) -> Result<f64> {
    let (r, s_r) = match (profile.r, profile.s_r()) {
        (Some(r), Some(s)) if profile.sign_r > 0 => (r as i32, rational::to_f64(s)),
        _ => {
            return Err(Error::Domain(
                "growth bound needs a positive leading coefficient S_r".into(),
            ))
        }
    };
    let term = s_r * dt.powi(2 * r - 1) * a0.powi(2 * r) / (2.0 * dx.powi(2 * r));
    Ok(1.0 + (a1 + term) * dt * (1.0 + slack))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub pass: bool,
    /// Measured `rho`, `None` when the run blew up.
    pub measured: Option<f64>,
    pub predicted: f64,
}

/// Measures `rho` and compares it with [`growth_bound`] using the base
/// flow's actual `max|u|` and `max|grad u|`.
pub fn check_bound(cfg: &GrowthConfig, profile: &StabilityProfile<Rational>) -> Result<BoundCheck> {
    let grid = Grid::<f64>::new(cfg.n)?;
    let base = SpectralField::taylor_green(&grid, cfg.amplitude);
    let predicted = growth_bound(profile, base.max_abs(), base.max_grad(), cfg.dt, grid.dx(), BOUND_SLACK)?;
    let measured = measure_growth(cfg)?.rho();
    Ok(BoundCheck {
        pass: measured.is_some_and(|rho| rho <= predicted),
        measured,
        predicted,
    })
}

/// Stability profile that predicts the CFL exponent of a scheme.
pub fn scheme_profile(scheme: &Scheme) -> Result<StabilityProfile<Rational>> {
    match scheme {
        Scheme::OneStep(t) => compute_s(&expand_perturbation(t)?),
        Scheme::Multistep(m) => multistep_profile(m, 8),
    }
}

/// Least-squares slope of `log y` against `log x` and its standard error.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 points to fit an exponent, got {}",
            points.len()
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let ssr: f64 = logs
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub horizon: f64,
    pub c_thresh: f64,
    pub mode: GrowthMode,
    pub seed: u64,
    pub amplitude: f64,
    pub perturbation: f64,
    pub iterations: usize,
    pub max_steps: usize,
    /// Steps used for the verdict at the bottom of the bracket, where the
    /// full horizon would need millions of steps.
    pub bracket_probe_steps: usize,
    /// Re-check `dt*/2` after bisection; an unstable verdict there means
    /// the verdict is not monotone in `dt` (usually a too-short horizon).
    pub monotonicity_probe: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            c_thresh: default_c_thresh(1.0),
            mode: GrowthMode::Linearized,
            seed: 0,
            amplitude: 1.0,
            perturbation: DEFAULT_PERTURBATION,
            iterations: BISECTION_ITERATIONS,
            max_steps: DEFAULT_MAX_STEPS,
            bracket_probe_steps: 200,
            monotonicity_probe: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub k_max: usize,
    pub dx: f64,
    pub dt_star: f64,
    pub steps_run: usize,
    /// Measured `rho` at `dt_star`.
    pub rho: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub scheme: String,
    pub rows: Vec<ScanRow>,
    pub fitted_exponent: f64,
    pub stderr: f64,
    pub predicted_exponent: Option<f64>,
    pub options: ScanOptions,
}

impl ScanResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,k_max,dx,dt_star,rho,verdict")?;
        for r in &self.rows {
            writeln!(out, "{},{},{:e},{:e},{:e},{}", r.n, r.k_max, r.dx, r.dt_star, r.rho, r.verdict)?;
        }
        Ok(())
    }

    /// Whitespace-separated `log_dx log_dt_star log_dt_fit` for plotting.
    pub fn write_loglog<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# log_dx log_dt_star log_dt_fit  (slope {:.6})", self.fitted_exponent)?;
        let logs: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.dx.ln(), r.dt_star.ln())).collect();
        let n = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        for (lx, ly) in logs {
            writeln!(out, "{lx:.12e} {ly:.12e} {:.12e}", my + self.fitted_exponent * (lx - mx))?;
        }
        Ok(())
    }
}

fn verdict_config(scheme: &Scheme, n: usize, dt: f64, opts: &ScanOptions, max_steps: usize) -> GrowthConfig {
    GrowthConfig {
        scheme: scheme.clone(),
        n,
        dt,
        horizon: opts.horizon.max(10.0 * dt),
        amplitude: opts.amplitude,
        perturbation: opts.perturbation,
        renormalize: true,
        mode: opts.mode,
        seed: opts.seed,
        c_thresh: opts.c_thresh,
        max_steps,
    }
}

/// Largest stable `dt` on one grid by bisection over `[1e-5 dx^2, 10 dx]`.
pub fn threshold(scheme: &Scheme, n: usize, opts: &ScanOptions) -> Result<ScanRow> {
    let grid = Grid::<f64>::new(n)?;
    let dx = grid.dx();
    let run = |dt: f64, max_steps: usize| -> Result<(bool, GrowthOutcome)> {
        let out = measure_growth(&verdict_config(scheme, n, dt, opts, max_steps))?;
        Ok((out.is_stable(opts.c_thresh, dt), out))
    };
    let (mut lo, mut hi) = (1e-5 * dx * dx, 10.0 * dx);
    let (lo_ok, lo_out) = run(lo, opts.bracket_probe_steps.min(opts.max_steps))?;
    let (hi_ok, hi_out) = run(hi, opts.max_steps)?;
    if !lo_ok || hi_ok {
        return Err(Error::Bracket(format!(
            "n = {n}: dt = {lo:e} {} (rho {:?}), dt = {hi:e} {} (rho {:?})",
            if lo_ok { "stable" } else { "unstable" },
            lo_out.rho(),
            if hi_ok { "stable" } else { "unstable" },
            hi_out.rho()
        )));
    }
    let mut best = lo_out;
    for _ in 0..opts.iterations {
        let mid = 0.5 * (lo + hi);
        let (ok, out) = run(mid, opts.max_steps)?;
        if ok {
            lo = mid;
            best = out;
        } else {
            hi = mid;
        }
    }
    let mut verdict = String::from("stable");
    if opts.monotonicity_probe {
        let (ok, _) = run(0.5 * lo, opts.max_steps)?;
        if !ok {
            verdict = String::from("non-monotone");
        }
    }
    Ok(ScanRow {
        n,
        k_max: grid.k_max(),
        dx,
        dt_star: lo,
        steps_run: best.steps(),
        rho: best.rho().unwrap_or(f64::NAN),
        verdict,
    })
}

/// Thresholds on every grid (sorted by decreasing `dx`) and the fitted
/// exponent of `dt*` against `dx`.
pub fn cfl_scan(scheme: &Scheme, grids: &[usize], opts: &ScanOptions) -> Result<ScanResult> {
    if grids.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 grids, got {}", grids.len())));
    }
    let mut sizes = grids.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() != grids.len() {
        return Err(Error::Domain("grid sizes must be distinct".into()));
    }
    let rows = sizes
        .iter()
        .map(|&n| threshold(scheme, n, opts))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.dx, r.dt_star)).collect();
    let (fitted_exponent, stderr) = fit_exponent(&points)?;
    Ok(ScanResult {
        scheme: scheme.name().to_string(),
        rows,
        fitted_exponent,
        stderr,
        predicted_exponent: scheme_profile(scheme)?.exponent_f64(),
        options: opts.clone(),
    })
}
