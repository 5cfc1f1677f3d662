//! Time stepping of `du/dt + P[(u.grad) u] = 0` on spectral fields, and of
//! small perturbations around a frozen base flow.

use crate::coeffs::AmplificationExpansion;
use crate::scheme::{ab2, ExplicitTableau, MultistepScheme, Scheme};
use crate::spectral::{FrozenFlow, SpectralField};
use crate::{rational, Error, Rational, Real, Result};
use std::io::Write;

/// Energy growth beyond this factor counts as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T: Real> {
    pub u: SpectralField<T>,
    pub t: T,
    /// `P[(u_{n-1}.grad) u_{n-1}]` for multistep schemes.
    pub history: Option<SpectralField<T>>,
    /// Energy of the initial condition, the blow-up reference.
    pub initial_energy: T,
}

impl<T: Real> FlowState<T> {
    pub fn new(u: SpectralField<T>) -> Result<Self> {
        if !u.is_divfree() {
            return Err(Error::Domain("initial field must be divergence-free".into()));
        }
        let initial_energy = u.energy();
        Ok(Self {
            u,
            t: T::zero(),
            history: None,
            initial_energy,
        })
    }

    fn check(&self, field: &SpectralField<T>, stage: usize) -> Result<()> {
        if !field.is_finite() {
            return Err(Error::BlowUp {
                stage,
                reason: "non-finite coefficients".into(),
            });
        }
        let limit = T::of(BLOW_UP_FACTOR) * self.initial_energy.max(T::min_positive_value());
        if field.energy() > limit {
            return Err(Error::BlowUp {
                stage,
                reason: format!("energy {} exceeds {}", field.energy(), limit),
            });
        }
        Ok(())
    }
}

/// Tableau with coefficients converted to the working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTableau<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<Vec<T>>,
}

impl<T: Real> RealTableau<T> {
    pub fn new(t: &ExplicitTableau) -> Result<Self> {
        t.validate().into_result()?;
        let conv = |row: &[Rational]| row.iter().map(rational::to_real::<T>).collect::<Vec<T>>();
        Ok(Self {
            a: t.stages.iter().map(|s| conv(&s.a)).collect(),
            b: t.stages.iter().map(|s| conv(&s.b)).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// Runs the stage recursion `x_l = sum a x_i + dt sum b op(x_i)`.
    /// `op` receives the stage index and field.
    fn run(
        &self,
        x0: SpectralField<T>,
        dt: T,
        mut op: impl FnMut(usize, &SpectralField<T>) -> Result<SpectralField<T>>,
        mut check: impl FnMut(usize, &SpectralField<T>) -> Result<()>,
    ) -> Result<SpectralField<T>> {
        let k = self.k();
        let mut xs = vec![x0];
        let mut ops: Vec<Option<SpectralField<T>>> = Vec::with_capacity(k);
        for l in 1..=k {
            let i_new = l - 1;
            let needed = (l..=k).any(|r| !self.b[r - 1][i_new].is_zero());
            ops.push(if needed { Some(op(i_new, &xs[i_new])?) } else { None });
            let mut terms: Vec<(T, &SpectralField<T>)> = Vec::new();
            for i in 0..l {
                if !self.a[l - 1][i].is_zero() {
                    terms.push((self.a[l - 1][i], &xs[i]));
                }
                if !self.b[l - 1][i].is_zero() {
                    let f = ops[i].as_ref().expect("operator evaluated for nonzero weight");
                    terms.push((dt * self.b[l - 1][i], f));
                }
            }
            let next = SpectralField::linear_combination(&terms)?;
            check(l, &next)?;
            xs.push(next);
        }
        Ok(xs.pop().expect("k >= 1"))
    }

    /// One step of the full nonlinear scheme.
    pub fn step(&self, s: &FlowState<T>, dt: T) -> Result<FlowState<T>> {
        check_dt(dt)?;
        let u = self.run(
            s.u.clone(),
            dt,
            |_, x| Ok(x.projected_advection(x)?.scaled(-T::one())),
            |l, x| s.check(x, l),
        )?;
        Ok(FlowState {
            u,
            t: s.t + dt,
            history: None,
            initial_energy: s.initial_energy,
        })
    }

    /// Perturbation step keeping only the `dt^i F^i(e)` family and the
    /// single `dt G(e)` term.
    pub fn linearized_step(&self, flow: &FrozenFlow<T>, e: &SpectralField<T>, dt: T) -> Result<SpectralField<T>> {
        let p = self.run(e.clone(), dt, |_, x| flow.transport(x), |_, _| Ok(()))?;
        // The G(e) coefficient follows the same recursion with op = const.
        let mut c = vec![T::zero()];
        for l in 1..=self.k() {
            let v = (0..l).fold(T::zero(), |acc, i| acc + self.a[l - 1][i] * c[i] + self.b[l - 1][i]);
            c.push(v);
        }
        let mut out = p;
        out.axpy(-dt * c[self.k()], &flow.stretch(e)?)?;
        Ok(out)
    }

    /// Exact linearization of one step around a steady base flow.
    pub fn tangent_step(&self, flow: &FrozenFlow<T>, e: &SpectralField<T>, dt: T) -> Result<SpectralField<T>> {
        self.run(e.clone(), dt, |_, x| flow.tangent(x), |_, _| Ok(()))
    }
}

fn check_dt<T: Real>(dt: T) -> Result<()> {
    if dt > T::zero() && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time step must be positive, got {dt}")))
    }
}

/// One step of an explicit tableau.
pub fn step<T: Real>(scheme: &ExplicitTableau, s: &FlowState<T>, dt: T) -> Result<FlowState<T>> {
    RealTableau::new(scheme)?.step(s, dt)
}

/// One step of a two-step scheme; without history the startup tableau is
/// used and the history is seeded.
pub fn step_multistep<T: Real>(scheme: &MultistepScheme, s: &FlowState<T>, dt: T) -> Result<FlowState<T>> {
    check_dt(dt)?;
    if scheme.weights.len() != 2 {
        return Err(Error::Domain("only two-step schemes are supported".into()));
    }
    let current = s.u.projected_advection(&s.u)?;
    let u = match &s.history {
        None => RealTableau::new(&scheme.startup)?.step(s, dt)?.u,
        Some(prev) => {
            let w0: T = rational::to_real(&scheme.weights[0]);
            let w1: T = rational::to_real(&scheme.weights[1]);
            SpectralField::linear_combination(&[(T::one(), &s.u), (-dt * w0, &current), (-dt * w1, prev)])?
        }
    };
    s.check(&u, 1)?;
    Ok(FlowState {
        u,
        t: s.t + dt,
        history: Some(current),
        initial_energy: s.initial_energy,
    })
}

/// Adams-Bashforth 2 with a centered order-two first step.
pub fn step_ab2<T: Real>(s: &FlowState<T>, dt: T) -> Result<FlowState<T>> {
    step_multistep(&ab2(), s, dt)
}

/// Perturbation step of a one-step scheme around `flow`.
pub fn linearized_step<T: Real>(
    scheme: &ExplicitTableau,
    flow: &FrozenFlow<T>,
    e: &SpectralField<T>,
    dt: T,
) -> Result<SpectralField<T>> {
    RealTableau::new(scheme)?.linearized_step(flow, e, dt)
}

/// `sum_i alpha_i dt^i F^i(e) - beta dt G(e)` evaluated term by term from
/// the exact expansion.
pub fn expansion_step<T: Real>(
    e: &AmplificationExpansion<Rational>,
    flow: &FrozenFlow<T>,
    eps: &SpectralField<T>,
    dt: T,
) -> Result<SpectralField<T>> {
    let mut power = eps.clone();
    let mut out = eps.scaled(rational::to_real(&e.alpha[0]));
    let mut dt_i = T::one();
    for alpha in &e.alpha[1..] {
        power = flow.transport(&power)?;
        dt_i = dt_i * dt;
        out.axpy(dt_i * rational::to_real::<T>(alpha), &power)?;
    }
    out.axpy(-dt * rational::to_real::<T>(&e.beta), &flow.stretch(eps)?)?;
    Ok(out)
}

/// Perturbation state of a two-step scheme: the current perturbation and
/// the tangent of the previous one.
#[derive(Debug, Clone)]
pub struct MultistepPerturbation<T: Real> {
    pub e: SpectralField<T>,
    pub previous_tangent: Option<SpectralField<T>>,
}

impl<T: Real> MultistepPerturbation<T> {
    pub fn new(e: SpectralField<T>) -> Self {
        Self {
            e,
            previous_tangent: None,
        }
    }

    pub fn scale(&mut self, a: T) {
        self.e.scale(a);
        if let Some(p) = &mut self.previous_tangent {
            p.scale(a);
        }
    }
}

/// Exact linearization of a two-step scheme around a steady base flow.
pub fn multistep_tangent_step<T: Real>(
    scheme: &MultistepScheme,
    flow: &FrozenFlow<T>,
    state: &MultistepPerturbation<T>,
    dt: T,
) -> Result<MultistepPerturbation<T>> {
    let current = flow.tangent(&state.e)?;
    let e = match &state.previous_tangent {
        None => RealTableau::new(&scheme.startup)?.tangent_step(flow, &state.e, dt)?,
        Some(prev) => {
            let w0: T = rational::to_real(&scheme.weights[0]);
            let w1: T = rational::to_real(&scheme.weights[1]);
            SpectralField::linear_combination(&[(T::one(), &state.e), (dt * w0, &current), (dt * w1, prev)])?
        }
    };
    Ok(MultistepPerturbation {
        e,
        previous_tangent: Some(current),
    })
}

/// One row of a trajectory log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow<T> {
    pub t: T,
    pub energy: T,
    pub max_abs: T,
    pub perturbation: Option<T>,
}

fn row<T: Real>(s: &FlowState<T>) -> TrajectoryRow<T> {
    TrajectoryRow {
        t: s.t,
        energy: s.u.energy(),
        max_abs: s.u.max_abs(),
        perturbation: None,
    }
}

/// Advances `state` to `t_end` in steps of `dt` (the last step is not
/// shortened; the step count is `round(t_end / dt)`), logging every
/// `log_every` steps and at the end.
pub fn simulate<T: Real>(
    scheme: &Scheme,
    mut state: FlowState<T>,
    dt: T,
    t_end: T,
    log_every: usize,
) -> Result<(FlowState<T>, Vec<TrajectoryRow<T>>)> {
    check_dt(dt)?;
    let steps = (t_end / dt).round().to_usize().unwrap_or(0);
    let log_every = log_every.max(1);
    let mut rows = vec![row(&state)];
    let compiled = match scheme {
        Scheme::OneStep(t) => Some(RealTableau::new(t)?),
        Scheme::Multistep(_) => None,
    };
    for n in 1..=steps {
        state = match (scheme, &compiled) {
            (Scheme::OneStep(_), Some(c)) => c.step(&state, dt)?,
            (Scheme::Multistep(m), _) => step_multistep(m, &state, dt)?,
            _ => unreachable!(),
        };
        if n % log_every == 0 || n == steps {
            rows.push(row(&state));
        }
    }
    Ok((state, rows))
}

/// CSV `t,energy,max_abs,perturbation` (empty when not tracked).
pub fn write_trajectory_csv<T: Real, W: Write>(rows: &[TrajectoryRow<T>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,energy,max_abs,perturbation")?;
    for r in rows {
        let p = r.perturbation.map(|p| format!("{p:e}")).unwrap_or_default();
        writeln!(out, "{:e},{:e},{:e},{}", r.t, r.energy, r.max_abs, p)?;
    }
    Ok(())
}
