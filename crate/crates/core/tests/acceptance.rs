//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use cflab::coeffs::{compute_s, expand_perturbation, taylor_alpha, verify_theorem, TheoremCheck};
use cflab::experiments::{check_bound, cfl_scan, scheme_profile, GrowthConfig, ScanOptions};
use cflab::integrate::{expansion_step, linearized_step, step, FlowState};
use cflab::rational::{self, int, ratio};
use cflab::scheme::{ab2, builtin, centered_2, explicit_euler, rk4, ExplicitTableau, Scheme, Stage, TaylorScheme};
use cflab::spectral::skewness_defect;
use cflab::von_neumann::{check_modulus_identity, multistep_quartic_coefficient};
use cflab::{Field, FrozenFlow, Grid, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn golden_rk4() -> Outcome {
    let t0 = Instant::now();
    let s = compute_s(&expand_perturbation(&rk4()).unwrap()).unwrap().s;
    let expected = vec![int(1), int(0), int(0), ratio(-1, 72), ratio(1, 576)];
    let elapsed = t0.elapsed();
    let shown: Vec<String> = s.iter().map(rational::format).collect();
    outcome(
        s == expected && elapsed < Duration::from_secs(1),
        format!("S = ({}) in {elapsed:.2?}", shown.join(", ")),
    )
}

fn taylor_zeros() -> Outcome {
    let t0 = Instant::now();
    let mut ok = true;
    for p in 1..=4 {
        let s = compute_s(&taylor_alpha(TaylorScheme::new(2 * p).unwrap())).unwrap().s;
        ok &= (1..=p).all(|q| s[q].is_zero());
        ok &= verify_theorem(p).unwrap() == TheoremCheck::Holds;
    }
    let elapsed = t0.elapsed();
    outcome(
        ok && elapsed < Duration::from_secs(1),
        format!("p = 1..4, S_1..S_p = 0, {elapsed:.2?}"),
    )
}

fn random_tableau(rng: &mut ChaCha8Rng) -> ExplicitTableau {
    let k = rng.gen_range(1..=6);
    let entry = |rng: &mut ChaCha8Rng| ratio(rng.gen_range(-4..=4), rng.gen_range(1..=4));
    let stages = (1..=k)
        .map(|l| {
            let mut a: Vec<Rational> = (0..l).map(|_| entry(rng)).collect();
            let head = a[..l - 1].iter().fold(Rational::zero(), |s, x| s + x);
            a[l - 1] = Rational::one() - head;
            let b = (0..l).map(|_| entry(rng)).collect();
            Stage::new(a, b)
        })
        .collect();
    ExplicitTableau::new("random", stages)
}

fn route_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tableaus = vec![explicit_euler(), centered_2(), rk4()];
    tableaus.extend((0..100).map(|_| random_tableau(&mut rng)));
    let thetas = [0.1, 0.5, 1.0];
    let worst = tableaus
        .iter()
        .map(|t| {
            let e = expand_perturbation(t).unwrap();
            let p = compute_s(&e).unwrap();
            check_modulus_identity(&e, &p, &thetas).unwrap()
        })
        .fold(0.0f64, f64::max);
    outcome(worst <= 1e-12, format!("{} tableaus, worst relative gap {worst:.2e}", tableaus.len()))
}

fn ab2_quartic() -> Outcome {
    let c = multistep_quartic_coefficient(&ab2(), [0.02, 0.04, 0.08]).unwrap();
    outcome((c - 0.5).abs() <= 0.05, format!("coefficient {c:.6} (target 0.5 +- 10%)"))
}

fn skewness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let worst = |g: &Grid, rng: &mut ChaCha8Rng| {
        (0..20)
            .map(|_| {
                let u = Field::random_divfree(g, rng);
                let v = Field::random_divfree(g, rng);
                skewness_defect(&u, &v).unwrap()
            })
            .fold(0.0f64, f64::max)
    };
    let dealiased = worst(&Grid::new(64).unwrap(), &mut rng);
    let aliased = worst(&Grid::without_dealiasing(64).unwrap(), &mut rng);
    outcome(
        dealiased <= 1e-10 && aliased > 1e-10,
        format!("dealiased {dealiased:.2e}, no dealiasing {aliased:.2e}"),
    )
}

fn linearization_bridge() -> Outcome {
    let g = Grid::new(32).unwrap();
    let u = Field::taylor_green(&g, 1.0);
    let flow = FrozenFlow::new(&u).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_formula = 0.0f64;
    let mut worst_fd = 0.0f64;
    for t in [explicit_euler(), centered_2(), rk4()] {
        let e = expand_perturbation(&t).unwrap();
        let eps = Field::random_divfree(&g, &mut rng);
        let dt = 0.3 * g.dx();
        let lin = linearized_step(&t, &flow, &eps, dt).unwrap();
        let direct = expansion_step(&e, &flow, &eps, dt).unwrap();
        worst_formula = worst_formula.max(lin.sub(&direct).unwrap().norm_l2() / direct.norm_l2());

        let dt = 1e-4;
        let eps = eps.scaled(1e-8 * u.norm_l2());
        let base = FlowState::new(u.clone()).unwrap();
        let perturbed = FlowState::new(Field::linear_combination(&[(1.0, &u), (1.0, &eps)]).unwrap()).unwrap();
        let fd = step(&t, &perturbed, dt).unwrap().u.sub(&step(&t, &base, dt).unwrap().u).unwrap();
        let lin = linearized_step(&t, &flow, &eps, dt).unwrap();
        worst_fd = worst_fd.max(fd.sub(&lin).unwrap().norm_l2() / lin.norm_l2());
    }
    outcome(
        worst_formula <= 1e-12 && worst_fd <= 1e-5,
        format!("vs expansion {worst_formula:.2e}, vs finite difference {worst_fd:.2e}"),
    )
}

fn growth_bound() -> Outcome {
    let t0 = Instant::now();
    let n = 64;
    let dx = Grid::new(n).unwrap().dx();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["explicit-euler", "centered-2", "ab2"] {
        let scheme = builtin(name).unwrap();
        let profile = scheme_profile(&scheme).unwrap();
        let exponent = profile.exponent_f64().unwrap();
        let cfg = GrowthConfig::new(scheme, n, 0.5 * dx.powf(exponent));
        let check = check_bound(&cfg, &profile).unwrap();
        ok &= check.pass;
        parts.push(format!(
            "{name} rho {} <= {:.6}",
            check.measured.map_or("blow-up".into(), |r| format!("{r:.6}")),
            check.predicted
        ));
    }
    let elapsed = t0.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    outcome(ok, format!("{}; {elapsed:.1?}", parts.join(", ")))
}

fn cfl_exponents() -> Outcome {
    let t0 = Instant::now();
    let grids = [32, 64, 128, 256];
    let opts = ScanOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lo, hi) in [
        ("explicit-euler", 1.8, 2.2),
        ("centered-2", 1.18, 1.48),
        ("ab2", 1.18, 1.48),
        ("rk4", 0.85, 1.15),
    ] {
        let scheme: Scheme = builtin(name).unwrap();
        match cfl_scan(&scheme, &grids, &opts) {
            Ok(r) => {
                let inside = (lo..=hi).contains(&r.fitted_exponent);
                let monotone = r.rows.iter().all(|row| row.verdict == "stable");
                ok &= inside && monotone;
                parts.push(format!(
                    "{name} {:.3} +- {:.3} in [{lo}, {hi}]: {}{}",
                    r.fitted_exponent,
                    r.stderr,
                    if inside { "yes" } else { "no" },
                    if monotone { "" } else { " (non-monotone verdict)" }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name} error: {e}"));
            }
        }
    }
    let elapsed = t0.elapsed();
    ok &= elapsed <= Duration::from_secs(15 * 60);
    outcome(ok, format!("{}; {elapsed:.1?}", parts.join("; ")))
}

fn energy_identity() -> Outcome {
    let g = Grid::new(64).unwrap();
    let u = Field::two_vortex(&g, 1.0);
    let dt = 0.1;
    let next = step(&explicit_euler(), &FlowState::new(u.clone()).unwrap(), dt).unwrap();
    let lhs = next.u.energy() - u.energy();
    let rhs = dt * dt * u.projected_advection(&u).unwrap().energy();
    let rel = (lhs - rhs).abs() / rhs;
    outcome(rel <= 1e-12, format!("gain {lhs:.6e}, dt^2 |N|^2 {rhs:.6e}, relative gap {rel:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact RK4 stability coefficients", golden_rk4),
        ("Taylor truncations of order 2p cancel S_1..S_p", taylor_zeros),
        ("|xi|^2 equals the S polynomial", route_equivalence),
        ("AB2 quartic growth coefficient", ab2_quartic),
        ("discrete skewness with dealiasing", skewness),
        ("linearized step vs expansion and finite differences", linearization_bridge),
        ("growth rate within the analytic bound", growth_bound),
        ("empirical CFL exponents", cfl_exponents),
        ("explicit Euler energy identity", energy_identity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == id) {
            continue;
        }
        let result = run();
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {id} {}: {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
