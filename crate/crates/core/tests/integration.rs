use cflab::coeffs::{compute_s, expand_perturbation};
use cflab::experiments::{cfl_scan, measure_growth, GrowthConfig, GrowthOutcome, ScanOptions};
use cflab::integrate::{linearized_step, simulate, FlowState, RealTableau};
use cflab::rational;
use cflab::scheme::{ab2, builtin, centered_2, explicit_euler, rk4, Scheme};
use cflab::von_neumann::{alpha_real, multistep_amplification, xi_of};
use cflab::{Field, FrozenFlow, Grid};
use num_complex::Complex;

fn run(scheme: &Scheme, u0: &Field, dt: f64, t_end: f64) -> Field {
    let (state, _) = simulate(scheme, FlowState::new(u0.clone()).unwrap(), dt, t_end, usize::MAX).unwrap();
    state.u
}

fn convergence_slope(scheme: Scheme) -> f64 {
    let g = Grid::new(32).unwrap();
    let u0 = Field::two_vortex(&g, 1.0);
    let (dt, t_end) = (0.04, 0.4);
    let reference = run(&scheme, &u0, dt / 16.0, t_end);
    let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25]
        .iter()
        .map(|f| {
            let h = dt * f;
            (h, run(&scheme, &u0, h, t_end).sub(&reference).unwrap().norm_l2())
        })
        .collect();
    cflab::experiments::fit_exponent(&pts).unwrap().0
}

#[test]
fn self_convergence_orders() {
    for (scheme, order) in [
        (Scheme::OneStep(explicit_euler()), 1.0),
        (Scheme::OneStep(centered_2()), 2.0),
        (Scheme::OneStep(rk4()), 4.0),
        (Scheme::Multistep(ab2()), 2.0),
    ] {
        let name = scheme.name().to_string();
        let slope = convergence_slope(scheme);
        assert!((slope - order).abs() <= 0.25, "{name}: slope {slope}, order {order}");
    }
}

#[test]
fn constant_flow_is_pure_von_neumann() {
    let g = Grid::new(32).unwrap();
    let mut mean = Field::single_mode(&g, 0, 0, [Complex::new(0.7, 0.0), Complex::new(-0.4, 0.0)]).unwrap();
    mean = mean.leray_project();
    let flow = FrozenFlow::new(&mean).unwrap();
    let dt = 0.05;
    for t in [explicit_euler(), centered_2(), rk4()] {
        let alpha = alpha_real::<f64>(&expand_perturbation(&t).unwrap());
        for (k1, k2) in [(1, 0), (3, -2), (7, 5), (10, 10)] {
            let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let pol = [Complex::new(-k2 as f64 / kn, 0.0), Complex::new(k1 as f64 / kn, 0.0)];
            let e = Field::single_mode(&g, k1, k2, pol).unwrap().leray_project();
            let out = linearized_step(&t, &flow, &e, dt).unwrap();
            let theta = dt * (0.7 * k1 as f64 - 0.4 * k2 as f64);
            let xi = xi_of(&alpha, theta);
            let expected = e.coefficient(k1, k2).map(|c| c * xi);
            let got = out.coefficient(k1, k2);
            for c in 0..2 {
                assert!((got[c] - expected[c]).norm() <= 1e-10, "{} k=({k1},{k2})", t.name);
            }
            let ratio = out.norm_l2() / e.norm_l2();
            assert!((ratio - xi.norm()).abs() <= 1e-10);
        }
    }
}

#[test]
fn energy_growth_bound_inside_stable_regime() {
    let g = Grid::new(32).unwrap();
    let dx = g.dx();
    // a tenth of the predicted threshold dx^(2r/(2r-1))
    for (t, exponent) in [(explicit_euler(), 2.0), (centered_2(), 4.0 / 3.0), (rk4(), 1.0)] {
        let s = compute_s(&expand_perturbation(&t).unwrap()).unwrap().s;
        let compiled = RealTableau::new(&t).unwrap();
        let mut state = FlowState::new(Field::two_vortex(&g, 1.0)).unwrap();
        let a0 = state.u.max_abs();
        let dt = 0.1 * (dx / a0).powf(exponent);
        for _ in 0..20 {
            let a0 = state.u.max_abs();
            let e0 = state.u.energy();
            let next = compiled.step(&state, dt).unwrap();
            let bound: f64 = s
                .iter()
                .enumerate()
                .skip(1)
                .map(|(l, sl)| rational::to_f64(sl).abs() * (dt * a0 / dx).powi(2 * l as i32))
                .sum::<f64>()
                * e0
                * 1.2;
            assert!(next.u.energy() - e0 <= bound, "{}: {} > {}", t.name, next.u.energy() - e0, bound);
            state = next;
        }
    }
}

#[test]
fn ab2_roots_match_power_iteration() {
    let theta: f64 = 0.5;
    let z = Complex::new(0.0, -theta);
    // companion matrix of rho^2 = (1 + 3/2 z) rho - 1/2 z
    let m = [[Complex::new(1.0, 0.0) + z * 1.5, -z * 0.5], [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]];
    let mut v = [Complex::new(1.0, 0.0), Complex::new(0.3, 0.2)];
    let mut growth = 0.0;
    for _ in 0..400 {
        let w = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        growth = nw / nv;
        v = [w[0] / nw, w[1] / nw];
    }
    let direct = multistep_amplification(&ab2(), theta).unwrap();
    assert!((growth * growth - direct).abs() <= 1e-10, "{} vs {direct}", growth * growth);
}

#[test]
fn super_threshold_explicit_euler_diverges_quickly() {
    let g = Grid::new(64).unwrap();
    let mut cfg = GrowthConfig::new(builtin("explicit-euler").unwrap(), 64, 10.0 * g.dx());
    cfg.horizon = 200.0 * cfg.dt;
    match measure_growth(&cfg).unwrap() {
        GrowthOutcome::Unstable { step } => assert!(step <= 200),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn stable_runs_stay_inside_exponential_envelope() {
    let g = Grid::new(64).unwrap();
    let mut cfg = GrowthConfig::new(builtin("explicit-euler").unwrap(), 64, 0.01 * g.dx() * g.dx());
    cfg.horizon = 2000.0 * cfg.dt;
    let out = measure_growth(&cfg).unwrap();
    assert!(out.is_stable(cfg.c_thresh, cfg.dt));
    if let GrowthOutcome::Completed { log_growth, steps, .. } = out {
        let total = log_growth.last().unwrap().exp();
        assert!(total <= (cfg.c_thresh * cfg.dt * steps as f64).exp() * 1.05);
    }
}

#[test]
fn nonlinear_difference_agrees_with_linearized_rate() {
    let g = Grid::new(32).unwrap();
    for name in ["centered-2", "ab2"] {
        let mut cfg = GrowthConfig::new(builtin(name).unwrap(), 32, 0.5 * g.dx());
        cfg.horizon = 40.0 * cfg.dt;
        let lin = measure_growth(&cfg).unwrap().rho().unwrap();
        cfg.mode = cflab::experiments::GrowthMode::NonlinearDifference;
        let nl = measure_growth(&cfg).unwrap().rho().unwrap();
        assert!((lin - nl).abs() <= 1e-3 * lin, "{name}: {lin} vs {nl}");
    }
}

#[test]
fn scan_is_deterministic() {
    let opts = ScanOptions {
        horizon: 0.5,
        iterations: 8,
        monotonicity_probe: false,
        seed: 7,
        ..ScanOptions::default()
    };
    let s = builtin("centered-2").unwrap();
    let a = cfl_scan(&s, &[16, 32, 64, 128], &opts).unwrap();
    let b = cfl_scan(&s, &[16, 32, 64, 128], &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.rows.windows(2).all(|w| w[0].dx > w[1].dx));
    assert!(a.rows.iter().all(|r| r.dt_star > 0.0));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn scan_rejects_bad_grid_lists() {
    let s = builtin("rk4").unwrap();
    assert!(cfl_scan(&s, &[16, 32, 64], &ScanOptions::default()).is_err());
    assert!(cfl_scan(&s, &[16, 32, 64, 48], &ScanOptions::default()).is_err());
}
