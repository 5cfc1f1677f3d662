use cflab::coeffs::{compute_s, expand_perturbation};
use cflab::rational::{self, int};
use cflab::scheme::{parse_tableau, ExplicitTableau, Stage};
use cflab::spectral::{antisymmetry_defect, skewness_defect};
use cflab::{Field, Grid, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Row-consistent random tableau: the last a-entry closes the row sum.
fn tableau() -> impl Strategy<Value = ExplicitTableau> {
    (1usize..=6)
        .prop_flat_map(|k| {
            let rows: Vec<_> = (1..=k)
                .map(|l| {
                    (
                        prop::collection::vec((-4i64..=4, 1i64..=4), l),
                        prop::collection::vec((-4i64..=4, 1i64..=4), l),
                    )
                })
                .collect();
            rows
        })
        .prop_map(|rows| {
            let stages = rows
                .into_iter()
                .map(|(a, b)| {
                    let mut a: Vec<Rational> = a.into_iter().map(|(p, q)| rational::ratio(p, q)).collect();
                    let head: Rational = a[..a.len() - 1].iter().fold(Rational::zero(), |s, x| s + x);
                    *a.last_mut().unwrap() = Rational::one() - head;
                    Stage::new(a, b.into_iter().map(|(p, q)| rational::ratio(p, q)).collect())
                })
                .collect();
            ExplicitTableau::new("random", stages)
        })
}

/// Stage recursion on the scalar model `F(e) = z e`: each stage is a
/// polynomial in `z`, and the last one is the amplification polynomial.
fn model_polynomial(t: &ExplicitTableau) -> Vec<Rational> {
    let mut stages: Vec<Vec<Rational>> = vec![vec![int(1)]];
    for (l, stage) in t.stages.iter().enumerate() {
        let mut next = vec![Rational::zero(); l + 2];
        for (i, u) in stages.iter().enumerate() {
            for (d, c) in u.iter().enumerate() {
                next[d] += &stage.a[i] * c;
                next[d + 1] += &stage.b[i] * c;
            }
        }
        stages.push(next);
    }
    stages.pop().unwrap()
}

/// Coefficients in `theta` of `|p(-i theta)|^2`, by direct complex
/// polynomial multiplication.
fn modulus_coefficients(p: &[Rational]) -> Vec<Rational> {
    // (-i)^j as (re, im)
    let unit = |j: usize| match j % 4 {
        0 => (int(1), int(0)),
        1 => (int(0), int(-1)),
        2 => (int(-1), int(0)),
        _ => (int(0), int(1)),
    };
    let c: Vec<(Rational, Rational)> = p
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let (re, im) = unit(j);
            (a * re, a * im)
        })
        .collect();
    let mut out = vec![Rational::zero(); 2 * p.len() - 1];
    for (i, (ar, ai)) in c.iter().enumerate() {
        for (j, (br, bi)) in c.iter().enumerate() {
            // Re(c_i conj(c_j))
            out[i + j] += ar * br + ai * bi;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn s_matches_direct_modulus_expansion(t in tableau()) {
        let e = expand_perturbation(&t).unwrap();
        prop_assert_eq!(&e.alpha, &model_polynomial(&t));
        let s = compute_s(&e).unwrap().s;
        let m = modulus_coefficients(&e.alpha);
        for (d, coef) in m.iter().enumerate() {
            if d % 2 == 1 {
                prop_assert!(coef.is_zero());
            } else {
                prop_assert_eq!(coef, &s[d / 2]);
            }
        }
    }

    #[test]
    fn last_s_is_square_of_last_alpha(t in tableau()) {
        let e = expand_perturbation(&t).unwrap();
        let s = compute_s(&e).unwrap().s;
        let k = e.k();
        prop_assert_eq!(&s[k], &(&e.alpha[k] * &e.alpha[k]));
    }

    #[test]
    fn tableau_text_round_trip(t in tableau()) {
        let back = parse_tableau(&t.to_string()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn leray_projection_properties(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32])) {
        let g = Grid::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c1 = vec![num_complex::Complex::new(0.0, 0.0); g.len()];
        let mut c2 = c1.clone();
        for m in g.band() {
            use rand::Rng;
            c1[m.index] = num_complex::Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            c2[m.index] = num_complex::Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let mut f = Field::from_coeffs(&g, c1, c2).unwrap();
        f.symmetrize();
        let p = f.leray_project();
        let pp = p.leray_project();
        let norm2 = f.energy();
        prop_assert!(pp.sub(&p).unwrap().norm_l2() <= 1e-14 * f.norm_l2());
        prop_assert!(p.norm_l2() <= f.norm_l2() * (1.0 + 1e-15));
        prop_assert!(p.inner(&f.sub(&p).unwrap()).unwrap().abs() <= 1e-12 * norm2);
        prop_assert!(p.divergence_defect() <= 1e-12);
    }

    #[test]
    fn skewness_and_antisymmetry(seed in any::<u64>()) {
        let g = Grid::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Field::random_divfree(&g, &mut rng);
        let v = Field::random_divfree(&g, &mut rng);
        let w = Field::random_divfree(&g, &mut rng);
        prop_assert!(skewness_defect(&u, &v).unwrap() <= 1e-10);
        prop_assert!(antisymmetry_defect(&u, &v, &w).unwrap() <= 1e-10);
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let g = Grid::new(16).unwrap();
        let f = Field::random_divfree(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((f.energy_quadrature() - f.energy()).abs() <= 1e-12 * f.energy());
    }
}
