//! Exact perturbation coefficients of explicit schemes.
//!
//! For a frozen base flow `u`, write `F(e) = -P[(u.grad) e]` and
//! `G(e) = P[(e.grad) u]`. Keeping only the `dt^i F^i(e)` terms and the
//! single `dt G(e)` term, one step of a scheme maps a perturbation to
//!
//! ```text
//! e_{n+1} = sum_i alpha_i dt^i F^i(e_n) - beta dt G(e_n)
//! ```
//!
//! Since `F` is skew-adjoint, `<F^i e, F^j e>` vanishes for odd `i + j`
//! and equals `(-1)^(l-i) |F^l e|^2` for `i + j = 2l`, so
//!
//! ```text
//! |e_{n+1} + beta dt G(e_n)|^2 = sum_l S_l dt^(2l) |F^l e_n|^2,
//! S_l = sum_{|j| <= min(l, k-l)} (-1)^j alpha_{l-j} alpha_{l+j}.
//! ```
//!
//! The first nonzero `S_r` (r >= 1) decides the time-step restriction:
//! `S_r > 0` gives `dt <= C dx^(2r/(2r-1))`, `S_r < 0` leaves the usual
//! linear condition `dt <= C dx`.

use crate::rational::{self, int, ratio, RationalRepr};
use crate::scheme::{ExplicitTableau, MultistepScheme, TaylorScheme};
use crate::{Error, Rational, Result};
use num_traits::{Num, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Coefficients `alpha_0..alpha_k` and `beta` of the linearized one-step map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplificationExpansion<Q> {
    pub alpha: Vec<Q>,
    pub beta: Q,
}

impl<Q> AmplificationExpansion<Q> {
    /// Degree `k` of the expansion.
    pub fn k(&self) -> usize {
        self.alpha.len().saturating_sub(1)
    }
}

impl AmplificationExpansion<Rational> {
    pub fn to_f64(&self) -> AmplificationExpansion<f64> {
        AmplificationExpansion {
            alpha: self.alpha.iter().map(rational::to_f64).collect(),
            beta: rational::to_f64(&self.beta),
        }
    }
}

/// `S_0..S_k` together with the CFL classification they imply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityProfile<Q> {
    pub s: Vec<Q>,
    /// Index of the first nonzero `S_l` with `l >= 1`.
    pub r: Option<usize>,
    /// Sign of `S_r`, or 0 when there is no nonzero `S_l`.
    pub sign_r: i32,
    /// `2r/(2r-1)` for `S_r > 0`, `1` for `S_r < 0`.
    pub cfl_exponent: Option<Rational>,
}

impl<Q: Clone + Signed> StabilityProfile<Q> {
    /// Classifies an already computed coefficient list.
    pub fn from_s(s: Vec<Q>) -> Self {
        let r = s.iter().skip(1).position(|x| !x.is_zero()).map(|p| p + 1);
        let sign_r = match r {
            Some(r) if s[r].is_positive() => 1,
            Some(_) => -1,
            None => 0,
        };
        let cfl_exponent = r.map(|r| predicted_exponent(r, sign_r));
        Self {
            s,
            r,
            sign_r,
            cfl_exponent,
        }
    }

    pub fn s_r(&self) -> Option<&Q> {
        self.r.map(|r| &self.s[r])
    }
}

impl StabilityProfile<Rational> {
    pub fn exponent_f64(&self) -> Option<f64> {
        self.cfl_exponent.as_ref().map(rational::to_f64)
    }
}

/// `2r/(2r-1)` for a positive leading coefficient, 1 otherwise.
pub fn predicted_exponent(r: usize, sign_r: i32) -> Rational {
    if sign_r > 0 {
        let r = r as i64;
        ratio(2 * r, 2 * r - 1)
    } else {
        int(1)
    }
}

/// Runs the stage recursion for `alpha` and `beta` in exact arithmetic.
///
/// With `F` absorbing the minus sign of the scheme, stage `l` contributes
/// `alpha[l][i] = sum_{j>=i} a[l][j] alpha[j][i] + sum_{j>=i-1} b[l][j] alpha[j][i-1]`
/// and `beta[l] = sum_{j>=1} a[l][j] beta[j] + sum_j b[l][j]`, with
/// `alpha[0] = (1)` and `beta[0] = 0`.
pub fn expand_perturbation(t: &ExplicitTableau) -> Result<AmplificationExpansion<Rational>> {
    t.validate().into_result()?;
    let k = t.k();
    let mut alpha: Vec<Vec<Rational>> = vec![vec![int(1)]];
    let mut beta: Vec<Rational> = vec![Rational::zero()];
    for l in 1..=k {
        let mut row = vec![Rational::zero(); l + 1];
        for (i, slot) in row.iter_mut().enumerate() {
            for (j, prev) in alpha.iter().enumerate().take(l) {
                if i < prev.len() {
                    *slot += t.a(l, j) * &prev[i];
                }
                if i >= 1 && i - 1 < prev.len() {
                    *slot += t.b(l, j) * &prev[i - 1];
                }
            }
        }
        let mut b_l = Rational::zero();
        for (j, beta_j) in beta.iter().enumerate().take(l) {
            if j >= 1 {
                b_l += t.a(l, j) * beta_j;
            }
            b_l += t.b(l, j);
        }
        alpha.push(row);
        beta.push(b_l);
    }
    Ok(AmplificationExpansion {
        alpha: alpha.pop().expect("k >= 1"),
        beta: beta.pop().expect("k >= 1"),
    })
}

/// `alpha_i = 1/i!` for `i = 0..m`, `beta = 1`.
pub fn taylor_alpha(scheme: TaylorScheme) -> AmplificationExpansion<Rational> {
    let mut alpha = vec![int(1)];
    for i in 1..=scheme.order() {
        let prev = alpha[i - 1].clone();
        alpha.push(prev / int(i as i64));
    }
    AmplificationExpansion {
        alpha,
        beta: int(1),
    }
}

/// `S_l = sum_{|j| <= min(l, k-l)} (-1)^j alpha_{l-j} alpha_{l+j}` for `l = 0..k`.
pub fn compute_s<Q>(e: &AmplificationExpansion<Q>) -> Result<StabilityProfile<Q>>
where
    Q: Clone + Num + Signed,
{
    if e.alpha.first().map_or(true, |a0| !a0.is_one()) {
        return Err(Error::Domain("alpha_0 must equal 1".into()));
    }
    let k = e.k();
    let alpha = &e.alpha;
    let s = (0..=k)
        .map(|l| {
            let m = l.min(k - l) as isize;
            (-m..=m).fold(Q::zero(), |acc, j| {
                let term = alpha[(l as isize - j) as usize].clone()
                    * alpha[(l as isize + j) as usize].clone();
                if j % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect();
    Ok(StabilityProfile::from_s(s))
}

/// Outcome of checking `S_1 = ... = S_p = 0` for the order-`2p` truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoremCheck {
    Holds,
    Counterexample { index: usize, value: Rational },
}

/// Checks that the order-`2p` Taylor truncation has `S_1 = ... = S_p = 0`.
pub fn verify_theorem(p: usize) -> Result<TheoremCheck> {
    if !(1..=8).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside 1..=8")));
    }
    let profile = compute_s(&taylor_alpha(TaylorScheme::new(2 * p)?))?;
    Ok(match (1..=p).find(|&q| !profile.s[q].is_zero()) {
        None => TheoremCheck::Holds,
        Some(q) => TheoremCheck::Counterexample {
            index: q,
            value: profile.s[q].clone(),
        },
    })
}

/// Profile of the order-`m` Taylor truncation, checked against the
/// congruence rule: exponent `(m+1)/m` for `m = 1 mod 4`, `(m+2)/(m+1)` for
/// `m = 2 mod 4`, and a negative leading coefficient otherwise.
pub fn classify_taylor(m: usize) -> Result<StabilityProfile<Rational>> {
    let profile = compute_s(&taylor_alpha(TaylorScheme::new(m)?))?;
    let mi = m as i64;
    let expected = match m % 4 {
        1 => (1, ratio(mi + 1, mi)),
        2 => (1, ratio(mi + 2, mi + 1)),
        _ => (-1, int(1)),
    };
    let got = (profile.sign_r, profile.cfl_exponent.clone());
    if got != (expected.0, Some(expected.1.clone())) {
        return Err(Error::Domain(format!(
            "Taylor order {m}: sign {} exponent {:?}, congruence rule expects sign {} exponent {}",
            got.0,
            got.1.as_ref().map(rational::format),
            expected.0,
            rational::format(&expected.1)
        )));
    }
    Ok(profile)
}

fn series_mul(x: &[Rational], y: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for (i, xi) in x.iter().enumerate().take(len) {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate().take(len - i) {
            out[i + j] += xi * yj;
        }
    }
    out
}

/// Reciprocal of a power series with unit constant term.
fn series_recip(x: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    out[0] = int(1);
    for n in 1..len {
        let mut acc = Rational::zero();
        for i in 1..=n.min(x.len() - 1) {
            acc += &x[i] * &out[n - i];
        }
        out[n] = -acc;
    }
    out
}

/// Power series (in `z = -i theta`) of the principal root of
/// `rho^s - rho^(s-1) = z * sum_j w_j rho^(s-1-j)`, truncated at `degree`.
///
/// The coefficients play the role of `alpha` for a multistep scheme; the
/// resulting `S_l` are exact for `2l <= degree`.
pub fn principal_root_series(scheme: &MultistepScheme, degree: usize) -> Vec<Rational> {
    let len = degree + 1;
    let mut rho = vec![Rational::zero(); len];
    rho[0] = int(1);
    // rho = 1 + z * sum_j w_j rho^(-j); each sweep fixes one more order.
    for _ in 0..len {
        let inv = series_recip(&rho, len);
        let mut power = vec![Rational::zero(); len];
        power[0] = int(1);
        let mut acc = vec![Rational::zero(); len];
        for (j, w) in scheme.weights.iter().enumerate() {
            if j > 0 {
                power = series_mul(&power, &inv, len);
            }
            for (a, p) in acc.iter_mut().zip(&power) {
                *a += w * p;
            }
        }
        let mut next = vec![Rational::zero(); len];
        next[0] = int(1);
        next[1..len].clone_from_slice(&acc[..(len - 1)]);
        if next == rho {
            break;
        }
        rho = next;
    }
    rho
}

/// Effective stability profile of a multistep scheme from its principal
/// root, keeping the `S_l` that the truncation determines exactly.
pub fn multistep_profile(scheme: &MultistepScheme, degree: usize) -> Result<StabilityProfile<Rational>> {
    let alpha = principal_root_series(scheme, degree);
    let full = compute_s(&AmplificationExpansion {
        alpha,
        beta: int(1),
    })?;
    let s = full.s.into_iter().take(degree / 2 + 1).collect();
    Ok(StabilityProfile::from_s(s))
}

/// Serializable summary of an expansion and its profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub scheme: String,
    pub alpha: Vec<RationalRepr>,
    pub beta: Option<RationalRepr>,
    pub s: Vec<RationalRepr>,
    pub r: Option<usize>,
    pub sign_r: i32,
    pub cfl_exponent: Option<RationalRepr>,
    /// Decimal value of `cfl_exponent`, for display only.
    pub cfl_exponent_decimal: Option<f64>,
}

impl CoefficientReport {
    pub fn new(
        scheme: impl Into<String>,
        expansion: Option<&AmplificationExpansion<Rational>>,
        profile: &StabilityProfile<Rational>,
    ) -> Self {
        Self {
            scheme: scheme.into(),
            alpha: expansion
                .map(|e| e.alpha.iter().map(RationalRepr::from).collect())
                .unwrap_or_default(),
            beta: expansion.map(|e| RationalRepr::from(&e.beta)),
            s: profile.s.iter().map(RationalRepr::from).collect(),
            r: profile.r,
            sign_r: profile.sign_r,
            cfl_exponent: profile.cfl_exponent.as_ref().map(RationalRepr::from),
            cfl_exponent_decimal: profile.exponent_f64(),
        }
    }

    /// Rebuilds the exact profile.
    pub fn profile(&self) -> Result<StabilityProfile<Rational>> {
        let s = self
            .s
            .iter()
            .map(|r| Rational::try_from(r).map_err(Error::Domain))
            .collect::<Result<Vec<_>>>()?;
        Ok(StabilityProfile::from_s(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{ab2, centered_2, explicit_euler, rk4};

    fn q(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    #[test]
    fn explicit_euler_expansion() {
        let e = expand_perturbation(&explicit_euler()).unwrap();
        assert_eq!(e.alpha, vec![int(1), int(1)]);
        assert_eq!(e.beta, int(1));
    }

    #[test]
    fn centered_2_expansion() {
        let e = expand_perturbation(&centered_2()).unwrap();
        assert_eq!(e.alpha, vec![int(1), int(1), q(1, 2)]);
        assert_eq!(e.beta, int(1));
    }

    #[test]
    fn rk4_expansion() {
        let e = expand_perturbation(&rk4()).unwrap();
        assert_eq!(e.alpha, vec![int(1), int(1), q(1, 2), q(1, 6), q(1, 24)]);
        assert_eq!(e.beta, int(1));
    }

    #[test]
    fn invalid_tableau_is_rejected() {
        let mut t = explicit_euler();
        t.stages[0].a[0] = int(2);
        assert!(matches!(expand_perturbation(&t), Err(Error::InvalidTableau(_))));
    }

    #[test]
    fn taylor_truncations() {
        let a = |m| taylor_alpha(TaylorScheme::new(m).unwrap()).alpha;
        assert_eq!(a(1), vec![int(1), int(1)]);
        assert_eq!(a(2), vec![int(1), int(1), q(1, 2)]);
        assert_eq!(a(4), vec![int(1), int(1), q(1, 2), q(1, 6), q(1, 24)]);
    }

    #[test]
    fn s_of_explicit_euler() {
        let p = compute_s(&taylor_alpha(TaylorScheme::new(1).unwrap())).unwrap();
        assert_eq!(p.s, vec![int(1), int(1)]);
        assert_eq!((p.r, p.sign_r), (Some(1), 1));
        assert_eq!(p.cfl_exponent, Some(int(2)));
    }

    #[test]
    fn s_of_centered_2() {
        let p = compute_s(&expand_perturbation(&centered_2()).unwrap()).unwrap();
        assert_eq!(p.s, vec![int(1), int(0), q(1, 4)]);
        assert_eq!((p.r, p.sign_r), (Some(2), 1));
        assert_eq!(p.cfl_exponent, Some(q(4, 3)));
    }

    #[test]
    fn s_of_rk4() {
        let p = compute_s(&expand_perturbation(&rk4()).unwrap()).unwrap();
        assert_eq!(p.s, vec![int(1), int(0), int(0), q(-1, 72), q(1, 576)]);
        assert_eq!((p.r, p.sign_r), (Some(3), -1));
        assert_eq!(p.cfl_exponent, Some(int(1)));
    }

    #[test]
    fn s_requires_unit_alpha_0() {
        let e = AmplificationExpansion {
            alpha: vec![int(2), int(1)],
            beta: int(1),
        };
        assert!(compute_s(&e).is_err());
    }

    #[test]
    fn s_works_in_floating_point() {
        let p = compute_s(&expand_perturbation(&rk4()).unwrap().to_f64()).unwrap();
        assert!((p.s[3] + 1.0 / 72.0).abs() < 1e-15);
        assert!(p.s[1].abs() < 1e-15);
    }

    #[test]
    fn degenerate_profile_has_no_prediction() {
        let p = StabilityProfile::from_s(vec![int(1), int(0), int(0)]);
        assert_eq!((p.r, p.sign_r, p.cfl_exponent), (None, 0, None));
    }

    #[test]
    fn theorem_small_p() {
        for p in 1..=3 {
            assert_eq!(verify_theorem(p).unwrap(), TheoremCheck::Holds);
        }
        assert!(verify_theorem(0).is_err());
        assert!(verify_theorem(9).is_err());
    }

    #[test]
    fn taylor_classification_examples() {
        assert_eq!(classify_taylor(1).unwrap().cfl_exponent, Some(int(2)));
        assert_eq!(classify_taylor(2).unwrap().cfl_exponent, Some(q(4, 3)));
        let p4 = classify_taylor(4).unwrap();
        assert_eq!((p4.sign_r, p4.cfl_exponent), (-1, Some(int(1))));
        assert!(classify_taylor(0).is_err());
    }

    #[test]
    fn taylor_classification_follows_congruence_rule() {
        for m in 1..=24 {
            classify_taylor(m).unwrap();
        }
    }

    #[test]
    fn ab2_principal_root() {
        let rho = principal_root_series(&ab2(), 4);
        // rho = 1 + z + z^2/2 - z^3/4 + ...: exp(z) minus the 5/12 error constant
        assert_eq!(&rho[..4], &[int(1), int(1), q(1, 2), q(-1, 4)]);
        let p = multistep_profile(&ab2(), 8).unwrap();
        assert_eq!(&p.s[..3], &[int(1), int(0), q(1, 2)]);
        assert_eq!((p.r, p.sign_r, p.cfl_exponent), (Some(2), 1, Some(q(4, 3))));
    }

    #[test]
    fn report_round_trips_through_json() {
        let e = expand_perturbation(&rk4()).unwrap();
        let p = compute_s(&e).unwrap();
        let report = CoefficientReport::new("rk4", Some(&e), &p);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains(r#"{"num":"-1","den":"72"}"#));
        let back: CoefficientReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.profile().unwrap(), p);
    }
}
