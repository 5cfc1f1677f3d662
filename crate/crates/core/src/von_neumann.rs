//! Amplification of a single Fourier mode under constant advection.
//!
//! For `d(phi)/dt = -a.grad(phi)` a mode `exp(i zeta.x)` is multiplied per
//! step by `xi(theta) = sum_j alpha_j (-i theta)^j` with the single
//! dimensionless group `theta = dt * a.zeta`. Its squared modulus is the
//! polynomial `sum_l S_l theta^(2l)`, which this module evaluates
//! independently of the exact coefficient engine.

use crate::coeffs::{AmplificationExpansion, StabilityProfile};
use crate::scheme::MultistepScheme;
use crate::{rational, Error, Rational, Real, Result};
use num_complex::Complex;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplificationSample<T> {
    pub theta: T,
    pub xi: Complex<T>,
    pub modulus_sq: T,
}

/// Float copy of the alpha coefficients.
pub fn alpha_real<T: Real>(e: &AmplificationExpansion<Rational>) -> Vec<T> {
    e.alpha.iter().map(rational::to_real).collect()
}

/// `xi(theta) = sum_j alpha_j (-i theta)^j` by Horner's rule.
pub fn xi_of<T: Real>(alpha: &[T], theta: T) -> Complex<T> {
    let z = Complex::new(T::zero(), -theta);
    alpha
        .iter()
        .rev()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &a| acc * z + a)
}

pub fn amplification<T: Real>(e: &AmplificationExpansion<Rational>, theta: T) -> AmplificationSample<T> {
    let xi = xi_of(&alpha_real::<T>(e), theta);
    AmplificationSample {
        theta,
        xi,
        modulus_sq: xi.norm_sqr(),
    }
}

/// `sum_l S_l theta^(2l)` in floating point.
pub fn s_polynomial<T: Real>(profile: &StabilityProfile<Rational>, theta: T) -> T {
    let x = theta * theta;
    profile
        .s
        .iter()
        .rev()
        .fold(T::zero(), |acc, s| acc * x + rational::to_real::<T>(s))
}

/// Largest relative gap between `|xi|^2` and `sum_l S_l theta^(2l)` over
/// the samples, relative to `max(1, sum_l S_l theta^(2l))`.
pub fn check_modulus_identity<T: Real>(
    e: &AmplificationExpansion<Rational>,
    profile: &StabilityProfile<Rational>,
    thetas: &[T],
) -> Result<T> {
    if thetas.is_empty() {
        return Err(Error::Domain("empty theta list".into()));
    }
    let alpha = alpha_real::<T>(e);
    Ok(thetas.iter().fold(T::zero(), |worst, &theta| {
        let poly = s_polynomial(profile, theta);
        let dev = (xi_of(&alpha, theta).norm_sqr() - poly).abs() / poly.max(T::one());
        worst.max(dev)
    }))
}

/// Roots of `rho^2 = rho + z (w0 rho + w1)` with `z = -i theta`.
pub fn multistep_roots<T: Real>(s: &MultistepScheme, theta: T) -> Result<[Complex<T>; 2]> {
    if s.weights.len() != 2 {
        return Err(Error::Domain(format!(
            "only two-step schemes are supported, got {} weights",
            s.weights.len()
        )));
    }
    let w0: T = rational::to_real(&s.weights[0]);
    let w1: T = rational::to_real(&s.weights[1]);
    let z = Complex::new(T::zero(), -theta);
    let one = Complex::new(T::one(), T::zero());
    // rho^2 + p rho + q = 0
    let p = -(one + z * w0);
    let q = -(z * w1);
    let two = T::of(2.0);
    let disc = (p * p - q * T::of(4.0)).sqrt();
    // Pick the sign that avoids cancellation, then use Vieta for the other.
    let big = if (p.conj() * disc).re >= T::zero() {
        -(p + disc) / two
    } else {
        -(p - disc) / two
    };
    let small = if big.norm_sqr() > T::zero() {
        q / big
    } else {
        Complex::new(T::zero(), T::zero())
    };
    Ok([big, small])
}

/// Largest `|rho|^2` over the two characteristic roots.
pub fn multistep_amplification<T: Real>(s: &MultistepScheme, theta: T) -> Result<T> {
    let [a, b] = multistep_roots(s, theta)?;
    Ok(a.norm_sqr().max(b.norm_sqr()))
}

/// Richardson extrapolation to `theta -> 0` of `(max|rho|^2 - 1) / theta^4`,
/// assuming an even expansion in `theta`. Thetas must double: `h, 2h, 4h`.
pub fn multistep_quartic_coefficient(s: &MultistepScheme, thetas: [f64; 3]) -> Result<f64> {
    let g = thetas.map(|t| multistep_amplification(s, t).map(|m| (m - 1.0) / t.powi(4)));
    let [g1, g2, g4] = [g[0].as_ref(), g[1].as_ref(), g[2].as_ref()];
    let (g1, g2, g4) = match (g1, g2, g4) {
        (Ok(a), Ok(b), Ok(c)) => (*a, *b, *c),
        _ => return Err(Error::Domain("multistep amplification failed".into())),
    };
    // Eliminate theta^2, then theta^4.
    let r1 = (4.0 * g1 - g2) / 3.0;
    let r2 = (4.0 * g2 - g4) / 3.0;
    Ok((16.0 * r1 - r2) / 15.0)
}

/// End of the stable interval `(0, theta*]` on which `|xi|^2 <= 1`, for
/// expansions whose leading `S_r` is negative. Scans `theta` with step
/// `h` up to `theta_max`, then bisects the first crossing.
pub fn stable_interval_end(
    e: &AmplificationExpansion<Rational>,
    theta_max: f64,
    h: f64,
) -> Option<f64> {
    let alpha = alpha_real::<f64>(e);
    let excess = |t: f64| xi_of(&alpha, t).norm_sqr() - 1.0;
    let mut lo = h;
    if excess(lo) > 0.0 {
        return None;
    }
    while lo < theta_max {
        let hi = lo + h;
        if excess(hi) > 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if excess(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}

/// CSV with columns `theta,re_xi,im_xi,modulus_sq`.
pub fn write_csv<T: Real, W: Write>(samples: &[AmplificationSample<T>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,re_xi,im_xi,modulus_sq")?;
    for s in samples {
        writeln!(out, "{:e},{:e},{:e},{:e}", s.theta, s.xi.re, s.xi.im, s.modulus_sq)?;
    }
    Ok(())
}
