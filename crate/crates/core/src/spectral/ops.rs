use super::field::{czero, pack, unpack};
use super::SpectralField;
use crate::{Real, Result};
use num_complex::Complex;

fn two_pi_sq<T: Real>() -> T {
    let tp = T::of(2.0 * std::f64::consts::PI);
    tp * tp
}

fn ik<T: Real>(k: i32, c: Complex<T>) -> Complex<T> {
    let k = T::of(k as f64);
    Complex::new(-c.im * k, c.re * k)
}

impl<T: Real> SpectralField<T> {
    /// Leray projection restricted to the band: removes the component of
    /// each mode along its wavevector, zeroes everything outside the band
    /// and leaves the mean untouched.
    pub fn leray_project(&self) -> Self {
        let mut out = Self::zeros(&self.grid);
        for m in self.grid.band() {
            let (a, b) = (self.coeffs[0][m.index], self.coeffs[1][m.index]);
            if m.k1 == 0 && m.k2 == 0 {
                out.coeffs[0][m.index] = a;
                out.coeffs[1][m.index] = b;
                continue;
            }
            let (k1, k2) = (T::of(m.k1 as f64), T::of(m.k2 as f64));
            let kk = k1 * k1 + k2 * k2;
            let dot = (a * k1 + b * k2) / kk;
            out.coeffs[0][m.index] = a - dot * k1;
            out.coeffs[1][m.index] = b - dot * k2;
        }
        out.divfree = true;
        out
    }

    /// `(self . grad) v` by the pseudo-spectral product, truncated to the
    /// band. Not projected.
    pub fn advect(&self, v: &Self) -> Result<Self> {
        self.grid.check_same(&v.grid)?;
        let g = &self.grid;
        let len = g.len();
        // (d1 v1, d2 v1) and (d1 v2, d2 v2) packed as real/imaginary pairs.
        let mut grads = [vec![czero(); len], vec![czero(); len]];
        for (comp, slot) in grads.iter_mut().enumerate() {
            for m in g.band() {
                let c = v.coeffs[comp][m.index];
                let d1 = ik(m.k1, c);
                let d2 = ik(m.k2, c);
                slot[m.index] = Complex::new(d1.re - d2.im, d1.im + d2.re);
            }
            g.inverse(slot);
        }
        let mut u = pack(&self.coeffs[0], &self.coeffs[1]);
        g.inverse(&mut u);
        let mut w: Vec<Complex<T>> = (0..len)
            .map(|p| {
                let (u1, u2) = (u[p].re, u[p].im);
                let w1 = u1 * grads[0][p].re + u2 * grads[0][p].im;
                let w2 = u1 * grads[1][p].re + u2 * grads[1][p].im;
                Complex::new(w1, w2)
            })
            .collect();
        g.forward(&mut w);
        let [c1, c2] = unpack(g, &w);
        Self::from_coeffs(g, c1, c2)
    }

    /// `P[(self . grad) v]` restricted to the band.
    pub fn projected_advection(&self, v: &Self) -> Result<Self> {
        Ok(self.advect(v)?.leray_project())
    }

    /// L2 inner product over the torus (Parseval).
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.grid.check_same(&other.grid)?;
        let mut acc = T::zero();
        for comp in 0..2 {
            for (a, b) in self.coeffs[comp].iter().zip(&other.coeffs[comp]) {
                acc = acc + a.re * b.re + a.im * b.im;
            }
        }
        Ok(acc * two_pi_sq())
    }

    pub fn energy(&self) -> T {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
            * two_pi_sq()
    }

    pub fn norm_l2(&self) -> T {
        self.energy().sqrt()
    }

    /// `|| grad f ||_{L2}` summed over both components and directions.
    pub fn norm_grad_l2(&self) -> T {
        let mut acc = T::zero();
        for comp in &self.coeffs {
            for (idx, c) in comp.iter().enumerate() {
                let (k1, k2) = self.grid.wavevector(idx);
                acc = acc + c.norm_sqr() * T::of((k1 * k1 + k2 * k2) as f64);
            }
        }
        (acc * two_pi_sq()).sqrt()
    }

    /// `|| d_dir f ||_{L2}` for `dir` 0 (x) or 1 (y).
    pub fn norm_partial_l2(&self, dir: usize) -> T {
        let mut acc = T::zero();
        for comp in &self.coeffs {
            for (idx, c) in comp.iter().enumerate() {
                let (k1, k2) = self.grid.wavevector(idx);
                let k = if dir == 0 { k1 } else { k2 };
                acc = acc + c.norm_sqr() * T::of((k * k) as f64);
            }
        }
        (acc * two_pi_sq()).sqrt()
    }

    /// Largest pointwise velocity magnitude on the grid.
    pub fn max_abs(&self) -> T {
        let (u1, u2) = self.to_physical();
        u1.iter()
            .zip(&u2)
            .fold(T::zero(), |m, (a, b)| m.max((*a * *a + *b * *b).sqrt()))
    }

    /// Jacobian entries `[d1 u1, d2 u1, d1 u2, d2 u2]` on the grid.
    pub fn gradient_physical(&self) -> [Vec<T>; 4] {
        let g = &self.grid;
        let mut out: [Vec<T>; 4] = Default::default();
        for comp in 0..2 {
            let mut d = vec![czero(); g.len()];
            for m in g.band() {
                let c = self.coeffs[comp][m.index];
                let (d1, d2) = (ik(m.k1, c), ik(m.k2, c));
                d[m.index] = Complex::new(d1.re - d2.im, d1.im + d2.re);
            }
            g.inverse(&mut d);
            out[2 * comp] = d.iter().map(|c| c.re).collect();
            out[2 * comp + 1] = d.iter().map(|c| c.im).collect();
        }
        out
    }

    /// Largest pointwise spectral norm of the velocity gradient.
    pub fn max_grad(&self) -> T {
        let [a, b, c, d] = self.gradient_physical();
        let mut best = T::zero();
        for p in 0..a.len() {
            let fro = a[p] * a[p] + b[p] * b[p] + c[p] * c[p] + d[p] * d[p];
            let det = a[p] * d[p] - b[p] * c[p];
            let disc = (fro * fro - T::of(4.0) * det * det).max(T::zero()).sqrt();
            best = best.max(((fro + disc) * T::of(0.5)).sqrt());
        }
        best
    }

    /// `max_k |k . c(k)| / ||c||`, zero for the zero field.
    pub fn divergence_defect(&self) -> T {
        let scale = self
            .coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
            .sqrt();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for idx in 0..self.grid.len() {
            let (k1, k2) = self.grid.wavevector(idx);
            let div = self.coeffs[0][idx] * T::of(k1 as f64) + self.coeffs[1][idx] * T::of(k2 as f64);
            worst = worst.max(div.norm());
        }
        worst / scale
    }

    /// `max_i ||d_i f|| dx / ||f||`; at most 1 on the band.
    pub fn check_inverse_inequality(&self) -> T {
        let norm = self.norm_l2();
        if norm == T::zero() {
            return T::zero();
        }
        self.norm_partial_l2(0).max(self.norm_partial_l2(1)) * self.grid.dx() / norm
    }

    /// `|| f ||^2` by trapezoidal quadrature of the physical samples.
    pub fn energy_quadrature(&self) -> T {
        let (u1, u2) = self.to_physical();
        let sum = u1
            .iter()
            .zip(&u2)
            .fold(T::zero(), |acc, (a, b)| acc + *a * *a + *b * *b);
        sum * two_pi_sq() / T::of(self.grid.len() as f64)
    }
}

/// `|<v, (u.grad) v>| / (max|u| ||v|| ||grad v||)`; zero when `v` or `u`
/// vanish.
pub fn skewness_defect<T: Real>(u: &SpectralField<T>, v: &SpectralField<T>) -> Result<T> {
    let scale = u.max_abs() * v.norm_l2() * v.norm_grad_l2();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    Ok(v.inner(&u.advect(v)?)?.abs() / scale)
}

/// `|<v, (u.grad) w> + <(u.grad) v, w>|` divided by
/// `max|u| (||v|| ||grad w|| + ||grad v|| ||w||)`.
pub fn antisymmetry_defect<T: Real>(
    u: &SpectralField<T>,
    v: &SpectralField<T>,
    w: &SpectralField<T>,
) -> Result<T> {
    let scale = u.max_abs() * (v.norm_l2() * w.norm_grad_l2() + v.norm_grad_l2() * w.norm_l2());
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let lhs = v.inner(&u.advect(w)?)? + u.advect(v)?.inner(w)?;
    Ok(lhs.abs() / scale)
}
