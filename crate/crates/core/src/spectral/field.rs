use super::Grid;
use crate::{Error, Real, Result};
use num_complex::Complex;
use rand::Rng;

/// Real 2D periodic vector field stored as Fourier coefficients.
///
/// `coeffs[c][index]` is the coefficient of component `c` at the
/// wavevector of `index` (see [`Grid`]). Fields built through this module
/// are Hermitian (real in physical space) and vanish outside the grid's
/// band. `divfree` records that the field went through a projection or
/// was built divergence-free.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T: Real> {
    pub(crate) grid: Grid<T>,
    pub(crate) coeffs: [Vec<Complex<T>>; 2],
    pub(crate) divfree: bool,
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: [vec![czero(); grid.len()], vec![czero(); grid.len()]],
            divfree: true,
        }
    }

    /// Wraps raw coefficients; the band mask is applied, Hermitian symmetry
    /// is the caller's responsibility.
    pub fn from_coeffs(grid: &Grid<T>, c1: Vec<Complex<T>>, c2: Vec<Complex<T>>) -> Result<Self> {
        if c1.len() != grid.len() || c2.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} coefficients per component",
                grid.len()
            )));
        }
        let mut f = Self {
            grid: grid.clone(),
            coeffs: [c1, c2],
            divfree: false,
        };
        f.apply_mask();
        Ok(f)
    }

    /// Transforms physical samples (row-major, `x` fastest) and applies the
    /// band mask.
    pub fn from_physical(grid: &Grid<T>, u1: &[T], u2: &[T]) -> Result<Self> {
        if u1.len() != grid.len() || u2.len() != grid.len() {
            return Err(Error::Domain(format!("expected {} samples per component", grid.len())));
        }
        let mut packed: Vec<Complex<T>> = u1.iter().zip(u2).map(|(&a, &b)| Complex::new(a, b)).collect();
        grid.forward(&mut packed);
        let [c1, c2] = unpack(grid, &packed);
        Self::from_coeffs(grid, c1, c2)
    }

    /// Samples a vector function on the physical grid.
    pub fn sample(grid: &Grid<T>, f: impl Fn(T, T) -> (T, T)) -> Result<Self> {
        let n = grid.n();
        let (mut u1, mut u2) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
        for j in 0..n {
            for i in 0..n {
                let (a, b) = f(grid.coordinate(i), grid.coordinate(j));
                u1.push(a);
                u2.push(b);
            }
        }
        Self::from_physical(grid, &u1, &u2)
    }

    /// `u = amplitude * (sin x cos y, -cos x sin y)`, built directly from
    /// its four Fourier modes.
    pub fn taylor_green(grid: &Grid<T>, amplitude: T) -> Self {
        let mut f = Self::zeros(grid);
        let q = amplitude / T::of(4.0);
        // sin(a) = (e^{ia} - e^{-ia}) / 2i, so +-q/i = -+iq.
        let m = |s: T| Complex::new(T::zero(), -s * q);
        for (k1, k2, s1, s2) in [
            (1, 1, T::one(), -T::one()),
            (1, -1, T::one(), T::one()),
            (-1, -1, -T::one(), T::one()),
            (-1, 1, -T::one(), -T::one()),
        ] {
            let idx = grid.index_of(k1, k2);
            f.coeffs[0][idx] = m(s1);
            f.coeffs[1][idx] = m(s2);
        }
        f
    }

    /// Non-steady smooth flow from the stream function
    /// `psi = sin x sin y + 0.6 sin(2x + 0.3) sin(y + 0.7) + 0.4 cos(x - 2y)`,
    /// scaled to `amplitude`.
    pub fn two_vortex(grid: &Grid<T>, amplitude: T) -> Self {
        let n = grid.n();
        let mut psi: Vec<Complex<T>> = Vec::with_capacity(grid.len());
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (grid.coordinate(i).as_f64(), grid.coordinate(j).as_f64());
                let v = x.sin() * y.sin()
                    + 0.6 * (2.0 * x + 0.3).sin() * (y + 0.7).sin()
                    + 0.4 * (x - 2.0 * y).cos();
                psi.push(Complex::new(T::of(v) * amplitude, T::zero()));
            }
        }
        grid.forward(&mut psi);
        let mut f = Self::zeros(grid);
        for m in grid.band() {
            let p = psi[m.index];
            let i = Complex::new(T::zero(), T::one());
            f.coeffs[0][m.index] = i * T::of(m.k2 as f64) * p;
            f.coeffs[1][m.index] = -(i * T::of(m.k1 as f64) * p);
        }
        f
    }

    /// Single real mode `2 Re(c exp(i k.x))` stored at `k` and `-k`.
    pub fn single_mode(grid: &Grid<T>, k1: i32, k2: i32, c: [Complex<T>; 2]) -> Result<Self> {
        if !grid.in_band(k1, k2) {
            return Err(Error::Domain(format!("mode ({k1}, {k2}) outside the band")));
        }
        let mut f = Self::zeros(grid);
        f.divfree = false;
        let (a, b) = (grid.index_of(k1, k2), grid.index_of(-k1, -k2));
        for comp in 0..2 {
            f.coeffs[comp][a] = c[comp];
            f.coeffs[comp][b] = c[comp].conj();
        }
        if a == b {
            for comp in 0..2 {
                f.coeffs[comp][a] = Complex::new(c[comp].re, T::zero());
            }
        }
        Ok(f)
    }

    /// Smallest-scale divergence-free perturbation: one mode at
    /// `k* = (k_max, 0)` polarized along `(-k2, k1)`, with L2 norm
    /// `amplitude` and the given phase.
    pub fn inject_perturbation(grid: &Grid<T>, amplitude: T, phase: T) -> Self {
        let km = grid.k_max() as i32;
        let c = Complex::from_polar(T::one(), phase);
        let mut f = Self::single_mode(grid, km, 0, [czero(), c]).expect("k_max is in band");
        let norm = f.norm_l2();
        f.scale(amplitude / norm);
        f.divfree = true;
        f
    }

    /// Random divergence-free field with a flat spectrum over the band,
    /// zero mean and unit L2 norm.
    pub fn random_divfree<R: Rng>(grid: &Grid<T>, rng: &mut R) -> Self {
        let mut f = Self::zeros(grid);
        for m in grid.band() {
            if m.k1 == 0 && m.k2 == 0 {
                continue;
            }
            for comp in 0..2 {
                f.coeffs[comp][m.index] =
                    Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0)));
            }
        }
        f.symmetrize();
        let mut f = f.leray_project();
        let norm = f.norm_l2();
        f.scale(T::one() / norm);
        f
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn is_divfree(&self) -> bool {
        self.divfree
    }

    pub fn coeffs(&self) -> &[Vec<Complex<T>>; 2] {
        &self.coeffs
    }

    pub fn coefficient(&self, k1: i32, k2: i32) -> [Complex<T>; 2] {
        let idx = self.grid.index_of(k1, k2);
        [self.coeffs[0][idx], self.coeffs[1][idx]]
    }

    /// Enforces `c(-k) = conj(c(k))` by averaging.
    pub fn symmetrize(&mut self) {
        let g = self.grid.clone();
        for comp in 0..2 {
            let old = self.coeffs[comp].clone();
            for (idx, slot) in self.coeffs[comp].iter_mut().enumerate() {
                let (k1, k2) = g.wavevector(idx);
                let mirror = old[g.index_of(-k1, -k2)];
                *slot = (old[idx] + mirror.conj()) * T::of(0.5);
            }
        }
    }

    /// Zeroes every coefficient outside the band.
    pub fn apply_mask(&mut self) {
        let g = self.grid.clone();
        for comp in 0..2 {
            for (idx, c) in self.coeffs[comp].iter_mut().enumerate() {
                let (k1, k2) = g.wavevector(idx);
                if !g.in_band(k1, k2) {
                    *c = czero();
                }
            }
        }
    }

    pub fn scale(&mut self, a: T) {
        for comp in &mut self.coeffs {
            for c in comp.iter_mut() {
                *c = *c * a;
            }
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut f = self.clone();
        f.scale(a);
        f
    }

    /// `self += a * other`; the divergence-free tag survives only if both
    /// operands carry it.
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for comp in 0..2 {
            for (x, y) in self.coeffs[comp].iter_mut().zip(&other.coeffs[comp]) {
                *x = *x + *y * a;
            }
        }
        self.divfree &= other.divfree;
        Ok(())
    }

    /// `sum_i w_i f_i` over at least one term.
    pub fn linear_combination(terms: &[(T, &Self)]) -> Result<Self> {
        let (w0, f0) = terms
            .first()
            .ok_or_else(|| Error::Domain("empty linear combination".into()))?;
        let mut out = f0.scaled(*w0);
        for (w, f) in &terms[1..] {
            out.axpy(*w, f)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(&[(T::one(), self), (-T::one(), other)])
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|comp| comp.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    /// Physical values `(u1, u2)` on the grid, row-major with `x` fastest.
    pub fn to_physical(&self) -> (Vec<T>, Vec<T>) {
        let mut packed = pack(&self.coeffs[0], &self.coeffs[1]);
        self.grid.inverse(&mut packed);
        packed.iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Marks the field as divergence-free without projecting. Used for
    /// fields whose construction guarantees it.
    pub(crate) fn assume_divfree(mut self) -> Self {
        self.divfree = true;
        self
    }
}

/// `a + i b` for coefficient arrays of two real fields; the inverse
/// transform of the result carries the fields in its real and imaginary
/// parts.
pub(crate) fn pack<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| Complex::new(x.re - y.im, x.im + y.re))
        .collect()
}

/// Splits the transform of `a + i b` (with `a`, `b` real) into the
/// coefficients of `a` and `b`.
pub(crate) fn unpack<T: Real>(grid: &Grid<T>, z: &[Complex<T>]) -> [Vec<Complex<T>>; 2] {
    let half = T::of(0.5);
    let mut a = vec![czero(); z.len()];
    let mut b = vec![czero(); z.len()];
    for idx in 0..z.len() {
        let (k1, k2) = grid.wavevector(idx);
        let m = z[grid.index_of(-k1, -k2)].conj();
        a[idx] = (z[idx] + m) * half;
        // (z - m) / 2i
        let d = (z[idx] - m) * half;
        b[idx] = Complex::new(d.im, -d.re);
    }
    [a, b]
}
