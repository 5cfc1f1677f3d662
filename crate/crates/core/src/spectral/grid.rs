use crate::{Error, Real, Result};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Periodic `n x n` grid on `[0, 2pi)^2` with its retained wavenumber band.
///
/// Coefficients are stored row-major with the `x` index fastest; entry
/// `(i, j)` holds wavevector `(wavenumber(i), wavenumber(j))`.
#[derive(Clone)]
pub struct Grid<T: Real> {
    inner: Arc<GridInner<T>>,
}

struct GridInner<T: Real> {
    n: usize,
    k_max: usize,
    dealiased: bool,
    band: Vec<BandMode>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

/// A retained mode: storage index and wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandMode {
    pub index: usize,
    pub k1: i32,
    pub k2: i32,
}

impl<T: Real> Grid<T> {
    /// Grid with the 2/3 dealiasing rule, `k_max = floor(n/3)`.
    pub fn new(n: usize) -> Result<Self> {
        Self::build(n, true)
    }

    /// Grid keeping every mode below the Nyquist frequency,
    /// `k_max = n/2 - 1`. Products on such a grid alias.
    pub fn without_dealiasing(n: usize) -> Result<Self> {
        Self::build(n, false)
    }

    fn build(n: usize, dealiased: bool) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        let k_max = if dealiased { n / 3 } else { n / 2 - 1 };
        let km = k_max as i32;
        let band = (0..n * n)
            .filter_map(|index| {
                let k1 = wavenumber(index % n, n);
                let k2 = wavenumber(index / n, n);
                (k1.abs() <= km && k2.abs() <= km).then_some(BandMode { index, k1, k2 })
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                k_max,
                dealiased,
                band,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn k_max(&self) -> usize {
        self.inner.k_max
    }

    pub fn is_dealiased(&self) -> bool {
        self.inner.dealiased
    }

    /// Smallest resolved length, `1 / k_max`.
    pub fn dx(&self) -> T {
        T::one() / T::of(self.inner.k_max as f64)
    }

    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn band(&self) -> &[BandMode] {
        &self.inner.band
    }

    pub fn in_band(&self, k1: i32, k2: i32) -> bool {
        let km = self.inner.k_max as i32;
        k1.abs() <= km && k2.abs() <= km
    }

    /// Storage index of wavevector `(k1, k2)`; any integers are wrapped.
    pub fn index_of(&self, k1: i32, k2: i32) -> usize {
        let n = self.inner.n as i32;
        (k1.rem_euclid(n) + n * k2.rem_euclid(n)) as usize
    }

    pub fn wavevector(&self, index: usize) -> (i32, i32) {
        let n = self.inner.n;
        (wavenumber(index % n, n), wavenumber(index / n, n))
    }

    /// Physical coordinate of grid index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> T {
        T::of(2.0 * std::f64::consts::PI * i as f64 / self.inner.n as f64)
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.dealiased == other.inner.dealiased)
    }

    pub fn check_same(&self, other: &Grid<T>) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.n(),
                right: other.n(),
            })
        }
    }

    /// In-place 2D transform from physical values to coefficients,
    /// normalized so that a unit-amplitude mode has coefficient 1.
    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.transform(data, &*self.inner.forward);
        let scale = T::one() / T::of(self.len() as f64);
        for x in data.iter_mut() {
            *x = *x * scale;
        }
    }

    /// In-place 2D transform from coefficients to physical values.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.transform(data, &*self.inner.inverse);
    }

    fn transform(&self, data: &mut [Complex<T>], fft: &dyn Fft<T>) {
        let n = self.inner.n;
        assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        let mut t = vec![Complex::new(T::zero(), T::zero()); n * n];
        transpose(data, &mut t, n);
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, data, n);
    }
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("k_max", &self.inner.k_max)
            .field("dealiased", &self.inner.dealiased)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Signed wavenumber of storage index `i` on an `n`-point axis.
pub fn wavenumber(i: usize, n: usize) -> i32 {
    if i < n / 2 {
        i as i32
    } else {
        i as i32 - n as i32
    }
}

fn transpose<C: Copy>(src: &[C], dst: &mut [C], n: usize) {
    const BLOCK: usize = 16;
    for jb in (0..n).step_by(BLOCK) {
        for ib in (0..n).step_by(BLOCK) {
            for j in jb..(jb + BLOCK).min(n) {
                for i in ib..(ib + BLOCK).min(n) {
                    dst[i * n + j] = src[j * n + i];
                }
            }
        }
    }
}
