use super::field::czero;
use super::{Grid, SpectralField};
use crate::{Error, Real, Result};
use num_complex::Complex;

/// Base modes above this count go through the transform path.
const SPARSE_LIMIT: usize = 64;

/// Linearization of the projected nonlinear term around a fixed base flow
/// `u`:
///
/// * `transport(e) = -P[(u.grad) e]`
/// * `stretch(e) = P[(e.grad) u]`
/// * `tangent(e) = transport(e) - stretch(e)`
///
/// A base flow with a handful of modes (Taylor-Green has four) is applied
/// as a direct convolution over those modes, which equals the dealiased
/// pseudo-spectral product without any transforms. Other flows use the
/// pseudo-spectral product.
#[derive(Debug, Clone)]
pub struct FrozenFlow<T: Real> {
    base: SpectralField<T>,
    sparse: Option<Vec<BaseMode<T>>>,
}

#[derive(Debug, Clone, Copy)]
struct BaseMode<T> {
    k1: i32,
    k2: i32,
    c: [Complex<T>; 2],
}

impl<T: Real> FrozenFlow<T> {
    pub fn new(base: &SpectralField<T>) -> Result<Self> {
        if !base.is_divfree() {
            return Err(Error::Domain("frozen base flow must be divergence-free".into()));
        }
        let g = base.grid();
        let modes: Vec<BaseMode<T>> = (0..g.len())
            .filter(|&idx| base.coeffs[0][idx] != czero() || base.coeffs[1][idx] != czero())
            .map(|idx| {
                let (k1, k2) = g.wavevector(idx);
                BaseMode {
                    k1,
                    k2,
                    c: [base.coeffs[0][idx], base.coeffs[1][idx]],
                }
            })
            .collect();
        let sparse = (g.is_dealiased() && modes.len() <= SPARSE_LIMIT).then_some(modes);
        Ok(Self {
            base: base.clone(),
            sparse,
        })
    }

    /// Same operator, always through the pseudo-spectral product.
    pub fn pseudo_spectral(base: &SpectralField<T>) -> Result<Self> {
        let mut f = Self::new(base)?;
        f.sparse = None;
        Ok(f)
    }

    pub fn base(&self) -> &SpectralField<T> {
        &self.base
    }

    pub fn grid(&self) -> &Grid<T> {
        self.base.grid()
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse.is_some()
    }

    pub fn transport(&self, e: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.base.grid().check_same(e.grid())?;
        match &self.sparse {
            Some(modes) => Ok(self.convolve(modes, e, true, false)),
            None => Ok(self.base.projected_advection(e)?.scaled(-T::one())),
        }
    }

    pub fn stretch(&self, e: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.base.grid().check_same(e.grid())?;
        match &self.sparse {
            Some(modes) => Ok(self.convolve(modes, e, false, true).scaled(-T::one())),
            None => e.projected_advection(&self.base),
        }
    }

    /// Full linearization `-P[(u.grad) e + (e.grad) u]`.
    pub fn tangent(&self, e: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.base.grid().check_same(e.grid())?;
        match &self.sparse {
            Some(modes) => Ok(self.convolve(modes, e, true, true)),
            None => {
                let mut w = self.base.advect(e)?;
                w.axpy(T::one(), &e.advect(&self.base)?)?;
                Ok(w.leray_project().scaled(-T::one()))
            }
        }
    }

    /// `-P[ (u.grad) e ]` and/or `-P[ (e.grad) u ]` over the base modes.
    fn convolve(&self, modes: &[BaseMode<T>], e: &SpectralField<T>, transport: bool, stretch: bool) -> SpectralField<T> {
        let g = e.grid();
        let mut out = SpectralField::zeros(g);
        let [e1, e2] = &e.coeffs;
        for m in g.band() {
            let mut acc = [czero::<T>(); 2];
            for p in modes {
                let (q1, q2) = (m.k1 - p.k1, m.k2 - p.k2);
                if !g.in_band(q1, q2) {
                    continue;
                }
                let qi = g.index_of(q1, q2);
                let (a1, a2) = (e1[qi], e2[qi]);
                if transport {
                    // i (u(p) . q) e(q)
                    let s = p.c[0] * T::of(q1 as f64) + p.c[1] * T::of(q2 as f64);
                    let s = Complex::new(-s.im, s.re);
                    acc[0] = acc[0] + s * a1;
                    acc[1] = acc[1] + s * a2;
                }
                if stretch {
                    // i (e(q) . p) u(p)
                    let t = a1 * T::of(p.k1 as f64) + a2 * T::of(p.k2 as f64);
                    let t = Complex::new(-t.im, t.re);
                    acc[0] = acc[0] + t * p.c[0];
                    acc[1] = acc[1] + t * p.c[1];
                }
            }
            let [mut a, mut b] = acc;
            if m.k1 != 0 || m.k2 != 0 {
                let (k1, k2) = (T::of(m.k1 as f64), T::of(m.k2 as f64));
                let dot = (a * k1 + b * k2) / (k1 * k1 + k2 * k2);
                a = a - dot * k1;
                b = b - dot * k2;
            }
            out.coeffs[0][m.index] = -a;
            out.coeffs[1][m.index] = -b;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sparse_and_transform_paths_agree() {
        for n in [16, 32] {
            let g = Grid::<f64>::new(n).unwrap();
            let tg = SpectralField::taylor_green(&g, 1.3);
            let fast = FrozenFlow::new(&tg).unwrap();
            let slow = FrozenFlow::pseudo_spectral(&tg).unwrap();
            assert!(fast.is_sparse() && !slow.is_sparse());
            let e = SpectralField::random_divfree(&g, &mut ChaCha8Rng::seed_from_u64(n as u64));
            for (a, b) in [
                (fast.transport(&e).unwrap(), slow.transport(&e).unwrap()),
                (fast.stretch(&e).unwrap(), slow.stretch(&e).unwrap()),
                (fast.tangent(&e).unwrap(), slow.tangent(&e).unwrap()),
            ] {
                let scale = b.norm_l2();
                assert!(scale > 1e-2, "{scale}");
                assert!(a.sub(&b).unwrap().norm_l2() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn transport_is_skew() {
        let g = Grid::<f64>::new(32).unwrap();
        let flow = FrozenFlow::new(&SpectralField::taylor_green(&g, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = SpectralField::random_divfree(&g, &mut rng);
        let w = SpectralField::random_divfree(&g, &mut rng);
        let lhs = v.inner(&flow.transport(&w).unwrap()).unwrap();
        let rhs = flow.transport(&v).unwrap().inner(&w).unwrap();
        assert!((lhs + rhs).abs() < 1e-12);
    }

    #[test]
    fn requires_divfree_base() {
        let g = Grid::<f64>::new(16).unwrap();
        let f = SpectralField::single_mode(&g, 1, 0, [Complex::new(1.0, 0.0), czero()]).unwrap();
        assert!(FrozenFlow::new(&f).is_err());
    }
}
