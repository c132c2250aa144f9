use core::f64::consts::PI;

use num_complex::Complex64;

use crate::rng::RandomStream;

/// Unit-norm qubit state with amplitudes on `|H>` and `|V>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amps: [Complex64; 2],
}

impl PureState {
    /// Normalizes `(h, v)`. Returns `None` for the zero vector or non-finite
    /// input.
    pub fn new(h: Complex64, v: Complex64) -> Option<Self> {
        let norm = libm::sqrt(h.norm_sqr() + v.norm_sqr());
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        Some(Self {
            amps: [h / norm, v / norm],
        })
    }

    pub(crate) fn from_normalized(amps: [Complex64; 2]) -> Self {
        Self { amps }
    }

    pub fn horizontal() -> Self {
        Self::from_normalized([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    pub fn vertical() -> Self {
        Self::from_normalized([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// `cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>`, i.e. the state with
    /// polar angle `theta` and azimuth `phi` on the Poincare sphere.
    pub fn from_sphere(theta: f64, phi: f64) -> Self {
        let (s, c) = libm::sincos(theta / 2.0);
        let (sp, cp) = libm::sincos(phi);
        Self::from_normalized([Complex64::new(c, 0.0), Complex64::new(s * cp, s * sp)])
    }

    #[inline]
    pub fn h(&self) -> Complex64 {
        self.amps[0]
    }

    #[inline]
    pub fn v(&self) -> Complex64 {
        self.amps[1]
    }

    #[inline]
    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[1].norm_sqr()
    }

    /// Multiplies both amplitudes by `e^{i theta}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let (s, c) = libm::sincos(theta);
        let phase = Complex64::new(c, s);
        Self::from_normalized([self.amps[0] * phase, self.amps[1] * phase])
    }
}

/// Stokes (Bloch) vector in the optics convention: `|H>` maps to `(1, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn dot(&self, o: &StokesVector) -> f64 {
        self.s1 * o.s1 + self.s2 * o.s2 + self.s3 * o.s3
    }

    pub fn cross(&self, o: &StokesVector) -> StokesVector {
        StokesVector {
            s1: self.s2 * o.s3 - self.s3 * o.s2,
            s2: self.s3 * o.s1 - self.s1 * o.s3,
            s3: self.s1 * o.s2 - self.s2 * o.s1,
        }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }
}

/// `1 - |<a|b>|^2`, clamped to `[0, 1]`.
pub fn infidelity(a: &PureState, b: &PureState) -> f64 {
    (1.0 - a.inner(b).norm_sqr()).clamp(0.0, 1.0)
}

pub fn to_stokes(psi: &PureState) -> StokesVector {
    let h = psi.h();
    let v = psi.v();
    let cross = h.conj() * v;
    StokesVector {
        s1: h.norm_sqr() - v.norm_sqr(),
        s2: 2.0 * cross.re,
        s3: 2.0 * cross.im,
    }
}

/// `sin^2(phi/2)` where `phi` is the angle between the two vectors.
pub fn stokes_infidelity(a: &StokesVector, b: &StokesVector) -> f64 {
    let phi = libm::atan2(a.cross(b).norm(), a.dot(b));
    let s = libm::sin(phi / 2.0);
    (s * s).clamp(0.0, 1.0)
}

/// Samples a state uniformly over the Poincare sphere (Haar measure on pure
/// qubit states). Consumes two uniforms.
pub fn haar_random_state(rng: &mut RandomStream) -> PureState {
    let cos_theta = rng.uniform_in(-1.0, 1.0);
    let phi = rng.uniform_in(0.0, 2.0 * PI);
    PureState::from_sphere(libm::acos(cos_theta), phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn diag() -> PureState {
        PureState::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn new_normalizes_and_rejects_zero() {
        let s = PureState::new(Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(PureState::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).is_none());
        assert!(PureState::new(Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)).is_none());
    }

    #[test]
    fn infidelity_examples() {
        let h = PureState::horizontal();
        let v = PureState::vertical();
        assert_eq!(infidelity(&h, &h), 0.0);
        assert_eq!(infidelity(&h, &v), 1.0);
        assert!((infidelity(&h, &diag()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stokes_examples() {
        let s = to_stokes(&PureState::horizontal());
        assert_eq!((s.s1, s.s2, s.s3), (1.0, 0.0, 0.0));
        let s = to_stokes(&PureState::vertical());
        assert_eq!((s.s1, s.s2, s.s3), (-1.0, 0.0, 0.0));
        let s = to_stokes(&diag());
        assert!((s.s1).abs() < 1e-15 && (s.s2 - 1.0).abs() < 1e-15 && s.s3.abs() < 1e-15);
        let r = PureState::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        )
        .unwrap();
        assert!((to_stokes(&r).s3 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stokes_infidelity_examples() {
        let x = StokesVector::new(1.0, 0.0, 0.0);
        let y = StokesVector::new(0.0, 1.0, 0.0);
        let mx = StokesVector::new(-1.0, 0.0, 0.0);
        assert_eq!(stokes_infidelity(&x, &x), 0.0);
        assert!((stokes_infidelity(&x, &mx) - 1.0).abs() < 1e-15);
        assert!((stokes_infidelity(&x, &y) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_parametrization_matches_stokes() {
        let s = to_stokes(&PureState::from_sphere(1.1, -0.4));
        assert!((s.s1 - libm::cos(1.1)).abs() < 1e-14);
        assert!((s.s2 - libm::sin(1.1) * libm::cos(-0.4)).abs() < 1e-14);
        assert!((s.s3 - libm::sin(1.1) * libm::sin(-0.4)).abs() < 1e-14);
    }
}
