//! Jones calculus for rotatable linear retarders.
//!
//! A plate with fast axis at `theta` and retardance `gamma` acts as
//! `R(theta) diag(1, e^{i gamma}) R(-theta)`, so the phase sits on the slow
//! axis and a zero-angle plate is diagonal.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::state::PureState;
use super::unitary::Unitary2;

pub const QUARTER_WAVE: f64 = FRAC_PI_2;
pub const HALF_WAVE: f64 = PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveplate {
    fast_axis_angle: f64,
    retardance: f64,
    retardance_error: f64,
}

impl Waveplate {
    /// Plate with nominal `retardance`; the fast-axis angle is reduced to
    /// `[0, pi)`.
    pub fn new(fast_axis_angle: f64, retardance: f64) -> Self {
        Self {
            fast_axis_angle: reduce_angle(fast_axis_angle),
            retardance,
            retardance_error: 0.0,
        }
    }

    pub fn quarter(fast_axis_angle: f64) -> Self {
        Self::new(fast_axis_angle, QUARTER_WAVE)
    }

    pub fn half(fast_axis_angle: f64) -> Self {
        Self::new(fast_axis_angle, HALF_WAVE)
    }

    pub fn with_retardance_error(mut self, error: f64) -> Self {
        self.retardance_error = error;
        self
    }

    pub fn fast_axis_angle(&self) -> f64 {
        self.fast_axis_angle
    }

    pub fn retardance(&self) -> f64 {
        self.retardance
    }

    pub fn retardance_error(&self) -> f64 {
        self.retardance_error
    }

    pub fn effective_retardance(&self) -> f64 {
        self.retardance + self.retardance_error
    }

    /// The same plate as its dial reading suggests, i.e. without retardance
    /// error.
    pub fn idealized(&self) -> Self {
        Self {
            retardance_error: 0.0,
            ..*self
        }
    }
}

fn reduce_angle(theta: f64) -> f64 {
    let mut r = libm::fmod(theta, PI);
    if r < 0.0 {
        r += PI;
    }
    if r >= PI {
        r = 0.0;
    }
    r
}

pub fn jones_matrix(plate: &Waveplate) -> Unitary2 {
    let (s, c) = libm::sincos(plate.fast_axis_angle);
    let (sg, cg) = libm::sincos(plate.effective_retardance());
    let e = Complex64::new(cg, sg);
    let one = Complex64::new(1.0, 0.0);
    let off = (one - e) * (c * s);
    Unitary2::from_rows([[e * (s * s) + c * c, off], [off, e * (c * c) + s * s]])
}

/// Plates in the order light traverses them.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveplateStack {
    plates: Vec<Waveplate>,
}

impl WaveplateStack {
    pub fn new(plates: Vec<Waveplate>) -> Self {
        Self { plates }
    }

    /// The learning unitary QWP(a1), HWP(a2), QWP(a3) with the given
    /// per-plate retardance errors.
    pub fn learning(angles: [f64; 3], retardance_errors: [f64; 3]) -> Self {
        Self::new(alloc::vec![
            Waveplate::quarter(angles[0]).with_retardance_error(retardance_errors[0]),
            Waveplate::half(angles[1]).with_retardance_error(retardance_errors[1]),
            Waveplate::quarter(angles[2]).with_retardance_error(retardance_errors[2]),
        ])
    }

    pub fn ideal_learning(angles: [f64; 3]) -> Self {
        Self::learning(angles, [0.0; 3])
    }

    pub fn plates(&self) -> &[Waveplate] {
        &self.plates
    }

    pub fn idealized(&self) -> Self {
        Self::new(self.plates.iter().map(Waveplate::idealized).collect())
    }
}

/// `J(plate_n) ... J(plate_1)`.
pub fn stack_unitary(stack: &WaveplateStack) -> Unitary2 {
    stack
        .plates
        .iter()
        .fold(Unitary2::identity(), |acc, plate| jones_matrix(plate) * acc)
}

/// State preparation: an ideal horizontal polarizer followed by HWP(beta1)
/// and QWP(beta2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparationSetting {
    pub hwp_angle: f64,
    pub qwp_angle: f64,
    pub retardance_errors: [f64; 2],
}

impl PreparationSetting {
    pub fn new(hwp_angle: f64, qwp_angle: f64) -> Self {
        Self {
            hwp_angle,
            qwp_angle,
            retardance_errors: [0.0; 2],
        }
    }

    pub fn with_retardance_errors(mut self, errors: [f64; 2]) -> Self {
        self.retardance_errors = errors;
        self
    }

    pub fn stack(&self) -> WaveplateStack {
        WaveplateStack::new(alloc::vec![
            Waveplate::half(self.hwp_angle).with_retardance_error(self.retardance_errors[0]),
            Waveplate::quarter(self.qwp_angle).with_retardance_error(self.retardance_errors[1]),
        ])
    }
}

pub fn prepare_state(setting: &PreparationSetting) -> PureState {
    stack_unitary(&setting.stack()).apply(&PureState::horizontal())
}

/// `U^dagger |fiducial>`: the identified state, and equally the state
/// obtained by sending the fiducial state backward through the stack.
pub fn estimated_state(stack: &WaveplateStack, fiducial: &PureState) -> PureState {
    stack_unitary(stack).adjoint().apply(fiducial)
}
