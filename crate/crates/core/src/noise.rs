//! Single-shot detector model.
//!
//! The ideal Born-rule probability of a success click is degraded by three
//! independent mechanisms: the copy may be lost before detection, a true
//! success may register as a failure (dark count on the failure detector,
//! finite polarizer extinction), and a true failure may register as a
//! success.
//!
//! Stream contract: [`sample_shot`] always consumes exactly three uniforms,
//! in the order loss, outcome, flip, whatever branch is taken.

use crate::error::Error;
use crate::qcore::{stack_unitary, PureState, WaveplateStack};
use crate::rng::RandomStream;

/// Signal-to-noise ratio (success/failure counts with the fiducial state
/// sent straight to the detectors) of the reference setup.
pub const REFERENCE_SNR: f64 = 1.54e6;

const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p_false_negative: f64,
    pub p_false_positive: f64,
    pub p_loss: f64,
}

impl NoiseModel {
    pub fn new(p_false_negative: f64, p_false_positive: f64, p_loss: f64) -> Result<Self, Error> {
        let model = Self {
            p_false_negative,
            p_false_positive,
            p_loss,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless() -> Self {
        Self {
            p_false_negative: 0.0,
            p_false_positive: 0.0,
            p_loss: 0.0,
        }
    }

    /// False negatives only, with `q = 1/snr`.
    pub fn from_snr(snr: f64) -> Result<Self, Error> {
        if snr.is_nan() || snr < 1.0 {
            return Err(Error::InvalidConfig("snr must be >= 1"));
        }
        Self::new(1.0 / snr, 0.0, 0.0)
    }

    /// The reference setup: `q = 1/1.54e6`.
    pub fn reference() -> Self {
        Self {
            p_false_negative: 1.0 / REFERENCE_SNR,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.p_false_negative) {
            return Err(Error::InvalidConfig("p_false_negative must lie in [0, 1]"));
        }
        if !ok(self.p_false_positive) {
            return Err(Error::InvalidConfig("p_false_positive must lie in [0, 1]"));
        }
        if !ok(self.p_loss) {
            return Err(Error::InvalidConfig("p_loss must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Probability that a shot registers as a success, given the ideal
    /// success probability `p`.
    pub fn effective_success_rate(&self, p: f64) -> f64 {
        (1.0 - self.p_loss)
            * (p * (1.0 - self.p_false_negative) + (1.0 - p) * self.p_false_positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShotOutcome {
    Success,
    Failure,
    Lost,
}

/// `|<fiducial| U psi>|^2`.
pub fn success_probability(stack: &WaveplateStack, psi: &PureState, fiducial: &PureState) -> f64 {
    let out = stack_unitary(stack).apply(psi);
    fiducial.inner(&out).norm_sqr().clamp(0.0, 1.0)
}

pub fn sample_shot(
    p_success: f64,
    noise: &NoiseModel,
    rng: &mut RandomStream,
) -> Result<ShotOutcome, Error> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p_success) {
        return Err(Error::ProbabilityOutOfRange(p_success));
    }
    let p = p_success.clamp(0.0, 1.0);
    let u_loss = rng.uniform();
    let u_outcome = rng.uniform();
    let u_flip = rng.uniform();

    if u_loss < noise.p_loss {
        return Ok(ShotOutcome::Lost);
    }
    let outcome = if u_outcome < p {
        if u_flip < noise.p_false_negative {
            ShotOutcome::Failure
        } else {
            ShotOutcome::Success
        }
    } else if u_flip < noise.p_false_positive {
        ShotOutcome::Success
    } else {
        ShotOutcome::Failure
    };
    Ok(outcome)
}
