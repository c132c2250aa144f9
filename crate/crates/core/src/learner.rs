//! The single-shot feedback loop.
//!
//! Each copy of the hidden state is sent through the learning stack and
//! detected once:
//!
//! - success: the angles are kept and the streak grows by one;
//! - failure: each angle moves by `w * r` with `r` uniform on
//!   `[-r_range, r_range]` (drawn independently per angle) and
//!   `w = a (M_S + 1)^(-b)` computed from the streak that just ended, then
//!   the streak resets;
//! - lost copy: counted, nothing else changes.
//!
//! Whenever a failure ends a streak longer than every earlier one, a
//! [`Checkpoint`] is taken at the angles that produced the streak.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::Error;
use crate::noise::{sample_shot, NoiseModel, ShotOutcome};
use crate::qcore::{estimated_state, infidelity, PureState, WaveplateStack};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltMode {
    /// Stop as soon as the streak reaches the halting threshold.
    Immediate,
    /// Once the threshold is passed keep going until the next registered
    /// failure, and stop there without perturbing the angles.
    OnNextFailure,
}

/// Which streak drives the perturbation weight on a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightSource {
    /// The streak the failure just ended.
    Streak,
    /// The longest streak seen so far, this one included.
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialAngles {
    Fixed([f64; 3]),
    /// Each angle uniform on `[0, pi)`, drawn from the trial stream before
    /// the first shot.
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Weight amplitude. Zero freezes the angles.
    pub a: f64,
    /// Weight decay exponent.
    pub b: f64,
    /// Half-width of the interval the random kick `r` is drawn from.
    pub r_range: f64,
    /// Halting streak `M_H`.
    pub halting_streak: u64,
    pub halt_mode: HaltMode,
    /// Hard limit on copies consumed; must exceed `halting_streak`.
    pub max_shots: u64,
    pub initial_angles: InitialAngles,
    pub weight_source: WeightSource,
    /// Retardance errors of the physical QWP, HWP, QWP in the learning stack.
    pub retardance_errors: [f64; 3],
}

/// Halting streak used by the reference experiment.
pub const REFERENCE_HALTING_STREAK: u64 = 60_000;

/// Default shot budget as a multiple of the halting streak.
pub const SHOT_BUDGET_FACTOR: u64 = 200;

impl Default for LearnerConfig {
    fn default() -> Self {
        Self::with_halting_streak(REFERENCE_HALTING_STREAK)
    }
}

impl LearnerConfig {
    /// `a = 0.3`, `b = 0.5`, `r` on `[-pi/2, pi/2]`, immediate halting, zero
    /// initial angles, and a budget of `200 * halting_streak` shots.
    pub fn with_halting_streak(halting_streak: u64) -> Self {
        Self {
            a: 0.3,
            b: 0.5,
            r_range: FRAC_PI_2,
            halting_streak,
            halt_mode: HaltMode::Immediate,
            max_shots: halting_streak.saturating_mul(SHOT_BUDGET_FACTOR),
            initial_angles: InitialAngles::Fixed([0.0; 3]),
            weight_source: WeightSource::Streak,
            retardance_errors: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidConfig("a must be finite and >= 0"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidConfig("b must be finite and >= 0"));
        }
        if !(self.r_range > 0.0 && self.r_range.is_finite()) {
            return Err(Error::InvalidConfig("r_range must be finite and > 0"));
        }
        if self.halting_streak == 0 {
            return Err(Error::InvalidConfig("halting streak must be >= 1"));
        }
        if self.max_shots <= self.halting_streak {
            return Err(Error::InvalidConfig(
                "max_shots must exceed the halting streak",
            ));
        }
        if let InitialAngles::Fixed(angles) = self.initial_angles {
            if angles.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig("initial angles must be finite"));
            }
        }
        if self.retardance_errors.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("retardance errors must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerState {
    pub angles: [f64; 3],
    /// Current run of consecutive successes, `M_S`.
    pub streak: u64,
    /// Copies consumed so far, `N`.
    pub shots: u64,
    /// Longest streak recorded at a failure or at halting.
    pub best_streak: u64,
}

impl LearnerState {
    pub fn new(angles: [f64; 3]) -> Self {
        Self {
            angles,
            streak: 0,
            shots: 0,
            best_streak: 0,
        }
    }
}

/// Emitted when a registered failure ends a streak.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureEvent {
    /// Length of the streak the failure ended.
    pub streak: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Copies consumed up to and including the triggering shot.
    pub shots: u64,
    pub streak: u64,
    /// Infidelity of the estimate at `angles` against the hidden state.
    pub epsilon_true: f64,
    /// `1 / (1 + streak)`.
    pub epsilon_monitored: f64,
    pub angles: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    Halted,
    ShotBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub final_angles: [f64; 3],
    pub final_shots: u64,
    pub final_streak: u64,
    pub best_streak: u64,
    /// Infidelity at `final_angles`.
    pub final_epsilon_true: f64,
    pub halt_reason: HaltReason,
}

/// `a (streak + 1)^(-b)`.
pub fn weight(streak: u64, a: f64, b: f64) -> f64 {
    a * libm::pow(streak as f64 + 1.0, -b)
}

/// `1 / (1 + streak)`, the infidelity whose geometric streak law has mean
/// `streak`.
pub fn monitored_infidelity(streak: u64) -> f64 {
    1.0 / (1.0 + streak as f64)
}

/// Applies one detection to `state`. Failures consume exactly three uniforms
/// from `rng` (one kick per angle); other outcomes consume none.
pub fn apply_feedback(
    state: &mut LearnerState,
    outcome: ShotOutcome,
    config: &LearnerConfig,
    rng: &mut RandomStream,
) -> Option<FailureEvent> {
    state.shots += 1;
    match outcome {
        ShotOutcome::Success => {
            state.streak += 1;
            None
        }
        ShotOutcome::Lost => None,
        ShotOutcome::Failure => {
            let ended = state.streak;
            let driver = match config.weight_source {
                WeightSource::Streak => ended,
                WeightSource::Record => ended.max(state.best_streak),
            };
            let w = weight(driver, config.a, config.b);
            for angle in state.angles.iter_mut() {
                *angle += w * rng.uniform_in(-config.r_range, config.r_range);
            }
            state.streak = 0;
            Some(FailureEvent { streak: ended })
        }
    }
}

/// What a single call to [`Trial::step`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub outcome: ShotOutcome,
    pub failure: Option<FailureEvent>,
    pub halted: Option<HaltReason>,
}

/// A learning run against one hidden state, advanced shot by shot.
#[derive(Debug, Clone)]
pub struct Trial {
    config: LearnerConfig,
    noise: NoiseModel,
    hidden: PureState,
    fiducial: PureState,
    state: LearnerState,
    rng: RandomStream,
    p_success: f64,
    checkpoints: Vec<Checkpoint>,
    halted: Option<HaltReason>,
}

impl Trial {
    /// The fiducial state is `|H>`. The learning loop draws from the
    /// `seed`'s learner stream.
    pub fn new(
        hidden: PureState,
        config: LearnerConfig,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self, Error> {
        config.validate()?;
        noise.validate()?;
        let mut rng = RandomStream::new(seed);
        let angles = match config.initial_angles {
            InitialAngles::Fixed(angles) => angles,
            InitialAngles::Randomized => {
                let mut angles = [0.0; 3];
                for angle in angles.iter_mut() {
                    *angle = rng.uniform_in(0.0, PI);
                }
                angles
            }
        };
        let mut trial = Self {
            config,
            noise,
            hidden,
            fiducial: PureState::horizontal(),
            state: LearnerState::new(angles),
            rng,
            p_success: 0.0,
            checkpoints: Vec::new(),
            halted: None,
        };
        trial.refresh_probability();
        Ok(trial)
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn halt_reason(&self) -> Option<HaltReason> {
        self.halted
    }

    pub fn rng(&self) -> &RandomStream {
        &self.rng
    }

    /// The physical learning stack at the current angles.
    pub fn stack(&self) -> WaveplateStack {
        self.stack_at(self.state.angles)
    }

    /// Infidelity of the current estimate against the hidden state.
    pub fn current_infidelity(&self) -> f64 {
        self.infidelity_at(self.state.angles)
    }

    /// Ideal success probability at the current angles.
    pub fn success_probability(&self) -> f64 {
        self.p_success
    }

    fn stack_at(&self, angles: [f64; 3]) -> WaveplateStack {
        WaveplateStack::learning(angles, self.config.retardance_errors)
    }

    fn infidelity_at(&self, angles: [f64; 3]) -> f64 {
        infidelity(
            &estimated_state(&self.stack_at(angles), &self.fiducial),
            &self.hidden,
        )
    }

    fn refresh_probability(&mut self) {
        self.p_success =
            crate::noise::success_probability(&self.stack(), &self.hidden, &self.fiducial);
    }

    fn record(&mut self, shots: u64, streak: u64) {
        let angles = self.state.angles;
        self.checkpoints.push(Checkpoint {
            shots,
            streak,
            epsilon_true: self.infidelity_at(angles),
            epsilon_monitored: monitored_infidelity(streak),
            angles,
        });
        self.state.best_streak = streak;
    }

    /// Consumes one copy. Returns `None` once the trial has stopped.
    pub fn step(&mut self) -> Result<Option<Step>, Error> {
        if self.halted.is_some() {
            return Ok(None);
        }
        if self.state.shots >= self.config.max_shots {
            self.halted = Some(HaltReason::ShotBudgetExhausted);
            return Ok(None);
        }
        let outcome = sample_shot(self.p_success, &self.noise, &mut self.rng)?;
        let mut step = Step {
            outcome,
            failure: None,
            halted: None,
        };
        match outcome {
            ShotOutcome::Failure => {
                let ended = self.state.streak;
                let shots = self.state.shots + 1;
                if ended > self.state.best_streak {
                    self.record(shots, ended);
                }
                if self.config.halt_mode == HaltMode::OnNextFailure
                    && ended >= self.config.halting_streak
                {
                    // Stop at the angles that produced the streak.
                    self.state.shots = shots;
                    step.failure = Some(FailureEvent { streak: ended });
                    step.halted = Some(HaltReason::Halted);
                } else {
                    step.failure =
                        apply_feedback(&mut self.state, outcome, &self.config, &mut self.rng);
                    self.refresh_probability();
                }
            }
            _ => {
                apply_feedback(&mut self.state, outcome, &self.config, &mut self.rng);
                if self.config.halt_mode == HaltMode::Immediate
                    && self.state.streak >= self.config.halting_streak
                {
                    self.record(self.state.shots, self.state.streak);
                    step.halted = Some(HaltReason::Halted);
                }
            }
        }
        self.halted = step.halted;
        Ok(Some(step))
    }

    /// Steps until the trial stops.
    pub fn run(mut self) -> Result<LearningTrace, Error> {
        while self.step()?.is_some() {}
        Ok(self.into_trace())
    }

    /// Snapshot of the trial as a trace. A trial that has not stopped is
    /// reported as out of budget.
    pub fn into_trace(self) -> LearningTrace {
        LearningTrace {
            final_angles: self.state.angles,
            final_shots: self.state.shots,
            final_streak: self.state.streak,
            best_streak: self.state.best_streak,
            final_epsilon_true: self.current_infidelity(),
            halt_reason: self.halted.unwrap_or(HaltReason::ShotBudgetExhausted),
            checkpoints: self.checkpoints,
        }
    }
}

/// Runs a full learning trial against `hidden`.
pub fn run_trial(
    hidden: PureState,
    config: &LearnerConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<LearningTrace, Error> {
    Trial::new(hidden, *config, *noise, seed)?.run()
}
