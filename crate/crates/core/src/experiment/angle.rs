//! Infidelity deduced from dial angles.
//!
//! An experimenter who only knows the plate angles predicts the overlap from
//! ideal retarders. When the physical plates carry retardance errors that
//! prediction drifts from the true infidelity, and the drift sets a floor
//! under anything the indirect method can resolve.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::Error;
use crate::learner::{run_trial, LearnerConfig, LearningTrace};
use crate::noise::NoiseModel;
use crate::qcore::{stack_unitary, PreparationSetting, PureState, WaveplateStack};
use crate::rng::{trial_seed, RandomStream, STREAM_HIDDEN_STATE, STREAM_PLATE_ERRORS};

/// Retardance error equal to a lambda/300 path difference.
pub const LAMBDA_OVER_300: f64 = 2.0 * PI / 300.0;

/// `1 - |<H| U_ideal V_ideal |H>|^2`, using ideal retardances for both the
/// preparation and the learned stack.
pub fn angle_deduced_infidelity(prep: &PreparationSetting, learned: &WaveplateStack) -> f64 {
    let ideal_prep = PreparationSetting::new(prep.hwp_angle, prep.qwp_angle);
    let u = stack_unitary(&learned.idealized()) * stack_unitary(&ideal_prep.stack());
    (1.0 - u.entry(0, 0).norm_sqr()).clamp(0.0, 1.0)
}

/// How static retardance errors are assigned to the five plates (two in the
/// preparation, three in the learning stack).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetardanceErrors {
    /// Every plate off by the same amount.
    Fixed(f64),
    /// Each plate uniform on `[-bound, bound]`, drawn once per trial.
    Uniform(f64),
}

impl RetardanceErrors {
    /// `(preparation, learning)` errors for the trial seeded by `seed`.
    pub fn draw(&self, seed: u64) -> ([f64; 2], [f64; 3]) {
        match *self {
            RetardanceErrors::Fixed(e) => ([e; 2], [e; 3]),
            RetardanceErrors::Uniform(bound) => {
                let mut rng = RandomStream::with_stream(seed, STREAM_PLATE_ERRORS);
                let mut draw = || rng.uniform_in(-bound, bound);
                ([draw(), draw()], [draw(), draw(), draw()])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleStudyConfig {
    pub n_states: usize,
    pub learner: LearnerConfig,
    pub noise: NoiseModel,
    pub errors: RetardanceErrors,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleStudyRow {
    pub shots: u64,
    pub streak: u64,
    pub epsilon_true: f64,
    pub epsilon_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleStudyTrial {
    pub index: usize,
    /// The physical preparation, errors included.
    pub preparation: PreparationSetting,
    pub learning_errors: [f64; 3],
    pub trace: LearningTrace,
    /// One row per checkpoint.
    pub rows: Vec<AngleStudyRow>,
    /// Angle-deduced infidelity at the final angles.
    pub final_epsilon_angle: f64,
}

/// Learns a hidden state prepared by imperfect plates with an imperfect
/// learning stack, then scores every checkpoint both ways.
pub fn run_angle_study_trial(
    config: &AngleStudyConfig,
    index: usize,
) -> Result<AngleStudyTrial, Error> {
    let seed = trial_seed(config.master_seed, index as u64);
    let mut rng = RandomStream::with_stream(seed, STREAM_HIDDEN_STATE);
    let (prep_errors, learning_errors) = config.errors.draw(seed);
    let preparation = PreparationSetting::new(rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI))
        .with_retardance_errors(prep_errors);
    let hidden: PureState = crate::qcore::prepare_state(&preparation);
    let learner = LearnerConfig {
        retardance_errors: learning_errors,
        ..config.learner
    };
    let trace = run_trial(hidden, &learner, &config.noise, seed)?;
    let rows = trace
        .checkpoints
        .iter()
        .map(|c| AngleStudyRow {
            shots: c.shots,
            streak: c.streak,
            epsilon_true: c.epsilon_true,
            epsilon_angle: angle_deduced_infidelity(
                &preparation,
                &WaveplateStack::ideal_learning(c.angles),
            ),
        })
        .collect();
    let final_epsilon_angle = angle_deduced_infidelity(
        &preparation,
        &WaveplateStack::ideal_learning(trace.final_angles),
    );
    Ok(AngleStudyTrial {
        index,
        preparation,
        learning_errors,
        trace,
        rows,
        final_epsilon_angle,
    })
}

pub fn run_angle_study(config: &AngleStudyConfig) -> Result<Vec<AngleStudyTrial>, Error> {
    if config.n_states == 0 {
        return Err(Error::InvalidConfig("n_states must be >= 1"));
    }
    (0..config.n_states)
        .map(|i| run_angle_study_trial(config, i))
        .collect()
}
