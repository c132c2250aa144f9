use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::Error;
use crate::learner::{run_trial, Checkpoint, HaltReason, LearnerConfig, LearningTrace};
use crate::noise::NoiseModel;
use crate::qcore::{haar_random_state, prepare_state, PreparationSetting, PureState};
use crate::rng::{trial_seed, RandomStream, STREAM_HIDDEN_STATE};

use super::fit::{fit_scaling, FitError, FitResult};

/// How the hidden state of each trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSource {
    /// Uniform on the Poincare sphere.
    Haar,
    /// Preparation HWP and QWP angles each uniform on `[0, pi)`.
    WaveplateAngles,
    /// The same preparation for every trial.
    Fixed(PreparationSetting),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub n_states: usize,
    pub state_source: StateSource,
    pub learner: LearnerConfig,
    pub noise: NoiseModel,
    pub master_seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_states == 0 {
            return Err(Error::InvalidConfig("n_states must be >= 1"));
        }
        self.learner.validate()?;
        self.noise.validate()
    }
}

/// One trial of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub index: usize,
    pub seed: u64,
    pub hidden: PureState,
    /// Set when the hidden state came from preparation plates.
    pub preparation: Option<PreparationSetting>,
    pub trace: LearningTrace,
}

/// A checkpoint tagged with the trial it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub trial: usize,
    pub checkpoint: Checkpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub trials: Vec<TrialResult>,
    /// All checkpoints, ordered by trial index then by occurrence.
    pub table: Vec<SweepRow>,
}

/// Draws the hidden state of trial `index` from the trial seed's
/// hidden-state stream.
pub fn hidden_state(source: &StateSource, seed: u64) -> (PureState, Option<PreparationSetting>) {
    let mut rng = RandomStream::with_stream(seed, STREAM_HIDDEN_STATE);
    match source {
        StateSource::Haar => (haar_random_state(&mut rng), None),
        StateSource::WaveplateAngles => {
            let setting = PreparationSetting::new(rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI));
            (prepare_state(&setting), Some(setting))
        }
        StateSource::Fixed(setting) => (prepare_state(setting), Some(*setting)),
    }
}

/// Runs trial `index` of the sweep. Trials are independent, so callers may
/// run them in any order or concurrently.
pub fn run_sweep_trial(config: &SweepConfig, index: usize) -> Result<TrialResult, Error> {
    let seed = trial_seed(config.master_seed, index as u64);
    let (hidden, preparation) = hidden_state(&config.state_source, seed);
    let trace = run_trial(hidden, &config.learner, &config.noise, seed)?;
    Ok(TrialResult {
        index,
        seed,
        hidden,
        preparation,
        trace,
    })
}

/// Orders trials by index and concatenates their checkpoints.
pub fn aggregate(mut trials: Vec<TrialResult>) -> SweepResult {
    trials.sort_by_key(|t| t.index);
    let table = trials
        .iter()
        .flat_map(|t| {
            t.trace.checkpoints.iter().map(move |c| SweepRow {
                trial: t.index,
                checkpoint: *c,
            })
        })
        .collect();
    SweepResult { trials, table }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, Error> {
    config.validate()?;
    let trials = (0..config.n_states)
        .map(|i| run_sweep_trial(config, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(trials))
}

impl SweepResult {
    /// `(N, eps_true)` for every checkpoint.
    pub fn true_points(&self) -> Vec<(f64, f64)> {
        self.table
            .iter()
            .map(|r| (r.checkpoint.shots as f64, r.checkpoint.epsilon_true))
            .collect()
    }

    /// `(N, 1/(1+M_S))` for every checkpoint.
    pub fn monitored_points(&self) -> Vec<(f64, f64)> {
        self.table
            .iter()
            .map(|r| (r.checkpoint.shots as f64, r.checkpoint.epsilon_monitored))
            .collect()
    }

    /// `(eps_true, eps_monitored)` for every checkpoint.
    pub fn comparison_pairs(&self) -> Vec<(f64, f64)> {
        self.table
            .iter()
            .map(|r| (r.checkpoint.epsilon_true, r.checkpoint.epsilon_monitored))
            .collect()
    }

    /// Pooled fit of `eps_true` against `N` over all trials.
    pub fn pooled_fit(&self, eps_floor: f64) -> Result<FitResult, FitError> {
        fit_scaling(&self.true_points(), eps_floor)
    }

    /// One fit per trial, in trial order.
    pub fn per_trial_fits(&self, eps_floor: f64) -> Vec<Result<FitResult, FitError>> {
        self.trials
            .iter()
            .map(|t| {
                let pts: Vec<(f64, f64)> = t
                    .trace
                    .checkpoints
                    .iter()
                    .map(|c| (c.shots as f64, c.epsilon_true))
                    .collect();
                fit_scaling(&pts, eps_floor)
            })
            .collect()
    }

    pub fn exhausted_trials(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials
            .iter()
            .filter(|t| t.trace.halt_reason == HaltReason::ShotBudgetExhausted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::HaltMode;

    #[test]
    fn trivial_fixed_state_sweep() {
        let config = SweepConfig {
            n_states: 1,
            state_source: StateSource::Fixed(PreparationSetting::new(0.0, 0.0)),
            learner: LearnerConfig::with_halting_streak(100),
            noise: NoiseModel::noiseless(),
            master_seed: 1,
        };
        let result = run_sweep(&config).unwrap();
        assert_eq!(result.trials.len(), 1);
        assert_eq!(result.trials[0].trace.final_epsilon_true, 0.0);
        assert!(result.pooled_fit(1e-15).is_err());
    }

    #[test]
    fn sweep_is_reproducible_and_order_free() {
        let config = SweepConfig {
            n_states: 4,
            state_source: StateSource::WaveplateAngles,
            learner: LearnerConfig {
                halt_mode: HaltMode::OnNextFailure,
                ..LearnerConfig::with_halting_streak(500)
            },
            noise: NoiseModel::noiseless(),
            master_seed: 17,
        };
        let a = run_sweep(&config).unwrap();
        let b = run_sweep(&config).unwrap();
        assert_eq!(a, b);
        let reversed: Vec<TrialResult> = (0..4)
            .rev()
            .map(|i| run_sweep_trial(&config, i).unwrap())
            .collect();
        assert_eq!(aggregate(reversed), a);
        assert!(a.trials.iter().all(|t| t.preparation.is_some()));
        assert_eq!(
            a.table.len(),
            a.trials.iter().map(|t| t.trace.checkpoints.len()).sum()
        );
    }

    #[test]
    fn rejects_empty_sweep() {
        let config = SweepConfig {
            n_states: 0,
            state_source: StateSource::Haar,
            learner: LearnerConfig::with_halting_streak(10),
            noise: NoiseModel::noiseless(),
            master_seed: 0,
        };
        assert!(run_sweep(&config).is_err());
    }

    #[test]
    fn budget_exhaustion_is_a_tagged_trial() {
        let config = SweepConfig {
            n_states: 2,
            state_source: StateSource::Haar,
            learner: LearnerConfig {
                max_shots: 100,
                ..LearnerConfig::with_halting_streak(50)
            },
            noise: NoiseModel::new(1.0, 0.0, 0.0).unwrap(),
            master_seed: 3,
        };
        let result = run_sweep(&config).unwrap();
        assert_eq!(result.exhausted_trials().count(), 2);
    }
}
