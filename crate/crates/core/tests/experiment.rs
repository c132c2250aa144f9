use std::f64::consts::PI;

use ssml_core::experiment::*;
use ssml_core::learner::{HaltMode, HaltReason, LearnerConfig};
use ssml_core::noise::NoiseModel;
use ssml_core::qcore::{
    estimated_state, infidelity, prepare_state, PreparationSetting, PureState, WaveplateStack,
};
use ssml_core::RandomStream;

fn scaling_sweep(seed: u64) -> SweepConfig {
    SweepConfig {
        n_states: 35,
        state_source: StateSource::Haar,
        learner: LearnerConfig {
            halt_mode: HaltMode::OnNextFailure,
            ..LearnerConfig::with_halting_streak(10_000)
        },
        noise: NoiseModel::noiseless(),
        master_seed: seed,
    }
}

#[test]
fn every_trial_meets_the_halting_contract() {
    let result = run_sweep(&scaling_sweep(2020)).unwrap();
    assert_eq!(result.trials.len(), 35);
    for t in &result.trials {
        assert_eq!(t.trace.halt_reason, HaltReason::Halted);
        assert!(t.trace.final_streak >= 10_000);
        let last = t.trace.checkpoints.last().unwrap();
        assert!(last.epsilon_monitored <= 1.0 / (1.0 + 10_000.0));
        for w in t.trace.checkpoints.windows(2) {
            assert!(w[0].streak < w[1].streak && w[0].shots < w[1].shots);
        }
    }
    let again = run_sweep(&scaling_sweep(2020)).unwrap();
    assert_eq!(result, again);
    let other = run_sweep(&scaling_sweep(2021)).unwrap();
    assert_ne!(result.table, other.table);
}

#[test]
fn long_streak_without_failure_exhausts_the_budget() {
    // Master 7, trial 19 learns below 1/(200 M_H) and never fires again.
    let trial = run_sweep_trial(&scaling_sweep(7), 19).unwrap();
    assert_eq!(trial.trace.halt_reason, HaltReason::ShotBudgetExhausted);
    assert_eq!(trial.trace.final_shots, 2_000_000);
    assert!(trial.trace.final_streak >= 10_000);
    assert!(trial.trace.best_streak < 10_000);
    assert!(trial.trace.final_epsilon_true < 1e-6);
}

#[test]
fn single_fiducial_trial() {
    let config = SweepConfig {
        n_states: 1,
        state_source: StateSource::Fixed(PreparationSetting::new(0.0, 0.0)),
        learner: LearnerConfig::with_halting_streak(100),
        noise: NoiseModel::noiseless(),
        master_seed: 0,
    };
    let result = run_sweep(&config).unwrap();
    assert_eq!(result.trials[0].trace.final_epsilon_true, 0.0);
    assert_eq!(result.trials[0].hidden, PureState::horizontal());
}

#[test]
fn angle_deduced_equals_truth_without_errors() {
    let mut rng = RandomStream::new(55);
    for _ in 0..1000 {
        let prep = PreparationSetting::new(rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI));
        let stack = WaveplateStack::ideal_learning([
            rng.uniform_in(-PI, PI),
            rng.uniform_in(-PI, PI),
            rng.uniform_in(-PI, PI),
        ]);
        let truth = infidelity(
            &estimated_state(&stack, &PureState::horizontal()),
            &prepare_state(&prep),
        );
        assert!((angle_deduced_infidelity(&prep, &stack) - truth).abs() < 1e-12);
    }
}

#[test]
fn retardance_errors_separate_the_two_estimates() {
    let config = AngleStudyConfig {
        n_states: 6,
        learner: LearnerConfig {
            halt_mode: HaltMode::OnNextFailure,
            ..LearnerConfig::with_halting_streak(20_000)
        },
        noise: NoiseModel::noiseless(),
        errors: RetardanceErrors::Fixed(0.021),
        master_seed: 3,
    };
    let trials = run_angle_study(&config).unwrap();
    let gaps: Vec<f64> = trials
        .iter()
        .map(|t| (t.final_epsilon_angle - t.trace.final_epsilon_true).abs())
        .collect();
    assert!(gaps.iter().any(|&g| g > 1e-5), "{gaps:?}");
    for t in &trials {
        assert_eq!(t.learning_errors, [0.021; 3]);
        assert_eq!(t.preparation.retardance_errors, [0.021; 2]);
    }
}

#[test]
fn monitored_tracks_true_infidelity() {
    let result = run_sweep(&scaling_sweep(11)).unwrap();
    let report = compare_monitored_vs_true(&result.comparison_pairs(), 1e-9).unwrap();
    assert!(report.log_correlation > 0.9, "{report:?}");
}
