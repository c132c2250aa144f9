//! Batches of learning trials and their analysis.

mod angle;
mod compare;
mod fit;
mod sweep;

pub use angle::{
    angle_deduced_infidelity, run_angle_study, run_angle_study_trial, AngleStudyConfig,
    AngleStudyRow, AngleStudyTrial, RetardanceErrors, LAMBDA_OVER_300,
};
pub use compare::{compare_monitored_vs_true, CompareError, CorrelationReport, MIN_COMPARE_POINTS};
pub use fit::{fit_scaling, fit_scaling_fixed_n0, sse_log, FitError, FitResult, DEFAULT_EPS_FLOOR};
pub use sweep::{
    aggregate, hidden_state, run_sweep, run_sweep_trial, StateSource, SweepConfig, SweepResult,
    SweepRow, TrialResult,
};
