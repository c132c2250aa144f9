//! Sweep configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Recognized keys and their defaults:
//!
//! | key           | default           | meaning                                       |
//! |---------------|-------------------|-----------------------------------------------|
//! | n_states      | 35                | number of hidden states                        |
//! | state_source  | haar              | `haar`, `angles`, or `fixed:<hwp>,<qwp>`       |
//! | a             | 0.3               | weight amplitude                               |
//! | b             | 0.5               | weight exponent                                |
//! | r_range       | pi/2              | half-width of the random kick (angle)          |
//! | m_h           | 10000             | halting streak                                 |
//! | halt_mode     | on-next-failure   | `immediate` or `on-next-failure`               |
//! | max_shots     | 200 * m_h         | shot budget per trial                          |
//! | init_angles   | zero              | `zero`, `random`, or `<a1>,<a2>,<a3>`          |
//! | weight_source | streak            | `streak` or `record`                           |
//! | noise_fn      | 0                 | false-negative probability                     |
//! | noise_fp      | 0                 | false-positive probability                     |
//! | noise_loss    | 0                 | loss probability                               |
//! | master_seed   | 2020              | batch seed                                     |
//! | eps_floor     | 1e-15             | fit drops checkpoints with eps_true <= floor   |
//! | compare_floor | 1e-9              | comparison drops eps_true <= floor             |
//! | fit_mode      | pooled            | `pooled` or `per_trial`                        |
//!
//! Angles are radians unless written with a `deg:` prefix.

use anyhow::{anyhow, bail, Context, Result};
use ssml_core::experiment::{StateSource, SweepConfig, DEFAULT_EPS_FLOOR};
use ssml_core::learner::{HaltMode, LearnerConfig, SHOT_BUDGET_FACTOR};
use ssml_core::noise::NoiseModel;
use ssml_core::qcore::PreparationSetting;

use crate::format::{
    parse_angle, parse_angles, parse_halt_mode, parse_initial_angles, parse_weight_source,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Pooled,
    PerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub sweep: SweepConfig,
    pub eps_floor: f64,
    pub compare_floor: f64,
    pub fit_mode: FitMode,
}

pub const DEFAULT_SWEEP_HALTING_STREAK: u64 = 10_000;
pub const DEFAULT_MASTER_SEED: u64 = 2020;

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            sweep: SweepConfig {
                n_states: 35,
                state_source: StateSource::Haar,
                learner: LearnerConfig {
                    halt_mode: HaltMode::OnNextFailure,
                    ..LearnerConfig::with_halting_streak(DEFAULT_SWEEP_HALTING_STREAK)
                },
                noise: NoiseModel::noiseless(),
                master_seed: DEFAULT_MASTER_SEED,
            },
            eps_floor: DEFAULT_EPS_FLOOR,
            compare_floor: 1e-9,
            fit_mode: FitMode::Pooled,
        }
    }
}

/// Accumulates `key = value` settings; [`SweepBuilder::finish`] fills in the
/// shot budget when it was not given explicitly.
#[derive(Debug, Clone, Default)]
pub struct SweepBuilder {
    settings: SweepSettings,
    explicit_max_shots: bool,
}

fn num<T: std::str::FromStr>(value: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    Ok(value.parse::<T>()?)
}

fn probability(value: &str) -> Result<f64> {
    let p: f64 = num(value)?;
    if !(0.0..=1.0).contains(&p) {
        bail!("probability must lie in [0, 1]");
    }
    Ok(p)
}

pub fn parse_state_source(value: &str) -> Result<StateSource> {
    match value {
        "haar" => Ok(StateSource::Haar),
        "angles" => Ok(StateSource::WaveplateAngles),
        other => match other.strip_prefix("fixed:") {
            Some(rest) => {
                let [h, q] = parse_angles::<2>(rest)?;
                Ok(StateSource::Fixed(PreparationSetting::new(h, q)))
            }
            None => bail!("expected haar, angles, or fixed:<hwp>,<qwp>"),
        },
    }
}

pub const KEYS: &[&str] = &[
    "n_states",
    "state_source",
    "a",
    "b",
    "r_range",
    "m_h",
    "halt_mode",
    "max_shots",
    "init_angles",
    "weight_source",
    "noise_fn",
    "noise_fp",
    "noise_loss",
    "master_seed",
    "eps_floor",
    "compare_floor",
    "fit_mode",
];

impl SweepBuilder {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown key `{key}`");
        }
        let value = value.trim();
        self.set_value(key, value)
            .with_context(|| format!("invalid value `{value}` for key `{key}`"))
    }

    fn set_value(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.settings;
        match key {
            "n_states" => s.sweep.n_states = num(value)?,
            "state_source" => s.sweep.state_source = parse_state_source(value)?,
            "a" => s.sweep.learner.a = num(value)?,
            "b" => s.sweep.learner.b = num(value)?,
            "r_range" => s.sweep.learner.r_range = parse_angle(value)?,
            "m_h" => s.sweep.learner.halting_streak = num(value)?,
            "halt_mode" => s.sweep.learner.halt_mode = parse_halt_mode(value)?,
            "max_shots" => {
                s.sweep.learner.max_shots = num(value)?;
                self.explicit_max_shots = true;
            }
            "init_angles" => s.sweep.learner.initial_angles = parse_initial_angles(value)?,
            "weight_source" => s.sweep.learner.weight_source = parse_weight_source(value)?,
            "noise_fn" => s.sweep.noise.p_false_negative = probability(value)?,
            "noise_fp" => s.sweep.noise.p_false_positive = probability(value)?,
            "noise_loss" => s.sweep.noise.p_loss = probability(value)?,
            "master_seed" => s.sweep.master_seed = num(value)?,
            "eps_floor" => s.eps_floor = num(value)?,
            "compare_floor" => s.compare_floor = num(value)?,
            "fit_mode" => {
                s.fit_mode = match value {
                    "pooled" => FitMode::Pooled,
                    "per_trial" | "per-trial" => FitMode::PerTrial,
                    _ => bail!("expected pooled or per_trial"),
                }
            }
            _ => unreachable!("key list and match arms disagree"),
        }
        Ok(())
    }

    /// Applies every line of a config file.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            self.set(key.trim(), value)
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got `{kv}`"))?;
        self.set(key.trim(), value)
    }

    pub fn finish(mut self) -> Result<SweepSettings> {
        let learner = &mut self.settings.sweep.learner;
        if !self.explicit_max_shots {
            learner.max_shots = learner.halting_streak.saturating_mul(SHOT_BUDGET_FACTOR);
        }
        self.settings.sweep.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(self.settings)
    }
}

pub fn parse_sweep_config(text: &str) -> Result<SweepSettings> {
    let mut b = SweepBuilder::default();
    b.apply_text(text)?;
    b.finish()
}
