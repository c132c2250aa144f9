//! Number formatting, angle parsing and the CSV/JSON output contracts.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use ssml_core::experiment::{CompareError, CorrelationReport, FitError, FitResult};
use ssml_core::learner::{
    Checkpoint, HaltMode, HaltReason, InitialAngles, LearnerConfig, LearningTrace, WeightSource,
};
use ssml_core::noise::NoiseModel;

/// Header of the checkpoint CSV written by `run` and `sweep`.
pub const CHECKPOINT_HEADER: &str = "trial,N,M_S,eps_true,eps_monitored";

/// 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses an angle in radians, or in degrees with a `deg:` prefix.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    let (text, scale) = match s.strip_prefix("deg:") {
        Some(rest) => (rest.trim(), PI / 180.0),
        None => (s, 1.0),
    };
    let v: f64 = text
        .parse()
        .with_context(|| format!("invalid angle `{s}`"))?;
    if !v.is_finite() {
        bail!("invalid angle `{s}`");
    }
    Ok(v * scale)
}

/// Comma-separated angles, exactly `N` of them.
pub fn parse_angles<const N: usize>(s: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        bail!("expected {N} comma-separated angles, got `{s}`");
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = parse_angle(part)?;
    }
    Ok(out)
}

pub fn parse_halt_mode(s: &str) -> Result<HaltMode> {
    match s.trim() {
        "immediate" => Ok(HaltMode::Immediate),
        "on-next-failure" | "on_next_failure" => Ok(HaltMode::OnNextFailure),
        other => bail!("unknown halt mode `{other}` (immediate | on-next-failure)"),
    }
}

pub fn parse_weight_source(s: &str) -> Result<WeightSource> {
    match s.trim() {
        "streak" => Ok(WeightSource::Streak),
        "record" => Ok(WeightSource::Record),
        other => bail!("unknown weight source `{other}` (streak | record)"),
    }
}

/// `zero`, `random`, or three comma-separated angles.
pub fn parse_initial_angles(s: &str) -> Result<InitialAngles> {
    match s.trim() {
        "zero" => Ok(InitialAngles::Fixed([0.0; 3])),
        "random" => Ok(InitialAngles::Randomized),
        other => Ok(InitialAngles::Fixed(parse_angles::<3>(other)?)),
    }
}

pub fn halt_mode_name(m: HaltMode) -> &'static str {
    match m {
        HaltMode::Immediate => "immediate",
        HaltMode::OnNextFailure => "on-next-failure",
    }
}

pub fn halt_reason_name(r: HaltReason) -> &'static str {
    match r {
        HaltReason::Halted => "halted",
        HaltReason::ShotBudgetExhausted => "shot-budget-exhausted",
    }
}

pub fn checkpoint_row(trial: usize, c: &Checkpoint) -> String {
    format!(
        "{trial},{},{},{},{}",
        c.shots,
        c.streak,
        fmt_f64(c.epsilon_true),
        fmt_f64(c.epsilon_monitored)
    )
}

pub fn checkpoint_csv<'a>(rows: impl IntoIterator<Item = (usize, &'a Checkpoint)>) -> String {
    let mut out = String::from(CHECKPOINT_HEADER);
    out.push('\n');
    for (trial, c) in rows {
        out.push_str(&checkpoint_row(trial, c));
        out.push('\n');
    }
    out
}

pub fn learner_json(c: &LearnerConfig) -> Value {
    json!({
        "a": c.a,
        "b": c.b,
        "r_range": c.r_range,
        "m_h": c.halting_streak,
        "halt_mode": halt_mode_name(c.halt_mode),
        "max_shots": c.max_shots,
        "initial_angles": match c.initial_angles {
            InitialAngles::Fixed(a) => json!(a),
            InitialAngles::Randomized => json!("random"),
        },
        "weight_source": match c.weight_source {
            WeightSource::Streak => "streak",
            WeightSource::Record => "record",
        },
        "retardance_errors": c.retardance_errors,
    })
}

pub fn noise_json(n: &NoiseModel) -> Value {
    json!({
        "p_false_negative": n.p_false_negative,
        "p_false_positive": n.p_false_positive,
        "p_loss": n.p_loss,
    })
}

/// Final state of a trace, without its checkpoint list.
pub fn trace_finals_json(t: &LearningTrace) -> Value {
    json!({
        "halt_reason": halt_reason_name(t.halt_reason),
        "final_N": t.final_shots,
        "final_M_S": t.final_streak,
        "best_streak": t.best_streak,
        "final_eps_true": t.final_epsilon_true,
        "final_eps_monitored": ssml_core::learner::monitored_infidelity(t.final_streak),
        "final_angles": t.final_angles,
        "n_checkpoints": t.checkpoints.len(),
    })
}

pub fn fit_json(fit: &Result<FitResult, FitError>) -> Value {
    match fit {
        Ok(f) => json!({
            "C": f.c,
            "N0": f.n0,
            "gamma": f.gamma,
            "gamma_stderr": f.gamma_stderr,
            "sse_log": f.sse_log,
            "n_points": f.n_points,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn correlation_json(report: &Result<CorrelationReport, CompareError>) -> Value {
    match report {
        Ok(r) => json!({
            "n_points": r.n_points,
            "log_correlation": r.log_correlation,
            "mean_log_ratio": r.mean_log_ratio,
            "std_log_ratio": r.std_log_ratio,
            "median_ratio": r.median_ratio,
            "min_ratio": r.min_ratio,
            "max_ratio": r.max_ratio,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// Writes `contents` to a temporary file beside `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
