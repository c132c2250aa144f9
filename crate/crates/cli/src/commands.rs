//! Subcommands of the `ssml` binary.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a run ends without
//! the requested result (shot budget exhausted, fit not possible).

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use ssml_core::experiment::{
    aggregate, compare_monitored_vs_true, fit_scaling, fit_scaling_fixed_n0, hidden_state,
    run_angle_study_trial, run_sweep_trial, AngleStudyConfig, AngleStudyTrial, RetardanceErrors,
    StateSource, DEFAULT_EPS_FLOOR,
};
use ssml_core::learner::{run_trial, HaltMode, HaltReason, LearnerConfig, SHOT_BUDGET_FACTOR};
use ssml_core::noise::NoiseModel;
use ssml_core::qcore::{PreparationSetting, PureState};
use ssml_core::rng::trial_seed;

use crate::config::{FitMode, SweepBuilder, DEFAULT_MASTER_SEED};
use crate::format::{
    checkpoint_csv, correlation_json, fit_json, fmt_f64, learner_json, noise_json, parse_angle,
    parse_angles, parse_halt_mode, parse_initial_angles, parse_weight_source, to_json_string,
    trace_finals_json, write_atomic,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_INCOMPLETE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ssml",
    version,
    about = "Single-shot measurement learning of pure qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one learning trial and print its checkpoints and metadata.
    Run(RunArgs),
    /// Learn a batch of hidden states and fit the scaling law.
    Sweep(SweepArgs),
    /// Fit eps = C (N + N0)^(-gamma) to a checkpoint CSV.
    Fit(FitArgs),
    /// Longest streak and final infidelity against false-negative rate.
    NoiseStudy(NoiseStudyArgs),
    /// Compare true and angle-deduced infidelity with imperfect retarders.
    AngleStudy(AngleStudyArgs),
}

fn angle_arg(s: &str) -> Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn probability_arg(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not a probability"))
    }
}

fn halt_mode_arg(s: &str) -> Result<HaltMode, String> {
    parse_halt_mode(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct LearnerArgs {
    /// Halting streak M_H.
    #[arg(long, default_value_t = 60_000)]
    pub mh: u64,
    /// Weight amplitude.
    #[arg(long, default_value_t = 0.3)]
    pub a: f64,
    /// Weight exponent.
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    /// Half-width of the random kick; radians, or `deg:<x>`.
    #[arg(long, value_parser = angle_arg, default_value_t = FRAC_PI_2)]
    pub r_range: f64,
    /// `immediate` or `on-next-failure`.
    #[arg(long, value_parser = halt_mode_arg, default_value = "immediate")]
    pub halt_mode: HaltMode,
    /// Shot budget; defaults to 200 * M_H.
    #[arg(long)]
    pub max_shots: Option<u64>,
    /// `zero`, `random`, or `<a1>,<a2>,<a3>`.
    #[arg(long, default_value = "zero")]
    pub init_angles: String,
    /// `streak` or `record`.
    #[arg(long, default_value = "streak")]
    pub weight_source: String,
}

impl LearnerArgs {
    fn to_config(&self) -> Result<LearnerConfig> {
        let config = LearnerConfig {
            a: self.a,
            b: self.b,
            r_range: self.r_range,
            halting_streak: self.mh,
            halt_mode: self.halt_mode,
            max_shots: self
                .max_shots
                .unwrap_or(self.mh.saturating_mul(SHOT_BUDGET_FACTOR)),
            initial_angles: parse_initial_angles(&self.init_angles)?,
            weight_source: parse_weight_source(&self.weight_source)?,
            retardance_errors: [0.0; 3],
        };
        config.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Probability that a true success registers as a failure.
    #[arg(long, value_parser = probability_arg, default_value_t = 0.0)]
    pub noise_fn: f64,
    /// Probability that a true failure registers as a success.
    #[arg(long, value_parser = probability_arg, default_value_t = 0.0)]
    pub noise_fp: f64,
    /// Probability that a copy is lost before detection.
    #[arg(long, value_parser = probability_arg, default_value_t = 0.0)]
    pub noise_loss: f64,
}

impl NoiseArgs {
    fn to_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise_fn, self.noise_fp, self.noise_loss).map_err(|e| anyhow!("{e}"))
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `haar` or `angles:<hwp>,<qwp>` (preparation plate angles).
    #[arg(long, default_value = "haar")]
    pub state: String,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Write `<prefix>.csv` and `<prefix>.json` instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set m_h=1000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Directory receiving `checkpoints.csv` and `summary.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row containing `N` and the infidelity column.
    pub csv: PathBuf,
    /// Pin N0 instead of fitting it.
    #[arg(long)]
    pub n0_fixed: Option<f64>,
    /// Infidelity column; falls back to the second column of a two-column file.
    #[arg(long, default_value = "eps_true")]
    pub eps_column: String,
    #[arg(long, default_value_t = DEFAULT_EPS_FLOOR)]
    pub eps_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseStudyState {
    /// The hidden state equals the fiducial state.
    Fiducial,
    /// Haar-random hidden state per seed.
    Haar,
}

#[derive(Debug, Args)]
pub struct NoiseStudyArgs {
    /// Comma-separated false-negative probabilities.
    #[arg(long, default_value = "1e-4")]
    pub q_grid: String,
    #[arg(long, default_value_t = 50)]
    pub seeds: u64,
    /// Shot budget per trial.
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
    /// Halting streak; defaults to shots - 1.
    #[arg(long)]
    pub mh: Option<u64>,
    #[arg(long, value_enum, default_value = "fiducial")]
    pub state: NoiseStudyState,
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorMode {
    /// Each plate uniform on [-e, e], drawn once per trial.
    Uniform,
    /// Every plate off by exactly e.
    Fixed,
}

#[derive(Debug, Args)]
pub struct AngleStudyArgs {
    #[arg(long, default_value_t = 35)]
    pub n_states: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub mh: u64,
    #[arg(long, value_parser = halt_mode_arg, default_value = "on-next-failure")]
    pub halt_mode: HaltMode,
    /// Retardance error magnitude; radians, or `deg:<x>`.
    #[arg(long, value_parser = angle_arg, default_value_t = 0.021)]
    pub retardance_error: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub error_mode: ErrorMode,
    /// Checkpoints with eps_true below this count as converged.
    #[arg(long, default_value_t = 1e-6)]
    pub deep_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    pub seed: u64,
    /// Directory receiving `angle_study.csv` and `angle_summary.json`;
    /// the CSV goes to stdout otherwise.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

/// Parses `args` and runs the subcommand. Returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_INVALID,
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_INVALID
        }
    }
}

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<u8> {
    match command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Fit(a) => cmd_fit(&a, out),
        Command::NoiseStudy(a) => cmd_noise_study(&a, out),
        Command::AngleStudy(a) => cmd_angle_study(&a, out),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot start worker threads")
}

fn parse_run_state(spec: &str, seed: u64) -> Result<(PureState, Value)> {
    if spec == "haar" {
        let (psi, _) = hidden_state(&StateSource::Haar, seed);
        return Ok((psi, json!({ "source": "haar" })));
    }
    let rest = spec
        .strip_prefix("angles:")
        .ok_or_else(|| anyhow!("--state must be `haar` or `angles:<hwp>,<qwp>`, got `{spec}`"))?;
    let [h, q] = parse_angles::<2>(rest)?;
    let (psi, _) = hidden_state(&StateSource::Fixed(PreparationSetting::new(h, q)), seed);
    Ok((psi, json!({ "source": "angles", "hwp": h, "qwp": q })))
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<u8> {
    let config = args.learner.to_config()?;
    let noise = args.noise.to_model()?;
    let (hidden, state_json) = parse_run_state(&args.state, args.seed)?;
    let trace = run_trial(hidden, &config, &noise, args.seed).map_err(|e| anyhow!("{e}"))?;

    let csv = checkpoint_csv(trace.checkpoints.iter().map(|c| (0, c)));
    let mut meta = json!({
        "seed": args.seed,
        "state": state_json,
        "learner": learner_json(&config),
        "noise": noise_json(&noise),
    });
    if let (Value::Object(m), Value::Object(f)) = (&mut meta, trace_finals_json(&trace)) {
        m.extend(f);
    }
    let meta = to_json_string(&meta);
    match &args.out {
        Some(prefix) => {
            write_atomic(&prefix.with_extension("csv"), &csv)?;
            write_atomic(&prefix.with_extension("json"), &meta)?;
        }
        None => {
            out.write_all(csv.as_bytes())?;
            out.write_all(b"\n")?;
            out.write_all(meta.as_bytes())?;
        }
    }
    Ok(match trace.halt_reason {
        HaltReason::Halted => EXIT_OK,
        HaltReason::ShotBudgetExhausted => EXIT_INCOMPLETE,
    })
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<u8> {
    let mut builder = SweepBuilder::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        builder.apply_text(&text)?;
    }
    for kv in &args.overrides {
        builder.apply_override(kv)?;
    }
    let settings = builder.finish()?;
    let sweep = settings.sweep;

    let trials = pool(args.threads)?.install(|| {
        (0..sweep.n_states)
            .into_par_iter()
            .map(|i| run_sweep_trial(&sweep, i))
            .collect::<Result<Vec<_>, _>>()
    });
    let result = aggregate(trials.map_err(|e| anyhow!("{e}"))?);

    let csv = checkpoint_csv(result.table.iter().map(|r| (r.trial, &r.checkpoint)));
    let pooled = result.pooled_fit(settings.eps_floor);
    let mut summary = json!({
        "config": {
            "n_states": sweep.n_states,
            "state_source": match sweep.state_source {
                StateSource::Haar => json!("haar"),
                StateSource::WaveplateAngles => json!("angles"),
                StateSource::Fixed(p) => json!({ "hwp": p.hwp_angle, "qwp": p.qwp_angle }),
            },
            "learner": learner_json(&sweep.learner),
            "noise": noise_json(&sweep.noise),
            "master_seed": sweep.master_seed,
            "eps_floor": settings.eps_floor,
            "compare_floor": settings.compare_floor,
            "fit_mode": match settings.fit_mode {
                FitMode::Pooled => "pooled",
                FitMode::PerTrial => "per_trial",
            },
        },
        "fit": fit_json(&pooled),
        "monitored_fit": fit_json(&fit_scaling(&result.monitored_points(), settings.eps_floor)),
        "correlation": correlation_json(&compare_monitored_vs_true(
            &result.comparison_pairs(),
            settings.compare_floor,
        )),
    });
    if settings.fit_mode == FitMode::PerTrial {
        let fits = result.per_trial_fits(settings.eps_floor);
        let gammas: Vec<f64> = fits
            .iter()
            .filter_map(|f| f.as_ref().ok().map(|f| f.gamma))
            .collect();
        summary["per_trial_fits"] = Value::Array(fits.iter().map(fit_json).collect());
        summary["per_trial_mean_gamma"] = if gammas.is_empty() {
            Value::Null
        } else {
            json!(gammas.iter().sum::<f64>() / gammas.len() as f64)
        };
    }
    summary["trials"] = Value::Array(
        result
            .trials
            .iter()
            .map(|t| {
                let mut v = json!({ "trial": t.index, "seed": t.seed });
                if let (Value::Object(m), Value::Object(f)) = (&mut v, trace_finals_json(&t.trace))
                {
                    m.extend(f);
                }
                v
            })
            .collect(),
    );

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    write_atomic(&args.out_dir.join("checkpoints.csv"), &csv)?;
    write_atomic(
        &args.out_dir.join("summary.json"),
        &to_json_string(&summary),
    )?;
    match &pooled {
        Ok(f) => writeln!(out, "gamma = {} (n = {})", fmt_f64(f.gamma), f.n_points)?,
        Err(e) => writeln!(out, "fit failed: {e}")?,
    }
    Ok(EXIT_OK)
}

/// Reads `(N, eps)` pairs from a CSV with a header row.
pub fn read_fit_points(path: &Path, eps_column: &str) -> Result<Vec<(f64, f64)>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        return Ok(Vec::new());
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let n_idx = cols
        .iter()
        .position(|c| *c == "N")
        .ok_or_else(|| anyhow!("no `N` column in {}", path.display()))?;
    let e_idx = match cols.iter().position(|c| *c == eps_column) {
        Some(i) => i,
        None if cols.len() == 2 => 1 - n_idx,
        None => bail!("no `{eps_column}` column in {}", path.display()),
    };
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |idx: usize| -> Result<f64> {
                let raw = fields
                    .get(idx)
                    .ok_or_else(|| anyhow!("row {}: missing column", i + 2))?;
                raw.parse::<f64>()
                    .with_context(|| format!("row {}: invalid number `{raw}`", i + 2))
            };
            Ok((get(n_idx)?, get(e_idx)?))
        })
        .collect()
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<u8> {
    let points = read_fit_points(&args.csv, &args.eps_column)?;
    let fit = match args.n0_fixed {
        Some(n0) => fit_scaling_fixed_n0(&points, args.eps_floor, n0),
        None => fit_scaling(&points, args.eps_floor),
    };
    out.write_all(to_json_string(&fit_json(&fit)).as_bytes())?;
    Ok(if fit.is_ok() {
        EXIT_OK
    } else {
        EXIT_INCOMPLETE
    })
}

fn median_u64(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        0.5 * (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64)
    }
}

fn median_f64(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// One row of the noise-study table.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStudyRow {
    pub q: f64,
    pub best_streaks: Vec<u64>,
    pub final_eps: Vec<f64>,
    pub halted: usize,
}

pub const NOISE_STUDY_HEADER: &str = "q,seeds,median_best_streak,min_best_streak,max_best_streak,median_final_eps,min_final_eps,max_final_eps,halted_fraction";

impl NoiseStudyRow {
    pub fn median_best_streak(&self) -> f64 {
        median_u64(&self.best_streaks)
    }

    pub fn median_final_eps(&self) -> f64 {
        median_f64(&self.final_eps)
    }

    pub fn csv(&self) -> String {
        let n = self.best_streaks.len();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.q),
            n,
            fmt_f64(self.median_best_streak()),
            self.best_streaks[0],
            self.best_streaks[n - 1],
            fmt_f64(self.median_final_eps()),
            fmt_f64(self.final_eps[0]),
            fmt_f64(self.final_eps[n - 1]),
            fmt_f64(self.halted as f64 / n as f64),
        )
    }
}

/// Runs `seeds` trials per false-negative rate. Seeds are shared across
/// rates.
pub fn noise_study(
    q_grid: &[f64],
    seeds: u64,
    learner: &LearnerConfig,
    state: NoiseStudyState,
    master_seed: u64,
) -> Result<Vec<NoiseStudyRow>> {
    q_grid
        .iter()
        .map(|&q| {
            let noise = NoiseModel::new(q, 0.0, 0.0).map_err(|e| anyhow!("{e}"))?;
            let traces = (0..seeds)
                .into_par_iter()
                .map(|s| {
                    let seed = trial_seed(master_seed, s);
                    let hidden = match state {
                        NoiseStudyState::Fiducial => PureState::horizontal(),
                        NoiseStudyState::Haar => hidden_state(&StateSource::Haar, seed).0,
                    };
                    run_trial(hidden, learner, &noise, seed)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow!("{e}"))?;
            let mut best_streaks: Vec<u64> = traces.iter().map(|t| t.best_streak).collect();
            let mut final_eps: Vec<f64> = traces.iter().map(|t| t.final_epsilon_true).collect();
            best_streaks.sort_unstable();
            final_eps.sort_by(f64::total_cmp);
            Ok(NoiseStudyRow {
                q,
                best_streaks,
                final_eps,
                halted: traces
                    .iter()
                    .filter(|t| t.halt_reason == HaltReason::Halted)
                    .count(),
            })
        })
        .collect()
}

pub fn cmd_noise_study(args: &NoiseStudyArgs, out: &mut dyn Write) -> Result<u8> {
    let q_grid = args
        .q_grid
        .split(',')
        .map(|s| probability_arg(s.trim()).map_err(|e| anyhow!("--q-grid: {e}")))
        .collect::<Result<Vec<f64>>>()?;
    if args.seeds == 0 {
        bail!("--seeds must be >= 1");
    }
    if args.shots < 2 {
        bail!("--shots must be >= 2");
    }
    let learner = LearnerConfig {
        max_shots: args.shots,
        ..LearnerConfig::with_halting_streak(args.mh.unwrap_or(args.shots - 1))
    };
    learner.validate().map_err(|e| anyhow!("{e}"))?;
    let rows = pool(args.threads)?
        .install(|| noise_study(&q_grid, args.seeds, &learner, args.state, args.seed))?;
    let mut csv = String::from(NOISE_STUDY_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    match &args.out {
        Some(path) => write_atomic(path, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(EXIT_OK)
}

pub const ANGLE_STUDY_HEADER: &str = "trial,N,M_S,eps_true,eps_angle";

pub fn angle_study_csv(trials: &[AngleStudyTrial]) -> String {
    let mut csv = String::from(ANGLE_STUDY_HEADER);
    csv.push('\n');
    for t in trials {
        for r in &t.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                t.index,
                r.shots,
                r.streak,
                fmt_f64(r.epsilon_true),
                fmt_f64(r.epsilon_angle)
            ));
        }
    }
    csv
}

/// Angle-deduced infidelities of every checkpoint whose true infidelity is
/// below `threshold`, sorted.
pub fn deep_angle_infidelities(trials: &[AngleStudyTrial], threshold: f64) -> Vec<f64> {
    let mut v: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.rows.iter())
        .filter(|r| r.epsilon_true < threshold)
        .map(|r| r.epsilon_angle)
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn cmd_angle_study(args: &AngleStudyArgs, out: &mut dyn Write) -> Result<u8> {
    if args.n_states == 0 {
        bail!("--n-states must be >= 1");
    }
    let learner = LearnerConfig {
        halt_mode: args.halt_mode,
        ..LearnerConfig::with_halting_streak(args.mh)
    };
    learner.validate().map_err(|e| anyhow!("{e}"))?;
    let config = AngleStudyConfig {
        n_states: args.n_states,
        learner,
        noise: NoiseModel::noiseless(),
        errors: match args.error_mode {
            ErrorMode::Uniform => RetardanceErrors::Uniform(args.retardance_error),
            ErrorMode::Fixed => RetardanceErrors::Fixed(args.retardance_error),
        },
        master_seed: args.seed,
    };
    let trials = pool(args.threads)?
        .install(|| {
            (0..config.n_states)
                .into_par_iter()
                .map(|i| run_angle_study_trial(&config, i))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| anyhow!("{e}"))?;
    let csv = angle_study_csv(&trials);
    let Some(dir) = &args.out_dir else {
        out.write_all(csv.as_bytes())?;
        return Ok(EXIT_OK);
    };
    let deep = deep_angle_infidelities(&trials, args.deep_threshold);
    let summary = json!({
        "config": {
            "n_states": args.n_states,
            "learner": learner_json(&learner),
            "error_mode": match args.error_mode {
                ErrorMode::Uniform => "uniform",
                ErrorMode::Fixed => "fixed",
            },
            "retardance_error": args.retardance_error,
            "deep_threshold": args.deep_threshold,
            "master_seed": args.seed,
        },
        "deep_checkpoints": deep.len(),
        "deep_median_eps_angle": if deep.is_empty() { Value::Null } else { json!(median_f64(&deep)) },
        "trials": trials.iter().map(|t| {
            let mut v = json!({
                "trial": t.index,
                "preparation": { "hwp": t.preparation.hwp_angle, "qwp": t.preparation.qwp_angle },
                "retardance_errors": {
                    "preparation": t.preparation.retardance_errors,
                    "learning": t.learning_errors,
                },
                "final_eps_angle": t.final_epsilon_angle,
            });
            if let (Value::Object(m), Value::Object(f)) = (&mut v, trace_finals_json(&t.trace)) {
                m.extend(f);
            }
            v
        }).collect::<Vec<_>>(),
    });
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_atomic(&dir.join("angle_study.csv"), &csv)?;
    write_atomic(&dir.join("angle_summary.json"), &to_json_string(&summary))?;
    Ok(EXIT_OK)
}
