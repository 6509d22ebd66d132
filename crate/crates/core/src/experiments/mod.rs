//! Ensemble harness: runs many independent agents on one task
//! definition and averages the recorded time series.
//!
//! Determinism contract: agent i draws from a generator seeded with
//! `seed + i` (the matching environment instance uses a second stream
//! of the same generator), and ensemble means are folded in agent order
//! in fixed-size chunks. Results are therefore bit-identical for any
//! worker count, including fully serial runs.

pub mod csv;
pub mod presets;

use std::path::PathBuf;

use rand::SeedableRng;
use rayon::prelude::*;

use crate::agent::{Agent, AgentConfig, MetaEvent, Variant};
use crate::clip_network::ClipId;
use crate::env::gridworld::{load_map, GridMap, GridWorld, MAP_A, MAP_B, MAP_C};
use crate::env::invasion::{InvasionGame, InvasionSchedule};
use crate::env::nship::NShipGame;
use crate::env::{Axis, Environment};
use crate::error::{PsError, Result};
use crate::meta::ETA_LABELS;
use crate::PsRng;

/// Where a maze layout comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    BuiltinA,
    BuiltinB,
    BuiltinC,
    File(PathBuf),
}

impl MapSource {
    pub fn load(&self) -> Result<GridMap> {
        match self {
            MapSource::BuiltinA => load_map(MAP_A),
            MapSource::BuiltinB => load_map(MAP_B),
            MapSource::BuiltinC => load_map(MAP_C),
            MapSource::File(path) => {
                let text = std::fs::read_to_string(path)?;
                load_map(&text)
            }
        }
    }
}

/// Task definition of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Invasion(InvasionSchedule),
    NShip { phases: Vec<(u32, u64)> },
    Grid { phases: Vec<(MapSource, u64)> },
}

impl EnvSpec {
    pub fn axis(&self) -> Axis {
        match self {
            EnvSpec::Invasion(_) => Axis::Interactions,
            EnvSpec::NShip { .. } | EnvSpec::Grid { .. } => Axis::Trials,
        }
    }
}

/// Everything needed to reproduce one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Distinguishes runs of the same experiment, e.g. a variant name;
    /// enters output file names.
    pub label: String,
    pub env: EnvSpec,
    pub variant: Variant,
    pub n_agents: u64,
    pub seed: u64,
    /// Record every `stride`-th interaction or trial.
    pub stride: u64,
    pub agent: AgentConfig,
    /// Keep a per-activation trace of the meta controllers of agent 0.
    pub meta_trace: bool,
}

/// Averaged recordings of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub axis: Axis,
    pub index: Vec<u64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| PsError::Config(format!("no column named '{name}'")))
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub label: String,
    pub n_agents: u64,
    pub series: TimeSeries,
    /// Meta activations of agent 0, if tracing was requested.
    pub meta_events: Vec<MetaEvent>,
}

/// Raw recordings of a single agent, row-major.
pub struct AgentRun {
    pub index: Vec<u64>,
    pub cols: usize,
    pub data: Vec<f64>,
    pub meta_events: Vec<MetaEvent>,
}

pub enum BuiltEnv {
    Invasion(InvasionGame),
    NShip(NShipGame),
    Grid(GridWorld),
}

pub fn build_env(spec: &EnvSpec) -> Result<BuiltEnv> {
    Ok(match spec {
        EnvSpec::Invasion(schedule) => BuiltEnv::Invasion(InvasionGame::new(schedule.clone())?),
        EnvSpec::NShip { phases } => BuiltEnv::NShip(NShipGame::new(phases.clone())?),
        EnvSpec::Grid { phases } => {
            let mut loaded = Vec::with_capacity(phases.len());
            for (src, trials) in phases {
                loaded.push((src.load()?, *trials));
            }
            BuiltEnv::Grid(GridWorld::new(loaded)?)
        }
    })
}

/// Recorded column names for a task, in file order. The first few are
/// task metrics, the rest describe the agent's meta state.
pub fn column_names(spec: &EnvSpec) -> Vec<String> {
    let mut names: Vec<String> = match spec {
        EnvSpec::Invasion(_) => vec!["phase".into(), "success".into(), "reward".into()],
        EnvSpec::NShip { .. } => {
            vec!["phase".into(), "reward".into(), "reward_empirical".into()]
        }
        EnvSpec::Grid { .. } => vec!["phase".into(), "steps_per_reward".into()],
    };
    names.push("gamma".into());
    names.push("eta".into());
    names.push("p_rule_i".into());
    for l in ETA_LABELS {
        names.push(format!("p_eta_{l}"));
    }
    names
}

fn check_config(cfg: &EnsembleConfig) -> Result<()> {
    if cfg.n_agents == 0 {
        return Err(PsError::Config("n_agents must be positive".into()));
    }
    if cfg.stride == 0 {
        return Err(PsError::Config("stride must be positive".into()));
    }
    if let EnvSpec::Invasion(InvasionSchedule::Threshold { .. }) = &cfg.env {
        if cfg.n_agents != 1 {
            return Err(PsError::Config(
                "threshold schedules run one agent at a time: phase boundaries depend on the \
                 agent, so ensemble rows would not line up"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Runs one agent of the ensemble and records its time series.
pub fn run_single(cfg: &EnsembleConfig, agent_idx: u64) -> Result<AgentRun> {
    check_config(cfg)?;
    match build_env(&cfg.env)? {
        BuiltEnv::Invasion(mut env) => simulate(&mut env, cfg, agent_idx),
        BuiltEnv::NShip(mut env) => simulate(&mut env, cfg, agent_idx),
        BuiltEnv::Grid(mut env) => simulate(&mut env, cfg, agent_idx),
    }
}

fn simulate<E: Environment>(env: &mut E, cfg: &EnsembleConfig, agent_idx: u64) -> Result<AgentRun> {
    let mut arng = PsRng::seed_from_u64(cfg.seed.wrapping_add(agent_idx));
    let mut erng = arng.clone();
    erng.set_stream(1);

    let trace = cfg.meta_trace && agent_idx == 0;
    let mut agent = Agent::new(
        env.action_labels(),
        env.declared_states(),
        cfg.variant,
        cfg.agent.clone(),
        trace,
        &mut arng,
    )?;
    let axis = env.axis();
    let per_step_feedback = env.wants_analytic_each_step();
    let cols = column_names(&cfg.env).len();
    let mut run = AgentRun { index: Vec::new(), cols, data: Vec::new(), meta_events: Vec::new() };

    // Percept token -> base network clip, filled on first sight.
    let mut clip_of: Vec<Option<ClipId>> = vec![None; env.max_percept_tokens()];
    let mut token = env.reset(&mut erng);
    let mut trials: u64 = 0;
    let mut steps_in_trial: u64 = 0;
    let mut reward_in_trial = 0.0f64;

    while !env.finished() {
        let clip = match clip_of[token as usize] {
            Some(c) => c,
            None => {
                let c = agent.register_percept(env.percept_label(token))?;
                clip_of[token as usize] = Some(c);
                c
            }
        };
        let action = agent.act_from(clip, &mut arng)?;
        let phase = env.phase_index();
        let step = env.step(action, &mut erng);
        agent.learn(step.reward, &mut arng)?;
        steps_in_trial += 1;
        reward_in_trial += step.reward;

        if axis == Axis::Interactions && agent.interactions() % cfg.stride == 0 {
            run.index.push(agent.interactions());
            push_row(&mut run.data, env, &agent, phase, step.reward, 0, 0.0);
        }
        // Feedback drives phase switches in threshold schedules; it is
        // observed after recording so a switch shows up from the next
        // row on.
        if per_step_feedback {
            if let Some(v) = agent.analytic_success(env) {
                env.observe_analytic(v);
            }
        }
        if step.trial_ended {
            trials += 1;
            if axis == Axis::Trials && trials % cfg.stride == 0 {
                run.index.push(trials);
                push_row(&mut run.data, env, &agent, phase, 0.0, steps_in_trial, reward_in_trial);
            }
            steps_in_trial = 0;
            reward_in_trial = 0.0;
        }
        token = step.next_percept;
    }
    run.meta_events = agent.take_meta_events();
    Ok(run)
}

fn push_row<E: Environment>(
    data: &mut Vec<f64>,
    env: &E,
    agent: &Agent,
    phase: usize,
    step_reward: f64,
    steps_in_trial: u64,
    reward_in_trial: f64,
) {
    data.push(phase as f64);
    match env.axis() {
        Axis::Interactions => {
            data.push(agent.analytic_success(env).unwrap_or(f64::NAN));
            data.push(step_reward);
        }
        Axis::Trials => match agent.analytic_success(env) {
            Some(expected) => {
                data.push(expected);
                data.push(reward_in_trial);
            }
            // No closed form (maze): record the empirical trial cost.
            None => data.push(steps_in_trial as f64 / reward_in_trial),
        },
    }
    data.push(agent.current_gamma());
    data.push(agent.current_eta());
    data.push(agent.p_rule_i());
    data.extend_from_slice(&agent.eta_probabilities());
}

/// Runs the whole ensemble and averages the recordings. `workers = 0`
/// uses one thread per available core; any value yields bit-identical
/// results.
pub fn run_ensemble(cfg: &EnsembleConfig, workers: usize) -> Result<EnsembleRun> {
    check_config(cfg)?;
    const CHUNK: u64 = 32;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PsError::Config(format!("thread pool: {e}")))?;

    let mut index: Vec<u64> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut cols = 0;
    let mut meta_events = Vec::new();
    let mut start = 0u64;
    while start < cfg.n_agents {
        let end = (start + CHUNK).min(cfg.n_agents);
        let runs: Result<Vec<AgentRun>> =
            pool.install(|| (start..end).into_par_iter().map(|i| run_single(cfg, i)).collect());
        for (off, run) in runs?.into_iter().enumerate() {
            if start == 0 && off == 0 {
                index = run.index;
                cols = run.cols;
                sums = run.data;
                meta_events = run.meta_events;
            } else {
                if run.index != index {
                    return Err(PsError::Config(
                        "agents disagree on the recording grid; cannot average".into(),
                    ));
                }
                for (acc, v) in sums.iter_mut().zip(&run.data) {
                    *acc += v;
                }
            }
        }
        start = end;
    }

    let n = cfg.n_agents as f64;
    let names = column_names(&cfg.env);
    debug_assert_eq!(names.len(), cols);
    let rows = index.len();
    let mut columns: Vec<(String, Vec<f64>)> =
        names.into_iter().map(|n| (n, Vec::with_capacity(rows))).collect();
    for r in 0..rows {
        for (c, col) in columns.iter_mut().enumerate() {
            col.1.push(sums[r * cols + c] / n);
        }
    }
    Ok(EnsembleRun {
        label: cfg.label.clone(),
        n_agents: cfg.n_agents,
        series: TimeSeries { axis: cfg.env.axis(), index, columns },
        meta_events,
    })
}

/// How long a phase took to reach a target value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningTime {
    pub phase: usize,
    /// Axis units from the start of the phase to the first record at or
    /// above the target; the full phase span if never reached.
    pub time: u64,
    pub censored: bool,
}

/// Per-phase time to reach `target` in the named column. The recording
/// stride is inferred from the first index, so the series must start at
/// its first record.
pub fn learning_times(series: &TimeSeries, column: &str, target: f64) -> Result<Vec<LearningTime>> {
    if series.is_empty() {
        return Err(PsError::Config("empty series".into()));
    }
    let phase = series.column("phase")?;
    let value = series.column(column)?;
    let stride = series.index[0];
    let mut out: Vec<LearningTime> = Vec::new();
    let mut current = usize::MAX;
    let mut phase_start = 0u64;
    for (i, (&p, &v)) in phase.iter().zip(value).enumerate() {
        let p = p as usize;
        if p != current {
            current = p;
            phase_start = series.index[i] - stride;
            out.push(LearningTime { phase: p, time: 0, censored: true });
        }
        let entry = out.last_mut().unwrap();
        if entry.censored {
            entry.time = series.index[i] - phase_start;
            if v >= target {
                entry.censored = false;
            }
        }
    }
    Ok(out)
}
