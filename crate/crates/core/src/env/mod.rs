//! Task environments the agents are evaluated on.
//!
//! All three share one stepping interface: the environment hands out
//! percept tokens (dense u32 ids), the agent answers with an action
//! index, and the environment returns a reward plus the next token.
//! Tokens map to stable human-readable labels so snapshots and policy
//! queries stay meaningful.

pub mod gridworld;
pub mod invasion;
pub mod nship;

use crate::PsRng;

/// Abscissa a time series is recorded against. Interaction-driven tasks
/// record every step, episodic ones record once per finished trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Interactions,
    Trials,
}

impl Axis {
    pub fn column_name(self) -> &'static str {
        match self {
            Axis::Interactions => "interactions",
            Axis::Trials => "trials",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnvStep {
    pub reward: f64,
    pub trial_ended: bool,
    pub next_percept: u32,
}

pub trait Environment {
    fn axis(&self) -> Axis;

    fn action_labels(&self) -> &[String];

    /// Number of distinct percepts of the current task phase, as entered
    /// into the meta window formula. May grow when the task changes.
    fn declared_states(&self) -> usize;

    /// Upper bound on percept token values over the whole run.
    fn max_percept_tokens(&self) -> usize;

    fn percept_label(&self, token: u32) -> &str;

    /// Starts a run and returns the first percept.
    fn reset(&mut self, rng: &mut PsRng) -> u32;

    fn step(&mut self, action: usize, rng: &mut PsRng) -> EnvStep;

    fn phase_index(&self) -> usize;

    fn finished(&self) -> bool;

    /// Expected per-step or per-trial reward of the given policy, where
    /// `policy(token, action)` yields the action probability for percepts
    /// the agent has already seen (None otherwise, treated as uniform).
    /// Environments that cannot express this return None.
    fn analytic_metric(&self, policy: &mut dyn FnMut(u32, usize) -> Option<f64>) -> Option<f64>;

    /// Feed the analytic metric back after every step; only schedules
    /// that switch on observed performance ask for this.
    fn observe_analytic(&mut self, _value: f64) {}

    fn wants_analytic_each_step(&self) -> bool {
        false
    }
}
