//! Convoy game: n ships pass the agent one at a time, and each may be
//! blocked or waved through. Blocking an early ship pays 1 on the spot,
//! but only a convoy that reaches the last ship unblocked pays the big
//! reward 5(n - 1) for blocking that one. Greedy behaviour caps a trial
//! at n - 1 while patience earns five times as much, and the horizon of
//! the delayed payoff grows with n.

use super::{Axis, EnvStep, Environment};
use crate::error::{PsError, Result};
use crate::PsRng;

#[derive(Debug, Clone)]
pub struct NShipGame {
    phases: Vec<(u32, u64)>,
    labels: Vec<String>,
    actions: Vec<String>,
    phase: usize,
    trials_in_phase: u64,
    n: u32,
    ship: u32,
    blocked_early: bool,
    finished: bool,
}

pub const BLOCK: usize = 0;
pub const PASS: usize = 1;

impl NShipGame {
    /// `phases` lists (convoy length, number of trials) per phase.
    pub fn new(phases: Vec<(u32, u64)>) -> Result<Self> {
        if phases.is_empty() {
            return Err(PsError::Config("convoy schedule must not be empty".into()));
        }
        if phases.iter().any(|&(n, trials)| n == 0 || trials == 0) {
            return Err(PsError::Config(
                "convoy phases need positive ship and trial counts".into(),
            ));
        }
        let max_n = phases.iter().map(|&(n, _)| n).max().unwrap();
        let labels = (1..=max_n).map(|i| format!("ship{i}")).collect();
        Ok(NShipGame {
            n: phases[0].0,
            phases,
            labels,
            actions: vec!["block".to_string(), "pass".to_string()],
            phase: 0,
            trials_in_phase: 0,
            ship: 1,
            blocked_early: false,
            finished: false,
        })
    }

    pub fn convoy_length(&self) -> u32 {
        self.n
    }

    /// Expected trial reward of a fixed block-probability vector; the
    /// analytic counterpart of `analytic_metric`, shared with tests.
    pub fn expected_trial_reward(n: u32, p_block: &[f64]) -> f64 {
        assert_eq!(p_block.len(), n as usize);
        if n == 1 {
            return p_block[0];
        }
        let mut early = 0.0;
        let mut none_blocked = 1.0;
        for &p in &p_block[..(n - 1) as usize] {
            early += p;
            none_blocked *= 1.0 - p;
        }
        early + none_blocked * p_block[(n - 1) as usize] * 5.0 * f64::from(n - 1)
    }
}

impl Environment for NShipGame {
    fn axis(&self) -> Axis {
        Axis::Trials
    }

    fn action_labels(&self) -> &[String] {
        &self.actions
    }

    /// The full percept space of the schedule, not the current convoy
    /// length: meta windows must keep a fixed length across phases so
    /// that consecutive window sums stay comparable. A longer convoy
    /// collects less reward per window under an unchanged policy, and
    /// that visible drop is what drives the damping spike at a phase
    /// change.
    fn declared_states(&self) -> usize {
        self.labels.len()
    }

    fn max_percept_tokens(&self) -> usize {
        self.labels.len()
    }

    fn percept_label(&self, token: u32) -> &str {
        &self.labels[token as usize]
    }

    fn reset(&mut self, _rng: &mut PsRng) -> u32 {
        self.ship = 1;
        self.blocked_early = false;
        0
    }

    fn step(&mut self, action: usize, _rng: &mut PsRng) -> EnvStep {
        debug_assert!(!self.finished);
        let last = self.ship == self.n;
        let mut reward = 0.0;
        if action == BLOCK {
            if !last {
                reward = 1.0;
                self.blocked_early = true;
            } else if self.n == 1 {
                reward = 1.0;
            } else if !self.blocked_early {
                reward = 5.0 * f64::from(self.n - 1);
            }
        }
        let trial_ended = last;
        if last {
            self.ship = 1;
            self.blocked_early = false;
            self.trials_in_phase += 1;
            if self.trials_in_phase == self.phases[self.phase].1 {
                if self.phase + 1 == self.phases.len() {
                    self.finished = true;
                } else {
                    self.phase += 1;
                    self.trials_in_phase = 0;
                    self.n = self.phases[self.phase].0;
                }
            }
        } else {
            self.ship += 1;
        }
        EnvStep { reward, trial_ended, next_percept: self.ship - 1 }
    }

    fn phase_index(&self) -> usize {
        self.phase
    }

    fn finished(&self) -> bool {
        self.finished
    }

    fn analytic_metric(&self, policy: &mut dyn FnMut(u32, usize) -> Option<f64>) -> Option<f64> {
        let p: Vec<f64> =
            (0..self.n).map(|i| policy(i, BLOCK).unwrap_or(0.5)).collect();
        Some(Self::expected_trial_reward(self.n, &p))
    }
}
