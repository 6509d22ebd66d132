//! Defender-at-the-gates game: one of two symbols is shown, the agent
//! moves left or right, and blocking the matching side pays 1. At phase
//! boundaries the symbol meaning inverts, so a previously perfect policy
//! becomes maximally wrong.

use super::{Axis, EnvStep, Environment};
use crate::error::{PsError, Result};
use crate::PsRng;
use rand::Rng;

pub const LEFT_SYMBOL: &str = "arrow_left";
pub const RIGHT_SYMBOL: &str = "arrow_right";

/// When the meaning inversion happens.
#[derive(Debug, Clone, PartialEq)]
pub enum InvasionSchedule {
    /// Invert after a fixed number of steps per phase; the run ends when
    /// the list is exhausted.
    Phases(Vec<u64>),
    /// Invert whenever the expected per-step success of the current
    /// policy reaches `theta`; ends after `n_phases` inversions or at
    /// `max_steps`, whichever comes first.
    Threshold { theta: f64, n_phases: u64, max_steps: u64 },
}

impl InvasionSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            InvasionSchedule::Phases(lens) => {
                if lens.is_empty() || lens.contains(&0) {
                    return Err(PsError::Config(
                        "phase lengths must be a non-empty list of positive counts".into(),
                    ));
                }
            }
            InvasionSchedule::Threshold { theta, n_phases, max_steps } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(PsError::Config("threshold must lie in (0, 1)".into()));
                }
                if *n_phases == 0 || *max_steps == 0 {
                    return Err(PsError::Config(
                        "threshold schedule needs positive phase and step counts".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct InvasionGame {
    schedule: InvasionSchedule,
    percepts: [String; 2],
    actions: Vec<String>,
    inverted: bool,
    symbol: u32,
    phase: usize,
    steps_in_phase: u64,
    total_steps: u64,
    finished: bool,
}

impl InvasionGame {
    pub fn new(schedule: InvasionSchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(InvasionGame {
            schedule,
            percepts: [LEFT_SYMBOL.to_string(), RIGHT_SYMBOL.to_string()],
            actions: vec!["left".to_string(), "right".to_string()],
            inverted: false,
            symbol: 0,
            phase: 0,
            steps_in_phase: 0,
            total_steps: 0,
            finished: false,
        })
    }

    fn correct_action(&self, symbol: u32) -> usize {
        if self.inverted {
            (symbol ^ 1) as usize
        } else {
            symbol as usize
        }
    }

    fn invert(&mut self) {
        self.inverted = !self.inverted;
        self.phase += 1;
        self.steps_in_phase = 0;
    }
}

impl Environment for InvasionGame {
    fn axis(&self) -> Axis {
        Axis::Interactions
    }

    fn action_labels(&self) -> &[String] {
        &self.actions
    }

    fn declared_states(&self) -> usize {
        2
    }

    fn max_percept_tokens(&self) -> usize {
        2
    }

    fn percept_label(&self, token: u32) -> &str {
        &self.percepts[token as usize]
    }

    fn reset(&mut self, rng: &mut PsRng) -> u32 {
        self.symbol = rng.random_range(0..2);
        self.symbol
    }

    fn step(&mut self, action: usize, rng: &mut PsRng) -> EnvStep {
        debug_assert!(!self.finished);
        let reward = if action == self.correct_action(self.symbol) { 1.0 } else { 0.0 };
        self.total_steps += 1;
        self.steps_in_phase += 1;
        match &self.schedule {
            InvasionSchedule::Phases(lens) => {
                if self.steps_in_phase == lens[self.phase] {
                    if self.phase + 1 == lens.len() {
                        self.finished = true;
                    } else {
                        self.invert();
                    }
                }
            }
            InvasionSchedule::Threshold { max_steps, .. } => {
                if self.total_steps >= *max_steps {
                    self.finished = true;
                }
            }
        }
        self.symbol = rng.random_range(0..2);
        EnvStep { reward, trial_ended: true, next_percept: self.symbol }
    }

    fn phase_index(&self) -> usize {
        self.phase
    }

    fn finished(&self) -> bool {
        self.finished
    }

    fn analytic_metric(&self, policy: &mut dyn FnMut(u32, usize) -> Option<f64>) -> Option<f64> {
        let mut total = 0.0;
        for symbol in 0..2u32 {
            let correct = self.correct_action(symbol);
            total += policy(symbol, correct).unwrap_or(0.5);
        }
        Some(total / 2.0)
    }

    fn observe_analytic(&mut self, value: f64) {
        if let InvasionSchedule::Threshold { theta, n_phases, .. } = self.schedule {
            if !self.finished && value >= theta {
                self.invert();
                if self.phase as u64 >= n_phases {
                    self.finished = true;
                }
            }
        }
    }

    fn wants_analytic_each_step(&self) -> bool {
        matches!(self.schedule, InvasionSchedule::Threshold { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn fixed(lens: &[u64]) -> InvasionGame {
        InvasionGame::new(InvasionSchedule::Phases(lens.to_vec())).unwrap()
    }

    #[test]
    fn rewards_match_symbol_until_inversion() {
        let mut env = fixed(&[3, 3]);
        let mut rng = PsRng::seed_from_u64(0);
        let mut tok = env.reset(&mut rng);
        for step in 0..6 {
            let inverted_phase = step >= 3;
            let good = if inverted_phase { tok ^ 1 } else { tok } as usize;
            let st = env.step(good, &mut rng);
            assert_eq!(st.reward, 1.0, "step {step}");
            assert!(st.trial_ended);
            tok = st.next_percept;
        }
        assert!(env.finished());
    }

    #[test]
    fn phase_boundaries_are_exact() {
        let mut env = fixed(&[2, 4, 1]);
        let mut rng = PsRng::seed_from_u64(1);
        env.reset(&mut rng);
        let mut phases = Vec::new();
        while !env.finished() {
            phases.push(env.phase_index());
            env.step(0, &mut rng);
        }
        assert_eq!(phases, vec![0, 0, 1, 1, 1, 1, 2]);
    }

    #[test]
    fn wrong_action_pays_nothing() {
        let mut env = fixed(&[10]);
        let mut rng = PsRng::seed_from_u64(2);
        let tok = env.reset(&mut rng);
        let st = env.step((tok ^ 1) as usize, &mut rng);
        assert_eq!(st.reward, 0.0);
    }

    #[test]
    fn analytic_metric_averages_both_symbols() {
        let env = fixed(&[10]);
        // Policy: always answer action 0. Correct for symbol 0 only.
        let v = env
            .analytic_metric(&mut |_, a| Some(if a == 0 { 1.0 } else { 0.0 }))
            .unwrap();
        assert_eq!(v, 0.5);
        // Unseen percepts count as coin flips.
        let v = env.analytic_metric(&mut |_, _| None).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn threshold_schedule_inverts_on_observed_performance() {
        let mut env = InvasionGame::new(InvasionSchedule::Threshold {
            theta: 0.8,
            n_phases: 2,
            max_steps: 100,
        })
        .unwrap();
        let mut rng = PsRng::seed_from_u64(3);
        env.reset(&mut rng);
        assert!(env.wants_analytic_each_step());
        env.step(0, &mut rng);
        env.observe_analytic(0.79);
        assert_eq!(env.phase_index(), 0);
        env.observe_analytic(0.81);
        assert_eq!(env.phase_index(), 1);
        assert!(!env.finished());
        env.observe_analytic(0.9);
        assert_eq!(env.phase_index(), 2);
        assert!(env.finished());
    }

    #[test]
    fn threshold_schedule_stops_at_step_cap() {
        let mut env = InvasionGame::new(InvasionSchedule::Threshold {
            theta: 0.99,
            n_phases: 50,
            max_steps: 7,
        })
        .unwrap();
        let mut rng = PsRng::seed_from_u64(4);
        env.reset(&mut rng);
        let mut n = 0;
        while !env.finished() {
            env.step(0, &mut rng);
            n += 1;
        }
        assert_eq!(n, 7);
    }

    #[test]
    fn rejects_degenerate_schedules() {
        assert!(InvasionGame::new(InvasionSchedule::Phases(vec![])).is_err());
        assert!(InvasionGame::new(InvasionSchedule::Phases(vec![5, 0])).is_err());
        assert!(InvasionGame::new(InvasionSchedule::Threshold {
            theta: 1.0,
            n_phases: 1,
            max_steps: 1
        })
        .is_err());
    }
}
