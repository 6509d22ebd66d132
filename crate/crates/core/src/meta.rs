//! Meta-level control of the base network's damping and glow parameters.
//!
//! Two small controllers run on top of a base agent:
//!
//! 1. the eta controller owns a one-percept clip network whose ten actions
//!    are the glow decays {0.1, ..., 1.0};
//! 2. the gamma controller owns a one-percept network whose two actions
//!    are update rules applied reflexively to the damping value itself.
//!
//! Each controller sums the external rewards over a sliding window. When a
//! window closes, the relative change `delta` between the two most recent
//! window sums is mapped to an internal reward sgn(delta) for the choice
//! that was in force during the closing window, and a new choice is walked
//! from the controller's network. The gamma controller additionally moves
//! its current value with the freshly chosen rule:
//!
//! ```text
//! rule I:  gamma <- (1 - |d|) * gamma + (|d| - d) / 2
//! rule II: gamma <- (1 - |d|) * gamma + (|d| + d) / 2
//! ```
//!
//! where d is `delta` shifted by a small optimism bias c and renormalized,
//! d = (delta + c) / (1 + c). Rule I raises gamma when performance drops
//! (forget after a change), rule II raises it when performance improves.
//!
//! The window length follows the size of the base task,
//! tau_eta = N_eta * S * A * S_meta * A_meta with S_meta = 1, A_meta = 10,
//! and tau_gamma = N_gamma * tau_eta, so the gamma controller always acts
//! on multiples of the eta controller's schedule.

use crate::clip_network::{ClipId, ClipNetwork, WalkTrace};
use crate::PsRng;
use rand::Rng;

pub const ETA_ACTIONS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const ETA_LABELS: [&str; 10] =
    ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1.0"];
pub const RULE_LABELS: [&str; 2] = ["rule_i", "rule_ii"];

pub const DEFAULT_N_ETA: u64 = 30;
pub const DEFAULT_N_GAMMA: u64 = 5;
pub const DEFAULT_C_GAMMA: f64 = 0.2;

/// Meta-level dimensions entering the window formula.
const META_STATES: u64 = 1;
const META_ACTIONS: u64 = 10;

/// Interactions per eta window for a base task with `s` percepts and `a`
/// actions.
pub fn eta_window_length(n_eta: u64, s: u64, a: u64) -> u64 {
    n_eta * s * a * META_STATES * META_ACTIONS
}

pub fn gamma_window_length(n_gamma: u64, tau_eta: u64) -> u64 {
    n_gamma * tau_eta
}

/// Relative performance change between consecutive windows, in [-1, 1].
/// Both sums zero means nothing changed.
pub fn window_delta(now: f64, prev: f64) -> f64 {
    debug_assert!(now >= 0.0 && prev >= 0.0);
    let m = now.max(prev);
    if m == 0.0 {
        0.0
    } else {
        (now - prev) / m
    }
}

/// Internal reward: the sign of the performance change.
pub fn internal_reward(delta: f64) -> f64 {
    if delta > 0.0 {
        1.0
    } else if delta < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Shifts delta by the optimism bias c and renormalizes back into [-1, 1].
pub fn tilde_delta(delta: f64, c: f64) -> f64 {
    (delta + c) / (1.0 + c)
}

/// Raise gamma on deteriorating performance.
pub fn rule_i(gamma: f64, d: f64) -> f64 {
    (1.0 - d.abs()) * gamma + (d.abs() - d) / 2.0
}

/// Raise gamma on improving performance.
pub fn rule_ii(gamma: f64, d: f64) -> f64 {
    (1.0 - d.abs()) * gamma + (d.abs() + d) / 2.0
}

/// Sums rewards over a window of fixed length; closing a window hands out
/// the finished sum together with the previous one (absent for the first
/// closure after construction).
#[derive(Debug, Clone)]
pub struct WindowAccumulator {
    tau: u64,
    ticks: u64,
    current: f64,
    previous: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct WindowClose {
    pub now: f64,
    pub previous: Option<f64>,
}

impl WindowAccumulator {
    pub fn new(tau: u64) -> Self {
        assert!(tau >= 1, "window length must be positive");
        WindowAccumulator { tau, ticks: 0, current: 0.0, previous: None }
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn accumulate(&mut self, reward: f64) -> Option<WindowClose> {
        self.current += reward;
        self.ticks += 1;
        if self.ticks < self.tau {
            return None;
        }
        let close = WindowClose { now: self.current, previous: self.previous };
        self.previous = Some(self.current);
        self.current = 0.0;
        self.ticks = 0;
        Some(close)
    }
}

/// One-percept clip network whose actions are parameter choices. Unlike
/// the base network there is no glow: the internal reward goes to the
/// edge picked at the previous activation only, with its own damping
/// (zero by default) and the usual floor at 1.
#[derive(Debug, Clone)]
pub struct MetaNetwork {
    net: ClipNetwork,
    percept: ClipId,
    gamma_meta: f64,
    last_edge: Option<usize>,
}

impl MetaNetwork {
    pub fn new(action_labels: &[&str], weights: Option<&[f64]>, gamma_meta: f64) -> Self {
        let mut net = ClipNetwork::new();
        let acts: Vec<ClipId> =
            action_labels.iter().map(|l| net.add_action(l).expect("valid label")).collect();
        let percept = match weights {
            Some(ws) => {
                let edges: Vec<(ClipId, f64)> =
                    acts.iter().copied().zip(ws.iter().copied()).collect();
                net.add_percept("now", &edges).expect("valid meta percept")
            }
            None => net.add_percept_uniform("now", &acts).expect("valid meta percept"),
        };
        MetaNetwork { net, percept, gamma_meta, last_edge: None }
    }

    pub fn n_actions(&self) -> usize {
        self.net.out_range(self.percept).len()
    }

    /// Walks the network once and remembers the traversed edge; returns
    /// the chosen action index.
    pub fn select(&mut self, rng: &mut PsRng) -> usize {
        let mut trace = WalkTrace::new();
        self.net
            .random_walk_into(self.percept, rng, &mut trace)
            .expect("meta network is always walkable");
        let step = trace.steps[0];
        self.last_edge = Some(step.edge);
        step.edge
    }

    /// Rewards the edge chosen at the previous activation and damps every
    /// edge by the meta damping.
    pub fn reward_last(&mut self, lambda: f64) {
        let last = self.last_edge.expect("reward_last requires a prior select");
        let gm = self.gamma_meta;
        for e in self.net.out_range(self.percept) {
            let h = self.net.edge_h(e);
            let bonus = if e == last { lambda } else { 0.0 };
            let v = h - gm * (h - 1.0) + bonus;
            *self.net.edge_h_mut(e) = v.max(1.0);
        }
    }

    #[cfg(test)]
    pub(crate) fn force_last(&mut self, idx: usize) {
        self.last_edge = Some(idx);
    }

    pub fn h(&self, idx: usize) -> f64 {
        self.net.edge_h(idx)
    }

    pub fn probability(&self, idx: usize) -> f64 {
        let row = self.net.out_range(self.percept);
        let total: f64 = row.clone().map(|e| self.net.edge_h(e)).sum();
        self.net.edge_h(row.start + idx) / total
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let row = self.net.out_range(self.percept);
        let total: f64 = row.clone().map(|e| self.net.edge_h(e)).sum();
        row.map(|e| self.net.edge_h(e) / total).collect()
    }
}

/// Glow-decay controller. At each window closure it rewards the previous
/// choice with sgn(delta) (when learning and a previous window exists)
/// and walks a new eta from its network.
#[derive(Debug, Clone)]
pub struct EtaController {
    pub net: MetaNetwork,
    pub window: WindowAccumulator,
    pub current: f64,
}

impl EtaController {
    pub fn new(tau: u64, gamma_meta: f64, initial: Option<f64>, rng: &mut PsRng) -> Self {
        let mut net = MetaNetwork::new(&ETA_LABELS, None, gamma_meta);
        let idx = net.select(rng);
        let current = initial.unwrap_or(ETA_ACTIONS[idx]);
        EtaController { net, window: WindowAccumulator::new(tau), current }
    }

    /// Handles a window closure; `learning` is false for the variant that
    /// resamples eta uniformly without ever updating the network.
    pub fn on_close(
        &mut self,
        close: WindowClose,
        learning: bool,
        rng: &mut PsRng,
    ) -> (usize, f64) {
        let mut lambda = 0.0;
        if learning {
            if let Some(prev) = close.previous {
                lambda = internal_reward(window_delta(close.now, prev));
                self.net.reward_last(lambda);
            }
        }
        let idx = self.net.select(rng);
        self.current = ETA_ACTIONS[idx];
        (idx, lambda)
    }
}

/// Damping controller. At each window closure it rewards the rule chosen
/// at the previous activation, walks a new rule, and applies that rule to
/// the current gamma using the biased performance change. The first
/// closure after construction only selects: there is no previous window
/// to compare against, so no reward is issued and gamma is left
/// untouched.
#[derive(Debug, Clone)]
pub struct GammaController {
    pub net: MetaNetwork,
    pub window: WindowAccumulator,
    pub current: f64,
    pub c_gamma: f64,
}

impl GammaController {
    pub fn new(
        tau: u64,
        gamma_meta: f64,
        c_gamma: f64,
        rule_bias: Option<(f64, f64)>,
        initial: Option<f64>,
        rng: &mut PsRng,
    ) -> Self {
        let weights = rule_bias.map(|(a, b)| [a, b]);
        let mut net = MetaNetwork::new(&RULE_LABELS, weights.as_ref().map(|w| &w[..]), gamma_meta);
        let current = initial.unwrap_or_else(|| rng.random::<f64>());
        net.select(rng);
        GammaController { net, window: WindowAccumulator::new(tau), current, c_gamma }
    }

    pub fn on_close(&mut self, close: WindowClose, rng: &mut PsRng) -> (usize, f64) {
        match close.previous {
            Some(prev) => {
                let delta = window_delta(close.now, prev);
                let lambda = internal_reward(delta);
                self.net.reward_last(lambda);
                let idx = self.net.select(rng);
                let d = tilde_delta(delta, self.c_gamma);
                self.current =
                    if idx == 0 { rule_i(self.current, d) } else { rule_ii(self.current, d) };
                (idx, lambda)
            }
            None => (self.net.select(rng), 0.0),
        }
    }

    pub fn p_rule_i(&self) -> f64 {
        self.net.probability(0)
    }
}
