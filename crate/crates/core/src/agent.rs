//! A complete learning agent: a two-layer base network mapping percepts
//! to actions, plus optional meta controllers that retune its damping
//! and glow decay while it runs.
//!
//! The per-interaction cycle is `act` (walk the network, which also arms
//! the glow of the traversed edges) followed by `learn` (one fused
//! reward-and-damp sweep over all edges, then the meta bookkeeping).
//! Calling them out of order is an error: every action must be paid for
//! exactly once, or the glow trace and the reward would fall out of
//! step.

use crate::clip_network::{ClipId, ClipNetwork, WalkTrace};
use crate::error::{PsError, Result};
use crate::meta::{
    eta_window_length, gamma_window_length, EtaController, GammaController, ETA_LABELS,
    RULE_LABELS,
};
use crate::PsRng;
use rand::Rng;

/// Which parts of the meta machinery are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Both controllers learn.
    FullMeta,
    /// The damping controller learns; the glow decay is redrawn
    /// uniformly at every eta activation without ever being reinforced.
    GammaOnlyRandomEta,
    /// No controllers: damping and glow decay are drawn once, uniformly
    /// from [0, 1], and kept for the whole run.
    FixedRandomParams,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::FullMeta => "fullmeta",
            Variant::GammaOnlyRandomEta => "gammaonly",
            Variant::FixedRandomParams => "fixedrandom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaChannel {
    Eta,
    Gamma,
}

/// One meta activation, for the optional diagnostic trace.
#[derive(Debug, Clone)]
pub struct MetaEvent {
    /// Interactions completed when the activation fired (1-based).
    pub t: u64,
    pub channel: MetaChannel,
    pub chosen: &'static str,
    pub lambda_internal: f64,
    /// Values in force after the activation.
    pub gamma: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// Eta window length in units of S * A * 10 base interactions.
    pub n_eta: u64,
    /// Gamma window length in eta windows.
    pub n_gamma: u64,
    /// Optimism bias entering the gamma rules.
    pub c_gamma: f64,
    /// Damping applied inside the meta networks themselves.
    pub gamma_meta: f64,
    /// Initial weights (rule I, rule II) of the damping controller.
    pub rule_bias: Option<(f64, f64)>,
    /// Pin the initial damping / glow decay instead of drawing them.
    pub fixed_gamma: Option<f64>,
    pub fixed_eta: Option<f64>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            n_eta: crate::meta::DEFAULT_N_ETA,
            n_gamma: crate::meta::DEFAULT_N_GAMMA,
            c_gamma: crate::meta::DEFAULT_C_GAMMA,
            gamma_meta: 0.0,
            rule_bias: None,
            fixed_gamma: None,
            fixed_eta: None,
        }
    }
}

struct MetaControllers {
    eta: EtaController,
    gamma: GammaController,
}

pub struct Agent {
    base: ClipNetwork,
    action_ids: Vec<ClipId>,
    variant: Variant,
    gamma_now: f64,
    eta_now: f64,
    meta: Option<MetaControllers>,
    t: u64,
    awaiting_learn: bool,
    walk: WalkTrace,
    events: Option<Vec<MetaEvent>>,
}

impl Agent {
    /// Builds an agent for a task with the given action set and
    /// `declared_s` distinct percepts (percept clips themselves are
    /// registered lazily as they are first seen).
    ///
    /// Random draws at construction, in order: the eta controller's
    /// initial selection, the initial damping (unless pinned), the rule
    /// controller's initial selection. The fixed-parameter variant
    /// instead draws glow decay first, then damping, skipping pinned
    /// ones.
    pub fn new(
        action_labels: &[String],
        declared_s: usize,
        variant: Variant,
        cfg: AgentConfig,
        trace_meta: bool,
        rng: &mut PsRng,
    ) -> Result<Self> {
        if action_labels.is_empty() || declared_s == 0 {
            return Err(PsError::Config("agent needs at least one action and percept".into()));
        }
        let mut base = ClipNetwork::new();
        let mut action_ids = Vec::with_capacity(action_labels.len());
        for label in action_labels {
            action_ids.push(base.add_action(label)?);
        }
        let (gamma_now, eta_now, meta) = match variant {
            Variant::FixedRandomParams => {
                let eta = cfg.fixed_eta.unwrap_or_else(|| rng.random::<f64>());
                let gamma = cfg.fixed_gamma.unwrap_or_else(|| rng.random::<f64>());
                (gamma, eta, None)
            }
            Variant::FullMeta | Variant::GammaOnlyRandomEta => {
                let tau_eta =
                    eta_window_length(cfg.n_eta, declared_s as u64, action_labels.len() as u64);
                let tau_gamma = gamma_window_length(cfg.n_gamma, tau_eta);
                let eta =
                    EtaController::new(tau_eta, cfg.gamma_meta, cfg.fixed_eta, rng);
                let gamma = GammaController::new(
                    tau_gamma,
                    cfg.gamma_meta,
                    cfg.c_gamma,
                    cfg.rule_bias,
                    cfg.fixed_gamma,
                    rng,
                );
                (gamma.current, eta.current, Some(MetaControllers { eta, gamma }))
            }
        };
        Ok(Agent {
            base,
            action_ids,
            variant,
            gamma_now,
            eta_now,
            meta,
            t: 0,
            awaiting_learn: false,
            walk: WalkTrace::new(),
            events: trace_meta.then(Vec::new),
        })
    }

    /// Looks up a percept clip, creating it with uniform weights to all
    /// actions on first sight.
    pub fn register_percept(&mut self, label: &str) -> Result<ClipId> {
        if let Some(id) = self.base.percept_id(label) {
            return Ok(id);
        }
        let ids = self.action_ids.clone();
        self.base.add_percept_uniform(label, &ids)
    }

    /// Walks from an already registered percept clip to an action and
    /// arms the glow of the traversed edges. Returns the action index.
    pub fn act_from(&mut self, percept: ClipId, rng: &mut PsRng) -> Result<usize> {
        if self.awaiting_learn {
            return Err(PsError::Sequencing);
        }
        let mut walk = std::mem::take(&mut self.walk);
        let res = self.base.random_walk_into(percept, rng, &mut walk);
        self.base.refresh_glow(&walk);
        self.walk = walk;
        res?;
        self.awaiting_learn = true;
        let action = self.walk.action;
        debug_assert!(action.0 < self.action_ids.len());
        Ok(action.0)
    }

    pub fn act(&mut self, percept: &str, rng: &mut PsRng) -> Result<usize> {
        let id = self.register_percept(percept)?;
        self.act_from(id, rng)
    }

    /// Pays the pending action: one fused reward-and-damp sweep over the
    /// base network, then the meta windows. When both controllers close
    /// on the same interaction the glow controller acts first, so the
    /// damping controller always compares windows produced under the
    /// freshest glow policy.
    pub fn learn(&mut self, reward: f64, rng: &mut PsRng) -> Result<()> {
        if !self.awaiting_learn {
            return Err(PsError::Sequencing);
        }
        self.awaiting_learn = false;
        self.base.update_and_damp(reward, self.gamma_now, self.eta_now);
        self.t += 1;
        let Some(m) = &mut self.meta else {
            return Ok(());
        };
        if let Some(close) = m.eta.window.accumulate(reward) {
            let learning = self.variant == Variant::FullMeta;
            let (idx, lambda) = m.eta.on_close(close, learning, rng);
            self.eta_now = m.eta.current;
            if let Some(ev) = &mut self.events {
                ev.push(MetaEvent {
                    t: self.t,
                    channel: MetaChannel::Eta,
                    chosen: ETA_LABELS[idx],
                    lambda_internal: lambda,
                    gamma: self.gamma_now,
                    eta: self.eta_now,
                });
            }
        }
        if let Some(close) = m.gamma.window.accumulate(reward) {
            let (idx, lambda) = m.gamma.on_close(close, rng);
            self.gamma_now = m.gamma.current;
            if let Some(ev) = &mut self.events {
                ev.push(MetaEvent {
                    t: self.t,
                    channel: MetaChannel::Gamma,
                    chosen: RULE_LABELS[idx],
                    lambda_internal: lambda,
                    gamma: self.gamma_now,
                    eta: self.eta_now,
                });
            }
        }
        Ok(())
    }

    pub fn current_gamma(&self) -> f64 {
        self.gamma_now
    }

    pub fn current_eta(&self) -> f64 {
        self.eta_now
    }

    pub fn interactions(&self) -> u64 {
        self.t
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn action_label(&self, idx: usize) -> &str {
        &self.base.clip(self.action_ids[idx]).label
    }

    /// Probability that the damping controller picks rule I; 0.5 when
    /// there is no controller.
    pub fn p_rule_i(&self) -> f64 {
        self.meta.as_ref().map_or(0.5, |m| m.gamma.p_rule_i())
    }

    /// Selection distribution of the glow controller; uniform when there
    /// is no controller.
    pub fn eta_probabilities(&self) -> [f64; 10] {
        match &self.meta {
            Some(m) => {
                let p = m.eta.net.probabilities();
                let mut out = [0.0; 10];
                out.copy_from_slice(&p);
                out
            }
            None => [0.1; 10],
        }
    }

    /// Expected instantaneous performance of the current base policy on
    /// the given environment, if it has a closed form.
    pub fn analytic_success<E: crate::env::Environment + ?Sized>(&self, env: &E) -> Option<f64> {
        env.analytic_metric(&mut |token, action| {
            self.base
                .percept_id(env.percept_label(token))
                .map(|p| self.base.action_probability(p, ClipId(action)))
        })
    }

    pub fn network(&self) -> &ClipNetwork {
        &self.base
    }

    pub fn snapshot(&self) -> String {
        self.base.snapshot()
    }

    pub fn take_meta_events(&mut self) -> Vec<MetaEvent> {
        self.events.take().unwrap_or_default()
    }
}
