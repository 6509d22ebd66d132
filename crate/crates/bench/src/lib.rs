//! Shared scenario builders for the benches: agents and environments
//! warmed up past the cold-start transient so the hot loops measure
//! steady-state cost.

use psmeta_core::env::gridworld::{load_map, GridWorld, MAP_A};
use psmeta_core::env::invasion::{InvasionGame, InvasionSchedule};
use psmeta_core::env::Environment;
use psmeta_core::{Agent, AgentConfig, ClipNetwork, PsRng, Variant};
use rand::SeedableRng;

pub struct Scenario<E> {
    pub agent: Agent,
    pub env: E,
    pub arng: PsRng,
    pub erng: PsRng,
    pub percept: u32,
}

impl<E: Environment> Scenario<E> {
    fn new(mut env: E, variant: Variant, cfg: AgentConfig, warmup: u64) -> Self {
        let mut arng = PsRng::seed_from_u64(17);
        let mut erng = arng.clone();
        erng.set_stream(1);
        let mut agent = Agent::new(
            env.action_labels(),
            env.declared_states(),
            variant,
            cfg,
            false,
            &mut arng,
        )
        .expect("bench scenario is well formed");
        let mut percept = env.reset(&mut erng);
        for _ in 0..warmup {
            let action = agent.act(env.percept_label(percept), &mut arng).unwrap();
            let step = env.step(action, &mut erng);
            agent.learn(step.reward, &mut arng).unwrap();
            percept = step.next_percept;
        }
        Scenario { agent, env, arng, erng, percept }
    }

    /// One deliberate-act-learn interaction, returning the reward.
    pub fn interaction(&mut self) -> f64 {
        let action = self.agent.act(self.env.percept_label(self.percept), &mut self.arng).unwrap();
        let step = self.env.step(action, &mut self.erng);
        self.agent.learn(step.reward, &mut self.arng).unwrap();
        self.percept = step.next_percept;
        step.reward
    }
}

/// Full meta-learning agent on a long single-phase invasion game.
pub fn invasion_scenario() -> Scenario<InvasionGame> {
    let env = InvasionGame::new(InvasionSchedule::Phases(vec![u64::MAX / 2])).unwrap();
    Scenario::new(env, Variant::FullMeta, AgentConfig::default(), 10_000)
}

/// Fixed-parameter agent on the plain maze, past initial exploration.
pub fn grid_scenario() -> Scenario<GridWorld> {
    let map = load_map(MAP_A).unwrap();
    let env = GridWorld::new(vec![(map, u64::MAX / 2)]).unwrap();
    let cfg = AgentConfig {
        fixed_gamma: Some(0.0),
        fixed_eta: Some(0.2),
        ..AgentConfig::default()
    };
    Scenario::new(env, Variant::FixedRandomParams, cfg, 50_000)
}

/// Two-layer network with `percepts` percept clips over four actions,
/// all glows armed so the update sweep touches every edge.
pub fn synthetic_network(percepts: usize) -> ClipNetwork {
    let mut net = ClipNetwork::new();
    let actions: Vec<_> = ["up", "down", "left", "right"]
        .iter()
        .map(|l| net.add_action(l).unwrap())
        .collect();
    let mut rng = PsRng::seed_from_u64(3);
    let mut walk = psmeta_core::WalkTrace::new();
    for i in 0..percepts {
        let p = net.add_percept_uniform(&format!("p{i}"), &actions).unwrap();
        net.random_walk_into(p, &mut rng, &mut walk).unwrap();
        net.refresh_glow(&walk);
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_are_live() {
        let mut inv = invasion_scenario();
        let mut grid = grid_scenario();
        for _ in 0..50 {
            inv.interaction();
            grid.interaction();
        }
        assert!(inv.agent.interactions() > 10_000);
        assert!(grid.agent.interactions() > 50_000);
    }

    #[test]
    fn synthetic_network_has_expected_size() {
        let net = synthetic_network(250);
        assert_eq!(net.edge_count(), 1000);
    }
}
