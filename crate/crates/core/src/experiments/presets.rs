//! Named, frozen experiment definitions.
//!
//! Each preset is a bundle of ensemble runs that together produce one
//! figure-style dataset (one CSV per run). Presets come in two scales:
//! the plain name is the full published protocol, `name:desk` is a
//! scaled-down version with the same structure that finishes on a
//! laptop while preserving the qualitative outcome.

use crate::agent::{AgentConfig, Variant};
use crate::env::invasion::InvasionSchedule;
use crate::error::{PsError, Result};
use crate::experiments::{EnsembleConfig, EnvSpec, MapSource};
use crate::meta::ETA_ACTIONS;

pub const PRESET_NAMES: [&str; 8] =
    ["fig1", "fig2", "fig3", "fig4", "fig7", "fig8", "fig9", "fig10"];

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone)]
pub struct PresetBundle {
    /// Canonical name, including the `:desk` suffix if scaled down.
    pub name: String,
    pub runs: Vec<EnsembleConfig>,
}

/// One-line description per preset, for CLI listings.
pub fn preset_summary(base: &str) -> &'static str {
    match base {
        "fig1" => "invasion relearning after one inversion, damping grid, fixed eta = 1",
        "fig2" => "invasion learning times over six inversions, single agent, threshold phases",
        "fig3" => "invasion under many inversions with undamped fixed parameters",
        "fig4" => "convoy game asymptotic reward over the glow grid, for 2 to 4 ships",
        "fig7" => "invasion with meta control: full, damping-only and fixed-parameter agents",
        "fig8" => "single full-meta invasion agent with a per-activation controller trace",
        "fig9" => "convoy game with growing length under meta control",
        "fig10" => "maze with changing walls and a distractor under meta control",
        _ => "",
    }
}

fn base(label: String, env: EnvSpec, variant: Variant, n_agents: u64, stride: u64) -> EnsembleConfig {
    EnsembleConfig {
        label,
        env,
        variant,
        n_agents,
        seed: DEFAULT_SEED,
        stride,
        agent: AgentConfig::default(),
        meta_trace: false,
    }
}

fn fixed(gamma: f64, eta: f64) -> AgentConfig {
    AgentConfig { fixed_gamma: Some(gamma), fixed_eta: Some(eta), ..AgentConfig::default() }
}

fn biased() -> AgentConfig {
    AgentConfig { rule_bias: Some((100_000.0, 1.0)), ..AgentConfig::default() }
}

/// Resolves `"fig7"` or `"fig7:desk"` into its frozen run list.
pub fn preset_bundle(name: &str) -> Result<PresetBundle> {
    let (stem, desk) = match name.split_once(':') {
        None => (name, false),
        Some((stem, "desk")) => (stem, true),
        Some(_) => return Err(PsError::UnknownPreset(name.to_string())),
    };
    let runs = match stem {
        "fig1" => {
            let n_agents = if desk { 10_000 } else { 1_000_000 };
            [0.0, 0.001, 0.01, 0.1]
                .iter()
                .map(|&gamma| {
                    let mut cfg = base(
                        format!("gamma{gamma}"),
                        EnvSpec::Invasion(InvasionSchedule::Phases(vec![250, 4750])),
                        Variant::FixedRandomParams,
                        n_agents,
                        1,
                    );
                    cfg.agent = fixed(gamma, 1.0);
                    cfg
                })
                .collect()
        }
        "fig2" => {
            let mut cfg = base(
                "single".into(),
                EnvSpec::Invasion(InvasionSchedule::Threshold {
                    theta: 0.8,
                    n_phases: 6,
                    max_steps: 300_000,
                }),
                Variant::FixedRandomParams,
                1,
                1,
            );
            cfg.agent = fixed(0.0, 1.0);
            vec![cfg]
        }
        "fig3" => {
            let mut cfg = base(
                "fixed".into(),
                EnvSpec::Invasion(InvasionSchedule::Phases(vec![500; 10])),
                Variant::FixedRandomParams,
                if desk { 100 } else { 10_000 },
                1,
            );
            cfg.agent = fixed(0.0, 1.0);
            vec![cfg]
        }
        "fig4" => {
            let games = if desk { 100_000 } else { 1_000_000 };
            let n_agents = if desk { 200 } else { 1000 };
            let mut runs = Vec::new();
            for n in [2u32, 3, 4] {
                for eta in ETA_ACTIONS {
                    let mut cfg = base(
                        format!("n{n}_eta{eta}"),
                        EnvSpec::NShip { phases: vec![(n, games)] },
                        Variant::FixedRandomParams,
                        n_agents,
                        games / 100,
                    );
                    cfg.agent = fixed(1e-4, eta);
                    runs.push(cfg);
                }
            }
            runs
        }
        "fig7" => {
            let phases = vec![120_000; if desk { 6 } else { 20 }];
            let n_agents = if desk { 20 } else { 100 };
            [Variant::FullMeta, Variant::GammaOnlyRandomEta, Variant::FixedRandomParams]
                .iter()
                .map(|&variant| {
                    base(
                        variant.name().into(),
                        EnvSpec::Invasion(InvasionSchedule::Phases(phases.clone())),
                        variant,
                        n_agents,
                        100,
                    )
                })
                .collect()
        }
        "fig8" => {
            let phases = vec![120_000; if desk { 6 } else { 20 }];
            let mut cfg = base(
                "fullmeta".into(),
                EnvSpec::Invasion(InvasionSchedule::Phases(phases)),
                Variant::FullMeta,
                1,
                100,
            );
            cfg.meta_trace = true;
            vec![cfg]
        }
        "fig9" => {
            // Desk scale trims the ensemble, never the phases: the
            // controller windows are sized by the task dimensions, so
            // shorter phases would starve the relearning budget rather
            // than merely coarsen the curves.
            let phases: Vec<(u32, u64)> =
                (1..=4).map(|n| (n, 350_000 * u64::from(n))).collect();
            let n_agents = if desk { 20 } else { 100 };
            let stride = if desk { 100 } else { 500 };
            [Variant::FullMeta, Variant::GammaOnlyRandomEta]
                .iter()
                .map(|&variant| {
                    let mut cfg = base(
                        variant.name().into(),
                        EnvSpec::NShip { phases: phases.clone() },
                        variant,
                        n_agents,
                        stride,
                    );
                    cfg.agent = biased();
                    cfg
                })
                .collect()
        }
        "fig10" => {
            let scale = if desk { 10 } else { 1 };
            let phases = vec![
                (MapSource::BuiltinA, 1_000_000 / scale),
                (MapSource::BuiltinB, 1_000_000 / scale),
                (MapSource::BuiltinC, 5_000_000 / scale),
            ];
            let n_agents = if desk { 100 } else { 10_000 };
            let stride = if desk { 500 } else { 2000 };
            [Variant::FullMeta, Variant::GammaOnlyRandomEta]
                .iter()
                .map(|&variant| {
                    let mut cfg = base(
                        variant.name().into(),
                        EnvSpec::Grid { phases: phases.clone() },
                        variant,
                        n_agents,
                        stride,
                    );
                    cfg.agent = biased();
                    cfg
                })
                .collect()
        }
        _ => return Err(PsError::UnknownPreset(name.to_string())),
    };
    Ok(PresetBundle { name: name.to_string(), runs })
}
