//! Reinforcement learning with episodic clip networks whose two global
//! learning parameters, the damping of excitation weights and the decay
//! of the reward-spreading glow, are themselves tuned at runtime by a
//! pair of small meta-level networks watching the reward stream.
//!
//! The crate bundles
//!
//! * the base network and walk/update primitives ([`clip_network`]),
//! * the meta controllers ([`meta`]) and the combined agent ([`agent`]),
//! * three benchmark tasks ([`env`]): a two-symbol invasion game, a
//!   delayed-reward convoy game, and maze navigation with a distractor,
//! * an ensemble harness with named experiment presets and CSV output
//!   ([`experiments`]), a flat config format ([`config`]),
//! * and a self-contained validation suite ([`validate`]) asserting the
//!   headline quantitative behaviours end to end.
//!
//! Everything is deterministic given a seed: agent i of an ensemble uses
//! a counter-based generator seeded with `seed + i`, with separate
//! streams for the agent's own choices and the environment.

pub mod agent;
pub mod clip_network;
pub mod config;
pub mod env;
pub mod error;
pub mod experiments;
pub mod meta;
pub mod validate;

/// Random source used throughout; seeded per agent, with stream 1
/// reserved for the environment so agent and task randomness never
/// interleave.
pub type PsRng = rand_chacha::ChaCha8Rng;

pub use agent::{Agent, AgentConfig, MetaChannel, MetaEvent, Variant};
pub use clip_network::{Clip, ClipId, ClipKind, ClipNetwork, TraceStep, WalkTrace};
pub use env::Axis;
pub use error::{PsError, Result};
pub use experiments::{run_ensemble, EnsembleConfig, EnsembleRun, EnvSpec, MapSource, TimeSeries};
