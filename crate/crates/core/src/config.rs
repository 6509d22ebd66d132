//! Flat `key = value` run configuration.
//!
//! One line per setting, `#` starts a comment, keys appear at most
//! once, unknown keys are rejected. The format round-trips every
//! [`EnsembleConfig`] losslessly, and every data file written by the
//! harness carries its exact config as a sidecar, so published numbers
//! can always be regenerated from the sidecar alone.
//!
//! ```text
//! # two-phase relearning run
//! label = gamma0
//! env = invasion
//! phase_lens = 250,4750
//! variant = fixedrandom
//! fixed_gamma = 0
//! fixed_eta = 1
//! n_agents = 10000
//! seed = 1
//! stride = 1
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agent::{AgentConfig, Variant};
use crate::env::invasion::InvasionSchedule;
use crate::error::{PsError, Result};
use crate::experiments::{EnsembleConfig, EnvSpec, MapSource};

/// Splits raw text into (key, value, line number) triples.
pub fn parse_flat(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(PsError::Config(format!("line {line}: expected 'key = value'")));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(PsError::Config(format!("line {line}: empty key")));
        }
        out.push((key.to_string(), value.to_string(), line));
    }
    Ok(out)
}

struct Keys {
    map: HashMap<String, (String, usize)>,
}

impl Keys {
    fn new(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (key, value, line) in parse_flat(text)? {
            if let Some((_, first)) = map.insert(key.clone(), (value, line)) {
                return Err(PsError::Config(format!(
                    "line {line}: key '{key}' already set on line {first}"
                )));
            }
        }
        Ok(Keys { map })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((value, line)) => value.parse::<T>().map(Some).map_err(|_| {
                PsError::Config(format!("line {line}: invalid value '{value}' for '{key}'"))
            }),
        }
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn require(&mut self, key: &str) -> Result<(String, usize)> {
        self.take(key)
            .ok_or_else(|| PsError::Config(format!("missing required key '{key}'")))
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.map.into_iter().next() {
            return Err(PsError::Config(format!("line {line}: unknown key '{key}'")));
        }
        Ok(())
    }
}

fn parse_pair_list<A: FromStr, B: FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<Vec<(A, B)>> {
    let err =
        || PsError::Config(format!("line {line}: '{key}' entries must look like 'x:y,x:y,...'"));
    value
        .split(',')
        .map(|entry| {
            let (a, b) = entry.trim().rsplit_once(':').ok_or_else(err)?;
            Ok((a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?))
        })
        .collect()
}

fn map_source_from(token: &str) -> MapSource {
    match token {
        "a" => MapSource::BuiltinA,
        "b" => MapSource::BuiltinB,
        "c" => MapSource::BuiltinC,
        path => MapSource::File(PathBuf::from(path)),
    }
}

fn map_source_to(src: &MapSource) -> String {
    match src {
        MapSource::BuiltinA => "a".into(),
        MapSource::BuiltinB => "b".into(),
        MapSource::BuiltinC => "c".into(),
        MapSource::File(path) => path.display().to_string(),
    }
}

pub fn config_from_flat(text: &str) -> Result<EnsembleConfig> {
    let mut keys = Keys::new(text)?;

    let (env_name, env_line) = keys.require("env")?;
    let env = match env_name.as_str() {
        "invasion" => {
            let phase_lens = keys.take("phase_lens");
            let threshold: Option<f64> = keys.parse("threshold")?;
            match (phase_lens, threshold) {
                (Some((value, line)), None) => {
                    let lens: Vec<u64> = value
                        .split(',')
                        .map(|t| {
                            t.trim().parse().map_err(|_| {
                                PsError::Config(format!(
                                    "line {line}: 'phase_lens' must be a comma list of counts"
                                ))
                            })
                        })
                        .collect::<Result<_>>()?;
                    EnvSpec::Invasion(InvasionSchedule::Phases(lens))
                }
                (None, Some(theta)) => EnvSpec::Invasion(InvasionSchedule::Threshold {
                    theta,
                    n_phases: keys
                        .require("n_phases")
                        .and_then(|(v, l)| {
                            v.parse().map_err(|_| {
                                PsError::Config(format!("line {l}: invalid 'n_phases'"))
                            })
                        })?,
                    max_steps: keys.require("max_steps").and_then(|(v, l)| {
                        v.parse().map_err(|_| {
                            PsError::Config(format!("line {l}: invalid 'max_steps'"))
                        })
                    })?,
                }),
                (Some(_), Some(_)) => {
                    return Err(PsError::Config(
                        "'phase_lens' and 'threshold' are mutually exclusive".into(),
                    ))
                }
                (None, None) => {
                    return Err(PsError::Config(
                        "invasion runs need 'phase_lens' or 'threshold'".into(),
                    ))
                }
            }
        }
        "nship" => {
            let (value, line) = keys.require("nship_phases")?;
            EnvSpec::NShip { phases: parse_pair_list(&value, line, "nship_phases")? }
        }
        "gridworld" => {
            let (value, line) = keys.require("grid_phases")?;
            let phases = parse_pair_list::<String, u64>(&value, line, "grid_phases")?
                .into_iter()
                .map(|(src, trials)| (map_source_from(&src), trials))
                .collect();
            EnvSpec::Grid { phases }
        }
        other => {
            return Err(PsError::Config(format!(
                "line {env_line}: unknown env '{other}' (invasion, nship, gridworld)"
            )))
        }
    };

    let (variant_name, variant_line) = keys.require("variant")?;
    let variant = match variant_name.as_str() {
        "fullmeta" => Variant::FullMeta,
        "gammaonly" => Variant::GammaOnlyRandomEta,
        "fixedrandom" => Variant::FixedRandomParams,
        other => {
            return Err(PsError::Config(format!(
                "line {variant_line}: unknown variant '{other}' (fullmeta, gammaonly, \
                 fixedrandom)"
            )))
        }
    };

    let defaults = AgentConfig::default();
    let rule_bias = match keys.take("rule_bias") {
        None => None,
        Some((value, line)) => {
            let (a, b) = value.split_once(',').ok_or_else(|| {
                PsError::Config(format!("line {line}: 'rule_bias' must be 'w_i,w_ii'"))
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    PsError::Config(format!("line {line}: invalid 'rule_bias' weight '{s}'"))
                })
            };
            Some((parse(a)?, parse(b)?))
        }
    };
    let agent = AgentConfig {
        n_eta: keys.parse_or("n_eta", defaults.n_eta)?,
        n_gamma: keys.parse_or("n_gamma", defaults.n_gamma)?,
        c_gamma: keys.parse_or("c_gamma", defaults.c_gamma)?,
        gamma_meta: keys.parse_or("gamma_meta", defaults.gamma_meta)?,
        rule_bias,
        fixed_gamma: keys.parse("fixed_gamma")?,
        fixed_eta: keys.parse("fixed_eta")?,
    };

    let cfg = EnsembleConfig {
        label: keys.take("label").map_or_else(|| "run".to_string(), |(v, _)| v),
        env,
        variant,
        n_agents: keys.parse_or("n_agents", 1)?,
        seed: keys.parse_or("seed", 1)?,
        stride: keys.parse_or("stride", 1)?,
        agent,
        meta_trace: keys.parse_or("meta_trace", false)?,
    };
    keys.finish()?;
    Ok(cfg)
}

pub fn config_to_flat(cfg: &EnsembleConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("label", cfg.label.clone());
    match &cfg.env {
        EnvSpec::Invasion(schedule) => {
            kv("env", "invasion".into());
            match schedule {
                InvasionSchedule::Phases(lens) => {
                    let list: Vec<String> = lens.iter().map(u64::to_string).collect();
                    kv("phase_lens", list.join(","));
                }
                InvasionSchedule::Threshold { theta, n_phases, max_steps } => {
                    kv("threshold", theta.to_string());
                    kv("n_phases", n_phases.to_string());
                    kv("max_steps", max_steps.to_string());
                }
            }
        }
        EnvSpec::NShip { phases } => {
            kv("env", "nship".into());
            let list: Vec<String> =
                phases.iter().map(|(n, t)| format!("{n}:{t}")).collect();
            kv("nship_phases", list.join(","));
        }
        EnvSpec::Grid { phases } => {
            kv("env", "gridworld".into());
            let list: Vec<String> =
                phases.iter().map(|(m, t)| format!("{}:{}", map_source_to(m), t)).collect();
            kv("grid_phases", list.join(","));
        }
    }
    kv("variant", cfg.variant.name().into());
    kv("n_agents", cfg.n_agents.to_string());
    kv("seed", cfg.seed.to_string());
    kv("stride", cfg.stride.to_string());
    kv("meta_trace", cfg.meta_trace.to_string());
    kv("n_eta", cfg.agent.n_eta.to_string());
    kv("n_gamma", cfg.agent.n_gamma.to_string());
    kv("c_gamma", cfg.agent.c_gamma.to_string());
    kv("gamma_meta", cfg.agent.gamma_meta.to_string());
    if let Some((a, b)) = cfg.agent.rule_bias {
        kv("rule_bias", format!("{a},{b}"));
    }
    if let Some(g) = cfg.agent.fixed_gamma {
        kv("fixed_gamma", g.to_string());
    }
    if let Some(e) = cfg.agent.fixed_eta {
        kv("fixed_eta", e.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_configs() -> Vec<EnsembleConfig> {
        vec![
            EnsembleConfig {
                label: "gamma0.001".into(),
                env: EnvSpec::Invasion(InvasionSchedule::Phases(vec![250, 4750])),
                variant: Variant::FixedRandomParams,
                n_agents: 10_000,
                seed: 1,
                stride: 1,
                agent: AgentConfig {
                    fixed_gamma: Some(0.001),
                    fixed_eta: Some(1.0),
                    ..AgentConfig::default()
                },
                meta_trace: false,
            },
            EnsembleConfig {
                label: "single".into(),
                env: EnvSpec::Invasion(InvasionSchedule::Threshold {
                    theta: 0.8,
                    n_phases: 6,
                    max_steps: 300_000,
                }),
                variant: Variant::FixedRandomParams,
                n_agents: 1,
                seed: 5,
                stride: 1,
                agent: AgentConfig {
                    fixed_gamma: Some(0.0),
                    fixed_eta: Some(1.0),
                    ..AgentConfig::default()
                },
                meta_trace: false,
            },
            EnsembleConfig {
                label: "fullmeta".into(),
                env: EnvSpec::NShip {
                    phases: vec![(1, 350_000), (2, 700_000), (3, 1_050_000), (4, 1_400_000)],
                },
                variant: Variant::FullMeta,
                n_agents: 100,
                seed: 1,
                stride: 500,
                agent: AgentConfig {
                    rule_bias: Some((100_000.0, 1.0)),
                    ..AgentConfig::default()
                },
                meta_trace: true,
            },
            EnsembleConfig {
                label: "gammaonly".into(),
                env: EnvSpec::Grid {
                    phases: vec![
                        (MapSource::BuiltinA, 1_000_000),
                        (MapSource::BuiltinB, 1_000_000),
                        (MapSource::BuiltinC, 5_000_000),
                        (MapSource::File(PathBuf::from("maps/extra.map")), 7),
                    ],
                },
                variant: Variant::GammaOnlyRandomEta,
                n_agents: 10_000,
                seed: 123,
                stride: 2000,
                agent: AgentConfig {
                    gamma_meta: 0.25,
                    c_gamma: 0.3,
                    n_eta: 31,
                    n_gamma: 6,
                    rule_bias: Some((100_000.0, 1.0)),
                    ..AgentConfig::default()
                },
                meta_trace: false,
            },
        ]
    }

    #[test]
    fn round_trips_losslessly() {
        for cfg in sample_configs() {
            let text = config_to_flat(&cfg);
            let back = config_from_flat(&text).unwrap();
            assert_eq!(back, cfg, "config text was:\n{text}");
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = config_from_flat(
            "env = invasion\nphase_lens = 100\nvariant = fullmeta\n",
        )
        .unwrap();
        assert_eq!(cfg.label, "run");
        assert_eq!(cfg.n_agents, 1);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.stride, 1);
        assert!(!cfg.meta_trace);
        assert_eq!(cfg.agent, AgentConfig::default());
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let cfg = config_from_flat(
            "# a comment\n\n  env   =   invasion  \nphase_lens = 10, 20 ,30\nvariant = \
             fixedrandom\n   # trailing comment\n",
        )
        .unwrap();
        assert_eq!(
            cfg.env,
            EnvSpec::Invasion(InvasionSchedule::Phases(vec![10, 20, 30]))
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = config_from_flat("env = invasion\nnot a setting\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");

        let e = config_from_flat("env = invasion\nphase_lens = 10\nvariant = fullmeta\nseed = \
                                  1\nseed = 2\n")
            .unwrap_err();
        assert!(e.to_string().contains("'seed'") && e.to_string().contains("line 5"), "{e}");

        let e = config_from_flat(
            "env = invasion\nphase_lens = 10\nvariant = fullmeta\nbogus = 1\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("unknown key 'bogus'"), "{e}");

        let e = config_from_flat(
            "env = invasion\nphase_lens = 10\nvariant = fullmeta\nn_agents = many\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("n_agents"), "{e}");
    }

    #[test]
    fn schedule_keys_are_mutually_exclusive() {
        let e = config_from_flat(
            "env = invasion\nphase_lens = 10\nthreshold = 0.8\nn_phases = 2\nmax_steps = \
             100\nvariant = fullmeta\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("mutually exclusive"), "{e}");

        let e = config_from_flat("env = invasion\nvariant = fullmeta\n").unwrap_err();
        assert!(e.to_string().contains("phase_lens"), "{e}");
    }

    #[test]
    fn unknown_names_are_rejected() {
        let e = config_from_flat("env = chess\nvariant = fullmeta\n").unwrap_err();
        assert!(e.to_string().contains("unknown env"), "{e}");
        let e = config_from_flat(
            "env = invasion\nphase_lens = 10\nvariant = magic\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("unknown variant"), "{e}");
    }
}
