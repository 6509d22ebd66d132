//! `psmeta`: run bundled presets or custom configs, write CSV series,
//! inspect the shipped maps, and run the validation suite.
//!
//! Exit codes: 0 on success, 1 on config/runtime errors (with a
//! line/key diagnostic where available), 2 on unknown presets or flags.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use psmeta_core::config::config_from_flat;
use psmeta_core::env::gridworld::{load_map, GridMap, MAP_A, MAP_B, MAP_C};
use psmeta_core::experiments::csv::write_run;
use psmeta_core::experiments::presets::{preset_bundle, preset_summary, PRESET_NAMES};
use psmeta_core::experiments::run_ensemble;
use psmeta_core::validate;
use psmeta_core::{EnsembleConfig, PsError};

#[derive(Parser)]
#[command(name = "psmeta", version, about = "Projective-simulation runs with meta-learned damping and glow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bundled figure preset and write one CSV per configured run.
    Preset {
        /// Preset name (see `psmeta preset --list`), e.g. fig7.
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// Scaled-down ensemble sizes for quick desk runs.
        #[arg(long)]
        desk: bool,
        /// List available presets and exit.
        #[arg(long)]
        list: bool,
        /// Output directory (default: $PSMETA_OUT, then the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the preset's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 picks the machine's parallelism.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run a custom ensemble described by a flat `key = value` config file.
    Run {
        /// Path to the config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $PSMETA_OUT, then the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 picks the machine's parallelism.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run the validation suite, printing one pass/fail line per criterion.
    Validate {
        /// Run a single criterion (1-9) instead of the whole suite.
        #[arg(long, value_parser = clap::value_parser!(usize))]
        only: Option<usize>,
        /// Worker threads; 0 picks the machine's parallelism.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Print the shipped maps with their measured path lengths.
    Maps,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                PsError::UnknownPreset(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, PsError> {
    match cli.command {
        Command::Preset { name, desk, list, out, seed, workers } => {
            if list {
                for name in PRESET_NAMES {
                    println!("{name:7} {}", preset_summary(name));
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = desk_name(name.expect("clap requires a name without --list"), desk);
            let bundle = preset_bundle(&name)?;
            let dir = out_dir(out);
            for mut cfg in bundle.runs {
                if let Some(seed) = seed {
                    cfg.seed = seed;
                }
                execute(&cfg, &dir, &bundle.name, workers)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out, seed, workers } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| PsError::Config(format!("{}: {e}", config.display())))?;
            let mut cfg = config_from_flat(&text)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let prefix = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            execute(&cfg, &out_dir(out), &prefix, workers)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { only, workers } => {
            let reports = match only {
                Some(id) => {
                    if !(1..=validate::CRITERIA_COUNT).contains(&id) {
                        return Err(PsError::Config(format!(
                            "criterion ids run from 1 to {}",
                            validate::CRITERIA_COUNT
                        )));
                    }
                    vec![validate::run_criterion(id, workers)]
                }
                None => validate::run_all(workers),
            };
            let mut failed = 0;
            for report in &reports {
                println!("{report}");
                if !report.passed {
                    failed += 1;
                }
            }
            if failed == 0 {
                println!("all {} criteria passed", reports.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{failed} of {} criteria failed", reports.len());
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Maps => {
            for (name, text) in [("a", MAP_A), ("b", MAP_B), ("c", MAP_C)] {
                let map = load_map(text).expect("shipped maps parse");
                println!("map {name}:");
                print!("{text}");
                println!("{}", map_summary(&map));
                println!();
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| env::var_os("PSMETA_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn desk_name(mut name: String, desk: bool) -> String {
    if desk && !name.ends_with(":desk") {
        name.push_str(":desk");
    }
    name
}

fn execute(
    cfg: &EnsembleConfig,
    dir: &Path,
    prefix: &str,
    workers: usize,
) -> Result<(), PsError> {
    let run = run_ensemble(cfg, workers)?;
    let path = write_run(dir, prefix, &run, cfg)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn map_summary(map: &GridMap) -> String {
    let mut line = format!(
        "shortest_path={} free_cells={} size={}x{}",
        map.goal_distance, map.free_cells, map.height, map.width
    );
    if let Some(d) = map.distractor_distance {
        line.push_str(&format!(" distractor_path={d}"));
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_suffix_appends_once() {
        assert_eq!(desk_name("fig7".into(), false), "fig7");
        assert_eq!(desk_name("fig7".into(), true), "fig7:desk");
        assert_eq!(desk_name("fig7:desk".into(), true), "fig7:desk");
    }

    #[test]
    fn out_dir_prefers_flag_then_env_then_cwd() {
        // The env var is process-global, so every combination lives in
        // this one test to keep the suite parallel-safe.
        env::remove_var("PSMETA_OUT");
        assert_eq!(out_dir(None), PathBuf::from("."));
        assert_eq!(out_dir(Some("given".into())), PathBuf::from("given"));
        env::set_var("PSMETA_OUT", "fromenv");
        assert_eq!(out_dir(None), PathBuf::from("fromenv"));
        assert_eq!(out_dir(Some("given".into())), PathBuf::from("given"));
        env::remove_var("PSMETA_OUT");
    }

    #[test]
    fn args_parse_into_subcommands() {
        let cli = Cli::try_parse_from(["psmeta", "preset", "fig7", "--desk", "--seed", "9"]).unwrap();
        match cli.command {
            Command::Preset { name, desk, seed, .. } => {
                assert_eq!(name.as_deref(), Some("fig7"));
                assert!(desk);
                assert_eq!(seed, Some(9));
            }
            _ => panic!("expected preset"),
        }

        let cli = Cli::try_parse_from(["psmeta", "validate", "--only", "3"]).unwrap();
        match cli.command {
            Command::Validate { only, workers } => {
                assert_eq!(only, Some(3));
                assert_eq!(workers, 0);
            }
            _ => panic!("expected validate"),
        }

        assert!(Cli::try_parse_from(["psmeta", "preset"]).is_err());
        assert!(Cli::try_parse_from(["psmeta", "preset", "--list"]).is_ok());
        assert!(Cli::try_parse_from(["psmeta", "maps"]).is_ok());
    }

    #[test]
    fn map_summaries_report_both_paths() {
        let plain = load_map(MAP_A).unwrap();
        assert_eq!(map_summary(&plain), "shortest_path=14 free_cells=47 size=6x9");
        let distractor = load_map(MAP_C).unwrap();
        assert_eq!(
            map_summary(&distractor),
            "shortest_path=14 free_cells=47 size=6x9 distractor_path=12"
        );
    }
}
