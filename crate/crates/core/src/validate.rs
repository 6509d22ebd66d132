//! End-to-end validation: nine numbered criteria covering the headline
//! quantitative behaviours, from fixed-parameter baselines to the full
//! meta-controlled runs, each with pinned tolerances and a wall-clock
//! budget. All protocols are desk scale and seeded, so the whole suite
//! is deterministic up to floating-point identity.
//!
//! The suite is runnable both from the `acceptance` integration test
//! target and from the command line (`validate` subcommand).

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;

use crate::agent::{AgentConfig, Variant};
use crate::clip_network::{ClipId, ClipNetwork, H_MIN};
use crate::env::invasion::InvasionSchedule;
use crate::env::nship::NShipGame;
use crate::experiments::csv::series_to_csv;
use crate::experiments::{
    column_names, learning_times, run_ensemble, run_single, EnsembleConfig, EnvSpec, MapSource,
    TimeSeries,
};
use crate::meta::{internal_reward, rule_i, rule_ii, window_delta};
use crate::PsRng;

pub const CRITERIA_COUNT: usize = 9;

/// Wall-clock budgets per criterion, seconds.
const BUDGET_SECONDS: [f64; CRITERIA_COUNT] =
    [10.0, 30.0, 5.0, 600.0, 300.0, 900.0, 1200.0, 3600.0, 60.0];

const NAMES: [&str; CRITERIA_COUNT] = [
    "undamped baseline averages to chance over an inversion pair",
    "damping grid orders asymptote and recovery",
    "learning times grow across inversions",
    "optimal glow decay shrinks with convoy length",
    "glow threshold splits maze strategies",
    "meta control restores invasion relearning",
    "meta control sustains convoy growth",
    "meta control tracks maze changes",
    "primitive invariants and cross-checks",
];

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} ({}): {} [{:.1} s] {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.details
        )
    }
}

pub fn run_criterion(id: usize, workers: usize) -> CriterionReport {
    let start = Instant::now();
    let (mut passed, details) = match id {
        1 => criterion_1(workers),
        2 => criterion_2(workers),
        3 => criterion_3(workers),
        4 => criterion_4(workers),
        5 => criterion_5(workers),
        6 => criterion_6(workers),
        7 => criterion_7(workers),
        8 => criterion_8(workers),
        9 => criterion_9(workers),
        _ => panic!("criterion ids run from 1 to {CRITERIA_COUNT}"),
    };
    let seconds = start.elapsed().as_secs_f64();
    let budget = BUDGET_SECONDS[id - 1];
    let mut details = details;
    if seconds > budget {
        passed = false;
        details.push_str(&format!(" [over budget: {seconds:.1} s > {budget} s]"));
    }
    CriterionReport { id, name: NAMES[id - 1], passed, details, seconds }
}

pub fn run_all(workers: usize) -> Vec<CriterionReport> {
    (1..=CRITERIA_COUNT).map(|id| run_criterion(id, workers)).collect()
}

fn fixed(gamma: f64, eta: f64) -> AgentConfig {
    AgentConfig { fixed_gamma: Some(gamma), fixed_eta: Some(eta), ..AgentConfig::default() }
}

fn run(cfg: &EnsembleConfig, workers: usize) -> TimeSeries {
    run_ensemble(cfg, workers).expect("validation configs are well formed").series
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Row range (first..one-past-last) of a phase.
fn phase_rows(series: &TimeSeries, phase: usize) -> std::ops::Range<usize> {
    let col = series.column("phase").expect("phase column");
    let first = col.iter().position(|&p| p as usize == phase).expect("phase present");
    let last = col.iter().rposition(|&p| p as usize == phase).unwrap();
    first..last + 1
}

/// Mean of a column over the trailing `fraction` of a phase's rows. The
/// final row of the phase is dropped: on phase boundaries it is already
/// recorded under the successor task (closed-form metrics evaluate the
/// policy against the environment state after the switch).
fn phase_tail_mean(series: &TimeSeries, column: &str, phase: usize, fraction: f64) -> f64 {
    let rows = phase_rows(series, phase);
    let values = &series.column(column).expect("column")[rows.start..rows.end - 1];
    let tail = ((values.len() as f64 * fraction).ceil() as usize).clamp(1, values.len());
    mean(&values[values.len() - tail..])
}

fn index_reaching(series: &TimeSeries, column: &str, target: f64, after: u64) -> Option<u64> {
    let col = series.column(column).expect("column");
    series
        .index
        .iter()
        .zip(col)
        .find(|(&i, &v)| i > after && v >= target)
        .map(|(&i, _)| i)
}

// Ten inversions every 500 steps with gamma = 0 and eta = 1: the agent
// can never unlearn, so success alternates high and low around chance.
// Averaged over a full late inversion pair it must sit at 1/2.
fn criterion_1(workers: usize) -> (bool, String) {
    const TOL: f64 = 0.03;
    let cfg = EnsembleConfig {
        label: "c1".into(),
        env: EnvSpec::Invasion(InvasionSchedule::Phases(vec![500; 10])),
        variant: Variant::FixedRandomParams,
        n_agents: 100,
        seed: 11,
        stride: 1,
        agent: fixed(0.0, 1.0),
        meta_trace: false,
    };
    let series = run(&cfg, workers);
    let success = series.column("success").unwrap();
    let pair: Vec<f64> = series
        .index
        .iter()
        .zip(success)
        .filter(|(&i, _)| i > 4000)
        .map(|(_, &v)| v)
        .collect();
    let m = mean(&pair);
    (
        (m - 0.5).abs() <= TOL,
        format!("success over steps 4001..=5000 averaged {m:.4}, want 0.5 +/- {TOL}"),
    )
}

// One inversion after 250 steps, three damping values on common random
// numbers. More damping costs asymptotic success before the switch but
// buys back relearning speed after it.
fn criterion_2(workers: usize) -> (bool, String) {
    const GAMMAS: [f64; 3] = [0.0, 0.001, 0.01];
    const RECOVERY_TARGET: f64 = 0.75;
    let mut asymptote = Vec::new();
    let mut recovery = Vec::new();
    for gamma in GAMMAS {
        let cfg = EnsembleConfig {
            label: format!("c2_{gamma}"),
            env: EnvSpec::Invasion(InvasionSchedule::Phases(vec![250, 4750])),
            variant: Variant::FixedRandomParams,
            n_agents: 10_000,
            seed: 21,
            stride: 1,
            agent: fixed(gamma, 1.0),
            meta_trace: false,
        };
        let series = run(&cfg, workers);
        let success = series.column("success").unwrap();
        let pre: Vec<f64> = series
            .index
            .iter()
            .zip(success)
            .filter(|(&i, _)| i > 200 && i <= 250)
            .map(|(_, &v)| v)
            .collect();
        asymptote.push(mean(&pre));
        recovery
            .push(index_reaching(&series, "success", RECOVERY_TARGET, 250).unwrap_or(5001) - 250);
    }
    let ordered_asym = asymptote[0] > asymptote[1] && asymptote[1] > asymptote[2];
    let ordered_rec = recovery[0] > recovery[1] && recovery[1] > recovery[2];
    (
        ordered_asym && ordered_rec,
        format!(
            "gamma {GAMMAS:?}: pre-switch success {:.4?} (want strictly decreasing), recovery \
             to {RECOVERY_TARGET} in {recovery:?} steps (want strictly decreasing)",
            asymptote
        ),
    )
}

// Phases switch whenever the analytic success of one undamped agent
// reaches 0.8. Each inversion leaves more misplaced weight behind, so
// consecutive learning times grow by more than half.
fn criterion_3(workers: usize) -> (bool, String) {
    const MIN_RATIO: f64 = 1.5;
    let cfg = EnsembleConfig {
        label: "c3".into(),
        env: EnvSpec::Invasion(InvasionSchedule::Threshold {
            theta: 0.8,
            n_phases: 6,
            max_steps: 300_000,
        }),
        variant: Variant::FixedRandomParams,
        n_agents: 1,
        seed: 5,
        stride: 1,
        agent: fixed(0.0, 1.0),
        meta_trace: false,
    };
    let series = run(&cfg, workers);
    let times = learning_times(&series, "success", 0.8).expect("series has phases");
    let values: Vec<u64> = times.iter().map(|t| t.time).collect();
    let complete = times.len() == 6 && times.iter().all(|t| !t.censored);
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let ratios_ok = values
        .windows(2)
        .all(|w| w[1] as f64 / w[0] as f64 > MIN_RATIO);
    (
        complete && increasing && ratios_ok,
        format!("learning times {values:?}, want 6 uncensored, strictly increasing, consecutive \
                 ratios > {MIN_RATIO}"),
    )
}

// Fixed small damping, glow decay swept over the ten-point grid, convoy
// lengths 2 to 4. The grid point with the best expected reward at the
// 100000th game must move to smaller eta as the delayed reward moves
// further out.
fn criterion_4(workers: usize) -> (bool, String) {
    const GAMES: u64 = 100_000;
    let mut best_eta = Vec::new();
    let mut details = String::new();
    for n in [2u32, 3, 4] {
        let mut best = (0.0f64, f64::MIN);
        for k in 0..10 {
            let eta = (k + 1) as f64 / 10.0;
            let cfg = EnsembleConfig {
                label: format!("c4_n{n}_eta{eta}"),
                env: EnvSpec::NShip { phases: vec![(n, GAMES)] },
                variant: Variant::FixedRandomParams,
                n_agents: 200,
                seed: 31,
                stride: 1000,
                agent: fixed(1e-4, eta),
                meta_trace: false,
            };
            let series = run(&cfg, workers);
            let value = *series.column("reward").unwrap().last().unwrap();
            if value > best.1 {
                best = (eta, value);
            }
        }
        details.push_str(&format!("n={n}: best eta {} (reward {:.3}); ", best.0, best.1));
        best_eta.push(best.0);
    }
    let decreasing = best_eta.windows(2).all(|w| w[1] < w[0]);
    (decreasing, format!("{details}want best eta strictly decreasing in n"))
}

// Glow decay decides whether an agent that owns the 14-step goal route
// keeps it once the 12-step shortcut to the third-of-a-unit distractor
// opens up. Per game, the shortcut adds 1/3 to the turn-off edge while
// the goal route adds (1-eta)^2 to the stay-on edge, so the route
// survives only below the threshold 1 - sqrt(1/3) ~ 0.42. Each agent
// first earns the route on the plain maze (same fixed parameters), then
// the distractor variant of the same maze is swapped in: below
// threshold the route holds at one reward per ~14 steps, above it the
// route never consolidates in the first place (the glow horizon is too
// short to bridge 14 steps) and the run ends on the shortcut at ~36
// steps per unit of reward.
fn criterion_5(_workers: usize) -> (bool, String) {
    const AGENTS: u64 = 100;
    const PRETRAIN: u64 = 8000;
    const TRIALS: u64 = 4000;
    const CLASSIFY_LAST: usize = 200;
    const OPTIMAL_BELOW: f64 = 18.0;
    const GREEDY_ABOVE: f64 = 30.0;
    const MIN_AGENTS: usize = 90;

    let classify = |eta: f64| -> (usize, usize) {
        let cfg = EnsembleConfig {
            label: format!("c5_eta{eta}"),
            env: EnvSpec::Grid {
                phases: vec![(MapSource::BuiltinA, PRETRAIN), (MapSource::BuiltinC, TRIALS)],
            },
            variant: Variant::FixedRandomParams,
            n_agents: AGENTS,
            seed: 41,
            stride: 1,
            agent: fixed(0.0, eta),
            meta_trace: false,
        };
        let col = column_names(&cfg.env)
            .iter()
            .position(|n| n == "steps_per_reward")
            .unwrap();
        let mut optimal = 0;
        let mut greedy = 0;
        for i in 0..AGENTS {
            let run = run_single(&cfg, i).expect("valid config");
            let rows = run.index.len();
            let tail: Vec<f64> = (rows - CLASSIFY_LAST..rows)
                .map(|r| run.data[r * run.cols + col])
                .collect();
            let m = mean(&tail);
            if m < OPTIMAL_BELOW {
                optimal += 1;
            } else if m > GREEDY_ABOVE {
                greedy += 1;
            }
        }
        (optimal, greedy)
    };

    let (low_opt, low_greedy) = classify(0.3);
    let (high_opt, high_greedy) = classify(0.6);
    (
        low_opt >= MIN_AGENTS && high_greedy >= MIN_AGENTS,
        format!(
            "eta 0.3: {low_opt}/{AGENTS} locked on the goal path ({low_greedy} on the \
             shortcut); eta 0.6: {high_greedy}/{AGENTS} on the shortcut ({high_opt} on the \
             goal path); want >= {MIN_AGENTS} in the predicted class on both sides"
        ),
    )
}

fn invasion_meta_cfg(variant: Variant, n_agents: u64) -> EnsembleConfig {
    EnsembleConfig {
        label: variant.name().into(),
        env: EnvSpec::Invasion(InvasionSchedule::Phases(vec![120_000; 6])),
        variant,
        n_agents,
        seed: 61,
        stride: 100,
        agent: AgentConfig::default(),
        meta_trace: false,
    }
}

// Six long inversion phases. Full meta control must relearn almost
// completely by the last phase, fixed random parameters must not, and
// learning only the damping lands strictly in between. The damping
// controller should also drift toward the forget-on-drop rule.
fn criterion_6(workers: usize) -> (bool, String) {
    const AGENTS: u64 = 20;
    let final_success = |variant: Variant| -> (f64, TimeSeries) {
        let series = run(&invasion_meta_cfg(variant, AGENTS), workers);
        (phase_tail_mean(&series, "success", 5, 1.0), series)
    };
    let (full, full_series) = final_success(Variant::FullMeta);
    let (gonly, _) = final_success(Variant::GammaOnlyRandomEta);
    let (frand, _) = final_success(Variant::FixedRandomParams);

    let rule = full_series.column("p_rule_i").unwrap();
    let decile = rule.len() / 10;
    let early = mean(&rule[..decile]);
    let late = mean(&rule[rule.len() - decile..]);

    let ok = full >= 0.9 && frand <= 0.7 && gonly > frand && gonly < full && late > early;
    (
        ok,
        format!(
            "final-phase success: full {full:.3} (>= 0.9), damping-only {gonly:.3} (strictly \
             between), fixed random {frand:.3} (<= 0.7); p(rule I) first decile {early:.3} -> \
             last decile {late:.3} (want increasing)"
        ),
    )
}

fn convoy_meta_cfg(variant: Variant) -> EnsembleConfig {
    EnsembleConfig {
        label: variant.name().into(),
        env: EnvSpec::NShip {
            phases: vec![(1, 350_000), (2, 700_000), (3, 1_050_000), (4, 1_400_000)],
        },
        variant,
        n_agents: 20,
        seed: 71,
        stride: 100,
        agent: AgentConfig { rule_bias: Some((100_000.0, 1.0)), ..AgentConfig::default() },
        meta_trace: false,
    }
}

// The convoy grows from 1 to 4 ships. With full meta control the
// expected trial reward must come within 10% of the patient optimum
// 5(n - 1) by the end of every grown phase; without the glow controller
// the longer convoys fall measurably short.
//
// Phases run at their full published length. The controller timescales
// are fixed by the task dimensions (tau_gamma = 12000 interactions
// here), so shrinking the phases starves the relearning budget measured
// in damping windows: a tenfold cut leaves the spiked damping no room
// to decay before the phase ends, and no agent reaches the optimum.
// Twenty agents over the full schedule stay well inside the time box.
fn criterion_7(workers: usize) -> (bool, String) {
    let full = run(&convoy_meta_cfg(Variant::FullMeta), workers);
    let gonly = run(&convoy_meta_cfg(Variant::GammaOnlyRandomEta), workers);
    let mut ok = true;
    let mut details = String::new();
    for (phase, n) in [(1usize, 2u32), (2, 3), (3, 4)] {
        let optimum = 5.0 * f64::from(n - 1);
        let f = phase_tail_mean(&full, "reward", phase, 0.05);
        let g = phase_tail_mean(&gonly, "reward", phase, 0.05);
        let within = (f - optimum).abs() <= 0.1 * optimum;
        let separated = n < 3 || g < f;
        ok &= within && separated;
        details.push_str(&format!(
            "n={n}: full {f:.2} vs optimum {optimum} (within 10%: {within}), damping-only \
             {g:.2}; "
        ));
    }
    (ok, details.trim_end_matches("; ").to_string())
}

fn maze_meta_cfg(variant: Variant) -> EnsembleConfig {
    EnsembleConfig {
        label: variant.name().into(),
        env: EnvSpec::Grid {
            phases: vec![
                (MapSource::BuiltinA, 100_000),
                (MapSource::BuiltinB, 100_000),
                (MapSource::BuiltinC, 500_000),
            ],
        },
        variant,
        n_agents: 100,
        seed: 81,
        stride: 500,
        agent: AgentConfig { rule_bias: Some((100_000.0, 1.0)), ..AgentConfig::default() },
        meta_trace: false,
    }
}

// Walls move twice, then a distractor appears. Full meta control must
// end the distractor phase near the 14-step optimum (low steps per
// unit reward) with its glow controller concentrated on small decays;
// damping-only control stays expensive.
fn criterion_8(workers: usize) -> (bool, String) {
    let full = run(&maze_meta_cfg(Variant::FullMeta), workers);
    let gonly = run(&maze_meta_cfg(Variant::GammaOnlyRandomEta), workers);
    let f = phase_tail_mean(&full, "steps_per_reward", 2, 0.05);
    let g = phase_tail_mean(&gonly, "steps_per_reward", 2, 0.05);
    let low_eta = phase_tail_mean(&full, "p_eta_0.1", 2, 0.05)
        + phase_tail_mean(&full, "p_eta_0.2", 2, 0.05);
    let ok = f <= 20.0 && g >= 30.0 && low_eta > 0.6;
    (
        ok,
        format!(
            "final-phase steps per unit reward: full {f:.1} (<= 20), damping-only {g:.1} (>= \
             30); full-meta mass on eta <= 0.2: {low_eta:.3} (> 0.6)"
        ),
    )
}

// Deterministic spot checks of the arithmetic core: normalization,
// clamps, the glow identity at eta = 1, damping fixed points, rule
// monotonicity, scale invariance of the internal reward, the convoy
// closed form against brute-force enumeration, and bit-identical
// ensembles across worker counts.
fn criterion_9(_workers: usize) -> (bool, String) {
    let mut failures: Vec<String> = Vec::new();
    let mut rng = PsRng::seed_from_u64(91);

    // Random two-layer networks: probabilities normalize, clamps hold.
    for _ in 0..100 {
        let mut net = ClipNetwork::new();
        let acts: Vec<ClipId> = (0..rng.random_range(2..=5))
            .map(|i| net.add_action(&format!("a{i}")).unwrap())
            .collect();
        let percepts: Vec<ClipId> = (0..rng.random_range(1..=5))
            .map(|i| {
                let edges: Vec<(ClipId, f64)> =
                    acts.iter().map(|&a| (a, 1.0 + rng.random::<f64>() * 9.0)).collect();
                net.add_percept(&format!("p{i}"), &edges).unwrap()
            })
            .collect();
        for _ in 0..200 {
            let p = percepts[rng.random_range(0..percepts.len())];
            let trace = net.random_walk(&net.clip(p).label.clone(), &mut rng).unwrap();
            net.refresh_glow(&trace);
            net.update_and_damp(rng.random::<f64>() * 2.0, rng.random::<f64>(), rng.random::<f64>());
        }
        for p in &percepts {
            let sum: f64 =
                net.transition_probabilities(*p).unwrap().iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-12 {
                failures.push(format!("probabilities summed to {sum}"));
            }
        }
        for e in 0..net.n_edges() {
            if net.edge_h(e) < H_MIN || !(0.0..=1.0).contains(&net.edge_g(e)) {
                failures.push("h or g left its allowed range".into());
            }
        }
    }

    // Damping fixed point: constant full reward drives h to 1 + lambda/gamma.
    for (gamma, lambda, steps) in [(0.1, 1.0, 600), (0.01, 0.5, 6000)] {
        let mut h = 1.0f64;
        for _ in 0..steps {
            h = h - gamma * (h - 1.0) + lambda;
        }
        let expect = 1.0 + lambda / gamma;
        if (h - expect).abs() > 1e-6 {
            failures.push(format!("fixed point off: {h} vs {expect}"));
        }
    }

    // Damping rules: stay in [0, 1], identity at d = 0, and move gamma
    // in opposite directions for improving performance.
    for _ in 0..10_000 {
        let gamma = rng.random::<f64>();
        let d = rng.random::<f64>() * 2.0 - 1.0;
        let (a, b) = (rule_i(gamma, d), rule_ii(gamma, d));
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            failures.push(format!("rule left unit interval at gamma={gamma}, d={d}"));
        }
        if d > 0.0 && (a > gamma || b < gamma) {
            failures.push("rules moved gamma against their direction".into());
        }
    }
    if rule_i(0.37, 0.0) != 0.37 || rule_ii(0.37, 0.0) != 0.37 {
        failures.push("rules must be the identity at d = 0".into());
    }

    // Internal reward: sign of the relative change is scale invariant.
    for _ in 0..10_000 {
        let x = f64::from(rng.random_range(0..500u32));
        let y = f64::from(rng.random_range(0..500u32));
        let a = f64::from(rng.random_range(1..1000u32)) / 32.0;
        if internal_reward(window_delta(x, y)) != internal_reward(window_delta(a * x, a * y)) {
            failures.push(format!("sign changed under scaling: {x} {y} {a}"));
        }
    }

    // Convoy closed form against exhaustive enumeration.
    for n in 1..=4u32 {
        for _ in 0..20 {
            let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let closed = NShipGame::expected_trial_reward(n, &p);
            let mut brute = 0.0;
            for mask in 0u32..(1 << n) {
                let mut prob = 1.0;
                let mut reward = 0.0;
                let mut early = false;
                for ship in 1..=n {
                    let block = mask & (1 << (ship - 1)) != 0;
                    prob *= if block { p[(ship - 1) as usize] } else { 1.0 - p[(ship - 1) as usize] };
                    if block {
                        if ship < n {
                            reward += 1.0;
                            early = true;
                        } else if n == 1 {
                            reward += 1.0;
                        } else if !early {
                            reward += 5.0 * f64::from(n - 1);
                        }
                    }
                }
                brute += prob * reward;
            }
            if (closed - brute).abs() > 1e-12 {
                failures.push(format!("convoy expectation mismatch at n={n}"));
            }
        }
    }

    // Ensemble means are bit-identical for any worker count.
    let cfg = EnsembleConfig {
        label: "c9".into(),
        env: EnvSpec::Invasion(InvasionSchedule::Phases(vec![1000, 1000])),
        variant: Variant::FullMeta,
        n_agents: 20,
        seed: 91,
        stride: 10,
        agent: AgentConfig::default(),
        meta_trace: false,
    };
    let serial = run_ensemble(&cfg, 1).expect("valid config");
    let parallel = run_ensemble(&cfg, 3).expect("valid config");
    if series_to_csv(&serial.series) != series_to_csv(&parallel.series) {
        failures.push("worker count changed ensemble output".into());
    }

    if failures.is_empty() {
        (true, "normalization, clamps, fixed points, rule bounds, sign invariance, convoy \
                enumeration, worker-count determinism: all hold"
            .into())
    } else {
        failures.truncate(5);
        (false, failures.join("; "))
    }
}
