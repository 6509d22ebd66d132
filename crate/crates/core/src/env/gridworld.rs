//! Maze navigation with sparse rewards. The agent walks a rectangular
//! grid with walls; reaching the goal ends the trial with reward 1 and
//! teleports back to the start. A map may also contain a distractor
//! cell that ends the trial early for a third of the reward, sitting
//! closer to the start than the goal: a shortcut that pays less per
//! step than the long way.
//!
//! Map files are ASCII grids, one row per line:
//! `.` free, `#` wall, `S` start, `G` goal, `g` distractor.

use super::{Axis, EnvStep, Environment};
use crate::error::{PsError, Result};
use crate::PsRng;
use std::collections::VecDeque;

pub const MAP_A: &str = include_str!("../../maps/a.map");
pub const MAP_B: &str = include_str!("../../maps/b.map");
pub const MAP_C: &str = include_str!("../../maps/c.map");

pub const GOAL_REWARD: f64 = 1.0;
pub const DISTRACTOR_REWARD: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    wall: Vec<bool>,
    pub start: usize,
    pub goal: usize,
    pub distractor: Option<usize>,
    pub free_cells: usize,
    /// Shortest walk from start to goal.
    pub goal_distance: u32,
    pub distractor_distance: Option<u32>,
}

impl GridMap {
    pub fn is_wall(&self, cell: usize) -> bool {
        self.wall[cell]
    }
}

/// Parses and validates a map, including reachability of all terminals.
pub fn load_map(text: &str) -> Result<GridMap> {
    let err = |m: String| PsError::Map(m);
    let rows: Vec<&str> = text.lines().collect();
    if rows.is_empty() {
        return Err(err("map is empty".into()));
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    if width == 0 {
        return Err(err("map rows are empty".into()));
    }
    let mut wall = vec![false; width * height];
    let mut start = None;
    let mut goal = None;
    let mut distractor = None;
    for (r, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(err(format!("row {} has different length", r + 1)));
        }
        for (c, ch) in row.chars().enumerate() {
            let cell = r * width + c;
            match ch {
                '.' => {}
                '#' => wall[cell] = true,
                'S' => {
                    if start.replace(cell).is_some() {
                        return Err(err("more than one start".into()));
                    }
                }
                'G' => {
                    if goal.replace(cell).is_some() {
                        return Err(err("more than one goal".into()));
                    }
                }
                'g' => {
                    if distractor.replace(cell).is_some() {
                        return Err(err("more than one distractor".into()));
                    }
                }
                other => return Err(err(format!("unknown map character '{other}'"))),
            }
        }
    }
    let start = start.ok_or_else(|| err("map has no start".into()))?;
    let goal = goal.ok_or_else(|| err("map has no goal".into()))?;
    let free_cells = wall.iter().filter(|w| !**w).count();

    let dist = bfs_distances(width, height, &wall, start);
    let goal_distance =
        dist[goal].ok_or_else(|| err("goal is unreachable from start".into()))?;
    let distractor_distance = match distractor {
        Some(d) => Some(
            dist[d].ok_or_else(|| err("distractor is unreachable from start".into()))?,
        ),
        None => None,
    };
    Ok(GridMap {
        width,
        height,
        wall,
        start,
        goal,
        distractor,
        free_cells,
        goal_distance,
        distractor_distance,
    })
}

fn bfs_distances(width: usize, height: usize, wall: &[bool], from: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; width * height];
    dist[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(cell) = queue.pop_front() {
        let d = dist[cell].unwrap();
        let r = cell / width;
        let c = cell % width;
        let mut push = |nr: usize, nc: usize| {
            let n = nr * width + nc;
            if !wall[n] && dist[n].is_none() {
                dist[n] = Some(d + 1);
                queue.push_back(n);
            }
        };
        if r > 0 {
            push(r - 1, c);
        }
        if r + 1 < height {
            push(r + 1, c);
        }
        if c > 0 {
            push(r, c - 1);
        }
        if c + 1 < width {
            push(r, c + 1);
        }
    }
    dist
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    phases: Vec<(GridMap, u64)>,
    labels: Vec<String>,
    actions: Vec<String>,
    phase: usize,
    trials_in_phase: u64,
    pos: usize,
    finished: bool,
}

const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl GridWorld {
    /// `phases` lists (map, number of trials) per phase. All maps must
    /// share one grid size so that cell percepts keep their identity
    /// when the walls move.
    pub fn new(phases: Vec<(GridMap, u64)>) -> Result<Self> {
        if phases.is_empty() {
            return Err(PsError::Config("maze schedule must not be empty".into()));
        }
        if phases.iter().any(|&(_, trials)| trials == 0) {
            return Err(PsError::Config("maze phases need positive trial counts".into()));
        }
        let (w, h) = (phases[0].0.width, phases[0].0.height);
        if phases.iter().any(|(m, _)| m.width != w || m.height != h) {
            return Err(PsError::Config("all maps of a run must share one grid size".into()));
        }
        let labels = (0..h)
            .flat_map(|r| (0..w).map(move |c| format!("{r},{c}")))
            .collect();
        Ok(GridWorld {
            pos: phases[0].0.start,
            phases,
            labels,
            actions: vec![
                "up".to_string(),
                "down".to_string(),
                "left".to_string(),
                "right".to_string(),
            ],
            phase: 0,
            trials_in_phase: 0,
            finished: false,
        })
    }

    fn map(&self) -> &GridMap {
        &self.phases[self.phase].0
    }

    pub fn current_map(&self) -> &GridMap {
        self.map()
    }
}

impl Environment for GridWorld {
    fn axis(&self) -> Axis {
        Axis::Trials
    }

    fn action_labels(&self) -> &[String] {
        &self.actions
    }

    fn declared_states(&self) -> usize {
        self.map().free_cells
    }

    fn max_percept_tokens(&self) -> usize {
        self.labels.len()
    }

    fn percept_label(&self, token: u32) -> &str {
        &self.labels[token as usize]
    }

    fn reset(&mut self, _rng: &mut PsRng) -> u32 {
        self.pos = self.map().start;
        self.pos as u32
    }

    fn step(&mut self, action: usize, _rng: &mut PsRng) -> EnvStep {
        debug_assert!(!self.finished);
        let map = self.map();
        let (w, h, goal, distractor) = (map.width, map.height, map.goal, map.distractor);
        let (dr, dc) = MOVES[action];
        let r = (self.pos / w) as isize + dr;
        let c = (self.pos % w) as isize + dc;
        let target = if r >= 0 && (r as usize) < h && c >= 0 && (c as usize) < w {
            let t = r as usize * w + c as usize;
            if map.is_wall(t) {
                self.pos
            } else {
                t
            }
        } else {
            self.pos
        };
        self.pos = target;

        let mut reward = 0.0;
        let mut trial_ended = false;
        if target == goal {
            reward = GOAL_REWARD;
            trial_ended = true;
        } else if Some(target) == distractor {
            reward = DISTRACTOR_REWARD;
            trial_ended = true;
        }
        if trial_ended {
            self.trials_in_phase += 1;
            if self.trials_in_phase == self.phases[self.phase].1 {
                if self.phase + 1 == self.phases.len() {
                    self.finished = true;
                } else {
                    self.phase += 1;
                    self.trials_in_phase = 0;
                }
            }
            self.pos = self.map().start;
        }
        EnvStep { reward, trial_ended, next_percept: self.pos as u32 }
    }

    fn phase_index(&self) -> usize {
        self.phase
    }

    fn finished(&self) -> bool {
        self.finished
    }

    /// No closed form for steps per reward; the harness derives the
    /// metric from simulated trials instead.
    fn analytic_metric(&self, _policy: &mut dyn FnMut(u32, usize) -> Option<f64>) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn builtin_maps_share_geometry() {
        let a = load_map(MAP_A).unwrap();
        let b = load_map(MAP_B).unwrap();
        let c = load_map(MAP_C).unwrap();
        for m in [&a, &b, &c] {
            assert_eq!((m.width, m.height), (9, 6));
            assert_eq!(m.free_cells, 47);
        }
        // Known shortest walks, checked by hand on the layouts.
        assert_eq!(a.goal_distance, 14);
        assert_eq!(b.goal_distance, 14);
        assert_eq!(c.goal_distance, 14);
        assert_eq!(a.distractor, None);
        assert_eq!(b.distractor, None);
        assert_eq!(c.distractor_distance, Some(12));
        // The distractor variant only adds the shortcut cell.
        assert_eq!(a.start, c.start);
        assert_eq!(a.goal, c.goal);
        assert_eq!(a.wall, c.wall);
    }

    #[test]
    fn map_parser_rejects_malformed_input() {
        assert!(load_map("").is_err());
        assert!(load_map("S.G\n..").is_err(), "ragged rows");
        assert!(load_map("..G\n...").is_err(), "missing start");
        assert!(load_map("S..\n...").is_err(), "missing goal");
        assert!(load_map("S.G\nS..").is_err(), "duplicate start");
        assert!(load_map("S.G\n..G").is_err(), "duplicate goal");
        assert!(load_map("S#G").is_err(), "goal behind wall");
        assert!(load_map("SgG\n#g#").is_err(), "duplicate distractor");
        assert!(load_map("S?G").is_err(), "unknown character");
    }

    #[test]
    fn bfs_distance_on_a_corridor() {
        let m = load_map("S...G").unwrap();
        assert_eq!(m.goal_distance, 4);
        let m = load_map("S..\n##.\nG..").unwrap();
        assert_eq!(m.goal_distance, 6, "forced around the wall");
    }

    fn step_labels(env: &GridWorld, tok: u32) -> String {
        env.percept_label(tok).to_string()
    }

    #[test]
    fn walls_and_borders_block_movement() {
        let m = load_map("S#G\n...").unwrap();
        let mut env = GridWorld::new(vec![(m, 5)]).unwrap();
        let mut rng = PsRng::seed_from_u64(0);
        let tok = env.reset(&mut rng);
        assert_eq!(step_labels(&env, tok), "0,0");
        // Up and left leave the grid, right hits the wall: all stay.
        for a in [0, 2, 3] {
            let st = env.step(a, &mut rng);
            assert_eq!(st.reward, 0.0);
            assert!(!st.trial_ended);
            assert_eq!(step_labels(&env, st.next_percept), "0,0");
        }
        // Down, right, right, up reaches the goal.
        for (a, expect) in [(1, "1,0"), (3, "1,1"), (3, "1,2")] {
            let st = env.step(a, &mut rng);
            assert_eq!(step_labels(&env, st.next_percept), expect);
            assert_eq!(st.reward, 0.0);
        }
        let st = env.step(0, &mut rng);
        assert_eq!(st.reward, GOAL_REWARD);
        assert!(st.trial_ended);
        assert_eq!(step_labels(&env, st.next_percept), "0,0", "back at the start");
    }

    #[test]
    fn distractor_ends_trial_for_a_third() {
        let m = load_map("Sg.G").unwrap();
        assert_eq!(m.distractor_distance, Some(1));
        let mut env = GridWorld::new(vec![(m, 3)]).unwrap();
        let mut rng = PsRng::seed_from_u64(1);
        env.reset(&mut rng);
        let st = env.step(3, &mut rng);
        assert_eq!(st.reward, DISTRACTOR_REWARD);
        assert!(st.trial_ended);
        assert_eq!(step_labels(&env, st.next_percept), "0,0");
    }

    #[test]
    fn phases_swap_maps_at_trial_boundaries() {
        let first = load_map("SG.\n...").unwrap();
        let second = load_map("S#G\n...").unwrap();
        let mut env = GridWorld::new(vec![(first, 2), (second, 1)]).unwrap();
        let mut rng = PsRng::seed_from_u64(2);
        env.reset(&mut rng);
        assert_eq!(env.declared_states(), 6);
        env.step(3, &mut rng);
        assert_eq!(env.phase_index(), 0);
        let st = env.step(3, &mut rng);
        assert_eq!(env.phase_index(), 1);
        assert_eq!(env.declared_states(), 5);
        // Start position now belongs to the new map.
        assert_eq!(step_labels(&env, st.next_percept), "0,0");
        for a in [1, 3, 3, 0] {
            assert!(!env.finished());
            env.step(a, &mut rng);
        }
        assert!(env.finished());
    }

    #[test]
    fn mixed_grid_sizes_are_rejected() {
        let a = load_map("SG").unwrap();
        let b = load_map("S.G").unwrap();
        assert!(GridWorld::new(vec![(a, 1), (b, 1)]).is_err());
    }
}
