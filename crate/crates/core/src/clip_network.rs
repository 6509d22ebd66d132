//! Episodic memory as a weighted directed clip graph.
//!
//! Clips are percepts or actions; edges carry an excitation weight `h`
//! (never below 1) and an afterglow `g` in [0, 1]. Deliberation is a
//! random walk that starts at a percept clip and hops with probabilities
//! proportional to the outgoing h-values until it lands on an action clip.
//! Learning then sweeps every edge with
//!
//! ```text
//! h <- max(1, h - gamma * (h - 1) + g * lambda)
//! g <- g * (1 - eta)
//! ```
//!
//! where traversed edges had their glow refreshed to 1 first, so rewards
//! reach recent but untraversed-this-step edges through the glow.
//!
//! Storage is a compact row-per-clip layout (all outgoing edges of a clip
//! are adjacent in flat arrays), which keeps the whole-network sweeps
//! cache-friendly; new percepts can be appended at any time, which is how
//! lazily visited grid cells and newly introduced ships enter the network.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::Rng;

use crate::error::{PsError, Result};

/// Lower bound for every h-value.
pub const H_MIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClipId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipKind {
    Percept,
    Action,
}

#[derive(Debug, Clone)]
pub struct Clip {
    pub kind: ClipKind,
    pub label: String,
}

/// One hop of a deliberation walk; `edge` indexes the network's flat
/// edge arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub from: ClipId,
    pub to: ClipId,
    pub edge: usize,
}

/// Full record of one deliberation: consecutive steps are chained and the
/// final step ends at `action`.
#[derive(Debug, Clone, Default)]
pub struct WalkTrace {
    pub steps: Vec<TraceStep>,
    pub action: ClipId,
}

impl WalkTrace {
    pub fn new() -> Self {
        WalkTrace { steps: Vec::new(), action: ClipId(0) }
    }
}

#[derive(Debug, Clone)]
pub struct ClipNetwork {
    clips: Vec<Clip>,
    row_start: Vec<usize>,
    to: Vec<ClipId>,
    h: Vec<f64>,
    g: Vec<f64>,
    percepts: HashMap<String, ClipId>,
}

#[inline(always)]
fn h_step(h: f64, g: f64, gamma: f64, lambda: f64) -> f64 {
    let v = h - gamma * (h - H_MIN) + g * lambda;
    if v < H_MIN {
        H_MIN
    } else {
        v
    }
}

#[inline(always)]
fn g_step(g: f64, eta: f64) -> f64 {
    let v = g * (1.0 - eta);
    // Flush to an exact zero once the glow leaves the normal float
    // range. Such values could never influence an h update anyway (h
    // stays >= 1, and adding anything below its epsilon is a no-op for
    // any sane reward scale), while letting them linger makes the sweep
    // an order of magnitude slower: abandoned edges decay through
    // thousands of denormal multiplications otherwise.
    if v < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

impl ClipNetwork {
    pub fn new() -> Self {
        ClipNetwork {
            clips: Vec::new(),
            row_start: vec![0],
            to: Vec::new(),
            h: Vec::new(),
            g: Vec::new(),
            percepts: HashMap::new(),
        }
    }

    fn check_label(label: &str) -> Result<()> {
        if label.is_empty() || label.chars().any(|c| c.is_whitespace()) {
            return Err(PsError::MalformedNetwork(format!(
                "clip label '{label}' is empty or contains whitespace"
            )));
        }
        Ok(())
    }

    /// Adds an action clip (no outgoing edges).
    pub fn add_action(&mut self, label: &str) -> Result<ClipId> {
        Self::check_label(label)?;
        let id = ClipId(self.clips.len());
        self.clips.push(Clip { kind: ClipKind::Action, label: label.to_string() });
        self.row_start.push(self.to.len());
        Ok(id)
    }

    /// Adds a percept clip with the given weighted outgoing edges
    /// (glow starts at 0). Every percept needs at least one edge.
    pub fn add_percept(&mut self, label: &str, edges: &[(ClipId, f64)]) -> Result<ClipId> {
        Self::check_label(label)?;
        if self.percepts.contains_key(label) {
            return Err(PsError::MalformedNetwork(format!("duplicate percept '{label}'")));
        }
        if edges.is_empty() {
            return Err(PsError::MalformedNetwork(format!(
                "percept '{label}' has no outgoing edges"
            )));
        }
        for &(t, w) in edges {
            if t.0 >= self.clips.len() {
                return Err(PsError::MalformedNetwork(format!(
                    "percept '{label}' has an edge to unknown clip {}",
                    t.0
                )));
            }
            if !(w >= H_MIN) {
                return Err(PsError::MalformedNetwork(format!(
                    "percept '{label}' has an edge weight {w} below {H_MIN}"
                )));
            }
        }
        let id = ClipId(self.clips.len());
        self.clips.push(Clip { kind: ClipKind::Percept, label: label.to_string() });
        for &(t, w) in edges {
            self.to.push(t);
            self.h.push(w);
            self.g.push(0.0);
        }
        self.row_start.push(self.to.len());
        self.percepts.insert(label.to_string(), id);
        Ok(id)
    }

    /// Adds a percept with unit-weight edges to all `targets`.
    pub fn add_percept_uniform(&mut self, label: &str, targets: &[ClipId]) -> Result<ClipId> {
        let edges: Vec<(ClipId, f64)> = targets.iter().map(|&t| (t, H_MIN)).collect();
        self.add_percept(label, &edges)
    }

    pub fn n_clips(&self) -> usize {
        self.clips.len()
    }

    pub fn n_edges(&self) -> usize {
        self.to.len()
    }

    pub fn clip(&self, id: ClipId) -> &Clip {
        &self.clips[id.0]
    }

    pub fn percept_id(&self, label: &str) -> Option<ClipId> {
        self.percepts.get(label).copied()
    }

    pub fn out_range(&self, c: ClipId) -> Range<usize> {
        self.row_start[c.0]..self.row_start[c.0 + 1]
    }

    pub fn edge_target(&self, e: usize) -> ClipId {
        self.to[e]
    }

    pub fn edge_h(&self, e: usize) -> f64 {
        self.h[e]
    }

    pub fn edge_g(&self, e: usize) -> f64 {
        self.g[e]
    }

    /// Overwrites an edge weight; used to preseed biased networks.
    pub fn set_edge_h(&mut self, e: usize, v: f64) {
        debug_assert!(v >= H_MIN);
        self.h[e] = v.max(H_MIN);
    }

    pub(crate) fn edge_h_mut(&mut self, e: usize) -> &mut f64 {
        &mut self.h[e]
    }

    pub fn edge_between(&self, from: ClipId, to: ClipId) -> Option<usize> {
        self.out_range(from).find(|&e| self.to[e] == to)
    }

    /// Checks structural soundness: labels and endpoints are valid, every
    /// percept has outgoing edges, and every clip reachable from a percept
    /// can still reach an action clip (so a walk terminates with
    /// probability 1).
    pub fn validate(&self) -> Result<()> {
        for (i, clip) in self.clips.iter().enumerate() {
            let deg = self.row_start[i + 1] - self.row_start[i];
            if clip.kind == ClipKind::Percept && deg == 0 {
                return Err(PsError::MalformedNetwork(format!(
                    "percept '{}' has no outgoing edges",
                    clip.label
                )));
            }
        }
        // Clips that can reach an action clip, via reverse propagation.
        let n = self.clips.len();
        let mut reaches_action = vec![false; n];
        for (i, clip) in self.clips.iter().enumerate() {
            if clip.kind == ClipKind::Action {
                reaches_action[i] = true;
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                if reaches_action[i] {
                    continue;
                }
                let row = self.row_start[i]..self.row_start[i + 1];
                if self.to[row].iter().any(|t| reaches_action[t.0]) {
                    reaches_action[i] = true;
                    changed = true;
                }
            }
        }
        // Forward reachability from percepts.
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = self.percepts.values().map(|c| c.0).collect();
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            let row = self.row_start[i]..self.row_start[i + 1];
            for t in &self.to[row] {
                if !seen[t.0] {
                    stack.push(t.0);
                }
            }
        }
        for i in 0..n {
            if seen[i] && !reaches_action[i] {
                return Err(PsError::MalformedNetwork(format!(
                    "clip '{}' is reachable but cannot reach an action clip",
                    self.clips[i].label
                )));
            }
        }
        Ok(())
    }

    /// Hop distribution out of a clip: p(to) = h / sum of row h-values.
    pub fn transition_probabilities(&self, from: ClipId) -> Result<Vec<(ClipId, f64)>> {
        let row = self.out_range(from);
        if row.is_empty() {
            return Err(PsError::MalformedNetwork(format!(
                "clip '{}' has no outgoing edges",
                self.clips[from.0].label
            )));
        }
        let total: f64 = self.h[row.clone()].iter().sum();
        Ok(row.map(|e| (self.to[e], self.h[e] / total)).collect())
    }

    fn sample_edge<R: Rng>(&self, from: ClipId, rng: &mut R) -> Result<usize> {
        let row = self.out_range(from);
        if row.is_empty() {
            return Err(PsError::MalformedNetwork(format!(
                "walk reached clip '{}' with no outgoing edges",
                self.clips[from.0].label
            )));
        }
        let total: f64 = self.h[row.clone()].iter().sum();
        let u = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut picked = row.end - 1;
        for e in row {
            cum += self.h[e];
            if u < cum {
                picked = e;
                break;
            }
        }
        Ok(picked)
    }

    /// Random walk from a percept to an action clip, writing the traversed
    /// edges into `trace` (cleared first). The buffer form avoids an
    /// allocation per deliberation in the simulation loop.
    pub fn random_walk_into<R: Rng>(
        &self,
        percept: ClipId,
        rng: &mut R,
        trace: &mut WalkTrace,
    ) -> Result<()> {
        trace.steps.clear();
        let mut at = percept;
        while self.clips[at.0].kind != ClipKind::Action {
            let e = self.sample_edge(at, rng)?;
            let next = self.to[e];
            trace.steps.push(TraceStep { from: at, to: next, edge: e });
            at = next;
        }
        trace.action = at;
        Ok(())
    }

    /// Random walk starting from a percept given by label.
    pub fn random_walk<R: Rng>(&self, percept: &str, rng: &mut R) -> Result<WalkTrace> {
        let start = self
            .percept_id(percept)
            .ok_or_else(|| PsError::UnknownPercept(percept.to_string()))?;
        let mut trace = WalkTrace::new();
        self.random_walk_into(start, rng, &mut trace)?;
        Ok(trace)
    }

    /// Sets g = 1 on every edge the walk traversed.
    pub fn refresh_glow(&mut self, trace: &WalkTrace) {
        for s in &trace.steps {
            self.g[s.edge] = 1.0;
        }
    }

    /// Reward sweep over all edges: h <- max(1, h - gamma*(h-1) + g*lambda).
    pub fn update_h(&mut self, lambda: f64, gamma: f64) {
        for (h, g) in self.h.iter_mut().zip(self.g.iter()) {
            *h = h_step(*h, *g, gamma, lambda);
        }
    }

    /// Glow decay over all edges: g <- g * (1 - eta).
    pub fn damp_glow(&mut self, eta: f64) {
        for g in self.g.iter_mut() {
            *g = g_step(*g, eta);
        }
    }

    /// Fused `update_h` followed by `damp_glow` in one pass; exactly the
    /// same arithmetic, kept separate only to halve memory traffic in the
    /// per-interaction hot path.
    pub fn update_and_damp(&mut self, lambda: f64, gamma: f64, eta: f64) {
        for (h, g) in self.h.iter_mut().zip(self.g.iter_mut()) {
            *h = h_step(*h, *g, gamma, lambda);
            *g = g_step(*g, eta);
        }
    }

    /// Probability of hopping from `percept` to each action clip,
    /// i.e. `transition_probabilities` restricted to action targets.
    pub fn policy(&self, percept: &str) -> Result<Vec<(ClipId, f64)>> {
        let start = self
            .percept_id(percept)
            .ok_or_else(|| PsError::UnknownPercept(percept.to_string()))?;
        Ok(self
            .transition_probabilities(start)?
            .into_iter()
            .filter(|(t, _)| self.clips[t.0].kind == ClipKind::Action)
            .collect())
    }

    /// Probability of the edge from a percept clip to one action clip,
    /// without allocating; 0 if no such edge exists.
    pub fn action_probability(&self, from: ClipId, action: ClipId) -> f64 {
        let row = self.out_range(from);
        let total: f64 = self.h[row.clone()].iter().sum();
        let mut hit = 0.0;
        for e in row {
            if self.to[e] == action {
                hit += self.h[e];
            }
        }
        hit / total
    }

    pub fn clip_count(&self) -> usize {
        self.clips.len()
    }

    pub fn edge_count(&self) -> usize {
        self.to.len()
    }

    /// Text snapshot, one edge per line: `from_label to_label h g`, floats
    /// with 17 significant digits so values round-trip exactly.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (i, clip) in self.clips.iter().enumerate() {
            for e in self.row_start[i]..self.row_start[i + 1] {
                let _ = writeln!(
                    out,
                    "{} {} {:.16e} {:.16e}",
                    clip.label, self.clips[self.to[e].0].label, self.h[e], self.g[e]
                );
            }
        }
        out
    }
}

impl Default for ClipNetwork {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PsRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn two_action_net(h_left: f64, h_right: f64) -> (ClipNetwork, ClipId, ClipId, ClipId) {
        let mut net = ClipNetwork::new();
        let left = net.add_action("left").unwrap();
        let right = net.add_action("right").unwrap();
        let p = net.add_percept("sym", &[(left, h_left), (right, h_right)]).unwrap();
        (net, p, left, right)
    }

    #[test]
    fn transition_probabilities_normalize() {
        let (net, p, left, right) = two_action_net(1.0, 1.0);
        let probs = net.transition_probabilities(p).unwrap();
        assert_eq!(probs, vec![(left, 0.5), (right, 0.5)]);

        let (net, p, ..) = two_action_net(3.0, 1.0);
        let probs = net.transition_probabilities(p).unwrap();
        assert_eq!(probs[0].1, 0.75);
        assert_eq!(probs[1].1, 0.25);

        let mut net = ClipNetwork::new();
        let acts: Vec<ClipId> =
            ["a", "b", "c", "d"].iter().map(|l| net.add_action(l).unwrap()).collect();
        let p = net.add_percept_uniform("s", &acts).unwrap();
        for (_, prob) in net.transition_probabilities(p).unwrap() {
            assert_eq!(prob, 0.25);
        }
    }

    #[test]
    fn clip_without_edges_is_rejected() {
        let (net, _, left, _) = two_action_net(1.0, 1.0);
        assert!(net.transition_probabilities(left).is_err());

        let mut net = ClipNetwork::new();
        net.add_action("a").unwrap();
        assert!(net.add_percept("p", &[]).is_err());
    }

    #[test]
    fn walk_single_edge_always_hits_it() {
        let mut net = ClipNetwork::new();
        let a = net.add_action("only").unwrap();
        net.add_percept("p", &[(a, 1.0)]).unwrap();
        let mut rng = PsRng::seed_from_u64(3);
        for _ in 0..100 {
            let t = net.random_walk("p", &mut rng).unwrap();
            assert_eq!(t.action, a);
            assert_eq!(t.steps.len(), 1);
        }
    }

    // Sampled hop frequencies must match the h-ratios of the row. The
    // chi-square statistic against the exact distribution is the oracle.
    #[test]
    fn walk_frequencies_match_h_ratios() {
        let cases = [(1.0, 1.0, 0.5), (9.0, 1.0, 0.9)];
        for (hl, hr, expect) in cases {
            let (net, _, left, _) = two_action_net(hl, hr);
            let mut rng = PsRng::seed_from_u64(11);
            let n = 10_000;
            let mut hits_left = 0u32;
            for _ in 0..n {
                if net.random_walk("sym", &mut rng).unwrap().action == left {
                    hits_left += 1;
                }
            }
            let freq = f64::from(hits_left) / f64::from(n);
            assert!((freq - expect).abs() < 0.01, "freq {freq} vs {expect}");
            let e_left = expect * f64::from(n);
            let e_right = (1.0 - expect) * f64::from(n);
            let o_left = f64::from(hits_left);
            let o_right = f64::from(n) - o_left;
            let chi2 = (o_left - e_left).powi(2) / e_left
                + (o_right - e_right).powi(2) / e_right;
            // 1% critical value for one degree of freedom.
            assert!(chi2 < 6.635, "chi2 {chi2}");
        }
    }

    #[test]
    fn walk_chains_through_inner_clips() {
        let mut net = ClipNetwork::new();
        let a = net.add_action("act").unwrap();
        let mid = net.add_percept("mid", &[(a, 1.0)]).unwrap();
        net.add_percept("top", &[(mid, 1.0)]).unwrap();
        net.validate().unwrap();
        let mut rng = PsRng::seed_from_u64(0);
        let t = net.random_walk("top", &mut rng).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].to, t.steps[1].from);
        assert_eq!(t.action, a);
    }

    #[test]
    fn validate_rejects_actionless_cycle() {
        let mut net = ClipNetwork::new();
        net.add_action("a").unwrap();
        // p1 and p2 only feed each other; no walk from them can end.
        let mut net2 = net.clone();
        let p1 = ClipId(net2.clips.len());
        let p2 = ClipId(net2.clips.len() + 1);
        net2.clips.push(Clip { kind: ClipKind::Percept, label: "p1".into() });
        net2.to.push(p2);
        net2.h.push(1.0);
        net2.g.push(0.0);
        net2.row_start.push(net2.to.len());
        net2.clips.push(Clip { kind: ClipKind::Percept, label: "p2".into() });
        net2.to.push(p1);
        net2.h.push(1.0);
        net2.g.push(0.0);
        net2.row_start.push(net2.to.len());
        net2.percepts.insert("p1".into(), p1);
        net2.percepts.insert("p2".into(), p2);
        assert!(net2.validate().is_err());
        net.add_percept("ok", &[(ClipId(0), 1.0)]).unwrap();
        net.validate().unwrap();
    }

    #[test]
    fn update_and_damp_values() {
        let (mut net, p, left, _) = two_action_net(2.0, 5.0);
        let e_left = net.edge_between(p, left).unwrap();
        net.g[e_left] = 0.5;
        net.update_h(1.0, 0.1);
        assert_eq!(net.edge_h(e_left), 2.0 - 0.1 * 1.0 + 0.5 * 1.0);
        // g = 0 and gamma = 0 leaves h untouched whatever the reward.
        let e_right = net.edge_between(p, ClipId(1)).unwrap();
        assert_eq!(net.edge_h(e_right), 5.0 - 0.1 * 4.0);
        net.update_h(7.0, 0.0);
        assert_eq!(net.edge_h(e_right), 5.0 - 0.1 * 4.0);

        net.g[e_left] = 1.0;
        net.damp_glow(1.0);
        assert_eq!(net.edge_g(e_left), 0.0);
        net.g[e_left] = 1.0;
        net.damp_glow(0.2);
        net.damp_glow(0.2);
        assert!((net.edge_g(e_left) - 0.64).abs() < 1e-15);

        // Full damping pulls h to the floor, never below it.
        net.h[e_left] = 1.05;
        net.update_h(0.0, 1.0);
        assert_eq!(net.edge_h(e_left), H_MIN);
    }

    #[test]
    fn fused_sweep_matches_separate_ops_bitwise() {
        let mut rng = PsRng::seed_from_u64(21);
        for _ in 0..50 {
            let (mut a, p, ..) = two_action_net(
                1.0 + rng.random::<f64>() * 40.0,
                1.0 + rng.random::<f64>() * 40.0,
            );
            for e in a.out_range(p) {
                a.g[e] = rng.random::<f64>();
            }
            let mut b = a.clone();
            let lambda = rng.random::<f64>() * 3.0;
            let gamma = rng.random::<f64>();
            let eta = rng.random::<f64>();
            a.update_h(lambda, gamma);
            a.damp_glow(eta);
            b.update_and_damp(lambda, gamma, eta);
            for e in 0..a.n_edges() {
                assert_eq!(a.h[e].to_bits(), b.h[e].to_bits());
                assert_eq!(a.g[e].to_bits(), b.g[e].to_bits());
            }
        }
    }

    // With eta = 1 the glow of every edge is wiped right after the sweep,
    // so the glow rule must collapse, bit for bit, to the plain rule that
    // rewards only the edges of the last walk. The oracle replays the
    // recorded traces with that plain rule on bare arrays.
    #[test]
    fn eta_one_reduces_to_last_trace_rule() {
        let mut rng = PsRng::seed_from_u64(97);
        for _ in 0..20 {
            let mut net = ClipNetwork::new();
            let acts: Vec<ClipId> =
                ["a0", "a1", "a2"].iter().map(|l| net.add_action(l).unwrap()).collect();
            let labels = ["s0", "s1", "s2"];
            for l in labels {
                let edges: Vec<(ClipId, f64)> =
                    acts.iter().map(|&a| (a, 1.0 + rng.random::<f64>() * 20.0)).collect();
                net.add_percept(l, &edges).unwrap();
            }
            let mut oracle_h = net.h.clone();
            for _ in 0..200 {
                let percept = labels[rng.random_range(0..3)];
                let trace = net.random_walk(percept, &mut rng).unwrap();
                let lambda = [0.0, 0.5, 1.0][rng.random_range(0..3)];
                let gamma = rng.random::<f64>() * 0.3;
                net.refresh_glow(&trace);
                net.update_h(lambda, gamma);
                net.damp_glow(1.0);
                for e in 0..oracle_h.len() {
                    let traversed = trace.steps.iter().any(|s| s.edge == e);
                    oracle_h[e] =
                        h_step(oracle_h[e], if traversed { 1.0 } else { 0.0 }, gamma, lambda);
                }
            }
            for e in 0..oracle_h.len() {
                assert_eq!(net.h[e].to_bits(), oracle_h[e].to_bits());
            }
        }
    }

    // An edge rewarded with constant lambda on every step settles at the
    // damping balance point 1 + lambda / gamma.
    #[test]
    fn constant_reward_fixed_point() {
        for (gamma, lambda, steps) in [(0.1, 1.0, 500), (0.001, 0.5, 30_000)] {
            let mut net = ClipNetwork::new();
            let a = net.add_action("act").unwrap();
            net.add_percept("p", &[(a, 1.0)]).unwrap();
            let mut rng = PsRng::seed_from_u64(5);
            for _ in 0..steps {
                let t = net.random_walk("p", &mut rng).unwrap();
                net.refresh_glow(&t);
                net.update_h(lambda, gamma);
                net.damp_glow(0.7);
            }
            let fp = 1.0 + lambda / gamma;
            assert!(
                (net.edge_h(0) - fp).abs() < 1e-6,
                "h {} vs fixed point {fp}",
                net.edge_h(0)
            );
        }
    }

    #[test]
    fn policy_restricts_to_actions() {
        let (net, ..) = two_action_net(1.0, 1.0);
        let pol = net.policy("sym").unwrap();
        assert_eq!(pol[0].1, 0.5);
        assert_eq!(pol[1].1, 0.5);

        let (net, p, left, right) = two_action_net(49.0, 1.0);
        assert_eq!(net.action_probability(p, left), 0.98);
        assert_eq!(net.action_probability(p, right), 0.02);
    }

    // Expected policy after t fully rewarded trials (gamma = 0, eta = 1,
    // lambda = 1, reward only when the correct action is walked): the
    // correct edge holds h = 1 + k after k rewards while the other stays
    // at 1. The oracle tracks the exact distribution over k.
    fn markov_expected_success(trials: usize) -> f64 {
        let mut dist = vec![0.0f64; trials + 2];
        dist[0] = 1.0; // k rewards collected so far
        for _ in 0..trials {
            let mut next = vec![0.0f64; trials + 2];
            for (k, &m) in dist.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let h = 1.0 + k as f64;
                let p = h / (h + 1.0);
                next[k + 1] += m * p;
                next[k] += m * (1.0 - p);
            }
            dist = next;
        }
        dist.iter()
            .enumerate()
            .map(|(k, &m)| {
                let h = 1.0 + k as f64;
                m * h / (h + 1.0)
            })
            .sum()
    }

    #[test]
    fn rewarded_policy_converges() {
        let expected = markov_expected_success(10_000);
        assert!(
            (expected - 0.9998999220615939).abs() < 1e-12,
            "oracle value {expected:.16}"
        );
        assert!(expected > 0.99);

        let (mut net, p, left, _) = two_action_net(1.0, 1.0);
        let mut rng = PsRng::seed_from_u64(123);
        for _ in 0..10_000 {
            let t = net.random_walk("sym", &mut rng).unwrap();
            net.refresh_glow(&t);
            net.update_h(if t.action == left { 1.0 } else { 0.0 }, 0.0);
            net.damp_glow(1.0);
        }
        assert!(net.action_probability(p, left) > 0.99);
    }

    #[test]
    fn snapshot_format_is_stable() {
        let (mut net, p, left, _) = two_action_net(2.5, 1.0);
        let e = net.edge_between(p, left).unwrap();
        net.g[e] = 0.25;
        assert_eq!(
            net.snapshot(),
            "sym left 2.5000000000000000e0 2.5000000000000000e-1\n\
             sym right 1.0000000000000000e0 0.0000000000000000e0\n"
        );
    }

    #[test]
    fn identical_seeds_identical_snapshots() {
        let run = |seed: u64| {
            let (mut net, ..) = two_action_net(1.0, 1.0);
            let mut rng = PsRng::seed_from_u64(seed);
            for _ in 0..500 {
                let t = net.random_walk("sym", &mut rng).unwrap();
                net.refresh_glow(&t);
                net.update_and_damp(rng.random::<f64>(), 0.01, 0.4);
            }
            net.snapshot()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Any op sequence keeps h >= 1, g in [0, 1], and rows normalized.
        #[test]
        fn invariants_hold_under_random_programs(
            seed in 0u64..1000,
            ops in proptest::collection::vec((0u8..4, 0.0f64..1.0, 0.0f64..5.0), 1..60),
        ) {
            let mut net = ClipNetwork::new();
            let acts: Vec<ClipId> =
                ["x", "y"].iter().map(|l| net.add_action(l).unwrap()).collect();
            net.add_percept_uniform("p0", &acts).unwrap();
            net.add_percept_uniform("p1", &acts).unwrap();
            let mut rng = PsRng::seed_from_u64(seed);
            let mut last = net.random_walk("p0", &mut rng).unwrap();
            for (op, x, lambda) in ops {
                match op {
                    0 => last = net.random_walk(if x < 0.5 { "p0" } else { "p1" }, &mut rng).unwrap(),
                    1 => net.refresh_glow(&last),
                    2 => net.update_h(lambda, x),
                    _ => net.damp_glow(x),
                }
                for e in 0..net.n_edges() {
                    prop_assert!(net.edge_h(e) >= H_MIN);
                    prop_assert!((0.0..=1.0).contains(&net.edge_g(e)));
                }
                for p in ["p0", "p1"] {
                    let sum: f64 = net.policy(p).unwrap().iter().map(|(_, v)| v).sum();
                    prop_assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
