//! Segmentation-based violation maintenance for one automaton constraint.
//!
//! The state keeps one path through the layered graph together with a
//! segmentation of the current assignment: maximal stretches of positions
//! whose values label the arcs of that path. A position outside every
//! segment is violated, and the constraint violation is the number of
//! violated positions.
//!
//! The path is grown greedily from left to right. While the value at
//! position `i` labels an arc leaving the current node, the current segment
//! grows along that arc. Otherwise position `i` is violated and the next node
//! is drawn among all successors, weighted by their path counts. Changing a
//! value at position `s` only requires walking the path again from `s`,
//! which costs `n - s` steps whatever the size of the graph.
//!
//! Every random choice consumes one 128-bit draw, tied to the position where
//! it was made. The draws behind the current path are kept, so that a walk
//! can be replayed exactly, and probes carry the draws they consumed so that
//! committing a probe reproduces the probed state instead of drawing anew.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automaton::Symbol;
use crate::layered::{pick, LayeredGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("probe record is stale (made at version {record}, state is at version {state})")]
pub struct StaleProbe {
    pub record: u64,
    pub state: u64,
}

/// Where the random draws of a walk come from.
#[derive(Debug, Clone, Copy)]
pub enum Draws<'a> {
    /// Fresh values from the state's own generator.
    Fresh,
    /// The draws recorded for the current path, position by position.
    Replay,
    /// An explicit tape indexed by position; must cover every position.
    Tape(&'a [u128]),
}

/// Result of walking the suffix `start..n` of the assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Suffix {
    start: usize,
    // node[start + 1 ..= n]
    node: Vec<usize>,
    // violation[start .. n]
    violation: Vec<u8>,
    // segments kept from the previous segmentation
    keep: usize,
    // segments from the walk; the first may continue a kept prefix segment
    tail: Vec<(usize, usize)>,
    picks: Vec<(usize, u128)>,
    violation_count: usize,
}

/// A probed move: the suffix it produces and the draws it used.
#[derive(Debug, Clone)]
pub struct ProbeRecord {
    version: u64,
    changes: Vec<(usize, Symbol)>,
    suffix: Suffix,
    delta: i64,
}

impl ProbeRecord {
    /// Change of the constraint violation caused by the move.
    pub fn delta(&self) -> i64 {
        self.delta
    }

    /// First position whose state the move recomputes.
    pub fn start(&self) -> usize {
        self.suffix.start
    }

    /// Variable violations from [`start`](Self::start) onwards after the move.
    pub fn violations(&self) -> &[u8] {
        &self.suffix.violation
    }

    pub fn changes(&self) -> &[(usize, Symbol)] {
        &self.changes
    }

    pub fn violation_after(&self) -> usize {
        self.suffix.violation_count
    }
}

/// Observable part of a [`SegmentationState`], for comparisons in tests and
/// validators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub values: Vec<Symbol>,
    pub node: Vec<usize>,
    pub violation: Vec<u8>,
    pub segments: Vec<(usize, usize)>,
    pub constraint_violation: usize,
}

#[derive(Debug, Clone)]
pub struct SegmentationState {
    graph: Arc<LayeredGraph>,
    values: Vec<Symbol>,
    node: Vec<usize>,
    violation: Vec<u8>,
    // inclusive, 0-based, strictly ordered
    segments: Vec<(usize, usize)>,
    violation_count: usize,
    draws: Vec<u128>,
    rng: ChaCha8Rng,
    version: u64,
    visits: u64,
}

// Walks positions `s..n` starting from `start_node`, following the
// greedy-extension / weighted-pick rule.
#[allow(clippy::too_many_arguments)]
fn walk(
    graph: &LayeredGraph,
    values: &[Symbol],
    segments: &[(usize, usize)],
    prefix_violations: usize,
    s: usize,
    start_node: usize,
    draws: &mut dyn FnMut(usize) -> u128,
    visits: &mut u64,
) -> Suffix {
    let n = graph.n();
    // segments ending before s survive untouched; one reaching into s is
    // cut at s - 1 and, when it covers s - 1, continued by the walk
    let mut keep = segments.partition_point(|&(a, _)| a < s);
    let mut tail = Vec::new();
    let mut in_segment = false;
    if keep > 0 && s > 0 && segments[keep - 1].1 >= s - 1 {
        keep -= 1;
        tail.push((segments[keep].0, s - 1));
        in_segment = true;
    }

    let mut node = Vec::with_capacity(n - s);
    let mut violation = Vec::with_capacity(n - s);
    let mut picks = Vec::new();
    let mut count = prefix_violations;
    let mut cur = start_node;
    for (i, &a) in values.iter().enumerate().skip(s) {
        *visits += 1;
        let matching = graph.arcs_labelled(i, cur, a);
        let next = if matching.is_empty() {
            in_segment = false;
            violation.push(1);
            count += 1;
            let u = draws(i);
            picks.push((i, u));
            graph.pick_successor(i, cur, u)
        } else {
            if in_segment {
                tail.last_mut().expect("open segment").1 = i;
            } else {
                tail.push((i, i));
                in_segment = true;
            }
            violation.push(0);
            if let [only] = matching {
                only.to
            } else {
                let u = draws(i);
                picks.push((i, u));
                pick(matching, u).to
            }
        };
        node.push(next);
        cur = next;
    }
    Suffix {
        start: s,
        node,
        violation,
        keep,
        tail,
        picks,
        violation_count: count,
    }
}

impl SegmentationState {
    /// Initial segmentation of `values` with draws from a generator seeded by
    /// `seed`.
    pub fn new(graph: Arc<LayeredGraph>, values: Vec<Symbol>, seed: u64) -> Self {
        let mut st = Self::blank(graph, values, seed);
        st.calc_segment(0);
        st
    }

    /// Initial segmentation replaying an explicit draw tape (one value per
    /// position).
    pub fn with_tape(graph: Arc<LayeredGraph>, values: Vec<Symbol>, tape: &[u128]) -> Self {
        let mut st = Self::blank(graph, values, 0);
        st.calc_segment_with(0, Draws::Tape(tape));
        st
    }

    fn blank(graph: Arc<LayeredGraph>, values: Vec<Symbol>, seed: u64) -> Self {
        let n = graph.n();
        assert_eq!(values.len(), n, "assignment length must match the graph");
        let mut node = vec![graph.start(); n + 1];
        node[0] = graph.start();
        SegmentationState {
            values,
            node,
            violation: vec![1; n],
            segments: Vec::new(),
            violation_count: n,
            draws: vec![0; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            version: 0,
            visits: 0,
            graph,
        }
    }

    pub fn graph(&self) -> &Arc<LayeredGraph> {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    /// The picked path, one node per layer (`n + 1` entries).
    pub fn path(&self) -> &[usize] {
        &self.node
    }

    pub fn violations(&self) -> &[u8] {
        &self.violation
    }

    pub fn variable_violation(&self, i: usize) -> u8 {
        self.violation[i]
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    pub fn violation(&self) -> usize {
        self.violation_count
    }

    /// Draw recorded at each position; only entries where a random choice was
    /// made on the current path are meaningful.
    pub fn draws(&self) -> &[u128] {
        &self.draws
    }

    /// Incremented by every commit or recomputation.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Total number of positions visited by walks so far.
    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            values: self.values.clone(),
            node: self.node.clone(),
            violation: self.violation.clone(),
            segments: self.segments.clone(),
            constraint_violation: self.violation_count,
        }
    }

    /// Overwrites a value without updating the segmentation. Follow with
    /// [`calc_segment`](Self::calc_segment) from a position `<= i`.
    pub fn set_value(&mut self, i: usize, v: Symbol) {
        self.values[i] = v;
    }

    /// Recomputes the segmentation from position `s` with fresh draws. The
    /// state for positions before `s` must be current.
    pub fn calc_segment(&mut self, s: usize) {
        self.calc_segment_with(s, Draws::Fresh);
    }

    pub fn calc_segment_with(&mut self, s: usize, draws: Draws<'_>) {
        let suffix = self.run(s, draws);
        self.install(suffix);
        self.version += 1;
    }

    /// Sets position `i` to `v` and recomputes from `i`.
    pub fn assign(&mut self, i: usize, v: Symbol) {
        self.set_value(i, v);
        self.calc_segment(i);
    }

    fn prefix_violations(&self, s: usize) -> usize {
        self.violation_count
            - self.violation[s..]
                .iter()
                .map(|&v| v as usize)
                .sum::<usize>()
    }

    fn run(&mut self, s: usize, draws: Draws<'_>) -> Suffix {
        assert!(s <= self.values.len(), "start position {s} out of range");
        let prefix = self.prefix_violations(s);
        let mut fresh;
        let mut replay;
        let mut tape;
        let source: &mut dyn FnMut(usize) -> u128 = match draws {
            Draws::Fresh => {
                let rng = &mut self.rng;
                fresh = move |_: usize| rng.gen::<u128>();
                &mut fresh
            }
            Draws::Replay => {
                let recorded = &self.draws;
                replay = move |i: usize| recorded[i];
                &mut replay
            }
            Draws::Tape(t) => {
                tape = move |i: usize| t[i];
                &mut tape
            }
        };
        walk(
            &self.graph,
            &self.values,
            &self.segments,
            prefix,
            s,
            self.node[s],
            source,
            &mut self.visits,
        )
    }

    fn install(&mut self, suffix: Suffix) {
        let s = suffix.start;
        self.node.truncate(s + 1);
        self.node.extend_from_slice(&suffix.node);
        self.violation.truncate(s);
        self.violation.extend_from_slice(&suffix.violation);
        self.segments.truncate(suffix.keep);
        self.segments.extend_from_slice(&suffix.tail);
        for &(i, u) in &suffix.picks {
            self.draws[i] = u;
        }
        self.violation_count = suffix.violation_count;
    }

    /// Evaluates a move that sets every `(position, value)` in `changes`,
    /// without changing the observable state: the values are changed, the
    /// suffix walked, and the values restored.
    pub fn probe(&mut self, changes: &[(usize, Symbol)], draws: Draws<'_>) -> ProbeRecord {
        let Some(s) = changes.iter().map(|&(i, _)| i).min() else {
            // nothing changes; an empty suffix from n
            let n = self.values.len();
            let suffix = self.run(n, draws);
            return ProbeRecord {
                version: self.version,
                changes: Vec::new(),
                suffix,
                delta: 0,
            };
        };
        let old: Vec<Symbol> = changes.iter().map(|&(i, _)| self.values[i]).collect();
        for &(i, v) in changes {
            self.values[i] = v;
        }
        let suffix = self.run(s, draws);
        for (&(i, _), &v) in changes.iter().zip(&old).rev() {
            self.values[i] = v;
        }
        let delta = suffix.violation_count as i64 - self.violation_count as i64;
        ProbeRecord {
            version: self.version,
            changes: changes.to_vec(),
            suffix,
            delta,
        }
    }

    pub fn probe_assign(&mut self, i: usize, v: Symbol) -> ProbeRecord {
        self.probe(&[(i, v)], Draws::Fresh)
    }

    /// Probes exchanging the values at `i` and `j`; the walk starts at
    /// `min(i, j)`.
    pub fn probe_swap(&mut self, i: usize, j: usize) -> ProbeRecord {
        self.probe_swap_with(i, j, Draws::Fresh)
    }

    pub fn probe_swap_with(&mut self, i: usize, j: usize, draws: Draws<'_>) -> ProbeRecord {
        assert_ne!(i, j, "swap needs two distinct positions");
        let (vi, vj) = (self.values[i], self.values[j]);
        self.probe(&[(i, vj), (j, vi)], draws)
    }

    /// Applies a probed move exactly as it was probed. No draws are consumed.
    pub fn commit(&mut self, record: ProbeRecord) -> Result<(), StaleProbe> {
        if record.version != self.version {
            return Err(StaleProbe {
                record: record.version,
                state: self.version,
            });
        }
        for &(i, v) in &record.changes {
            self.values[i] = v;
        }
        self.install(record.suffix);
        self.version += 1;
        Ok(())
    }

    /// Full consistency check of the segmentation against the graph.
    pub fn validate(&self) -> Result<(), String> {
        let g = &self.graph;
        let n = g.n();
        if self.node.len() != n + 1 || self.violation.len() != n {
            return Err("length mismatch".into());
        }
        if self.node[0] != g.start() {
            return Err("path does not begin at the start node".into());
        }
        for i in 0..n {
            let (f, t) = (self.node[i], self.node[i + 1]);
            if !g.is_alive(i, f) || !g.is_alive(i + 1, t) {
                return Err(format!("path leaves the graph at layer {i}"));
            }
            let labelled = g
                .arcs_labelled(i, f, self.values[i])
                .iter()
                .any(|a| a.to == t);
            let any = g.arcs(i, f).iter().any(|a| a.to == t);
            match self.violation[i] {
                0 if !labelled => {
                    return Err(format!("position {i}: satisfied without a matching arc"))
                }
                1 if !any => return Err(format!("position {i}: no arc to the next node")),
                0 | 1 => {}
                v => return Err(format!("position {i}: violation {v}")),
            }
        }
        let mut covered = vec![false; n];
        let mut prev_end: Option<usize> = None;
        for &(a, b) in &self.segments {
            if a > b || b >= n {
                return Err(format!("bad segment ({a}, {b})"));
            }
            if let Some(p) = prev_end {
                // maximal runs: consecutive segments are separated by a gap
                if a <= p + 1 {
                    return Err(format!(
                        "segment ({a}, {b}) overlaps or touches its predecessor"
                    ));
                }
            }
            prev_end = Some(b);
            covered[a..=b].iter_mut().for_each(|c| *c = true);
        }
        for i in 0..n {
            if covered[i] != (self.violation[i] == 0) {
                return Err(format!(
                    "position {i}: segment cover disagrees with violation"
                ));
            }
        }
        let total: usize = self.violation.iter().map(|&v| v as usize).sum();
        let covered_len: usize = self.segments.iter().map(|&(a, b)| b - a + 1).sum();
        if total != self.violation_count || n - covered_len != self.violation_count {
            return Err("violation count mismatch".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_automaton;
    use crate::layered::unroll;

    const FIG1: &str = "alphabet d e x\nstates 6\nstart 1\naccept 5 6\n\
        trans 1 d 2\ntrans 1 x 3\ntrans 1 e 4\ntrans 2 x 3\ntrans 3 d 2\ntrans 4 x 3\n\
        trans 3 e 4\ntrans 2 d 5\ntrans 3 x 6\ntrans 4 e 5\ntrans 5 x 3\ntrans 6 d 2\ntrans 6 e 4\n";

    fn fig2() -> Arc<LayeredGraph> {
        Arc::new(unroll(&parse_automaton(FIG1).unwrap(), 6).unwrap())
    }

    fn word(g: &LayeredGraph, w: &str) -> Vec<Symbol> {
        g.alphabet().parse_word(w).unwrap()
    }

    #[test]
    fn accepted_word_is_one_segment() {
        let g = fig2();
        let st = SegmentationState::new(g.clone(), word(&g, "xexexx"), 1);
        assert_eq!(st.violation(), 0);
        assert_eq!(st.segments(), &[(0, 5)]);
        st.validate().unwrap();
    }

    #[test]
    fn worked_example_sequence() {
        let g = fig2();
        // draw 0 selects the first successor in target order: state 3
        let st0 = SegmentationState::with_tape(g.clone(), word(&g, "xedexx"), &[0; 6]);
        assert_eq!(st0.segments(), &[(0, 1), (3, 5)]);
        assert_eq!(st0.violation(), 1);
        assert_eq!(st0.violations(), &[0, 0, 1, 0, 0, 0]);
        assert_eq!(st0.path()[3], 2);

        let e = g.alphabet().symbol("e").unwrap();
        let x = g.alphabet().symbol("x").unwrap();

        let mut st = st0.clone();
        st.set_value(2, e);
        st.calc_segment(2);
        assert_eq!(st.violation(), 3);
        assert_eq!(st.segments(), &[(0, 2)]);
        assert_eq!(st.violations(), &[0, 0, 0, 1, 1, 1]);
        st.validate().unwrap();

        let mut st = st0.clone();
        st.set_value(2, x);
        st.calc_segment(2);
        assert_eq!(st.violation(), 0);
        assert_eq!(st.segments(), &[(0, 5)]);
        st.validate().unwrap();
    }

    #[test]
    fn probes_leave_state_unchanged() {
        let g = fig2();
        let mut st = SegmentationState::with_tape(g.clone(), word(&g, "xedexx"), &[0; 6]);
        let before = st.snapshot();
        let e = g.alphabet().symbol("e").unwrap();
        let x = g.alphabet().symbol("x").unwrap();
        let d = g.alphabet().symbol("d").unwrap();
        assert_eq!(st.probe_assign(2, x).delta(), -1);
        assert_eq!(st.probe_assign(2, e).delta(), 2);
        assert_eq!(st.probe(&[(2, d)], Draws::Replay).delta(), 0);
        assert_eq!(st.snapshot(), before);

        let rec = st.probe_assign(2, x);
        st.commit(rec).unwrap();
        assert_eq!(st.violation(), 0);
        assert!(parse_automaton(FIG1).unwrap().accepts(st.values()));
        st.validate().unwrap();
    }

    #[test]
    fn stale_record_is_rejected() {
        let g = fig2();
        let mut st = SegmentationState::new(g.clone(), word(&g, "xedexx"), 3);
        let x = g.alphabet().symbol("x").unwrap();
        let a = st.probe_assign(2, x);
        let b = st.probe_assign(4, x);
        st.commit(a).unwrap();
        assert!(st.commit(b).is_err());
    }

    #[test]
    fn commit_applies_probe_exactly() {
        let g = fig2();
        let mut st = SegmentationState::new(g.clone(), word(&g, "ddeedx"), 11);
        for (i, j) in [(0, 3), (1, 5), (2, 4), (0, 5)] {
            let before = st.violation() as i64;
            let rec = st.probe_swap(i, j);
            let delta = rec.delta();
            let after = rec.violation_after();
            st.commit(rec).unwrap();
            assert_eq!(st.violation() as i64, before + delta);
            assert_eq!(st.violation(), after);
            st.validate().unwrap();
        }
    }

    #[test]
    fn swap_and_back_restores_state_under_replay() {
        let g = fig2();
        let mut st = SegmentationState::new(g.clone(), word(&g, "dexxed"), 5);
        let before = st.snapshot();
        let tape: Vec<u128> = st.draws().to_vec();
        let rec = st.probe_swap(1, 4);
        st.commit(rec).unwrap();
        let rec = st.probe_swap_with(1, 4, Draws::Tape(&tape));
        st.commit(rec).unwrap();
        assert_eq!(st.snapshot(), before);
    }

    #[test]
    fn suffix_walk_visits_only_the_suffix() {
        let g = fig2();
        let mut st = SegmentationState::new(g.clone(), word(&g, "xedexx"), 9);
        for s in 0..6 {
            let v0 = st.visits();
            let x = g.alphabet().symbol("x").unwrap();
            let _ = st.probe_assign(s, x);
            assert_eq!(st.visits() - v0, (6 - s) as u64);
        }
    }
}
