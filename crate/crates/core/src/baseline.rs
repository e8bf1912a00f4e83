//! Minimum-Hamming-distance violation, the comparison method.
//!
//! The violation of the constraint is the smallest number of positions that
//! must change for the assignment to be accepted. It is computed by a
//! shortest-path pass over the layered graph where an arc costs 0 when its
//! label equals the current value and 1 otherwise. Variable violations come
//! from one optimal path, drawn by backtracking from a random optimal
//! success node through random optimal predecessors.
//!
//! Only costs from the start are stored. After values change from position
//! `s` on, the layers up to `s` are still valid and only the rest is redone,
//! which touches every arc of layers `s..n`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::Symbol;
use crate::layered::LayeredGraph;
use crate::segviol::StaleProbe;

const INF: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct SoftRegularState {
    graph: Arc<LayeredGraph>,
    values: Vec<Symbol>,
    // fwd[layer * m + state]: fewest mismatches from the start
    fwd: Vec<u32>,
    path: Vec<usize>,
    violation: Vec<u8>,
    violation_count: usize,
    version: u64,
    relaxations: u64,
    scratch: Vec<u32>,
    ties: Vec<(usize, Symbol)>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct HammingProbe {
    version: u64,
    start: usize,
    changes: Vec<(usize, Symbol)>,
    path: Vec<usize>,
    violation: Vec<u8>,
    violation_count: usize,
    delta: i64,
}

impl HammingProbe {
    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Variable violations of the whole sequence after the move.
    pub fn violations(&self) -> &[u8] {
        &self.violation
    }

    pub fn violation_after(&self) -> usize {
        self.violation_count
    }
}

fn relax_from(
    graph: &LayeredGraph,
    values: &[Symbol],
    fwd: &mut [u32],
    s: usize,
    relaxations: &mut u64,
) {
    let m = graph.num_states();
    let n = graph.n();
    fwd[(s + 1) * m..].iter_mut().for_each(|c| *c = INF);
    for i in s..n {
        let (here, next) = fwd[i * m..(i + 2) * m].split_at_mut(m);
        for f in graph.nodes(i) {
            let base = here[f];
            if base == INF {
                continue;
            }
            for a in graph.arcs(i, f) {
                *relaxations += 1;
                let c = base + u32::from(a.symbol != values[i]);
                if c < next[a.to] {
                    next[a.to] = c;
                }
            }
        }
    }
}

// Backtracks one optimal path, choosing uniformly among optimal success
// nodes and optimal predecessors; returns (path, violations, cost).
fn extract(
    graph: &LayeredGraph,
    values: &[Symbol],
    fwd: &[u32],
    rng: &mut ChaCha8Rng,
    ties: &mut Vec<(usize, Symbol)>,
) -> (Vec<usize>, Vec<u8>, usize) {
    let m = graph.num_states();
    let n = graph.n();
    let best = graph
        .success_nodes()
        .map(|s| fwd[n * m + s])
        .min()
        .expect("success node exists");
    ties.clear();
    ties.extend(
        graph
            .success_nodes()
            .filter(|&s| fwd[n * m + s] == best)
            .map(|s| (s, Symbol(0))),
    );
    let mut t = ties[rng.gen_range(0..ties.len())].0;
    let mut path = vec![0; n + 1];
    let mut violation = vec![0; n];
    path[n] = t;
    for i in (0..n).rev() {
        let target = fwd[(i + 1) * m + t];
        ties.clear();
        ties.extend(graph.preds(i + 1, t).iter().copied().filter(|&(f, sym)| {
            let c = fwd[i * m + f];
            c != INF && c + u32::from(sym != values[i]) == target
        }));
        let (f, sym) = ties[rng.gen_range(0..ties.len())];
        violation[i] = u8::from(sym != values[i]);
        path[i] = f;
        t = f;
    }
    (path, violation, best as usize)
}

impl SoftRegularState {
    /// `seed` drives the choice among equally near accepted words.
    pub fn new(graph: Arc<LayeredGraph>, values: Vec<Symbol>, seed: u64) -> Self {
        let n = graph.n();
        assert_eq!(values.len(), n, "assignment length must match the graph");
        let m = graph.num_states();
        let mut fwd = vec![INF; (n + 1) * m];
        fwd[graph.start()] = 0;
        let mut st = SoftRegularState {
            values,
            fwd,
            path: Vec::new(),
            violation: Vec::new(),
            violation_count: 0,
            version: 0,
            relaxations: 0,
            scratch: Vec::new(),
            ties: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            graph,
        };
        st.update(0);
        st
    }

    pub fn graph(&self) -> &Arc<LayeredGraph> {
        &self.graph
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    pub fn violations(&self) -> &[u8] {
        &self.violation
    }

    pub fn violation(&self) -> usize {
        self.violation_count
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Arc relaxations performed so far.
    pub fn relaxations(&self) -> u64 {
        self.relaxations
    }

    pub fn set_value(&mut self, i: usize, v: Symbol) {
        self.values[i] = v;
    }

    /// Recomputes after values changed at positions `>= s`.
    pub fn update(&mut self, s: usize) {
        relax_from(
            &self.graph,
            &self.values,
            &mut self.fwd,
            s,
            &mut self.relaxations,
        );
        let (path, violation, cost) = extract(
            &self.graph,
            &self.values,
            &self.fwd,
            &mut self.rng,
            &mut self.ties,
        );
        self.path = path;
        self.violation = violation;
        self.violation_count = cost;
        self.version += 1;
    }

    pub fn assign(&mut self, i: usize, v: Symbol) {
        self.set_value(i, v);
        self.update(i);
    }

    pub fn probe(&mut self, changes: &[(usize, Symbol)]) -> HammingProbe {
        let n = self.values.len();
        let s = changes.iter().map(|&(i, _)| i).min().unwrap_or(n);
        let old: Vec<Symbol> = changes.iter().map(|&(i, _)| self.values[i]).collect();
        for &(i, v) in changes {
            self.values[i] = v;
        }
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        scratch.extend_from_slice(&self.fwd);
        relax_from(
            &self.graph,
            &self.values,
            &mut scratch,
            s,
            &mut self.relaxations,
        );
        let (path, violation, cost) = extract(
            &self.graph,
            &self.values,
            &scratch,
            &mut self.rng,
            &mut self.ties,
        );
        self.scratch = scratch;
        for (&(i, _), &v) in changes.iter().zip(&old).rev() {
            self.values[i] = v;
        }
        HammingProbe {
            version: self.version,
            start: s,
            changes: changes.to_vec(),
            path,
            violation,
            violation_count: cost,
            delta: cost as i64 - self.violation_count as i64,
        }
    }

    pub fn probe_assign(&mut self, i: usize, v: Symbol) -> HammingProbe {
        self.probe(&[(i, v)])
    }

    pub fn probe_swap(&mut self, i: usize, j: usize) -> HammingProbe {
        assert_ne!(i, j, "swap needs two distinct positions");
        let (vi, vj) = (self.values[i], self.values[j]);
        self.probe(&[(i, vj), (j, vi)])
    }

    /// Applies a probed move. Costs are recomputed from the probe's start;
    /// the witness path and violations are the recorded ones.
    pub fn commit(&mut self, record: HammingProbe) -> Result<(), StaleProbe> {
        if record.version != self.version {
            return Err(StaleProbe {
                record: record.version,
                state: self.version,
            });
        }
        for &(i, v) in &record.changes {
            self.values[i] = v;
        }
        relax_from(
            &self.graph,
            &self.values,
            &mut self.fwd,
            record.start,
            &mut self.relaxations,
        );
        self.path = record.path;
        self.violation = record.violation;
        self.violation_count = record.violation_count;
        self.version += 1;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        let g = &self.graph;
        let n = g.n();
        if self.path[0] != g.start() {
            return Err("witness path does not start at the start node".into());
        }
        let mut cost = 0;
        for i in 0..n {
            let matched = g
                .arcs_labelled(i, self.path[i], self.values[i])
                .iter()
                .any(|a| a.to == self.path[i + 1]);
            let any = g
                .arcs(i, self.path[i])
                .iter()
                .any(|a| a.to == self.path[i + 1]);
            if !any {
                return Err(format!("witness path broken at layer {i}"));
            }
            if u8::from(!matched) != self.violation[i] {
                return Err(format!(
                    "position {i}: violation flag disagrees with the path"
                ));
            }
            cost += self.violation[i] as usize;
        }
        if cost != self.violation_count {
            return Err("violation count mismatch".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_automaton, Alphabet, Automaton};
    use crate::layered::unroll;

    const FIG1: &str = "alphabet d e x\nstates 6\nstart 1\naccept 5 6\n\
        trans 1 d 2\ntrans 1 x 3\ntrans 1 e 4\ntrans 2 x 3\ntrans 3 d 2\ntrans 4 x 3\n\
        trans 3 e 4\ntrans 2 d 5\ntrans 3 x 6\ntrans 4 e 5\ntrans 5 x 3\ntrans 6 d 2\ntrans 6 e 4\n";

    fn brute_min_hamming(a: &Automaton, w: &[Symbol]) -> usize {
        let k = a.alphabet().len();
        let n = w.len();
        (0..k.pow(n as u32))
            .filter_map(|mut code| {
                let cand: Vec<Symbol> = (0..n)
                    .map(|_| {
                        let s = Symbol((code % k) as u16);
                        code /= k;
                        s
                    })
                    .collect();
                a.accepts(&cand)
                    .then(|| cand.iter().zip(w).filter(|(x, y)| x != y).count())
            })
            .min()
            .unwrap()
    }

    #[test]
    fn worked_example_values() {
        let a = parse_automaton(FIG1).unwrap();
        let g = Arc::new(unroll(&a, 6).unwrap());
        let al = g.alphabet().clone();
        let st = SoftRegularState::new(g.clone(), al.parse_word("xexexx").unwrap(), 7);
        assert_eq!(st.violation(), 0);
        let w = al.parse_word("xedexx").unwrap();
        let st = SoftRegularState::new(g.clone(), w.clone(), 7);
        assert_eq!(st.violation(), 1);
        assert_eq!(brute_min_hamming(&a, &w), 1);
        st.validate().unwrap();
    }

    #[test]
    fn witness_depends_only_on_seed() {
        let a = parse_automaton(FIG1).unwrap();
        let g = Arc::new(unroll(&a, 6).unwrap());
        let w = g.alphabet().parse_word("dddddd").unwrap();
        let one = SoftRegularState::new(g.clone(), w.clone(), 3);
        let two = SoftRegularState::new(g.clone(), w.clone(), 3);
        assert_eq!(one.path(), two.path());
        let mut paths = std::collections::BTreeSet::new();
        for seed in 0..40 {
            let st = SoftRegularState::new(g.clone(), w.clone(), seed);
            st.validate().unwrap();
            assert_eq!(st.violation(), brute_min_hamming(&a, &w));
            paths.insert(st.path().to_vec());
        }
        assert!(
            paths.len() > 1,
            "ties between nearest words are broken randomly"
        );
    }

    #[test]
    fn update_matches_scratch_and_involution() {
        let a = parse_automaton(FIG1).unwrap();
        let g = Arc::new(unroll(&a, 6).unwrap());
        let al = g.alphabet().clone();
        let mut st = SoftRegularState::new(g.clone(), al.parse_word("ddeedx").unwrap(), 7);
        let orig = st.violation();
        let d = al.symbol("x").unwrap();
        let old = st.values()[3];
        st.assign(3, d);
        let scratch = SoftRegularState::new(g.clone(), st.values().to_vec(), 7);
        assert_eq!(st.violation(), scratch.violation());
        st.validate().unwrap();
        assert_eq!(st.violation(), brute_min_hamming(&a, st.values()));
        st.assign(3, old);
        assert_eq!(st.violation(), orig);
        st.validate().unwrap();
    }

    #[test]
    fn universal_single_change_moves_by_at_most_one() {
        let al = Alphabet::new(["a", "b", "c"]).unwrap();
        let g = Arc::new(unroll(&Automaton::universal(al), 5).unwrap());
        let mut st = SoftRegularState::new(g, vec![Symbol(0); 5], 7);
        for i in 0..5 {
            for v in 0..3 {
                let d = st.probe_assign(i, Symbol(v)).delta();
                assert!((-1..=1).contains(&d));
            }
        }
    }

    #[test]
    fn commit_matches_probe() {
        let a = parse_automaton(FIG1).unwrap();
        let g = Arc::new(unroll(&a, 6).unwrap());
        let al = g.alphabet().clone();
        let mut st = SoftRegularState::new(g.clone(), al.parse_word("eedddx").unwrap(), 7);
        for (i, j) in [(0, 5), (1, 3), (2, 4)] {
            let p = st.probe_swap(i, j);
            let want = st.violation() as i64 + p.delta();
            st.commit(p).unwrap();
            assert_eq!(st.violation() as i64, want);
            assert_eq!(st.violation(), brute_min_hamming(&a, st.values()));
            st.validate().unwrap();
            let fresh = SoftRegularState::new(g.clone(), st.values().to_vec(), 7);
            assert_eq!(fresh.violation(), st.violation());
        }
    }
}
