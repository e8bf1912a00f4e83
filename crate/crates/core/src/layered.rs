//! An automaton unrolled over a fixed number of positions.
//!
//! Layer `i` (0-based, `0..=n`) holds the automaton states that can be
//! reached after reading `i` symbols and from which an accepting state can
//! still be reached in the remaining `n - i` steps. Every surviving node
//! therefore lies on at least one start-to-success path, and every node
//! except those in the last layer has at least one outgoing arc.
//!
//! Each node records the number of paths from it to the last layer. Those
//! counts drive the weighted random choice of a successor: the counts are
//! turned into 128-bit cumulative thresholds once, at construction, so the
//! per-move hot loop never touches big integers.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::automaton::{Alphabet, Automaton, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("empty language at length {0}: no accepted word of that length")]
    EmptyLanguage(usize),
    #[error("cannot unroll over zero positions")]
    ZeroLength,
}

/// Edge from a node in layer `i` to node `to` in layer `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub symbol: Symbol,
    pub to: usize,
    // cumulative weight of this and all previous arcs in the same list,
    // scaled to 2^128; unused for the last arc of a list
    threshold: u128,
}

#[derive(Debug, Clone)]
struct Node {
    paths: BigUint,
    // sorted by (to, symbol)
    arcs: Vec<Edge>,
    // arcs grouped by symbol; `by_symbol[s]` is a range into `labelled`
    labelled: Vec<Edge>,
    by_symbol: Vec<(u32, u32)>,
    // (from, symbol) in the previous layer, sorted
    preds: Vec<(usize, Symbol)>,
}

#[derive(Debug, Clone)]
pub struct LayeredGraph {
    alphabet: Alphabet,
    n: usize,
    num_states: usize,
    start: usize,
    deterministic: bool,
    // layers[i][state], None when pruned
    layers: Vec<Vec<Option<Node>>>,
}

fn assign_thresholds(arcs: &mut [Edge], weight: impl Fn(&Edge) -> BigUint) {
    let total: BigUint = arcs.iter().map(&weight).sum();
    if total.is_zero() {
        return;
    }
    let mut cum = BigUint::zero();
    for arc in arcs.iter_mut() {
        cum += weight(arc);
        let scaled: BigUint = (&cum << 128u32) / &total;
        // the last arc's threshold is 2^128 and never read
        arc.threshold = u128::try_from(scaled).unwrap_or(u128::MAX);
    }
}

/// Draws one of `arcs` with probability proportional to the path count of its
/// target, using the thresholds computed at unroll time.
#[inline]
pub fn pick(arcs: &[Edge], draw: u128) -> &Edge {
    let (last, rest) = arcs.split_last().expect("pick from an empty arc list");
    rest.iter().find(|a| draw < a.threshold).unwrap_or(last)
}

/// Unrolls `automaton` over `n` positions and prunes every node that is not
/// on a start-to-success path.
pub fn unroll(automaton: &Automaton, n: usize) -> Result<LayeredGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::ZeroLength);
    }
    let m = automaton.num_states();
    let mut reach = vec![vec![false; m]; n + 1];
    reach[0][automaton.start()] = true;
    for i in 0..n {
        for f in 0..m {
            if reach[i][f] {
                for &(_, t) in automaton.arcs(f) {
                    reach[i + 1][t] = true;
                }
            }
        }
    }
    let mut alive = vec![vec![false; m]; n + 1];
    for t in 0..m {
        alive[n][t] = reach[n][t] && automaton.is_accepting(t);
    }
    for i in (0..n).rev() {
        for f in 0..m {
            alive[i][f] = reach[i][f] && automaton.arcs(f).iter().any(|&(_, t)| alive[i + 1][t]);
        }
    }
    if !alive[0][automaton.start()] {
        return Err(GraphError::EmptyLanguage(n));
    }

    let k = automaton.alphabet().len();
    let mut layers: Vec<Vec<Option<Node>>> = Vec::with_capacity(n + 1);
    layers.resize_with(n + 1, || vec![None; m]);
    for t in 0..m {
        if alive[n][t] {
            layers[n][t] = Some(Node {
                paths: BigUint::one(),
                arcs: Vec::new(),
                labelled: Vec::new(),
                by_symbol: vec![(0, 0); k],
                preds: Vec::new(),
            });
        }
    }
    for i in (0..n).rev() {
        let (head, tail) = layers.split_at_mut(i + 1);
        let (here, next) = (&mut head[i], &tail[0]);
        for f in 0..m {
            if !alive[i][f] {
                continue;
            }
            let mut arcs: Vec<Edge> = automaton
                .arcs(f)
                .iter()
                .filter(|&&(_, t)| alive[i + 1][t])
                .map(|&(symbol, to)| Edge {
                    symbol,
                    to,
                    threshold: 0,
                })
                .collect();
            arcs.sort_by_key(|a| (a.to, a.symbol));
            let weight = |a: &Edge| next[a.to].as_ref().expect("alive").paths.clone();
            let paths: BigUint = arcs.iter().map(weight).sum();
            assign_thresholds(&mut arcs, weight);

            let mut labelled = Vec::with_capacity(arcs.len());
            let mut by_symbol = vec![(0u32, 0u32); k];
            for s in 0..k {
                let lo = labelled.len();
                labelled.extend(arcs.iter().filter(|a| a.symbol.index() == s).copied());
                assign_thresholds(&mut labelled[lo..], weight);
                by_symbol[s] = (lo as u32, labelled.len() as u32);
            }
            here[f] = Some(Node {
                paths,
                arcs,
                labelled,
                by_symbol,
                preds: Vec::new(),
            });
        }
    }
    for i in 0..n {
        let (head, tail) = layers.split_at_mut(i + 1);
        for (f, node) in head[i].iter().enumerate() {
            if let Some(node) = node {
                for a in &node.arcs {
                    tail[0][a.to]
                        .as_mut()
                        .expect("alive")
                        .preds
                        .push((f, a.symbol));
                }
            }
        }
    }
    for node in layers.iter_mut().flatten().flatten() {
        node.preds.sort();
    }

    Ok(LayeredGraph {
        alphabet: automaton.alphabet().clone(),
        n,
        num_states: m,
        start: automaton.start(),
        deterministic: automaton.is_deterministic(),
        layers,
    })
}

impl LayeredGraph {
    /// Number of positions (the graph has `n + 1` layers).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Slots per layer (the automaton's state count).
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn node(&self, layer: usize, node: usize) -> &Node {
        self.layers[layer][node]
            .as_ref()
            .unwrap_or_else(|| panic!("node {node} in layer {layer} was pruned"))
    }

    pub fn is_alive(&self, layer: usize, node: usize) -> bool {
        self.layers
            .get(layer)
            .and_then(|l| l.get(node))
            .is_some_and(Option::is_some)
    }

    pub fn nodes(&self, layer: usize) -> impl Iterator<Item = usize> + '_ {
        self.layers[layer]
            .iter()
            .enumerate()
            .filter_map(|(j, n)| n.is_some().then_some(j))
    }

    pub fn success_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes(self.n)
    }

    /// Number of paths from `node` in `layer` to a success node.
    pub fn paths(&self, layer: usize, node: usize) -> &BigUint {
        &self.node(layer, node).paths
    }

    /// Number of accepted words of length `n`.
    pub fn count_paths(&self) -> BigUint {
        self.paths(0, self.start).clone()
    }

    pub fn arcs(&self, layer: usize, node: usize) -> &[Edge] {
        &self.node(layer, node).arcs
    }

    /// Arcs out of `node` labelled `symbol`.
    #[inline]
    pub fn arcs_labelled(&self, layer: usize, node: usize, symbol: Symbol) -> &[Edge] {
        let n = self.node(layer, node);
        let (lo, hi) = n.by_symbol[symbol.index()];
        &n.labelled[lo as usize..hi as usize]
    }

    /// Arcs into `node`, as `(from, symbol)` pairs sorted by `from`.
    pub fn preds(&self, layer: usize, node: usize) -> &[(usize, Symbol)] {
        &self.node(layer, node).preds
    }

    pub fn num_nodes(&self) -> usize {
        self.layers.iter().flatten().filter(|n| n.is_some()).count()
    }

    pub fn num_arcs(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .flatten()
            .map(|n| n.arcs.len())
            .sum()
    }

    /// Successor of `node` drawn with probability proportional to the path
    /// count of the target. `draw` is a uniform 128-bit value.
    #[inline]
    pub fn pick_successor(&self, layer: usize, node: usize, draw: u128) -> usize {
        pick(&self.node(layer, node).arcs, draw).to
    }

    /// Like [`pick_successor`](Self::pick_successor), restricted to arcs
    /// labelled `symbol`. `None` when there is no such arc.
    #[inline]
    pub fn pick_labelled(
        &self,
        layer: usize,
        node: usize,
        symbol: Symbol,
        draw: u128,
    ) -> Option<usize> {
        let arcs = self.arcs_labelled(layer, node, symbol);
        match arcs {
            [] => None,
            [only] => Some(only.to),
            _ => Some(pick(arcs, draw).to),
        }
    }

    /// Line dump: one `layer node -> symbol node` line per arc followed by
    /// `paths layer node count` lines. Layers and nodes are 1-based.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for f in self.nodes(i) {
                for a in self.arcs(i, f) {
                    let _ = writeln!(
                        out,
                        "{} {} -> {} {}",
                        i + 1,
                        f + 1,
                        self.alphabet.name(a.symbol),
                        a.to + 1
                    );
                }
            }
        }
        for i in 0..=self.n {
            for f in self.nodes(i) {
                let _ = writeln!(out, "paths {} {} {}", i + 1, f + 1, self.paths(i, f));
            }
        }
        out
    }

    /// Graphviz dump with one cluster per layer.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph layered {\n  rankdir=LR;\n  node [shape=circle];\n");
        for i in 0..=self.n {
            let _ = writeln!(
                out,
                "  subgraph cluster_{} {{\n    label=\"layer {}\";",
                i + 1,
                i + 1
            );
            for f in self.nodes(i) {
                let shape = if i == self.n {
                    ",shape=doublecircle"
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    "    L{}_{} [label=\"{}\\n{}\"{}];",
                    i + 1,
                    f + 1,
                    f + 1,
                    self.paths(i, f),
                    shape
                );
            }
            out.push_str("  }\n");
        }
        for i in 0..self.n {
            for f in self.nodes(i) {
                for a in self.arcs(i, f) {
                    let _ = writeln!(
                        out,
                        "  L{}_{} -> L{}_{} [label=\"{}\"];",
                        i + 1,
                        f + 1,
                        i + 2,
                        a.to + 1,
                        self.alphabet.name(a.symbol)
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
