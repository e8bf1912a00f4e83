//! Finite automata over a small symbol alphabet.
//!
//! An [`Automaton`] is a possibly nondeterministic automaton with a single
//! start state. There is no explicit failure state: a missing transition
//! rejects the word. Automata are immutable once built and can be shared
//! between threads freely.

mod build;
mod text;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub use build::{
    build_circular_stretch, build_offblock_pattern, build_pattern, build_stretch, RunBound,
};
pub use text::parse_automaton;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("state {state} out of range (automaton has {num_states} states)")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("symbol id {0} not in alphabet")]
    SymbolOutOfRange(u16),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}` in alphabet")]
    DuplicateSymbol(String),
    #[error("automata have different alphabets")]
    AlphabetMismatch,
    #[error("invalid bounds: {0}")]
    Bounds(String),
}

/// Index of a symbol in its [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u16);

impl Symbol {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense table of symbol names; symbol ids are `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(AutomatonError::DuplicateSymbol(n.clone()));
            }
        }
        if names.len() > u16::MAX as usize {
            return Err(AutomatonError::Bounds("alphabet too large".into()));
        }
        Ok(Alphabet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.names.len() as u16).map(Symbol)
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.names[s.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn symbol(&self, name: &str) -> Result<Symbol, AutomatonError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| Symbol(i as u16))
            .ok_or_else(|| AutomatonError::UnknownSymbol(name.to_string()))
    }

    /// Parses a word written either as space separated names or, when every
    /// symbol name is a single character, as a plain string like `"xedexx"`.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Symbol>, AutomatonError> {
        let text = text.trim();
        if text.contains(char::is_whitespace) || text.contains(',') {
            return text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| self.symbol(t))
                .collect();
        }
        if self.names.iter().all(|n| n.chars().count() == 1) {
            return text
                .chars()
                .map(|c| self.symbol(c.encode_utf8(&mut [0; 4])))
                .collect();
        }
        if text.is_empty() {
            Ok(Vec::new())
        } else {
            Ok(vec![self.symbol(text)?])
        }
    }

    pub fn format_word(&self, word: &[Symbol]) -> String {
        let sep = if self.names.iter().all(|n| n.chars().count() == 1) {
            ""
        } else {
            " "
        };
        word.iter()
            .map(|&s| self.name(s))
            .collect::<Vec<_>>()
            .join(sep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: usize,
    pub symbol: Symbol,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct Automaton {
    alphabet: Alphabet,
    num_states: usize,
    start: usize,
    accepting: Vec<bool>,
    transitions: Vec<Transition>,
    // out[state] = (symbol, to), sorted
    out: Vec<Vec<(Symbol, usize)>>,
    deterministic: bool,
}

impl Automaton {
    /// Builds an automaton, validating state and symbol ranges.
    /// Duplicate transitions are merged; `deterministic` is derived.
    pub fn new(
        alphabet: Alphabet,
        num_states: usize,
        start: usize,
        accepting: impl IntoIterator<Item = usize>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, AutomatonError> {
        if num_states == 0 {
            return Err(AutomatonError::Bounds(
                "automaton needs at least one state".into(),
            ));
        }
        let check = |state: usize| {
            if state < num_states {
                Ok(())
            } else {
                Err(AutomatonError::StateOutOfRange { state, num_states })
            }
        };
        check(start)?;
        let mut acc = vec![false; num_states];
        for a in accepting {
            check(a)?;
            acc[a] = true;
        }
        let mut transitions: Vec<Transition> = transitions.into_iter().collect();
        for t in &transitions {
            check(t.from)?;
            check(t.to)?;
            if t.symbol.index() >= alphabet.len() {
                return Err(AutomatonError::SymbolOutOfRange(t.symbol.0));
            }
        }
        transitions.sort();
        transitions.dedup();
        let mut out = vec![Vec::new(); num_states];
        for t in &transitions {
            out[t.from].push((t.symbol, t.to));
        }
        let deterministic = out
            .iter()
            .all(|arcs| arcs.windows(2).all(|w| w[0].0 != w[1].0));
        Ok(Automaton {
            alphabet,
            num_states,
            start,
            accepting: acc,
            transitions,
            out,
            deterministic,
        })
    }

    /// The automaton accepting every word over `alphabet`.
    pub fn universal(alphabet: Alphabet) -> Self {
        let trans: Vec<_> = alphabet
            .symbols()
            .map(|symbol| Transition {
                from: 0,
                symbol,
                to: 0,
            })
            .collect();
        Automaton::new(alphabet, 1, 0, [0], trans).expect("universal automaton is well formed")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.accepting
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// Outgoing arcs of `state`, sorted by symbol then target.
    pub fn arcs(&self, state: usize) -> &[(Symbol, usize)] {
        &self.out[state]
    }

    pub fn successors(&self, state: usize, symbol: Symbol) -> impl Iterator<Item = usize> + '_ {
        self.out[state]
            .iter()
            .filter(move |(s, _)| *s == symbol)
            .map(|&(_, t)| t)
    }

    /// True iff some run over `word` ends in an accepting state.
    pub fn accepts(&self, word: &[Symbol]) -> bool {
        let mut current = vec![false; self.num_states];
        current[self.start] = true;
        let mut next = vec![false; self.num_states];
        for &sym in word {
            next.iter_mut().for_each(|b| *b = false);
            let mut any = false;
            for (q, _) in current.iter().enumerate().filter(|(_, &on)| on) {
                for t in self.successors(q, sym) {
                    next[t] = true;
                    any = true;
                }
            }
            if !any {
                return false;
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
            .iter()
            .zip(&self.accepting)
            .any(|(&on, &acc)| on && acc)
    }

    /// Removes states that are unreachable from the start or cannot reach an
    /// accepting state. The start state is always kept, so an automaton with
    /// an empty language trims to a single rejecting state.
    pub fn trim(&self) -> Automaton {
        let reach = self.forward_reachable();
        let coreach = self.backward_reachable();
        let mut remap = vec![usize::MAX; self.num_states];
        let mut next = 0;
        for q in 0..self.num_states {
            if q == self.start || (reach[q] && coreach[q]) {
                remap[q] = next;
                next += 1;
            }
        }
        let trans = self.transitions.iter().filter_map(|t| {
            let (f, to) = (remap[t.from], remap[t.to]);
            (f != usize::MAX && to != usize::MAX && coreach[t.to]).then_some(Transition {
                from: f,
                symbol: t.symbol,
                to,
            })
        });
        let acc = self
            .accepting_states()
            .filter(|&q| remap[q] != usize::MAX)
            .map(|q| remap[q])
            .collect::<Vec<_>>();
        Automaton::new(self.alphabet.clone(), next, remap[self.start], acc, trans)
            .expect("trimmed automaton is well formed")
    }

    fn forward_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(q) = queue.pop_front() {
            for &(_, t) in &self.out[q] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    fn backward_reachable(&self) -> Vec<bool> {
        let mut rev = vec![Vec::new(); self.num_states];
        for t in &self.transitions {
            rev[t.to].push(t.from);
        }
        let mut seen = self.accepting.clone();
        let mut queue: VecDeque<usize> = self.accepting_states().collect();
        while let Some(q) = queue.pop_front() {
            for &f in &rev[q] {
                if !seen[f] {
                    seen[f] = true;
                    queue.push_back(f);
                }
            }
        }
        seen
    }

    /// Synchronous product: accepts the intersection of both languages.
    /// The result is trimmed and its states numbered in breadth-first order
    /// from the start pair.
    pub fn product(&self, other: &Automaton) -> Result<Automaton, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch);
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(self.start, other.start)];
        index.insert((self.start, other.start), 0);
        let mut trans = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (a, b) = pairs[i];
            for &(sym, ta) in &self.out[a] {
                for tb in other.successors(b, sym) {
                    let id = *index.entry((ta, tb)).or_insert_with(|| {
                        pairs.push((ta, tb));
                        pairs.len() - 1
                    });
                    trans.push(Transition {
                        from: i,
                        symbol: sym,
                        to: id,
                    });
                }
            }
            i += 1;
        }
        let acc = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| self.accepting[a] && other.accepting[b])
            .map(|(i, _)| i)
            .collect::<Vec<_>>();
        Ok(Automaton::new(self.alphabet.clone(), pairs.len(), 0, acc, trans)?.trim())
    }
}

impl fmt::Display for Automaton {
    /// Serialises in the line-based text format read by [`parse_automaton`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_automaton(self, f)
    }
}
