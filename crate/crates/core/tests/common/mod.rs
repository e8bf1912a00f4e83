#![allow(dead_code)]

use automaton_cbls::automaton::{parse_automaton, Alphabet, Automaton, Symbol, Transition};
use rand::Rng;

pub const FIG1: &str = "alphabet d e x
states 6
start 1
accept 5 6
trans 1 d 2
trans 1 x 3
trans 1 e 4
trans 2 x 3
trans 3 d 2
trans 4 x 3
trans 3 e 4
trans 2 d 5
trans 3 x 6
trans 4 e 5
trans 5 x 3
trans 6 d 2
trans 6 e 4
";

pub fn fig1() -> Automaton {
    parse_automaton(FIG1).unwrap()
}

/// Every word of length `n` over `k` symbols, in lexicographic order.
pub fn all_words(k: usize, n: usize) -> impl Iterator<Item = Vec<Symbol>> {
    (0..k.pow(n as u32)).map(move |mut code| {
        let mut w = vec![Symbol(0); n];
        for i in (0..n).rev() {
            w[i] = Symbol((code % k) as u16);
            code /= k;
        }
        w
    })
}

/// Direct simulation of the automaton from `state`, following every branch.
pub fn accepts_from(a: &Automaton, state: usize, word: &[Symbol]) -> bool {
    match word.split_first() {
        None => a.is_accepting(state),
        Some((&s, rest)) => a
            .transitions()
            .iter()
            .any(|t| t.from == state && t.symbol == s && accepts_from(a, t.to, rest)),
    }
}

/// Smallest Hamming distance from `w` to an accepted word of the same
/// length, by enumeration.
pub fn brute_min_hamming(a: &Automaton, w: &[Symbol]) -> Option<usize> {
    all_words(a.alphabet().len(), w.len())
        .filter(|c| accepts_from(a, a.start(), c))
        .map(|c| c.iter().zip(w).filter(|(x, y)| x != y).count())
        .min()
}

/// A random automaton with up to `max_states` states over up to three
/// symbols; `dfa` restricts it to at most one arc per (state, symbol).
pub fn random_automaton(rng: &mut impl Rng, max_states: usize, dfa: bool) -> Automaton {
    let k = rng.gen_range(1..=3);
    let names = ["a", "b", "c"];
    let alphabet = Alphabet::new(names[..k].iter().copied()).unwrap();
    let m = rng.gen_range(1..=max_states);
    let density = rng.gen_range(0.3..0.9);
    let mut transitions = Vec::new();
    for from in 0..m {
        for s in 0..k {
            if dfa {
                if rng.gen_bool(density) {
                    let to = rng.gen_range(0..m);
                    transitions.push(Transition {
                        from,
                        symbol: Symbol(s as u16),
                        to,
                    });
                }
            } else {
                for to in 0..m {
                    if rng.gen_bool((density * 1.5 / m as f64).min(1.0)) {
                        transitions.push(Transition {
                            from,
                            symbol: Symbol(s as u16),
                            to,
                        });
                    }
                }
            }
        }
    }
    let accepting: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.4)).collect();
    Automaton::new(alphabet, m, 0, accepting, transitions).unwrap()
}

pub fn random_word(rng: &mut impl Rng, k: usize, n: usize) -> Vec<Symbol> {
    (0..n).map(|_| Symbol(rng.gen_range(0..k) as u16)).collect()
}
