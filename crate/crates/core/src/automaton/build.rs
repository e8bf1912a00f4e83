//! Generators for the rostering constraints used by the models: shift
//! transition patterns, run-length (stretch) bounds and off-block patterns.

use std::collections::HashSet;

use super::{Alphabet, Automaton, AutomatonError, Symbol, Transition};

/// Allowed run lengths for one value. `max == None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunBound {
    pub min: usize,
    pub max: Option<usize>,
}

fn check_symbol(alphabet: &Alphabet, s: Symbol) -> Result<(), AutomatonError> {
    if s.index() < alphabet.len() {
        Ok(())
    } else {
        Err(AutomatonError::SymbolOutOfRange(s.0))
    }
}

/// Words in which every change between two adjacent distinct values is one
/// of `allowed_pairs`. Equal neighbours are always allowed.
///
/// One state per last symbol seen, plus the start state.
pub fn build_pattern(
    alphabet: &Alphabet,
    allowed_pairs: &[(Symbol, Symbol)],
) -> Result<Automaton, AutomatonError> {
    for &(a, b) in allowed_pairs {
        check_symbol(alphabet, a)?;
        check_symbol(alphabet, b)?;
    }
    let allowed: HashSet<(Symbol, Symbol)> = allowed_pairs.iter().copied().collect();
    let k = alphabet.len();
    let last = |s: Symbol| 1 + s.index();
    let mut trans = Vec::new();
    for v in alphabet.symbols() {
        trans.push(Transition {
            from: 0,
            symbol: v,
            to: last(v),
        });
        for u in alphabet.symbols() {
            if u == v || allowed.contains(&(u, v)) {
                trans.push(Transition {
                    from: last(u),
                    symbol: v,
                    to: last(v),
                });
            }
        }
    }
    Automaton::new(alphabet.clone(), k + 1, 0, 0..=k, trans)
}

fn stretch_bounds(
    alphabet: &Alphabet,
    values: &[Symbol],
    min_len: &[usize],
    max_len: &[usize],
) -> Result<Vec<RunBound>, AutomatonError> {
    if values.len() != min_len.len() || values.len() != max_len.len() {
        return Err(AutomatonError::Bounds(format!(
            "{} values but {} minimum and {} maximum lengths",
            values.len(),
            min_len.len(),
            max_len.len()
        )));
    }
    let mut bounds = vec![RunBound { min: 1, max: None }; alphabet.len()];
    let mut seen = vec![false; alphabet.len()];
    for ((&v, &lo), &hi) in values.iter().zip(min_len).zip(max_len) {
        check_symbol(alphabet, v)?;
        if std::mem::replace(&mut seen[v.index()], true) {
            return Err(AutomatonError::Bounds(format!(
                "value `{}` listed twice",
                alphabet.name(v)
            )));
        }
        if lo < 1 || lo > hi {
            return Err(AutomatonError::Bounds(format!(
                "need 1 <= min <= max for `{}`, got [{lo}, {hi}]",
                alphabet.name(v)
            )));
        }
        bounds[v.index()] = RunBound {
            min: lo,
            max: Some(hi),
        };
    }
    Ok(bounds)
}

/// Every maximal run of value `values[k]` has a length within
/// `[min_len[k], max_len[k]]`. Values not listed are unconstrained.
pub fn build_stretch(
    alphabet: &Alphabet,
    values: &[Symbol],
    min_len: &[usize],
    max_len: &[usize],
) -> Result<Automaton, AutomatonError> {
    let bounds = stretch_bounds(alphabet, values, min_len, max_len)?;
    Ok(stretch_automaton(alphabet, &bounds, false))
}

/// Stretch variant for a window `X ++ X[..k]` over a cyclic sequence `X`.
///
/// The first and the last run of the window may be fragments of a run that
/// crosses the window edge, so only their upper bound is checked. With `k` at
/// least the largest upper bound, every cyclic run is checked in full
/// somewhere inside the window.
pub fn build_circular_stretch(
    alphabet: &Alphabet,
    values: &[Symbol],
    min_len: &[usize],
    max_len: &[usize],
) -> Result<Automaton, AutomatonError> {
    let bounds = stretch_bounds(alphabet, values, min_len, max_len)?;
    Ok(stretch_automaton(alphabet, &bounds, true))
}

fn stretch_automaton(alphabet: &Alphabet, bounds: &[RunBound], relaxed_ends: bool) -> Automaton {
    // states: 0 = start, then per value `cap` run-length states, duplicated
    // for the first run when the ends are relaxed
    let caps: Vec<usize> = bounds
        .iter()
        .map(|b| b.max.unwrap_or(b.min).max(1))
        .collect();
    let copies = if relaxed_ends { 2 } else { 1 };
    let mut offset = Vec::with_capacity(bounds.len());
    let mut next = 1;
    for &cap in &caps {
        offset.push(next);
        next += cap * copies;
    }
    // first == true only exists when relaxed_ends
    let id =
        |v: usize, len: usize, first: bool| offset[v] + (len - 1) + if first { caps[v] } else { 0 };

    let mut trans = Vec::new();
    let mut accepting = vec![0];
    for v in alphabet.symbols() {
        trans.push(Transition {
            from: 0,
            symbol: v,
            to: id(v.index(), 1, relaxed_ends),
        });
    }
    for v in 0..bounds.len() {
        for first in [false, true].into_iter().take(copies) {
            for len in 1..=caps[v] {
                let from = id(v, len, first);
                if relaxed_ends || len >= bounds[v].min {
                    accepting.push(from);
                }
                for u in alphabet.symbols() {
                    let ui = u.index();
                    if ui == v {
                        if len < caps[v] {
                            trans.push(Transition {
                                from,
                                symbol: u,
                                to: id(v, len + 1, first),
                            });
                        } else if bounds[v].max.is_none() {
                            trans.push(Transition {
                                from,
                                symbol: u,
                                to: from,
                            });
                        }
                    } else if (first && relaxed_ends) || len >= bounds[v].min {
                        trans.push(Transition {
                            from,
                            symbol: u,
                            to: id(ui, 1, false),
                        });
                    }
                }
            }
        }
    }
    Automaton::new(alphabet.clone(), next, 0, accepting, trans)
        .expect("stretch automaton is well formed")
}

/// Constrains what may surround a block of `off`: for every maximal block of
/// `off` with a work value `s` before it and `t` after it, `(s, t)` must be
/// one of `allowed`. Blocks at either end of the word are unconstrained.
pub fn build_offblock_pattern(
    alphabet: &Alphabet,
    off: Symbol,
    allowed: &[(Symbol, Symbol)],
) -> Result<Automaton, AutomatonError> {
    check_symbol(alphabet, off)?;
    for &(a, b) in allowed {
        check_symbol(alphabet, a)?;
        check_symbol(alphabet, b)?;
    }
    let allowed: HashSet<(Symbol, Symbol)> = allowed.iter().copied().collect();
    let k = alphabet.len();
    // 0 = no work seen yet; 1 + s = just worked s; 1 + k + s = off after s
    let work = |s: Symbol| 1 + s.index();
    let rest = |s: Symbol| 1 + k + s.index();
    let mut trans = vec![Transition {
        from: 0,
        symbol: off,
        to: 0,
    }];
    let mut accepting = vec![0];
    for s in alphabet.symbols().filter(|&s| s != off) {
        accepting.extend([work(s), rest(s)]);
        trans.push(Transition {
            from: 0,
            symbol: s,
            to: work(s),
        });
        trans.push(Transition {
            from: work(s),
            symbol: off,
            to: rest(s),
        });
        trans.push(Transition {
            from: rest(s),
            symbol: off,
            to: rest(s),
        });
        for t in alphabet.symbols().filter(|&t| t != off) {
            trans.push(Transition {
                from: work(s),
                symbol: t,
                to: work(t),
            });
            if allowed.contains(&(s, t)) {
                trans.push(Transition {
                    from: rest(s),
                    symbol: t,
                    to: work(t),
                });
            }
        }
    }
    Ok(Automaton::new(alphabet.clone(), 1 + 2 * k, 0, accepting, trans)?.trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dex() -> Alphabet {
        Alphabet::new(["d", "e", "n", "x"]).unwrap()
    }

    fn pairs(al: &Alphabet, spec: &[&str]) -> Vec<(Symbol, Symbol)> {
        spec.iter()
            .map(|p| {
                let w = al.parse_word(p).unwrap();
                (w[0], w[1])
            })
            .collect()
    }

    fn words(k: usize, len: usize) -> impl Iterator<Item = Vec<Symbol>> {
        (0..k.pow(len as u32)).map(move |mut code| {
            (0..len)
                .map(|_| {
                    let s = Symbol((code % k) as u16);
                    code /= k;
                    s
                })
                .collect()
        })
    }

    // Oracles written directly over the word, independent of the generators.
    fn pattern_ok(w: &[Symbol], allowed: &[(Symbol, Symbol)]) -> bool {
        w.windows(2)
            .all(|p| p[0] == p[1] || allowed.contains(&(p[0], p[1])))
    }

    fn runs(w: &[Symbol]) -> Vec<(Symbol, usize)> {
        let mut out: Vec<(Symbol, usize)> = Vec::new();
        for &s in w {
            match out.last_mut() {
                Some((v, n)) if *v == s => *n += 1,
                _ => out.push((s, 1)),
            }
        }
        out
    }

    fn stretch_ok(w: &[Symbol], lo: usize, hi: usize) -> bool {
        runs(w).iter().all(|&(_, n)| lo <= n && n <= hi)
    }

    fn offblock_ok(w: &[Symbol], off: Symbol, allowed: &[(Symbol, Symbol)]) -> bool {
        let r = runs(w);
        (1..r.len().saturating_sub(1))
            .filter(|&i| r[i].0 == off)
            .all(|i| allowed.contains(&(r[i - 1].0, r[i + 1].0)))
    }

    const ROT_PAIRS: [&str; 6] = ["dx", "ex", "nx", "xd", "xe", "xn"];

    #[test]
    fn pattern_all_pairs_accepts_everything() {
        let al = dex();
        let all: Vec<_> = al
            .symbols()
            .flat_map(|a| al.symbols().map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect();
        let p = build_pattern(&al, &all).unwrap();
        for len in 1..=5 {
            assert!(words(4, len).all(|w| p.accepts(&w)));
        }
    }

    #[test]
    fn rotating_pattern_examples_and_counts() {
        let al = dex();
        let allowed = pairs(&al, &ROT_PAIRS);
        let p = build_pattern(&al, &allowed).unwrap();
        assert!(!p.accepts(&al.parse_word("de").unwrap()));
        assert!(p.accepts(&al.parse_word("dxe").unwrap()));
        for len in 0..=7 {
            for w in words(4, len) {
                assert_eq!(p.accepts(&w), pattern_ok(&w, &allowed), "{w:?}");
            }
        }
        let count4 = words(4, 4).filter(|w| p.accepts(w)).count();
        let brute = words(4, 4).filter(|w| pattern_ok(w, &allowed)).count();
        assert_eq!(count4, brute);
    }

    #[test]
    fn stretch_examples_and_enumeration() {
        let al = dex();
        let vals: Vec<_> = al.symbols().collect();
        let s = build_stretch(&al, &vals, &[2; 4], &[7; 4]).unwrap();
        assert!(!s.accepts(&al.parse_word("d").unwrap()));
        assert!(s.accepts(&al.parse_word("dd").unwrap()));
        for len in 1..=8 {
            for w in words(4, len) {
                assert_eq!(s.accepts(&w), stretch_ok(&w, 2, 7), "{w:?}");
            }
        }
        // tight upper bound
        let s = build_stretch(&al, &vals, &[1; 4], &[3; 4]).unwrap();
        for len in 1..=7 {
            for w in words(4, len) {
                assert_eq!(s.accepts(&w), stretch_ok(&w, 1, 3));
            }
        }
    }

    #[test]
    fn stretch_unconstrained() {
        let al = Alphabet::new(["a", "b", "c"]).unwrap();
        let vals: Vec<_> = al.symbols().collect();
        let s = build_stretch(&al, &vals, &[1; 3], &[8; 3]).unwrap();
        for len in 1..=8 {
            assert!(words(3, len).all(|w| s.accepts(&w)));
        }
        // unlisted values are unbounded
        let s = build_stretch(&al, &[], &[], &[]).unwrap();
        assert!(s.accepts(&[Symbol(1); 20]));
    }

    #[test]
    fn stretch_rejects_bad_bounds() {
        let al = dex();
        let d = Symbol(0);
        assert!(build_stretch(&al, &[d], &[0], &[3]).is_err());
        assert!(build_stretch(&al, &[d], &[4], &[3]).is_err());
        assert!(build_stretch(&al, &[d, d], &[1, 1], &[2, 2]).is_err());
        assert!(build_stretch(&al, &[d], &[1, 2], &[2]).is_err());
    }

    #[test]
    fn circular_stretch_relaxes_only_end_minimums() {
        let al = Alphabet::new(["a", "b", "c"]).unwrap();
        let vals: Vec<_> = al.symbols().collect();
        let c = build_circular_stretch(&al, &vals, &[2; 3], &[3; 3]).unwrap();
        for len in 1..=8 {
            for w in words(3, len) {
                let r = runs(&w);
                let last = r.len() - 1;
                let ok = r
                    .iter()
                    .enumerate()
                    .all(|(i, &(_, n))| n <= 3 && (i == 0 || i == last || n >= 2));
                assert_eq!(c.accepts(&w), ok, "{w:?}");
            }
        }
    }

    #[test]
    fn offblock_examples_and_enumeration() {
        let al = dex();
        let x = al.symbol("x").unwrap();
        let allowed = pairs(&al, &["dd", "ee", "nn", "de", "en", "nd"]);
        let o = build_offblock_pattern(&al, x, &allowed).unwrap();
        assert!(o.accepts(&al.parse_word("dxxe").unwrap()));
        assert!(!o.accepts(&al.parse_word("exd").unwrap()));
        for len in 0..=6 {
            for w in words(4, len) {
                assert_eq!(o.accepts(&w), offblock_ok(&w, x, &allowed), "{w:?}");
            }
        }
    }

    #[test]
    fn offblock_all_pairs_is_unconstrained() {
        let al = dex();
        let x = al.symbol("x").unwrap();
        let work: Vec<_> = al.symbols().filter(|&s| s != x).collect();
        let all: Vec<_> = work
            .iter()
            .flat_map(|&a| work.iter().map(move |&b| (a, b)))
            .collect();
        let o = build_offblock_pattern(&al, x, &all).unwrap();
        for len in 0..=6 {
            assert!(words(4, len).all(|w| o.accepts(&w)));
        }
    }

    #[test]
    fn pattern_stretch_product_matches_enumeration() {
        let al = dex();
        let allowed = pairs(&al, &ROT_PAIRS);
        let vals: Vec<_> = al.symbols().collect();
        let p = build_pattern(&al, &allowed).unwrap();
        let s = build_stretch(&al, &vals, &[2; 4], &[7; 4]).unwrap();
        let ps = p.product(&s).unwrap();
        for len in 0..=8 {
            for w in words(4, len) {
                assert_eq!(
                    ps.accepts(&w),
                    pattern_ok(&w, &allowed) && stretch_ok(&w, 2, 7),
                    "{w:?}"
                );
            }
        }
    }
}
