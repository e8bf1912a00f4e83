//! Line-based automaton text format.
//!
//! ```text
//! # comment
//! alphabet d e x
//! states 6
//! start 1
//! accept 5 6
//! trans 1 d 2
//! ```
//!
//! State ids are 1-based in text and 0-based in memory.

use std::fmt;

use super::{Alphabet, Automaton, AutomatonError, Transition};

fn err(line: usize, msg: impl Into<String>) -> AutomatonError {
    AutomatonError::Parse {
        line,
        msg: msg.into(),
    }
}

fn state_id(tok: &str, line: usize) -> Result<usize, AutomatonError> {
    match tok.parse::<usize>() {
        Ok(0) => Err(err(line, "state ids start at 1")),
        Ok(v) => Ok(v - 1),
        Err(_) => Err(err(line, format!("expected a state id, found `{tok}`"))),
    }
}

pub fn parse_automaton(text: &str) -> Result<Automaton, AutomatonError> {
    let mut alphabet: Option<(usize, Alphabet)> = None;
    let mut states: Option<(usize, usize)> = None;
    let mut start: Option<(usize, usize)> = None;
    let mut accept: Vec<(usize, usize)> = Vec::new();
    let mut trans: Vec<(usize, usize, String, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(key) = toks.next() else { continue };
        let rest: Vec<&str> = toks.collect();
        match key {
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(err(line, "duplicate `alphabet`"));
                }
                if rest.is_empty() {
                    return Err(err(line, "empty alphabet"));
                }
                let al =
                    Alphabet::new(rest.iter().copied()).map_err(|e| err(line, e.to_string()))?;
                alphabet = Some((line, al));
            }
            "states" => {
                if states.is_some() {
                    return Err(err(line, "duplicate `states`"));
                }
                let [n] = rest[..] else {
                    return Err(err(line, "`states` takes one count"));
                };
                let n = n
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| err(line, format!("bad state count `{n}`")))?;
                states = Some((line, n));
            }
            "start" => {
                if start.is_some() {
                    return Err(err(line, "duplicate `start`"));
                }
                let [s] = rest[..] else {
                    return Err(err(line, "`start` takes one state"));
                };
                start = Some((line, state_id(s, line)?));
            }
            "accept" => {
                for tok in rest {
                    accept.push((line, state_id(tok, line)?));
                }
            }
            "trans" => {
                let [f, sym, t] = rest[..] else {
                    return Err(err(line, "expected `trans <from> <symbol> <to>`"));
                };
                trans.push((
                    line,
                    state_id(f, line)?,
                    sym.to_string(),
                    state_id(t, line)?,
                ));
            }
            other => return Err(err(line, format!("unknown directive `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let (_, alphabet) = alphabet.ok_or_else(|| err(last, "missing `alphabet`"))?;
    let (_, num_states) = states.ok_or_else(|| err(last, "missing `states`"))?;
    let (start_line, start) = start.ok_or_else(|| err(last, "missing `start`"))?;

    let undeclared = |line: usize, s: usize| {
        err(
            line,
            format!(
                "state {} not declared (automaton has {num_states} states)",
                s + 1
            ),
        )
    };
    if start >= num_states {
        return Err(undeclared(start_line, start));
    }
    for &(line, s) in &accept {
        if s >= num_states {
            return Err(undeclared(line, s));
        }
    }
    let mut transitions = Vec::with_capacity(trans.len());
    for (line, from, sym, to) in trans {
        for s in [from, to] {
            if s >= num_states {
                return Err(undeclared(line, s));
            }
        }
        let symbol = alphabet
            .symbol(&sym)
            .map_err(|_| err(line, format!("symbol `{sym}` not in alphabet")))?;
        transitions.push(Transition { from, symbol, to });
    }
    Automaton::new(
        alphabet,
        num_states,
        start,
        accept.into_iter().map(|(_, s)| s),
        transitions,
    )
}

pub(super) fn write_automaton(a: &Automaton, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    writeln!(f, "alphabet {}", a.alphabet().names().join(" "))?;
    writeln!(f, "states {}", a.num_states())?;
    writeln!(f, "start {}", a.start() + 1)?;
    write!(f, "accept")?;
    for s in a.accepting_states() {
        write!(f, " {}", s + 1)?;
    }
    writeln!(f)?;
    for t in a.transitions() {
        writeln!(
            f,
            "trans {} {} {}",
            t.from + 1,
            a.alphabet().name(t.symbol),
            t.to + 1
        )?;
    }
    Ok(())
}
