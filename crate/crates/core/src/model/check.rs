//! Solution checking that does not rely on the automata.
//!
//! Workloads are counted per weekday, and every rule a constraint was built
//! from is evaluated directly on the cells of its view. Automaton
//! acceptance of each view is reported as well, so a disagreement between
//! the automaton and its rules shows up as a one-sided failure.

use super::instance::{Rule, View, DAYS, DAY_NAMES};
use super::{Model, ModelError};
use crate::automaton::Symbol;

/// Maximal runs of a word as `(value, start, length)`. When `cyclic`, a run
/// may wrap around the end; a constant word is a single run.
pub fn runs(word: &[Symbol], cyclic: bool) -> Vec<(Symbol, usize, usize)> {
    let n = word.len();
    if n == 0 {
        return Vec::new();
    }
    let first = if cyclic {
        match (0..n).find(|&i| word[i] != word[(i + n - 1) % n]) {
            Some(b) => b,
            None => return vec![(word[0], 0, n)],
        }
    } else {
        0
    };
    let mut out: Vec<(Symbol, usize, usize)> = Vec::new();
    for k in 0..n {
        let i = (first + k) % n;
        match out.last_mut() {
            Some(last) if last.0 == word[i] => last.2 += 1,
            _ => out.push((word[i], i, 1)),
        }
    }
    out
}

fn cell_name(cell: usize) -> String {
    format!("week {} {}", cell / DAYS + 1, DAY_NAMES[cell % DAYS])
}

/// Evaluates one rule on `word`, the values of `cells`. Returns a message
/// for the first breach found.
pub fn check_rule(
    rule: &Rule,
    word: &[Symbol],
    cells: &[usize],
    cyclic: bool,
    names: &[String],
) -> Option<String> {
    let n = word.len();
    let name = |s: Symbol| names[s.index()].as_str();
    match rule {
        Rule::Pattern { allowed } => {
            let last = if cyclic { n } else { n.saturating_sub(1) };
            (0..last).find_map(|i| {
                let (a, b) = (word[i], word[(i + 1) % n]);
                (a != b && !allowed.contains(&(a, b))).then(|| {
                    format!(
                        "pattern: `{}` followed by `{}` at {}",
                        name(a),
                        name(b),
                        cell_name(cells[i])
                    )
                })
            })
        }
        Rule::Stretch { bounds } => runs(word, cyclic).into_iter().find_map(|(v, start, len)| {
            let (lo, hi) = bounds[v.index()]?;
            (len < lo || len > hi).then(|| {
                format!(
                    "stretch: run of {len} `{}` from {} (allowed {lo}..{hi})",
                    name(v),
                    cell_name(cells[start])
                )
            })
        }),
        Rule::OffBlock { off, allowed } => {
            let rs = runs(word, cyclic);
            let k = rs.len();
            (0..k).find_map(|j| {
                let (v, start, _) = rs[j];
                if v != *off {
                    return None;
                }
                let (before, after) = if cyclic {
                    if k < 2 {
                        return None;
                    }
                    (rs[(j + k - 1) % k].0, rs[(j + 1) % k].0)
                } else {
                    if j == 0 || j + 1 == k {
                        return None;
                    }
                    (rs[j - 1].0, rs[j + 1].0)
                };
                (!allowed.contains(&(before, after))).then(|| {
                    format!(
                        "off block from {} goes from `{}` to `{}`",
                        cell_name(cells[start]),
                        name(before),
                        name(after)
                    )
                })
            })
        }
    }
}

/// Outcome of checking a complete schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// Every breach found, workloads first, then constraints in order.
    pub failures: Vec<String>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `values` (row-wise, `weeks * 7` cells) against every workload and
/// constraint of `model`.
pub fn check_solution(model: &Model, values: &[Symbol]) -> Result<Verdict, ModelError> {
    if values.len() != model.num_vars() {
        return Err(ModelError::Dimension(format!(
            "schedule has {} cells, instance needs {} ({} weeks x 7)",
            values.len(),
            model.num_vars(),
            model.rows()
        )));
    }
    let al = model.alphabet();
    if let Some(bad) = values.iter().find(|s| s.index() >= al.len()) {
        return Err(ModelError::Dimension(format!(
            "symbol id {} not in alphabet",
            bad.0
        )));
    }
    let mut failures = Vec::new();
    for day in 0..DAYS {
        let mut count = vec![0usize; al.len()];
        for r in 0..model.rows() {
            count[values[r * DAYS + day].index()] += 1;
        }
        for s in al.symbols() {
            let want = model.workload()[day][s.index()];
            if count[s.index()] != want {
                failures.push(format!(
                    "workload: {} has {} `{}`, needs {want}",
                    DAY_NAMES[day],
                    count[s.index()],
                    al.name(s)
                ));
            }
        }
    }
    for c in model.constraints() {
        let word: Vec<Symbol> = c.cells().iter().map(|&i| values[i]).collect();
        if !c.automaton().accepts(&word) {
            failures.push(format!(
                "constraint `{}`: view not accepted by its automaton",
                c.name()
            ));
        }
        let (cells, cyclic) = match c.view() {
            View::RowsCircular => (&c.cells()[..model.num_vars()], true),
            _ => (c.cells(), false),
        };
        let word = &word[..cells.len()];
        for rule in c.rules() {
            if let Some(msg) = check_rule(rule, word, cells, cyclic, al.names()) {
                failures.push(format!("constraint `{}`: {msg}", c.name()));
            }
        }
    }
    Ok(Verdict { failures })
}
