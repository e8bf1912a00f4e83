//! Instance descriptions and the JSON instance file format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::automaton::{
    build_circular_stretch, build_offblock_pattern, build_pattern, build_stretch, parse_automaton,
    Alphabet, Automaton, Symbol,
};

pub const DAYS: usize = 7;
pub const DAY_NAMES: [&str; DAYS] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ViolationMode {
    /// Segmentation with weighted random path completion.
    #[default]
    Segment,
    /// Minimum Hamming distance to an accepted word.
    Hamming,
}

impl std::str::FromStr for ViolationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "segment" => Ok(ViolationMode::Segment),
            "hamming" => Ok(ViolationMode::Hamming),
            _ => Err(format!("unknown violation mode `{s}` (segment | hamming)")),
        }
    }
}

impl std::fmt::Display for ViolationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ViolationMode::Segment => "segment",
            ViolationMode::Hamming => "hamming",
        })
    }
}

/// Which cells of the schedule a constraint reads, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum View {
    /// The schedule flattened row-wise, followed by its first `overlap`
    /// cells again so runs crossing the wrap are seen whole.
    RowsCircular,
    /// One weekday column, top to bottom.
    Column(usize),
    /// Explicit cell indices into the row-wise flattening.
    Indices(Vec<usize>),
}

impl Serialize for View {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            View::RowsCircular => s.serialize_str("rows-circular"),
            View::Column(d) => s.serialize_str(&format!("column:{}", DAY_NAMES[*d].to_lowercase())),
            View::Indices(ix) => ix.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for View {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Indices(Vec<usize>),
        }
        match Raw::deserialize(d)? {
            Raw::Indices(ix) => Ok(View::Indices(ix)),
            Raw::Name(name) if name == "rows-circular" => Ok(View::RowsCircular),
            Raw::Name(name) => {
                let day = name
                    .strip_prefix("column:")
                    .and_then(|day| {
                        day.parse::<usize>()
                            .ok()
                            .filter(|&d| d < DAYS)
                            .or_else(|| DAY_NAMES.iter().position(|n| n.eq_ignore_ascii_case(day)))
                    })
                    .ok_or_else(|| serde::de::Error::custom(format!("unknown view `{name}`")))?;
                Ok(View::Column(day))
            }
        }
    }
}

/// How a constraint's automaton is obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AutomatonSource {
    /// Inline automaton in the line-based text format.
    Text { text: String },
    /// Automaton text file, relative to the instance file.
    File { path: PathBuf },
    /// Allowed changes between adjacent distinct values.
    Pattern { pairs: Vec<(String, String)> },
    /// Run-length bounds per value.
    Stretch {
        values: Vec<String>,
        min: Vec<usize>,
        max: Vec<usize>,
        #[serde(default)]
        circular: bool,
    },
    /// Allowed (before, after) work values around each block of `off`.
    Offblock {
        off: String,
        pairs: Vec<(String, String)>,
    },
    /// Intersection of several automata.
    Product { of: Vec<AutomatonSource> },
}

/// A direct predicate that the independent validator evaluates on the
/// cells of a view, without going through any automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Pattern {
        allowed: Vec<(Symbol, Symbol)>,
    },
    Stretch {
        bounds: Vec<Option<(usize, usize)>>,
    },
    OffBlock {
        off: Symbol,
        allowed: Vec<(Symbol, Symbol)>,
    },
}

fn symbols(al: &Alphabet, names: &[String]) -> Result<Vec<Symbol>, ModelError> {
    names
        .iter()
        .map(|n| al.symbol(n).map_err(ModelError::from))
        .collect()
}

fn pairs(al: &Alphabet, raw: &[(String, String)]) -> Result<Vec<(Symbol, Symbol)>, ModelError> {
    raw.iter()
        .map(|(a, b)| Ok((al.symbol(a)?, al.symbol(b)?)))
        .collect()
}

impl AutomatonSource {
    /// Builds the automaton and collects the direct predicates it encodes.
    pub fn compile(
        &self,
        al: &Alphabet,
        base_dir: &Path,
    ) -> Result<(Automaton, Vec<Rule>), ModelError> {
        Ok(match self {
            AutomatonSource::Text { text } => (parse_automaton(text)?, Vec::new()),
            AutomatonSource::File { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| ModelError::Io(format!("{}: {e}", full.display())))?;
                (parse_automaton(&text)?, Vec::new())
            }
            AutomatonSource::Pattern { pairs: raw } => {
                let allowed = pairs(al, raw)?;
                (
                    build_pattern(al, &allowed)?,
                    vec![Rule::Pattern { allowed }],
                )
            }
            AutomatonSource::Stretch {
                values,
                min,
                max,
                circular,
            } => {
                let vals = symbols(al, values)?;
                let a = if *circular {
                    build_circular_stretch(al, &vals, min, max)?
                } else {
                    build_stretch(al, &vals, min, max)?
                };
                let mut bounds = vec![None; al.len()];
                for ((v, &lo), &hi) in vals.iter().zip(min).zip(max) {
                    bounds[v.index()] = Some((lo, hi));
                }
                (a, vec![Rule::Stretch { bounds }])
            }
            AutomatonSource::Offblock { off, pairs: raw } => {
                let off = al.symbol(off)?;
                let allowed = pairs(al, raw)?;
                (
                    build_offblock_pattern(al, off, &allowed)?,
                    vec![Rule::OffBlock { off, allowed }],
                )
            }
            AutomatonSource::Product { of } => {
                let mut parts = of.iter();
                let first = parts
                    .next()
                    .ok_or_else(|| ModelError::Invalid("empty product".into()))?;
                let (mut acc, mut rules) = first.compile(al, base_dir)?;
                for p in parts {
                    let (a, r) = p.compile(al, base_dir)?;
                    acc = acc.product(&a)?;
                    rules.extend(r);
                }
                (acc, rules)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintDef {
    #[serde(default)]
    pub name: String,
    pub automaton: AutomatonSource,
    pub view: View,
    #[serde(default)]
    pub mode: ViolationMode,
}

/// A cyclic roster: `weeks` rows of seven days, one row per team in the
/// first week. Each weekday column must hold exactly its workload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub alphabet: Vec<String>,
    pub teams: usize,
    pub weeks: usize,
    /// Per weekday, the number of teams on each value.
    pub workload: Vec<std::collections::BTreeMap<String, usize>>,
    pub constraints: Vec<ConstraintDef>,
    /// Cells repeated after the end of a circular view.
    #[serde(default)]
    pub overlap: usize,
    /// Rows repeated top to bottom to form the non-random start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<Vec<String>>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }

    pub fn num_vars(&self) -> usize {
        self.weeks * DAYS
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn name_pairs(list: &[&str]) -> Vec<(String, String)> {
    list.iter()
        .map(|p| {
            let mut c = p.chars();
            (c.next().unwrap().to_string(), c.next().unwrap().to_string())
        })
        .collect()
}

fn uniform_workload(counts: &[(&str, usize)]) -> Vec<std::collections::BTreeMap<String, usize>> {
    let day: std::collections::BTreeMap<String, usize> =
        counts.iter().map(|&(s, c)| (s.to_string(), c)).collect();
    vec![day; DAYS]
}

const SHIFT_CHANGES: [&str; 6] = ["dx", "ex", "nx", "xd", "xe", "xn"];

/// Rotating roster with daily workload `(2i d, i e, i n, 2i x)` over `6i`
/// weeks: shifts change only through days off, and every run of equal
/// values is 2 to 7 days long, around the cycle.
pub fn rotating_instance(scale: usize) -> Instance {
    assert!(scale >= 1, "scale must be at least 1");
    let teams = 6 * scale;
    Instance {
        name: format!("rotating-{scale}"),
        note: Some(
            "reconstruction: runs around the cycle are checked on the grid followed by its first 7 days, \
             with the first and last run of that window only bounded above"
                .into(),
        ),
        alphabet: names(&["d", "e", "n", "x"]),
        teams,
        weeks: teams,
        workload: uniform_workload(&[
            ("d", 2 * scale),
            ("e", scale),
            ("n", scale),
            ("x", 2 * scale),
        ]),
        constraints: vec![ConstraintDef {
            name: "pattern+stretch".into(),
            automaton: AutomatonSource::Product {
                of: vec![
                    AutomatonSource::Pattern {
                        pairs: name_pairs(&SHIFT_CHANGES),
                    },
                    AutomatonSource::Stretch {
                        values: names(&["d", "e", "n", "x"]),
                        min: vec![2; 4],
                        max: vec![7; 4],
                        circular: true,
                    },
                ],
            },
            view: View::RowsCircular,
            mode: ViolationMode::Segment,
        }],
        overlap: 7,
        tile: Some(names(&[
            "ddddddd", "eeeeeee", "nnnnnnn", "xxxxxxx", "ddddddd", "xxxxxxx",
        ])),
    }
}

/// The five-week `(1d, 1e, 1n, 2x)` rotating roster family, with the same
/// rules as [`rotating_instance`].
pub fn five_week_instance() -> Instance {
    let mut inst = rotating_instance(1);
    inst.name = "five-week".into();
    inst.teams = 5;
    inst.weeks = 5;
    inst.workload = uniform_workload(&[("d", 1), ("e", 1), ("n", 1), ("x", 2)]);
    inst.tile = None;
    inst
}

/// The published five-week schedule, row by row.
pub const FIVE_WEEK_SCHEDULE: [&str; 5] = ["xxxdddd", "xxeeexx", "dddxxee", "eexxnnn", "nnnnxxx"];

/// Reconstruction of the 17-week police roster: work runs of 3 to 8 days,
/// 2 to 7 days off, shift changes only through days off and only along
/// d -> e -> n -> d, and no shift on four consecutive Mondays.
///
/// Monday and Sunday workloads are the published ones. Tuesday to Saturday
/// are not published; the values here were chosen so that the instance is
/// known to be feasible and are not canonical.
pub fn st_louis_instance() -> Instance {
    let mut workload = Vec::new();
    let day = |d: usize, e: usize, n: usize, x: usize| {
        [("d", d), ("e", e), ("n", n), ("x", x)]
            .iter()
            .map(|&(s, c)| (s.to_string(), c))
            .collect::<std::collections::BTreeMap<_, _>>()
    };
    workload.push(day(5, 4, 5, 3)); // Mon
    for &(d, e, n, x) in &ST_LOUIS_MIDWEEK {
        workload.push(day(d, e, n, x));
    }
    workload.push(day(3, 4, 4, 6)); // Sun
    Instance {
        name: "st-louis".into(),
        note: Some(
            "reconstruction: the constraint set follows the published description only; \
             Tuesday-Saturday workloads are not published and were read off a feasible schedule \
             (st-louis.schedule)"
                .into(),
        ),
        alphabet: names(&["d", "e", "n", "x"]),
        teams: 17,
        weeks: 17,
        workload,
        constraints: vec![
            ConstraintDef {
                name: "rows".into(),
                automaton: AutomatonSource::Product {
                    of: vec![
                        AutomatonSource::Pattern {
                            pairs: name_pairs(&SHIFT_CHANGES),
                        },
                        AutomatonSource::Stretch {
                            values: names(&["d", "e", "n", "x"]),
                            min: vec![3, 3, 3, 2],
                            max: vec![8, 8, 8, 7],
                            circular: true,
                        },
                        AutomatonSource::Offblock {
                            off: "x".into(),
                            pairs: name_pairs(&["dd", "ee", "nn", "de", "en", "nd"]),
                        },
                    ],
                },
                view: View::RowsCircular,
                mode: ViolationMode::Segment,
            },
            ConstraintDef {
                name: "mondays".into(),
                automaton: AutomatonSource::Stretch {
                    values: names(&["d", "e", "n"]),
                    min: vec![1; 3],
                    max: vec![3; 3],
                    circular: false,
                },
                view: View::Column(0),
                mode: ViolationMode::Segment,
            },
        ],
        overlap: 8,
        tile: None,
    }
}

// Tuesday..Saturday (d, e, n, x), counted from `ST_LOUIS_WITNESS`.
const ST_LOUIS_MIDWEEK: [(usize, usize, usize, usize); 5] = [
    (3, 4, 5, 5),
    (3, 4, 6, 4),
    (2, 4, 4, 7),
    (2, 3, 4, 8),
    (3, 4, 1, 9),
];

/// A schedule satisfying every rule of [`st_louis_instance`], from which its
/// Tuesday to Saturday workloads were taken.
pub const ST_LOUIS_WITNESS: [&str; 17] = [
    "nnnnnxx", "ddddddd", "dxxxxee", "eeeeeex", "xxnnnnn", "nnnxxxd", "dddxxxx", "xeeeeee",
    "exxeeee", "eeexxxn", "nnnnnxx", "nnnnnxx", "ddddddx", "xxxxxdd", "dxxxxxe", "eeeexxn",
    "nnnxxxn",
];

/// Looks up a built-in instance: `rotating-<i>` (or `rot<i>`), `five-week`,
/// `st-louis`.
pub fn builtin_instance(name: &str) -> Option<Instance> {
    let scale = name
        .strip_prefix("rotating-")
        .or_else(|| name.strip_prefix("rot"))
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&i| i >= 1);
    match (name, scale) {
        (_, Some(i)) => Some(rotating_instance(i)),
        ("five-week", _) => Some(five_week_instance()),
        ("st-louis" | "stlouis", _) => Some(st_louis_instance()),
        _ => None,
    }
}
