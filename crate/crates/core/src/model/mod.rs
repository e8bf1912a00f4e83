//! Rostering model: a `weeks x 7` grid of values with fixed weekday
//! workloads and automaton constraints over views of the grid.
//!
//! Moves exchange the values of two cells of the same weekday, so the
//! workloads stay satisfied and only the automaton constraints can be
//! violated. A [`ModelState`] keeps the total violation and the violation of
//! every cell, summed over all constraints and all positions at which the
//! cell occurs in a view.

mod check;
mod instance;

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use check::{check_rule, check_solution, runs, Verdict};
pub use instance::{
    builtin_instance, five_week_instance, rotating_instance, st_louis_instance, AutomatonSource,
    ConstraintDef, Instance, Rule, View, ViolationMode, DAYS, DAY_NAMES, FIVE_WEEK_SCHEDULE,
    ST_LOUIS_WITNESS,
};

use crate::automaton::{Alphabet, Automaton, AutomatonError, Symbol};
use crate::baseline::{HammingProbe, SoftRegularState};
use crate::layered::{unroll, GraphError, LayeredGraph};
use crate::segviol::{Draws, ProbeRecord, SegmentationState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{0}")]
    Io(String),
    #[error("instance file: {0}")]
    Json(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("{0}")]
    Graph(#[from] GraphError),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("instance `{0}` has no tile for a non-random start")]
    NotTiled(String),
}

/// A constraint ready for evaluation.
#[derive(Debug, Clone)]
pub struct Constraint {
    name: String,
    automaton: Automaton,
    rules: Vec<Rule>,
    view: View,
    cells: Vec<usize>,
    graph: Arc<LayeredGraph>,
    mode: ViolationMode,
}

impl Constraint {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn automaton(&self) -> &Automaton {
        &self.automaton
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    /// Grid cells read by the constraint, in order; a cell may repeat.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn graph(&self) -> &Arc<LayeredGraph> {
        &self.graph
    }

    pub fn mode(&self) -> ViolationMode {
        self.mode
    }
}

/// A validated instance with its constraint graphs built.
#[derive(Debug, Clone)]
pub struct Model {
    instance: Instance,
    alphabet: Alphabet,
    rows: usize,
    // workload[day][symbol]
    workload: Vec<Vec<usize>>,
    tile: Option<Vec<Vec<Symbol>>>,
    constraints: Vec<Constraint>,
    // for each cell, the (constraint, position) pairs where it occurs
    occurrences: Vec<Vec<(usize, usize)>>,
}

impl Model {
    /// Builds the model; file references are resolved against `base_dir`.
    pub fn new(instance: Instance, base_dir: &Path) -> Result<Self, ModelError> {
        let alphabet = Alphabet::new(instance.alphabet.iter().cloned())?;
        if instance.teams == 0 || instance.teams != instance.weeks {
            return Err(ModelError::Invalid(format!(
                "a rotating roster needs as many weeks as teams (got {} teams, {} weeks)",
                instance.teams, instance.weeks
            )));
        }
        let rows = instance.weeks;
        let n = rows * DAYS;
        if instance.workload.len() != DAYS {
            return Err(ModelError::Invalid(format!(
                "workload has {} days, needs 7",
                instance.workload.len()
            )));
        }
        let mut workload = vec![vec![0; alphabet.len()]; DAYS];
        for (day, counts) in instance.workload.iter().enumerate() {
            for (name, &c) in counts {
                workload[day][alphabet.symbol(name)?.index()] = c;
            }
            let total: usize = workload[day].iter().sum();
            if total != rows {
                return Err(ModelError::Invalid(format!(
                    "{} workload sums to {total}, needs {rows}",
                    DAY_NAMES[day]
                )));
            }
        }
        if instance.overlap > n {
            return Err(ModelError::Invalid(format!(
                "overlap {} exceeds the {n} cells of the grid",
                instance.overlap
            )));
        }
        let tile = match &instance.tile {
            None => None,
            Some(rows_text) => {
                let tile: Vec<Vec<Symbol>> = rows_text
                    .iter()
                    .map(|r| alphabet.parse_word(r))
                    .collect::<Result<_, _>>()?;
                if tile.is_empty() || tile.iter().any(|r| r.len() != DAYS) || rows % tile.len() != 0
                {
                    return Err(ModelError::Invalid(
                        "tile rows must have 7 values and their count must divide the weeks".into(),
                    ));
                }
                Some(tile)
            }
        };
        let mut constraints = Vec::new();
        let mut occurrences = vec![Vec::new(); n];
        for (k, def) in instance.constraints.iter().enumerate() {
            let (automaton, rules) = def.automaton.compile(&alphabet, base_dir)?;
            if automaton.alphabet() != &alphabet {
                return Err(AutomatonError::AlphabetMismatch.into());
            }
            let cells: Vec<usize> = match &def.view {
                View::RowsCircular => (0..n).chain(0..instance.overlap).collect(),
                View::Column(d) => (0..rows).map(|r| r * DAYS + d).collect(),
                View::Indices(ix) => {
                    if let Some(bad) = ix.iter().find(|&&i| i >= n) {
                        return Err(ModelError::Invalid(format!(
                            "view cell {bad} is outside the grid"
                        )));
                    }
                    ix.clone()
                }
            };
            let graph = Arc::new(unroll(&automaton, cells.len())?);
            for (pos, &cell) in cells.iter().enumerate() {
                occurrences[cell].push((k, pos));
            }
            let name = if def.name.is_empty() {
                format!("c{k}")
            } else {
                def.name.clone()
            };
            constraints.push(Constraint {
                name,
                automaton,
                rules,
                view: def.view.clone(),
                cells,
                graph,
                mode: def.mode,
            });
        }
        Ok(Model {
            instance,
            alphabet,
            rows,
            workload,
            tile,
            constraints,
            occurrences,
        })
    }

    /// Loads an instance file, or a built-in instance when `spec` names one.
    pub fn load(spec: &str) -> Result<Self, ModelError> {
        if let Some(inst) = builtin_instance(spec) {
            return Self::new(inst, Path::new("."));
        }
        let path = Path::new(spec);
        let inst = Instance::load(path)?;
        Self::new(inst, path.parent().unwrap_or(Path::new(".")))
    }

    /// Uses `mode` for every constraint.
    pub fn with_mode(mut self, mode: ViolationMode) -> Self {
        for c in &mut self.constraints {
            c.mode = mode;
        }
        self
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn name(&self) -> &str {
        &self.instance.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.rows * DAYS
    }

    /// `workload()[day][symbol]`: required count of the value on the day.
    pub fn workload(&self) -> &[Vec<usize>] {
        &self.workload
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// `(constraint, position)` pairs at which `cell` is read.
    pub fn occurrences(&self, cell: usize) -> &[(usize, usize)] {
        &self.occurrences[cell]
    }

    pub fn has_tile(&self) -> bool {
        self.tile.is_some()
    }

    /// Random start: every weekday column receives its workload in random
    /// order.
    pub fn initial_random(&self, rng: &mut impl Rng) -> Vec<Symbol> {
        let mut values = vec![Symbol(0); self.num_vars()];
        for day in 0..DAYS {
            let mut column: Vec<Symbol> = self
                .alphabet
                .symbols()
                .flat_map(|s| std::iter::repeat(s).take(self.workload[day][s.index()]))
                .collect();
            column.shuffle(rng);
            for (r, s) in column.into_iter().enumerate() {
                values[r * DAYS + day] = s;
            }
        }
        values
    }

    /// Non-random start: the instance's tile repeated down the grid.
    pub fn initial_tiled(&self) -> Result<Vec<Symbol>, ModelError> {
        let tile = self
            .tile
            .as_ref()
            .ok_or_else(|| ModelError::NotTiled(self.name().into()))?;
        Ok((0..self.rows)
            .flat_map(|r| tile[r % tile.len()].iter().copied())
            .collect())
    }

    /// Formats a grid as one line of values per week.
    pub fn format_grid(&self, values: &[Symbol]) -> Vec<String> {
        values
            .chunks(DAYS)
            .map(|row| self.alphabet.format_word(row))
            .collect()
    }

    /// Parses a grid given one week per line (blank lines and `#` comments
    /// ignored).
    pub fn parse_grid(&self, text: &str) -> Result<Vec<Symbol>, ModelError> {
        let mut values = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            values.extend(self.alphabet.parse_word(line)?);
        }
        Ok(values)
    }
}

#[derive(Debug, Clone)]
pub enum ConstraintState {
    Segment(SegmentationState),
    Hamming(SoftRegularState),
}

impl ConstraintState {
    pub fn violation(&self) -> usize {
        match self {
            ConstraintState::Segment(s) => s.violation(),
            ConstraintState::Hamming(h) => h.violation(),
        }
    }

    pub fn violations(&self) -> &[u8] {
        match self {
            ConstraintState::Segment(s) => s.violations(),
            ConstraintState::Hamming(h) => h.violations(),
        }
    }

    pub fn values(&self) -> &[Symbol] {
        match self {
            ConstraintState::Segment(s) => s.values(),
            ConstraintState::Hamming(h) => h.values(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            ConstraintState::Segment(s) => s.validate(),
            ConstraintState::Hamming(h) => h.validate(),
        }
    }
}

#[derive(Debug, Clone)]
enum PartProbe {
    Segment(ProbeRecord),
    Hamming(HammingProbe),
}

/// A probed exchange of two cells, ready to be committed.
#[derive(Debug, Clone)]
pub struct SwapProbe {
    x: usize,
    y: usize,
    delta: i64,
    parts: Vec<(usize, PartProbe)>,
}

impl SwapProbe {
    pub fn cells(&self) -> (usize, usize) {
        (self.x, self.y)
    }

    /// Change of the total violation.
    pub fn delta(&self) -> i64 {
        self.delta
    }
}

/// Work counters accumulated by the violation states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Effort {
    /// Positions visited by segmentation walks.
    pub visits: u64,
    /// Arcs relaxed by minimum Hamming distance passes.
    pub relaxations: u64,
}

#[derive(Debug, Clone)]
pub struct ModelState {
    model: Arc<Model>,
    values: Vec<Symbol>,
    states: Vec<ConstraintState>,
    per_var: Vec<u32>,
    total: usize,
    // work done by states dropped at a reset
    retired: Effort,
}

fn build_states(model: &Model, values: &[Symbol], seed: u64) -> Vec<ConstraintState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model
        .constraints
        .iter()
        .map(|c| {
            let word: Vec<Symbol> = c.cells.iter().map(|&i| values[i]).collect();
            match c.mode {
                ViolationMode::Segment => ConstraintState::Segment(SegmentationState::new(
                    c.graph.clone(),
                    word,
                    rng.gen(),
                )),
                ViolationMode::Hamming => ConstraintState::Hamming(SoftRegularState::new(
                    c.graph.clone(),
                    word,
                    rng.gen(),
                )),
            }
        })
        .collect()
}

impl ModelState {
    /// State for the grid `values`; `seed` drives the random path
    /// completions of segmentation.
    pub fn new(model: Arc<Model>, values: Vec<Symbol>, seed: u64) -> Result<Self, ModelError> {
        if values.len() != model.num_vars() {
            return Err(ModelError::Dimension(format!(
                "grid has {} cells, instance needs {}",
                values.len(),
                model.num_vars()
            )));
        }
        let mut st = ModelState {
            states: Vec::new(),
            per_var: Vec::new(),
            total: 0,
            retired: Effort::default(),
            values,
            model,
        };
        st.reset_states(seed);
        Ok(st)
    }

    fn reset_states(&mut self, seed: u64) {
        self.retired.visits += self.effort_live().visits;
        self.retired.relaxations += self.effort_live().relaxations;
        self.states = build_states(&self.model, &self.values, seed);
        let (total, per_var) = self.recount();
        self.total = total;
        self.per_var = per_var;
    }

    /// Replaces the grid and rebuilds every constraint state.
    pub fn reset(&mut self, values: Vec<Symbol>, seed: u64) {
        assert_eq!(
            values.len(),
            self.model.num_vars(),
            "grid size must match the model"
        );
        self.values = values;
        self.reset_states(seed);
    }

    fn recount(&self) -> (usize, Vec<u32>) {
        let mut per_var = vec![0u32; self.values.len()];
        let mut total = 0;
        for (c, st) in self.model.constraints.iter().zip(&self.states) {
            total += st.violation();
            for (&cell, &v) in c.cells.iter().zip(st.violations()) {
                per_var[cell] += u32::from(v);
            }
        }
        (total, per_var)
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn total_violation(&self) -> usize {
        self.total
    }

    /// Violation of a cell, summed over every position where it is read.
    pub fn var_violation(&self, cell: usize) -> u32 {
        self.per_var[cell]
    }

    pub fn var_violations(&self) -> &[u32] {
        &self.per_var
    }

    pub fn constraint_states(&self) -> &[ConstraintState] {
        &self.states
    }

    fn effort_live(&self) -> Effort {
        let mut e = Effort::default();
        for st in &self.states {
            match st {
                ConstraintState::Segment(s) => e.visits += s.visits(),
                ConstraintState::Hamming(h) => e.relaxations += h.relaxations(),
            }
        }
        e
    }

    pub fn effort(&self) -> Effort {
        let live = self.effort_live();
        Effort {
            visits: live.visits + self.retired.visits,
            relaxations: live.relaxations + self.retired.relaxations,
        }
    }

    /// Evaluates exchanging cells `x` and `y`, which must be on the same
    /// weekday and hold different values.
    pub fn probe_swap(&mut self, x: usize, y: usize) -> SwapProbe {
        assert!(
            x != y && x % DAYS == y % DAYS,
            "swaps stay within one weekday"
        );
        let (vx, vy) = (self.values[x], self.values[y]);
        assert_ne!(vx, vy, "swapped cells must hold different values");
        let mut touched: Vec<usize> = self.model.occurrences[x]
            .iter()
            .chain(&self.model.occurrences[y])
            .map(|&(c, _)| c)
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let mut parts = Vec::with_capacity(touched.len());
        let mut delta = 0;
        let mut changes = Vec::new();
        for c in touched {
            changes.clear();
            for &(k, pos) in &self.model.occurrences[x] {
                if k == c {
                    changes.push((pos, vy));
                }
            }
            for &(k, pos) in &self.model.occurrences[y] {
                if k == c {
                    changes.push((pos, vx));
                }
            }
            let part = match &mut self.states[c] {
                ConstraintState::Segment(s) => {
                    let r = s.probe(&changes, Draws::Fresh);
                    delta += r.delta();
                    PartProbe::Segment(r)
                }
                ConstraintState::Hamming(h) => {
                    let r = h.probe(&changes);
                    delta += r.delta();
                    PartProbe::Hamming(r)
                }
            };
            parts.push((c, part));
        }
        SwapProbe { x, y, delta, parts }
    }

    /// Applies a probe made on the current state.
    pub fn commit(&mut self, probe: SwapProbe) {
        for (c, part) in probe.parts {
            let cells = &self.model.constraints[c].cells;
            match (&mut self.states[c], part) {
                (ConstraintState::Segment(s), PartProbe::Segment(r)) => {
                    let start = r.start();
                    for ((&cell, &old), &new) in cells[start..]
                        .iter()
                        .zip(&s.violations()[start..])
                        .zip(r.violations())
                    {
                        self.per_var[cell] = self.per_var[cell] - u32::from(old) + u32::from(new);
                    }
                    s.commit(r).expect("probe made on the current state");
                }
                (ConstraintState::Hamming(h), PartProbe::Hamming(r)) => {
                    for ((&cell, &old), &new) in
                        cells.iter().zip(h.violations()).zip(r.violations())
                    {
                        self.per_var[cell] = self.per_var[cell] - u32::from(old) + u32::from(new);
                    }
                    h.commit(r).expect("probe made on the current state");
                }
                _ => unreachable!("probe kind matches the constraint state"),
            }
        }
        self.total = (self.total as i64 + probe.delta) as usize;
        self.values.swap(probe.x, probe.y);
    }

    /// Checks every cached quantity against a recount and every constraint
    /// state against its own invariants.
    pub fn validate(&self) -> Result<(), String> {
        for (k, (c, st)) in self.model.constraints.iter().zip(&self.states).enumerate() {
            st.validate().map_err(|e| format!("constraint {k}: {e}"))?;
            if c.cells
                .iter()
                .zip(st.values())
                .any(|(&cell, &v)| self.values[cell] != v)
            {
                return Err(format!(
                    "constraint {k}: view values disagree with the grid"
                ));
            }
        }
        let (total, per_var) = self.recount();
        if total != self.total {
            return Err(format!(
                "total violation {} but recount gives {total}",
                self.total
            ));
        }
        if per_var != self.per_var {
            return Err("cell violations disagree with a recount".into());
        }
        Ok(())
    }
}
