//! Tabu search with restarts over same-weekday swaps.
//!
//! Each iteration picks a violated cell `x` uniformly, then the cell `y` of
//! the same weekday and a different value whose swap with `x` gives the
//! smallest change of the total violation. Swaps made recently are tabu
//! unless they would beat the best violation seen. Every
//! `restart_factor * cells` iterations the grid is re-initialised and the
//! tabu list cleared. An iteration in which no swap is admissible still
//! counts.

use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::automaton::Symbol;
use crate::model::{Effort, Model, ModelError, ModelState, SwapProbe, DAYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    #[default]
    Random,
    Tiled,
}

impl FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(InitMode::Random),
            "tiled" => Ok(InitMode::Tiled),
            _ => Err(format!("unknown init mode `{s}` (random | tiled)")),
        }
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitMode::Random => "random",
            InitMode::Tiled => "tiled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchParams {
    pub seed: u64,
    pub init: InitMode,
    pub max_iterations: u64,
    pub time_limit: Option<Duration>,
    /// Smallest tabu tenure.
    pub tabu_floor: usize,
    /// Restart period, in multiples of the number of cells.
    pub restart_factor: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            seed: 0,
            init: InitMode::Random,
            max_iterations: 1_000_000,
            time_limit: None,
            tabu_floor: 6,
            restart_factor: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub solved: bool,
    /// Iterations until the first solution, or all iterations performed.
    pub iterations: u64,
    pub time_ms: f64,
    pub restarts: u64,
    pub best_violation: usize,
    #[serde(skip)]
    pub best: Vec<Symbol>,
    #[serde(skip)]
    pub effort: Effort,
}

fn initial(model: &Model, init: InitMode, rng: &mut ChaCha8Rng) -> Result<Vec<Symbol>, ModelError> {
    match init {
        InitMode::Random => Ok(model.initial_random(rng)),
        InitMode::Tiled => model.initial_tiled(),
    }
}

/// Tabu tenure of a swap made when the total violation is `violations`.
pub fn tenure(violations: usize, floor: usize) -> u64 {
    violations.max(floor) as u64
}

/// Per pair of same-weekday cells, the first iteration at which swapping
/// them is allowed again.
#[derive(Debug, Clone)]
pub struct TabuList {
    rows: usize,
    // until[x * rows + row(y)]
    until: Vec<u64>,
}

impl TabuList {
    pub fn new(model: &Model) -> Self {
        TabuList {
            rows: model.rows(),
            until: vec![0; model.num_vars() * model.rows()],
        }
    }

    pub fn until(&self, x: usize, y: usize) -> u64 {
        self.until[x * self.rows + y / DAYS]
    }

    /// Forbids the pair in both orders until iteration `until`.
    pub fn forbid(&mut self, x: usize, y: usize, until: u64) {
        self.until[x * self.rows + y / DAYS] = until;
        self.until[y * self.rows + x / DAYS] = until;
    }

    pub fn clear(&mut self) {
        self.until.iter_mut().for_each(|t| *t = 0);
    }
}

/// Picks the swap partner for the violated cell `x`: among cells of the same
/// weekday holding another value, a swap that is not tabu at iteration `it`
/// (or would bring the total below `best`) with the smallest violation
/// change, ties broken uniformly.
pub fn select_move(
    state: &mut ModelState,
    x: usize,
    tabu: &TabuList,
    it: u64,
    best: usize,
    rng: &mut impl Rng,
) -> Option<SwapProbe> {
    let vx = state.values()[x];
    let total = state.total_violation() as i64;
    let mut best_delta = i64::MAX;
    let mut ties: Vec<SwapProbe> = Vec::new();
    for r in 0..state.model().rows() {
        let y = r * DAYS + x % DAYS;
        if y == x || state.values()[y] == vx {
            continue;
        }
        let probe = state.probe_swap(x, y);
        let d = probe.delta();
        let admissible = tabu.until(x, y) <= it || total + d < best as i64;
        if !admissible || d > best_delta {
            continue;
        }
        if d < best_delta {
            best_delta = d;
            ties.clear();
        }
        ties.push(probe);
    }
    if ties.is_empty() {
        None
    } else {
        let k = rng.gen_range(0..ties.len());
        Some(ties.swap_remove(k))
    }
}

/// Runs the search until a solution is found or a limit is reached.
pub fn tabu_search(model: &Arc<Model>, params: &SearchParams) -> Result<RunStats, ModelError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = model.num_vars();
    let values = initial(model, params.init, &mut rng)?;
    let mut state = ModelState::new(model.clone(), values, rng.gen())?;

    let mut tabu = TabuList::new(model);
    let restart_period = (params.restart_factor * n).max(1) as u64;
    let mut best = state.total_violation();
    let mut best_values = state.values().to_vec();
    let mut it: u64 = 0;
    let mut restarts = 0;
    let mut violated = Vec::with_capacity(n);

    let timed_out = |it: u64| {
        params
            .time_limit
            .is_some_and(|limit| it % 64 == 0 && started.elapsed() >= limit)
    };

    while state.total_violation() > 0 && it < params.max_iterations && !timed_out(it) {
        violated.clear();
        violated.extend((0..n).filter(|&c| state.var_violation(c) > 0));
        let x = violated[rng.gen_range(0..violated.len())];
        if let Some(probe) = select_move(&mut state, x, &tabu, it, best, &mut rng) {
            let (_, y) = probe.cells();
            state.commit(probe);
            tabu.forbid(
                x,
                y,
                it + tenure(state.total_violation(), params.tabu_floor),
            );
            if state.total_violation() < best {
                best = state.total_violation();
                best_values.clear();
                best_values.extend_from_slice(state.values());
            }
        }
        it += 1;
        if state.total_violation() > 0 && it % restart_period == 0 {
            restarts += 1;
            tabu.clear();
            let values = initial(model, params.init, &mut rng)?;
            state.reset(values, rng.gen());
            if state.total_violation() < best {
                best = state.total_violation();
                best_values.clear();
                best_values.extend_from_slice(state.values());
            }
        }
    }

    Ok(RunStats {
        solved: best == 0,
        iterations: it,
        time_ms: started.elapsed().as_secs_f64() * 1e3,
        restarts,
        best_violation: best,
        best: best_values,
        effort: state.effort(),
    })
}
