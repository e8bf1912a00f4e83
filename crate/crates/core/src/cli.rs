//! The `acbls` command line: `solve`, `bench`, `check` and `unroll`.
//!
//! Exit codes: `solve` 0 when solved, 3 when a limit was hit first; `check`
//! 0 for a valid schedule, 1 for an invalid one; `unroll` 1 when no word of
//! the requested length is accepted; 2 for usage, file and dimension errors
//! everywhere.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::automaton::parse_automaton;
use crate::bench::{run_bench, summarize, write_csv, BenchConfig, Stats};
use crate::layered::{unroll, GraphError};
use crate::model::{check_solution, Model, ModelError, ViolationMode, DAYS, DAY_NAMES};
use crate::search::{tabu_search, InitMode, SearchParams};

#[derive(Debug, Parser)]
#[command(
    name = "acbls",
    version,
    about = "Automaton-based local search for cyclic rosters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a schedule satisfying an instance.
    Solve(SolveArgs),
    /// Run repeated searches and report statistics.
    Bench(BenchArgs),
    /// Validate a schedule against an instance.
    Check(CheckArgs),
    /// Print an automaton unrolled over n positions.
    Unroll(UnrollArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Segment,
    Hamming,
}

impl From<ModeArg> for ViolationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Segment => ViolationMode::Segment,
            ModeArg::Hamming => ViolationMode::Hamming,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Random,
    Tiled,
}

impl From<InitArg> for InitMode {
    fn from(m: InitArg) -> Self {
        match m {
            InitArg::Random => InitMode::Random,
            InitArg::Tiled => InitMode::Tiled,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Violation measure for every constraint (default: as in the instance).
    #[arg(long = "violation-mode", value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "random")]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-iters", default_value_t = 1_000_000)]
    pub max_iters: u64,
    #[arg(long = "time-limit-ms")]
    pub time_limit_ms: Option<u64>,
    #[arg(long = "tabu-floor", default_value_t = 6)]
    pub tabu_floor: usize,
    #[arg(long = "restart-factor", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub restart_factor: u64,
}

impl SearchArgs {
    fn params(&self) -> SearchParams {
        SearchParams {
            seed: self.seed,
            init: self.init.into(),
            max_iterations: self.max_iters,
            time_limit: self.time_limit_ms.map(Duration::from_millis),
            tabu_floor: self.tabu_floor,
            restart_factor: self.restart_factor as usize,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file or built-in name (rotating-<i>, five-week, st-louis).
    #[arg(long)]
    pub instance: String,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Also write the JSON result to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print nothing; the exit code tells the outcome.
    #[arg(long, short)]
    pub quiet: bool,
    /// Describe the model on stderr before searching.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance files or built-in names; may repeat.
    #[arg(long, required = true)]
    pub instance: Vec<String>,
    /// Violation measures to compare; may repeat.
    #[arg(long = "violation-mode", value_enum, default_values = ["segment"])]
    pub modes: Vec<ModeArg>,
    /// Start modes; may repeat.
    #[arg(long = "init", value_enum, default_values = ["random"])]
    pub inits: Vec<InitArg>,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Seed of run 0; run k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-iters", default_value_t = 1_000_000)]
    pub max_iters: u64,
    #[arg(long = "time-limit-ms")]
    pub time_limit_ms: Option<u64>,
    #[arg(long = "tabu-floor", default_value_t = 6)]
    pub tabu_floor: usize,
    #[arg(long = "restart-factor", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub restart_factor: u64,
    /// Worker threads (default: AUTOCBLS_THREADS, else one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-run CSV file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Leave the time_ms column empty so that output is reproducible.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// Suppress the summary table.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub instance: String,
    /// Schedule file: one week per line, one value per day.
    #[arg(long)]
    pub schedule: PathBuf,
    /// List every breach instead of only the first.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Lines,
    Dot,
}

#[derive(Debug, Args)]
pub struct UnrollArgs {
    /// Automaton text file.
    #[arg(long)]
    pub automaton: PathBuf,
    /// Number of positions.
    #[arg(short, long)]
    pub n: usize,
    /// Print only the number of accepted words.
    #[arg(long = "count-only")]
    pub count_only: bool,
    #[arg(long, value_enum, default_value = "lines")]
    pub format: GraphFormat,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 2;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Check(a) => cmd_check(&a, out),
        Command::Unroll(a) => cmd_unroll(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    EmptyLanguage(GraphError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::EmptyLanguage(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load_model(spec: &str, mode: Option<ModeArg>) -> Result<Model, ModelError> {
    let model = Model::load(spec)?;
    Ok(match mode {
        Some(m) => model.with_mode(m.into()),
        None => model,
    })
}

/// The schedule as a table: a header of weekdays and one numbered row per
/// week.
pub fn format_table(model: &Model, values: &[crate::automaton::Symbol]) -> String {
    let names = model.alphabet().names();
    let cell = names.iter().map(String::len).max().unwrap_or(1).max(3);
    let label = model.rows().to_string().len().max(4);
    let mut s = format!("{:<label$} |", "Week");
    for d in DAY_NAMES {
        s.push_str(&format!(" {d:>cell$}"));
    }
    s.push('\n');
    s.push_str(&"-".repeat(label + 2 + (cell + 1) * DAYS));
    s.push('\n');
    for (r, row) in values.chunks(DAYS).enumerate() {
        s.push_str(&format!("{:<label$} |", r + 1));
        for v in row {
            s.push_str(&format!(" {:>cell$}", names[v.index()]));
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct SolveReport<'a> {
    instance: &'a str,
    mode: Vec<ViolationMode>,
    init: InitMode,
    seed: u64,
    solved: bool,
    iterations: u64,
    time_ms: f64,
    restarts: u64,
    best_violation: usize,
    schedule: Vec<String>,
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let model = Arc::new(load_model(&a.instance, a.search.mode)?);
    if a.verbose {
        writeln!(
            err,
            "instance {}: {} weeks, {} cells",
            model.name(),
            model.rows(),
            model.num_vars()
        )?;
        for c in model.constraints() {
            writeln!(
                err,
                "  constraint {}: {} positions, {} nodes, {} arcs, {} words, mode {}",
                c.name(),
                c.cells().len(),
                c.graph().num_nodes(),
                c.graph().num_arcs(),
                c.graph().count_paths(),
                c.mode()
            )?;
        }
    }
    let params = a.search.params();
    let stats = tabu_search(&model, &params)?;
    let report = SolveReport {
        instance: model.name(),
        mode: model.constraints().iter().map(|c| c.mode()).collect(),
        init: params.init,
        seed: params.seed,
        solved: stats.solved,
        iterations: stats.iterations,
        time_ms: stats.time_ms,
        restarts: stats.restarts,
        best_violation: stats.best_violation,
        schedule: model.format_grid(&stats.best),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    if let Some(path) = &a.output {
        std::fs::write(path, format!("{json}\n"))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    if !a.quiet {
        writeln!(out, "{json}")?;
        writeln!(out)?;
        write!(out, "{}", format_table(&model, &stats.best))?;
        writeln!(
            out,
            "seed {}  solved {}  iterations {}  restarts {}  best violation {}  time {:.1} ms",
            params.seed,
            stats.solved,
            stats.iterations,
            stats.restarts,
            stats.best_violation,
            stats.time_ms
        )?;
    }
    Ok(if stats.solved { 0 } else { 3 })
}

fn stats_cells(s: Option<Stats>, digits: usize) -> [String; 4] {
    match s {
        Some(s) => [s.min, s.max, s.avg, s.std].map(|x| format!("{x:.digits$}")),
        None => ["-".into(), "-".into(), "-".into(), "-".into()],
    }
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut models = Vec::new();
    for spec in &a.instance {
        models.push(Model::load(spec)?);
    }
    let mut records = Vec::new();
    let mut table = Vec::new();
    for model in &models {
        for &mode in &a.modes {
            for &init in &a.inits {
                let cfg = BenchConfig {
                    runs: a.runs,
                    base_seed: a.seed,
                    mode: mode.into(),
                    params: SearchParams {
                        seed: a.seed,
                        init: init.into(),
                        max_iterations: a.max_iters,
                        time_limit: a.time_limit_ms.map(Duration::from_millis),
                        tabu_floor: a.tabu_floor,
                        restart_factor: a.restart_factor as usize,
                    },
                    threads: a.threads,
                };
                let recs = run_bench(model, &cfg)?;
                let s = summarize(&recs);
                let mut row = vec![
                    model.name().to_string(),
                    ViolationMode::from(mode).to_string(),
                    InitMode::from(init).to_string(),
                    format!("{}/{}", s.solved, s.runs),
                ];
                row.extend(stats_cells(s.iterations, 1));
                row.extend(stats_cells(s.time_ms, 2));
                table.push(row);
                records.extend(recs);
            }
        }
    }
    match &a.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_csv(file, &records, !a.no_timing)?;
        }
        None => write_csv(&mut *out, &records, !a.no_timing)?,
    }
    if !a.quiet {
        let header = [
            "instance", "mode", "init", "solved", "it.min", "it.max", "it.avg", "it.sd", "ms.min",
            "ms.max", "ms.avg", "ms.sd",
        ];
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &table {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        // the summary goes to stderr when the CSV is on stdout
        let sink: &mut dyn Write = if a.output.is_some() { out } else { err };
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(k, (c, &w))| {
                    if k < 3 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(sink, "{}", line(header.to_vec()))?;
        for row in &table {
            writeln!(sink, "{}", line(row.iter().map(String::as_str).collect()))?;
        }
    }
    Ok(0)
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = Model::load(&a.instance)?;
    let text = std::fs::read_to_string(&a.schedule)
        .map_err(|e| CliError::Io(format!("{}: {e}", a.schedule.display())))?;
    let values = model.parse_grid(&text)?;
    let verdict = check_solution(&model, &values)?;
    if verdict.is_valid() {
        writeln!(out, "valid")?;
        return Ok(0);
    }
    let shown = if a.verbose { verdict.failures.len() } else { 1 };
    for f in &verdict.failures[..shown] {
        writeln!(out, "invalid: {f}")?;
    }
    Ok(1)
}

fn cmd_unroll(a: &UnrollArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&a.automaton)
        .map_err(|e| CliError::Io(format!("{}: {e}", a.automaton.display())))?;
    let automaton = parse_automaton(&text).map_err(ModelError::from)?;
    let graph = match unroll(&automaton, a.n) {
        Ok(g) => g,
        Err(e @ GraphError::EmptyLanguage(_)) => return Err(CliError::EmptyLanguage(e)),
        Err(e) => return Err(ModelError::from(e).into()),
    };
    if a.count_only {
        writeln!(out, "{}", graph.count_paths())?;
    } else {
        match a.format {
            GraphFormat::Lines => write!(out, "{}", graph.to_lines())?,
            GraphFormat::Dot => write!(out, "{}", graph.to_dot())?,
        }
    }
    Ok(0)
}
