//! Command-line front end. Every command writes one JSON report that embeds
//! the resolved run configuration and the library version.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    compatibility_range, localizable_sweep, marginal_audit, noise_tolerance, ToleranceMode,
};
use crate::catalog;
use crate::conic::{BACKEND_ENV, NEGATIVITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::io::{write_json, write_stdout, MatrixJson};
use crate::iterate::{
    run_seesaw, SearchConfig, SearchStatus, DEFAULT_MAX_ROUNDS, DEFAULT_POLISH_ROUNDS,
    DEFAULT_STALL_TOLERANCE,
};
use crate::operators::{mix_with_white_noise, DensityOperator, QuditRegister};
use crate::statesearch::{ConstraintSet, DEFAULT_EPSILON};
use crate::witness::{
    min_witness_value, min_witness_value_unrestricted, Detection, MarginalPattern, MarginalSet,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const NOT_DETECTED: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const INPUT_ERROR: i32 = 4;
    pub const SOLVER_FAILURE: i32 = 5;
}

/// Band around a catalog tolerance accepted by `verify --tolerance`.
pub const TOLERANCE_MATCH: f64 = 0.005;

#[derive(Parser, Debug)]
#[command(
    name = "marginal-gme",
    version,
    about = "Certify genuine multiparticle entanglement from separable marginals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Named example states.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Audit, witness values and catalog expectations for one state.
    Verify(StateArgs),
    /// See-saw search for a state with PPT marginals and a negative witness.
    Search(SearchArgs),
    /// White-noise tolerance of the witness detection.
    Tolerance(StateArgs),
    /// Partial-transpose spectra of the marginals.
    Audit(StateArgs),
    /// Whether the pattern marginals determine the global state.
    Uniqueness(StateArgs),
    /// Post-measurement PPT sweep over the Bloch sphere of each qubit.
    Localizable(LocalizableArgs),
    /// Aggregate search reports into one table.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
pub enum CatalogAction {
    /// Ids, registers and reference numbers.
    List,
    /// The density matrix of one entry as JSON.
    Export { id: String },
}

#[derive(Args, Debug, Default)]
pub struct StateArgs {
    /// Catalog id or path to a density-matrix JSON file.
    pub state: String,
    /// Marginal pattern such as `all`, `AB,BC` or `ABC`.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Include triple marginals in the audit.
    #[arg(long)]
    pub triples: bool,
    /// Mix with this much white noise first.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Use the unrestricted witness (tolerance) or add the tolerance (verify).
    #[arg(long)]
    pub unrestricted: bool,
    /// Also compute the marginal tolerance (verify).
    #[arg(long)]
    pub tolerance: bool,
}

#[derive(Args, Debug, Default)]
pub struct SearchArgs {
    /// JSON run configuration; flags override its fields.
    pub config: Option<PathBuf>,
    /// Local dimensions, e.g. `2,2,2`.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pattern: Option<String>,
    /// Require PPT for every triple marginal.
    #[arg(long)]
    pub triples: bool,
    /// Number of post-measurement directions (0 disables them).
    #[arg(long)]
    pub directions: Option<usize>,
    /// Strictness of the post-measurement constraints.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct LocalizableArgs {
    pub state: String,
    /// Measured party; all qubit parties when omitted.
    #[arg(long)]
    pub party: Option<usize>,
    /// Grid as `THETAxPHI`.
    #[arg(long, default_value = "60x120")]
    pub grid: String,
}

#[derive(Args, Debug, Default)]
pub struct ReportArgs {
    pub files: Vec<PathBuf>,
    /// Print a markdown table instead of JSON.
    #[arg(long)]
    pub markdown: bool,
}

/// Constraint part of a run configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// Pairs whose marginals must be PPT (pattern syntax, default all).
    pub pairs: Option<String>,
    pub triples: bool,
    pub directions: usize,
    pub epsilon: Option<f64>,
}

/// The resolved configuration of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub state: Option<String>,
    pub dims: Option<Vec<usize>>,
    pub pattern: Option<String>,
    pub constraints: ConstraintSpec,
    pub seed: Option<u64>,
    pub max_rounds: Option<usize>,
    pub stall_tolerance: Option<f64>,
    pub success_threshold: Option<f64>,
    pub polish_rounds: Option<usize>,
    pub noise: Option<f64>,
    pub triples: bool,
    pub unrestricted: bool,
    pub tolerance: bool,
    pub party: Option<usize>,
    pub grid: Option<(usize, usize)>,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub backend: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("run configuration: {e}")))
    }
}

/// Outcome of a command: the report body and the exit code it implies.
pub struct CommandOutput {
    pub result: Value,
    pub code: i32,
    /// Text printed instead of the JSON report (markdown tables).
    pub text: Option<String>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => exit::INFEASIBLE,
        Error::Solver(_) => exit::SOLVER_FAILURE,
        _ => exit::INPUT_ERROR,
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::INPUT_ERROR
            } else {
                exit::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and writes its report.
pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(j) = cli.jobs {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global();
    }
    let mut config = RunConfig {
        output: cli.out.clone(),
        jobs: cli.jobs,
        backend: std::env::var(BACKEND_ENV).unwrap_or_else(|_| "ipm".into()),
        ..Default::default()
    };
    let out = match &cli.command {
        Command::Catalog { action } => cmd_catalog(action, &mut config)?,
        Command::Verify(a) => cmd_verify(a, &mut config)?,
        Command::Search(a) => cmd_search(a, &mut config)?,
        Command::Tolerance(a) => cmd_tolerance(a, &mut config)?,
        Command::Audit(a) => cmd_audit(a, &mut config)?,
        Command::Uniqueness(a) => cmd_uniqueness(a, &mut config)?,
        Command::Localizable(a) => cmd_localizable(a, &mut config)?,
        Command::Report(a) => cmd_report(a, &mut config)?,
    };
    match &out.text {
        Some(t) => match &cli.out {
            Some(p) => std::fs::write(p, t)?,
            None => write_stdout(t)?,
        },
        None => {
            let report = json!({
                "tool": "marginal-gme",
                "version": VERSION,
                "config": config,
                "result": out.result,
            });
            write_json(&report, cli.out.as_deref())?;
        }
    }
    Ok(out.code)
}

/// A state named on the command line with its catalog entry, if any.
pub struct ResolvedState {
    pub state: DensityOperator,
    pub entry: Option<catalog::CatalogEntry>,
}

pub fn resolve_state(name: &str) -> Result<ResolvedState> {
    if catalog::IDS.contains(&name) {
        let entry = catalog::build(name)?;
        return Ok(ResolvedState {
            state: entry.state.clone(),
            entry: Some(entry),
        });
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(Error::UnknownState(name.to_string()));
    }
    let m: MatrixJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(ResolvedState {
        state: m.to_density()?,
        entry: None,
    })
}

fn resolve_pattern(
    register: &QuditRegister,
    spec: Option<&str>,
    entry: Option<&catalog::CatalogEntry>,
) -> Result<MarginalPattern> {
    let spec = spec
        .map(str::to_string)
        .or_else(|| entry.map(|e| e.expected.pattern.clone()))
        .unwrap_or_else(|| "all".into());
    MarginalPattern::parse(register.clone(), &spec)
}

/// State, pattern and config fields shared by the state commands.
fn prepare(
    a: &StateArgs,
    command: &str,
    config: &mut RunConfig,
) -> Result<(ResolvedState, MarginalPattern)> {
    let mut resolved = resolve_state(&a.state)?;
    if let Some(p) = a.noise {
        resolved.state = mix_with_white_noise(&resolved.state, p)?;
    }
    let pattern = resolve_pattern(
        resolved.state.register(),
        a.pattern.as_deref(),
        resolved.entry.as_ref(),
    )?;
    config.command = command.into();
    config.state = Some(a.state.clone());
    config.dims = Some(resolved.state.register().dims().to_vec());
    config.pattern = Some(pattern.label());
    config.noise = a.noise;
    config.triples = a.triples || resolved.entry.as_ref().is_some_and(|e| e.expected.triples);
    config.unrestricted = a.unrestricted;
    config.tolerance = a.tolerance;
    Ok((resolved, pattern))
}

fn cmd_catalog(action: &CatalogAction, config: &mut RunConfig) -> Result<CommandOutput> {
    match action {
        CatalogAction::List => {
            config.command = "catalog list".into();
            let entries: Vec<_> = catalog::all()
                .into_iter()
                .map(|e| serde_json::to_value(&e))
                .collect::<std::result::Result<_, _>>()?;
            Ok(CommandOutput {
                result: Value::Array(entries),
                code: exit::SUCCESS,
                text: None,
            })
        }
        CatalogAction::Export { id } => {
            config.command = "catalog export".into();
            config.state = Some(id.clone());
            let entry = catalog::build(id)?;
            Ok(CommandOutput {
                result: serde_json::to_value(MatrixJson::from(&entry.state))?,
                code: exit::SUCCESS,
                text: None,
            })
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn cmd_verify(a: &StateArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    let (resolved, pattern) = prepare(a, "verify", config)?;
    let rho = &resolved.state;
    let audit = marginal_audit(rho, &pattern, config.triples)?;
    let marginal = min_witness_value(rho, &pattern)?;
    let full = min_witness_value_unrestricted(rho)?;
    let tolerance = if a.tolerance {
        Some(noise_tolerance(
            rho,
            &pattern,
            ToleranceMode::MarginalRestricted,
        )?)
    } else {
        None
    };
    let expected = resolved.entry.as_ref().map(|e| &e.expected);
    let expects_detection = expected.is_none_or(|e| e.marginal_tolerance.is_some());
    let mut checks = Vec::new();
    if expects_detection {
        checks.push(Check {
            name: "marginals PPT".into(),
            passed: audit.all_ppt,
            detail: format!(
                "min PT eigenvalue {:.3e}",
                audit
                    .pairs
                    .iter()
                    .map(|p| p.pt_min_eigenvalue)
                    .fold(f64::INFINITY, f64::min)
            ),
        });
        checks.push(Check {
            name: "marginal witness negative".into(),
            passed: marginal.detection == Detection::Detected,
            detail: format!("{:.6e}", marginal.value),
        });
    } else {
        checks.push(Check {
            name: "marginal witness non-negative".into(),
            passed: marginal.value >= NEGATIVITY_THRESHOLD,
            detail: format!("{:.6e}", marginal.value),
        });
    }
    if let (Some(t), Some(want)) = (&tolerance, expected.and_then(|e| e.marginal_tolerance)) {
        checks.push(Check {
            name: "marginal tolerance".into(),
            passed: (t.p_star - want).abs() <= TOLERANCE_MATCH,
            detail: format!("{:.4} (expected {want:.3} ± {TOLERANCE_MATCH})", t.p_star),
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(CommandOutput {
        result: json!({
            "passed": passed,
            "checks": checks,
            "audit": audit,
            "marginal_witness": {
                "value": marginal.value,
                "detection": marginal.detection,
                "dual_bound": marginal.dual_bound,
            },
            "unrestricted_witness": {
                "value": full.value,
                "detection": full.detection,
            },
            "tolerance": tolerance,
            "expected": expected,
        }),
        code: if passed {
            exit::SUCCESS
        } else {
            exit::NOT_DETECTED
        },
        text: None,
    })
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad dimension `{t}`")))
        })
        .collect()
}

/// Merges a configuration file with command-line overrides.
pub fn search_run_config(a: &SearchArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if !c.command.is_empty() && c.command != "search" {
        return Err(Error::Config(format!(
            "configuration is for `{}`",
            c.command
        )));
    }
    c.command = "search".into();
    if let Some(d) = &a.dims {
        c.dims = Some(parse_dims(d)?);
    }
    if a.seed.is_some() {
        c.seed = a.seed;
    }
    if a.pattern.is_some() {
        c.pattern = a.pattern.clone();
    }
    if a.triples {
        c.constraints.triples = true;
    }
    if let Some(n) = a.directions {
        c.constraints.directions = n;
    }
    if a.eps.is_some() {
        c.constraints.epsilon = a.eps;
    }
    if a.max_rounds.is_some() {
        c.max_rounds = a.max_rounds;
    }
    Ok(c)
}

/// The see-saw configuration described by a run configuration.
pub fn search_config(c: &RunConfig) -> Result<SearchConfig> {
    let dims = c
        .dims
        .clone()
        .ok_or_else(|| Error::Config("search needs `dims`".into()))?;
    let seed = c
        .seed
        .ok_or_else(|| Error::Config("search needs an explicit seed".into()))?;
    let register = QuditRegister::new(dims)?;
    let pattern = MarginalPattern::parse(register.clone(), c.pattern.as_deref().unwrap_or("all"))?;
    let pairs = MarginalPattern::parse(
        register.clone(),
        c.constraints.pairs.as_deref().unwrap_or("all"),
    )?;
    let mut constraints = ConstraintSet::all_pairs(register.clone()).with_pairs(pairs.pairs())?;
    if c.constraints.triples {
        constraints = constraints.with_all_triples();
    }
    if c.constraints.directions > 0 {
        constraints = constraints.with_post_measurement(
            c.constraints.directions,
            c.constraints.epsilon.unwrap_or(DEFAULT_EPSILON),
        )?;
    }
    let config = SearchConfig {
        register,
        pattern,
        constraints,
        seed,
        max_rounds: c.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS),
        stall_tolerance: c.stall_tolerance.unwrap_or(DEFAULT_STALL_TOLERANCE),
        success_threshold: c.success_threshold.unwrap_or(NEGATIVITY_THRESHOLD),
        polish_rounds: c.polish_rounds.unwrap_or(DEFAULT_POLISH_ROUNDS),
    };
    config.validate()?;
    Ok(config)
}

fn cmd_search(a: &SearchArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    let mut c = search_run_config(a)?;
    c.output = config.output.clone();
    c.jobs = config.jobs;
    c.backend = config.backend.clone();
    if c.constraints.directions > 0 && c.constraints.epsilon.is_none() {
        c.constraints.epsilon = Some(DEFAULT_EPSILON);
    }
    *config = c;
    let resolved = search_config(config)?;
    let outcome = run_seesaw(&resolved)?;
    let code = match outcome.status {
        SearchStatus::Success if outcome.verification.as_ref().is_some_and(|v| v.passed) => {
            exit::SUCCESS
        }
        SearchStatus::Success => exit::SOLVER_FAILURE,
        SearchStatus::Stalled => exit::NOT_DETECTED,
        SearchStatus::Infeasible => exit::INFEASIBLE,
    };
    let d = resolved.register.total_dim() as f64;
    let v = outcome.best_value;
    let tolerance = (v < 0.0).then(|| -v * d / (1.0 - v * d));
    Ok(CommandOutput {
        result: json!({
            "register": resolved.register.label(),
            "post_measurement_directions": resolved.constraints.post_measurement.len(),
            "witness_tolerance": tolerance,
            "outcome": outcome,
        }),
        code,
        text: None,
    })
}

fn cmd_tolerance(a: &StateArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    let (resolved, pattern) = prepare(a, "tolerance", config)?;
    let mode = if a.unrestricted {
        ToleranceMode::Unrestricted
    } else {
        ToleranceMode::MarginalRestricted
    };
    let t = noise_tolerance(&resolved.state, &pattern, mode)?;
    let code = if t.p_star > 0.0 {
        exit::SUCCESS
    } else {
        exit::NOT_DETECTED
    };
    Ok(CommandOutput {
        result: serde_json::to_value(&t)?,
        code,
        text: None,
    })
}

fn cmd_audit(a: &StateArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    let (resolved, pattern) = prepare(a, "audit", config)?;
    let audit = marginal_audit(&resolved.state, &pattern, config.triples)?;
    Ok(CommandOutput {
        result: serde_json::to_value(&audit)?,
        code: exit::SUCCESS,
        text: None,
    })
}

fn cmd_uniqueness(a: &StateArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    let (resolved, pattern) = prepare(a, "uniqueness", config)?;
    let marginals = MarginalSet::from_state(&resolved.state, &pattern)?;
    let report = compatibility_range(&marginals)?;
    Ok(CommandOutput {
        result: serde_json::to_value(&report)?,
        code: exit::SUCCESS,
        text: None,
    })
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("grid `{s}` is not THETAxPHI"));
    let (t, p) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        t.trim().parse().map_err(|_| bad())?,
        p.trim().parse().map_err(|_| bad())?,
    ))
}

fn cmd_localizable(a: &LocalizableArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    let resolved = resolve_state(&a.state)?;
    let grid = parse_grid(&a.grid)?;
    let reg = resolved.state.register().clone();
    config.command = "localizable".into();
    config.state = Some(a.state.clone());
    config.dims = Some(reg.dims().to_vec());
    config.party = a.party;
    config.grid = Some(grid);
    let parties: Vec<usize> = match a.party {
        Some(p) => vec![p],
        None => (0..reg.num_parties())
            .filter(|&p| reg.dim_of(p) == 2)
            .collect(),
    };
    let sweeps = parties
        .iter()
        .map(|&p| localizable_sweep(&resolved.state, p, grid))
        .collect::<Result<Vec<_>>>()?;
    let minimum = sweeps
        .iter()
        .map(|s| s.minimum)
        .fold(f64::INFINITY, f64::min);
    Ok(CommandOutput {
        result: json!({
            "minimum": minimum,
            "sweeps": sweeps,
            "note": "heuristic global minimum: grid sampling plus local refinement",
        }),
        code: exit::SUCCESS,
        text: None,
    })
}

/// Per-register summary of search reports.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub register: String,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub within_three_rounds: usize,
    pub mean_success_round: Option<f64>,
    pub best_tolerance: Option<f64>,
    pub median_tolerance: Option<f64>,
    /// Largest certificate decomposition residual among verified outcomes.
    pub max_certificate_residual: Option<f64>,
    /// Smallest constrained PT eigenvalue among verified outcomes.
    pub min_constraint_eigenvalue: Option<f64>,
}

fn f(v: &Value, path: &[&str]) -> Option<f64> {
    path.iter().try_fold(v, |acc, k| acc.get(k))?.as_f64()
}

/// Groups search reports by register.
pub fn summarize(reports: &[Value]) -> Result<Vec<ReportRow>> {
    let mut groups: BTreeMap<String, Vec<&Value>> = BTreeMap::new();
    for r in reports {
        if r.pointer("/config/command").and_then(Value::as_str) != Some("search") {
            return Err(Error::Config("report expects search reports".into()));
        }
        let reg = r
            .pointer("/result/register")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config("search report without register".into()))?;
        groups.entry(reg.to_string()).or_default().push(r);
    }
    let mut rows = Vec::new();
    for (register, rs) in groups {
        let mut row = ReportRow {
            register,
            runs: rs.len(),
            ..Default::default()
        };
        let mut rounds = Vec::new();
        let mut tolerances = Vec::new();
        for r in &rs {
            let outcome = &r["result"]["outcome"];
            if outcome["status"] == "success" {
                row.successes += 1;
                if let Some(k) = outcome["success_round"].as_u64() {
                    rounds.push(k as f64);
                    if k <= 3 {
                        row.within_three_rounds += 1;
                    }
                }
                if let Some(t) = r["result"]["witness_tolerance"].as_f64() {
                    tolerances.push(t);
                }
                let ver = &outcome["verification"];
                if let Some(certs) = ver["witness"]["certificates"].as_array() {
                    for c in certs {
                        if let Some(x) = f(c, &["decomposition_residual"]) {
                            row.max_certificate_residual =
                                Some(row.max_certificate_residual.map_or(x, |m: f64| m.max(x)));
                        }
                    }
                }
                if let Some(pairs) = ver["constraints"]["pair_pt_min"].as_array() {
                    for p in pairs {
                        if let Some(x) = p.get(1).and_then(Value::as_f64) {
                            row.min_constraint_eigenvalue =
                                Some(row.min_constraint_eigenvalue.map_or(x, |m: f64| m.min(x)));
                        }
                    }
                }
            }
        }
        row.success_rate = row.successes as f64 / row.runs as f64;
        if !rounds.is_empty() {
            row.mean_success_round = Some(rounds.iter().sum::<f64>() / rounds.len() as f64);
        }
        tolerances.sort_by(f64::total_cmp);
        row.best_tolerance = tolerances.last().copied();
        row.median_tolerance = match tolerances.len() {
            0 => None,
            n if n % 2 == 1 => Some(tolerances[n / 2]),
            n => Some(0.5 * (tolerances[n / 2 - 1] + tolerances[n / 2])),
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn markdown_table(rows: &[ReportRow]) -> String {
    let opt = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$}"));
    let mut s = String::from(
        "| register | runs | successes | rate | ≤3 rounds | mean round | best tolerance | median tolerance |\n|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        s += &format!(
            "| {} | {} | {} | {:.2} | {} | {} | {} | {} |\n",
            r.register,
            r.runs,
            r.successes,
            r.success_rate,
            r.within_three_rounds,
            opt(r.mean_success_round, 2),
            opt(r.best_tolerance, 4),
            opt(r.median_tolerance, 4)
        );
    }
    s
}

fn cmd_report(a: &ReportArgs, config: &mut RunConfig) -> Result<CommandOutput> {
    config.command = "report".into();
    config.inputs = a.files.clone();
    let reports = a
        .files
        .iter()
        .map(|p| Ok(serde_json::from_str::<Value>(&std::fs::read_to_string(p)?)?))
        .collect::<Result<Vec<_>>>()?;
    let rows = summarize(&reports)?;
    Ok(CommandOutput {
        text: a.markdown.then(|| markdown_table(&rows)),
        result: json!({ "rows": rows }),
        code: exit::SUCCESS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statesearch::DEFAULT_DIRECTIONS;

    #[test]
    fn run_config_rejects_unknown_fields() {
        assert!(RunConfig::from_json(r#"{"dims":[2,2,2],"seed":1}"#).is_ok());
        assert!(RunConfig::from_json(r#"{"dims":[2,2,2],"sede":1}"#).is_err());
    }

    #[test]
    fn search_requires_seed() {
        let c = RunConfig {
            dims: Some(vec![2, 2, 2]),
            ..Default::default()
        };
        assert!(matches!(search_config(&c), Err(Error::Config(_))));
    }

    #[test]
    fn post_measurement_defaults() {
        let c = RunConfig {
            dims: Some(vec![2, 2, 2]),
            seed: Some(3),
            constraints: ConstraintSpec {
                directions: DEFAULT_DIRECTIONS,
                ..Default::default()
            },
            ..Default::default()
        };
        let s = search_config(&c).unwrap();
        assert_eq!(s.constraints.post_measurement.len(), 1000);
        assert_eq!(s.constraints.post_measurement[0].epsilon, DEFAULT_EPSILON);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("60x120").unwrap(), (60, 120));
        assert!(parse_grid("60").is_err());
    }

    #[test]
    fn empty_report_is_empty() {
        assert!(summarize(&[]).unwrap().is_empty());
    }
}
