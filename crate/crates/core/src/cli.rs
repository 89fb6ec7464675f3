//! Command-line front end. Every subcommand produces one [`ReportEnvelope`]
//! printed as JSON or as an aligned table rendered from the same JSON.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! computation errors, 2 on a bad invocation.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::avn::{self, AvnError};
use crate::bell::{self, BellError};
use crate::game::{self, GameError, Strategy};
use crate::hilbert;
use crate::loophole::{self, LoopholeError};
use crate::rational::{self, round15, ExactValue, Rational};
use crate::Variant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest deviation of the finite-shot Bell total from the exact value
/// accepted by [`cmd_bell`].
pub const BELL_ESTIMATE_MARGIN: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Avn(#[from] AvnError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Loophole(#[from] LoopholeError),
    #[error(transparent)]
    Bell(#[from] BellError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportEnvelope {
    pub command: String,
    pub variant: Option<String>,
    pub seed: u64,
    pub parameters: Value,
    pub results: Value,
    pub pass: bool,
    /// RFC 3339 time of the run; `null` when suppressed.
    pub timestamp: Option<String>,
}

impl ReportEnvelope {
    fn new(command: &str, variant: Option<Variant>, seed: u64, parameters: Value, results: Value) -> Self {
        let pass =
            results["checks"].as_array().is_some_and(|checks| checks.iter().all(|c| c["pass"] == Value::Bool(true)));
        ReportEnvelope {
            command: command.into(),
            variant: variant.map(|v| v.flag().into()),
            seed,
            parameters,
            results: normalize(results),
            pass,
            timestamp: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }

    /// Two aligned columns, one row per JSON leaf.
    pub fn to_table(&self) -> String {
        let mut rows = Vec::new();
        flatten("", &serde_json::to_value(self).expect("envelope serializes"), &mut rows);
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    New,
    Old,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::New => Variant::New4,
            VariantArg::Old => Variant::Old9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "avnlab", version, about = "Verify the two-observer all-versus-nothing argument")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value = "new")]
    pub variant: VariantArg,
    /// Simulated rounds or shots; 0 reports exact values only.
    #[arg(long, global = true, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Emit `"timestamp": null` so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the nine perfect correlations of the cluster state.
    StateVerify,
    /// Maximum satisfiable predictions and the parity witness.
    Avn,
    /// Classical and quantum game values, optionally simulated.
    Game {
        /// Write every simulated round as a JSON line to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Critical detection efficiency and the optimal instruction ensemble.
    Loophole,
    /// Bell value, local bound, eigenvalue and visibility threshold.
    Bell,
    /// Every report with default parameters.
    ReportAll,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
}

fn check(name: &'static str, pass: bool) -> Check {
    Check { name, pass }
}

struct Expected {
    best: usize,
    total: usize,
    classical: Rational,
    critical: Rational,
}

fn expected(variant: Variant) -> Expected {
    match variant {
        Variant::New4 => {
            Expected { best: 3, total: 4, classical: rational::ratio(3, 4), critical: rational::ratio(3, 4) }
        }
        Variant::Old9 => {
            Expected { best: 8, total: 9, classical: rational::ratio(8, 9), critical: rational::ratio(5, 6) }
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn check_tolerance(tolerance: f64) -> Result<(), CliError> {
    if tolerance.is_finite() && tolerance > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tolerance must be a positive finite number, got {tolerance}")))
    }
}

pub fn cmd_state_verify(tolerance: f64) -> Result<ReportEnvelope, CliError> {
    check_tolerance(tolerance)?;
    let report = hilbert::verify_stabilizers(&hilbert::build_cluster_state());
    let checks = [check("residuals_below_tolerance", report.all_below(tolerance))];
    let results = json!({
        "max_residual": report.max_residual(),
        "sign_pattern": report.sign_pattern(),
        "stabilizers": report.checks,
        "checks": checks,
    });
    Ok(ReportEnvelope::new("state-verify", None, 0, json!({ "tolerance": tolerance }), results))
}

pub fn cmd_avn(variant: Variant) -> Result<ReportEnvelope, CliError> {
    let sys = avn::constraint_system(variant);
    let max = avn::max_satisfiable(&sys)?;
    let feasibility = avn::infeasibility_witness(&sys);
    let want = expected(variant);
    let checks = [
        check("best_satisfiable", max.best == want.best && max.total == want.total),
        check("witness_found", feasibility.witness().is_some()),
    ];
    let results = json!({
        "system": sys,
        "max_satisfiable": max,
        "feasibility": feasibility,
        "checks": checks,
    });
    Ok(ReportEnvelope::new("avn", Some(variant), 0, json!({}), results))
}

/// Integer-valued floats within 1e−12 are reported exactly.
fn exact_if_integer(x: f64) -> Option<String> {
    let r = x.round();
    ((x - r).abs() < bell::EXACT_SNAP_TOLERANCE).then(|| format!("{r}"))
}

fn open_log(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn cmd_game(variant: Variant, shots: u64, seed: u64, log: Option<&Path>) -> Result<ReportEnvelope, CliError> {
    let spec = game::game_spec(variant);
    let (classical, strategy) = game::optimal_classical_strategy(&spec)?;
    let want = expected(variant);
    let mut checks = vec![check("classical_value", classical == want.classical)];
    let mut results = Map::new();
    results.insert("classical_value".into(), to_value(&ExactValue::from(&classical)));
    results.insert("optimal_strategy".into(), to_value(&strategy));

    let psi = hilbert::build_cluster_state();
    let quantum = match game::quantum_value(&spec, &psi) {
        Ok(q) => Some(q),
        Err(GameError::Unsupported { .. }) if variant == Variant::Old9 => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(q) = quantum {
        checks.push(check("quantum_value", (q - 1.0).abs() <= 1e-12));
        results.insert("quantum_value".into(), json!({ "exact": exact_if_integer(q), "decimal": q }));
    }

    if shots > 0 {
        let mut writer = log.map(open_log).transpose()?;
        let mut io_error = None;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut run = |name: &str, s: &Strategy, rng: &mut ChaCha8Rng| {
            game::simulate_rounds_with(&spec, s, shots, rng, |r| {
                if let (Some(w), None) = (writer.as_mut(), io_error.as_ref()) {
                    let line = json!({ "strategy": name, "round": r });
                    if let Err(e) = writeln!(w, "{line}") {
                        io_error = Some(e);
                    }
                }
            })
        };
        let classical_sim = run("classical", &Strategy::Classical(strategy.clone()), &mut rng)?;
        let mut empirical = Map::new();
        empirical.insert("classical".into(), to_value(&classical_sim));
        match quantum {
            Some(_) => {
                let sim = run("quantum", &Strategy::Quantum(psi.clone()), &mut rng)?;
                checks.push(check("quantum_empirical_rate", sim.wins == sim.rounds));
                empirical.insert("quantum".into(), to_value(&sim));
            }
            None => {
                let reason = game::quantum_value(&spec, &psi).err().map(|e| e.to_string());
                empirical.insert("quantum".into(), json!({ "status": "unsupported", "reason": reason }));
            }
        }
        results.insert("empirical".into(), Value::Object(empirical));
        if let Some(source) = io_error {
            return Err(CliError::Io { path: log.expect("writer implies path").into(), source });
        }
        if let Some(mut w) = writer {
            w.flush().map_err(|source| CliError::Io { path: log.expect("writer implies path").into(), source })?;
        }
    }
    results.insert("checks".into(), to_value(&checks));
    let parameters = json!({ "shots": shots, "log": log.map(|p| p.display().to_string()) });
    Ok(ReportEnvelope::new("game", Some(variant), seed, parameters, Value::Object(results)))
}

pub fn cmd_loophole(variant: Variant) -> Result<ReportEnvelope, CliError> {
    let report = loophole::verify_reference_optimality(variant)?;
    let want = expected(variant);
    let checks = [
        check("critical_efficiency", report.critical.threshold == want.critical),
        check("balance_p_is_one", report.balance_p.exact == "1"),
        check("reference_ensemble_optimal", report.optimal),
    ];
    let results = json!({
        "critical_efficiency": ExactValue::from(&report.critical.threshold),
        "candidates": report.critical.candidates,
        "survivors": report.critical.survivors,
        "optimality": report,
        "checks": checks,
    });
    Ok(ReportEnvelope::new("loophole", Some(variant), 0, json!({}), results))
}

pub fn cmd_bell(shots: u64, seed: u64) -> Result<ReportEnvelope, CliError> {
    if shots > 0 && shots < bell::MIN_SHOTS {
        return Err(CliError::Usage(format!("--shots must be 0 or at least {}, got {shots}", bell::MIN_SHOTS)));
    }
    let expr = bell::bell_expression();
    let psi = hilbert::build_cluster_state();
    let report = bell::bell_report(&expr, &psi)?;
    let bound = bell::lhv_bound(&expr);
    let mut checks = vec![
        check("exceeds_local_bound", report.quantum_value > rational::to_f64(&bound)),
        check("eigenvalue_matches_value", (report.max_eigenvalue - report.quantum_value).abs() <= 1e-9),
    ];
    let mut results = match to_value(&report) {
        Value::Object(m) => m,
        _ => unreachable!("report is a struct"),
    };
    if shots > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let est = bell::estimate_terms(&expr, &psi, shots, &mut rng)?;
        checks.push(check("estimate_near_value", (est.total - report.quantum_value).abs() <= BELL_ESTIMATE_MARGIN));
        results.insert("estimates".into(), to_value(&est));
    }
    results.insert("checks".into(), to_value(&checks));
    Ok(ReportEnvelope::new("bell", None, seed, json!({ "shots": shots }), Value::Object(results)))
}

fn summary_field(env: &ReportEnvelope, pointer: &str) -> Value {
    match env.results.pointer(pointer) {
        Some(Value::String(s)) => Value::String(s.clone()),
        Some(Value::Number(n)) => Value::String(n.to_string()),
        _ => Value::Null,
    }
}

/// Runs every command with default parameters. `results.summary` lists the
/// headline exact values as strings.
pub fn cmd_report_all(seed: u64) -> Result<ReportEnvelope, CliError> {
    let state = cmd_state_verify(DEFAULT_TOLERANCE)?;
    let [avn_new, avn_old] = [cmd_avn(Variant::New4)?, cmd_avn(Variant::Old9)?];
    let [game_new, game_old] = [cmd_game(Variant::New4, 0, seed, None)?, cmd_game(Variant::Old9, 0, seed, None)?];
    let [loop_new, loop_old] = [cmd_loophole(Variant::New4)?, cmd_loophole(Variant::Old9)?];
    let bell = cmd_bell(0, seed)?;
    let all = [&state, &avn_new, &avn_old, &game_new, &game_old, &loop_new, &loop_old, &bell];
    let summary = json!({
        "avn_new_best": summary_field(&avn_new, "/max_satisfiable/best"),
        "avn_new_total": summary_field(&avn_new, "/max_satisfiable/total"),
        "avn_old_best": summary_field(&avn_old, "/max_satisfiable/best"),
        "avn_old_total": summary_field(&avn_old, "/max_satisfiable/total"),
        "classical_value_new": summary_field(&game_new, "/classical_value/exact"),
        "classical_value_old": summary_field(&game_old, "/classical_value/exact"),
        "quantum_value_new": summary_field(&game_new, "/quantum_value/exact"),
        "critical_efficiency_new": summary_field(&loop_new, "/critical_efficiency/exact"),
        "critical_efficiency_old": summary_field(&loop_old, "/critical_efficiency/exact"),
        "bell_quantum_value": summary_field(&bell, "/quantum_value_exact"),
        "lhv_bound": summary_field(&bell, "/lhv_bound"),
        "visibility_threshold": summary_field(&bell, "/visibility_threshold_exact"),
    });
    let checks: Vec<Value> = all
        .iter()
        .map(|e| json!({ "name": format!("{}{}", e.command, e.variant.as_deref().map(|v| format!(":{v}")).unwrap_or_default()), "pass": e.pass }))
        .collect();
    let results = json!({
        "summary": summary,
        "state_verify": state,
        "avn": { "new": avn_new, "old": avn_old },
        "game": { "new": game_new, "old": game_old },
        "loophole": { "new": loop_new, "old": loop_old },
        "bell": bell,
        "checks": checks,
    });
    Ok(ReportEnvelope::new("report-all", None, seed, json!({}), results))
}

/// Rounds every float to 15 significant digits.
fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round15(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) if !m.is_empty() => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) if !a.is_empty() => {
            a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out))
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn execute(cli: &Cli) -> Result<ReportEnvelope, CliError> {
    check_tolerance(cli.tolerance)?;
    let variant = Variant::from(cli.variant);
    let mut env = match &cli.command {
        Command::StateVerify => cmd_state_verify(cli.tolerance)?,
        Command::Avn => cmd_avn(variant)?,
        Command::Game { log } => cmd_game(variant, cli.shots, cli.seed, log.as_deref())?,
        Command::Loophole => cmd_loophole(variant)?,
        Command::Bell => cmd_bell(cli.shots, cli.seed)?,
        Command::ReportAll => cmd_report_all(cli.seed)?,
    };
    if !cli.no_timestamp {
        env.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    Ok(env)
}

/// Parses `args`, runs the command and writes the report; returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(env) => {
            let text = match cli.format {
                Format::Json => env.to_json() + "\n",
                Format::Table => env.to_table(),
            };
            if let Err(e) = stdout.write_all(text.as_bytes()) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_FAIL;
            }
            if env.pass {
                EXIT_PASS
            } else {
                let _ = writeln!(stderr, "verification failed");
                EXIT_FAIL
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
