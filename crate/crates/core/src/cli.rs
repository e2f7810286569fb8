//! Command-line front end: argument parsing, command dispatch and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ac_core::{closure, contradiction_core, fmt_rat, ACSet, Comparison, Rat, Term};
use crate::containment::{
    canonical_oracle_check_with, classify_fragment, entailment_check, fast_contains, scale_bound, ContainmentError,
    ContainmentResult, OracleOptions, Strategy, Witness, SCALE_ENV,
};
use crate::corpus::{random_pair, random_rewriting_case, rng, AcProfile, CorpusOptions};
use crate::datalog::{contains_cq, DatalogError};
use crate::hardness_gen::{eval_pi2sat, random_formula, reduce_pi2sat, FormulaError, GadgetVariant, Pi2Formula};
use crate::query_model::parse::{parse_statements, PItem, PTerm, ParseError, Statement};
use crate::query_model::{booleanize, merge_equalities, normalize, Database, Query, QueryError, Workspace};
use crate::rewriting::{
    certain_answers, certain_answers_oracle, certain_answers_oracle_with, mcr_rsi1, mcr_rsi1_plus, CertainAnswers,
    MCRProgram, RewriteError,
};
use crate::transform::{containment_via_transform, relevant_sis, to_cq, to_datalog_with, TransformError};

/// Default scale bound of the selftest oracles when the environment sets none.
pub const SELFTEST_BOUND: usize = 24;

#[derive(Parser, Debug)]
#[command(name = "cqac", version, about = "Containment and rewriting for conjunctive queries with comparisons")]
pub struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write the rendered text report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub emit_golden: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether Q2 is contained in Q1.
    Contains {
        q1: PathBuf,
        q2: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
    },
    /// Close a set of comparisons under implication.
    Closure { acs: PathBuf },
    /// Rewrite a query so that no variable or constant repeats in its atoms.
    Normalize { query: PathBuf },
    /// Emit the Datalog program of a closed right-semi-interval query.
    Transform {
        q1: PathBuf,
        /// Query whose semi-intervals drive the link rules; also decides its containment.
        #[arg(long, value_name = "Q2")]
        relevant: Option<PathBuf>,
    },
    /// Emit the maximally contained rewriting of a query over views.
    Mcr {
        query: PathBuf,
        #[arg(long)]
        views: PathBuf,
        /// Allow comparisons among head variables.
        #[arg(long)]
        plus: bool,
    },
    /// Certain answers of a query on a view instance.
    Certain {
        query: PathBuf,
        #[arg(long)]
        views: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        /// Cross-check against canonical databases of the instance.
        #[arg(long)]
        oracle: bool,
    },
    /// Build the containment pair of a quantified Boolean formula.
    GenHard {
        formula: PathBuf,
        /// Gadget variant; all variants when omitted.
        #[arg(long)]
        variant: Option<GadgetVariant>,
    },
    /// Run the seeded oracle-agreement suites.
    Selftest {
        #[arg(long, default_value_t = 200)]
        corpus_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Containment procedures selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Auto,
    Hp,
    OneAc,
    Rsi1,
    Entailment,
    Oracle,
}

/// Outcome class of a command, mapped to the exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Violated,
    Error,
}

/// Machine-readable error kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Usage,
    Parse,
    Io,
    Fragment,
    ScaleBound,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::ScaleBound => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: ErrorKind,
    pub message: String,
}

/// Structured result of one command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Report {
    fn new(command: &str) -> Report {
        Report {
            command: command.to_string(),
            status: Status::Ok,
            verdict: None,
            fields: BTreeMap::new(),
            lines: Vec::new(),
            error: None,
        }
    }

    fn field(&mut self, key: &str, value: impl ToString) -> &mut Report {
        self.fields.insert(key.to_string(), value.to_string());
        self
    }

    fn verdict(&mut self, verdict: &str, ok: bool) -> &mut Report {
        self.verdict = Some(verdict.to_string());
        self.status = if ok { Status::Ok } else { Status::Violated };
        self
    }

    fn failure(command: &str, err: CliError) -> Report {
        let mut r = Report::new(command);
        r.status = Status::Error;
        r.error = Some(ErrorInfo { kind: err.kind, message: err.message });
        r
    }

    pub fn exit_code(&self) -> i32 {
        match (self.status, &self.error) {
            (Status::Ok, _) => 0,
            (Status::Violated, _) => 1,
            (Status::Error, Some(e)) => e.kind.exit_code(),
            (Status::Error, None) => 2,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// Human-readable text: verdict, `key: value` fields, then payload lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(e) = &self.error {
            let kind = serde_json::to_value(e.kind).expect("serializable");
            let _ = writeln!(out, "error[{}]: {}", kind.as_str().unwrap_or_default(), e.message);
            return out;
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(out, "{v}");
        }
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}: {v}");
        }
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

/// An error with its machine-readable kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn new(kind: ErrorKind, message: impl ToString) -> CliError {
        CliError { kind, message: message.to_string() }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> CliError {
        CliError::new(ErrorKind::Parse, e)
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> CliError {
        CliError::new(ErrorKind::Parse, e)
    }
}

impl From<FormulaError> for CliError {
    fn from(e: FormulaError) -> CliError {
        CliError::new(ErrorKind::Parse, e)
    }
}

impl From<DatalogError> for CliError {
    fn from(e: DatalogError) -> CliError {
        let kind = match e {
            DatalogError::Query(_) | DatalogError::Syntax { .. } => ErrorKind::Parse,
            _ => ErrorKind::Fragment,
        };
        CliError::new(kind, e)
    }
}

impl From<ContainmentError> for CliError {
    fn from(e: ContainmentError) -> CliError {
        let kind = match e {
            ContainmentError::ScaleBound { .. } => ErrorKind::ScaleBound,
            _ => ErrorKind::Fragment,
        };
        CliError::new(kind, e)
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> CliError {
        match e {
            TransformError::Datalog(d) => d.into(),
            e => CliError::new(ErrorKind::Fragment, e),
        }
    }
}

impl From<RewriteError> for CliError {
    fn from(e: RewriteError) -> CliError {
        match e {
            RewriteError::Transform(t) => t.into(),
            RewriteError::Datalog(d) => d.into(),
            RewriteError::Containment(c) => c.into(),
            e => CliError::new(ErrorKind::Fragment, e),
        }
    }
}

/// Exit status and rendered output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first), runs the command and renders the report.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return Outcome { code: 0, stdout: e.to_string(), stderr: String::new() },
        Err(e) => {
            if json {
                let r = Report::failure("", CliError::new(ErrorKind::Usage, e.to_string().trim_end()));
                return Outcome { code: 2, stdout: r.to_json(), stderr: String::new() };
            }
            return Outcome { code: 2, stdout: String::new(), stderr: e.to_string() };
        }
    };
    let report = execute(&cli.command);
    let text = report.to_text();
    let mut stderr = String::new();
    if let Some(path) = &cli.emit_golden {
        if report.error.is_none() {
            if let Err(e) = std::fs::write(path, &text) {
                let r = Report::failure(&report.command, CliError::new(ErrorKind::Io, format!("{}: {e}", path.display())));
                return render(&r, cli.json, String::new());
            }
        }
    }
    if report.error.is_some() && !cli.json {
        stderr = text;
        return Outcome { code: report.exit_code(), stdout: String::new(), stderr };
    }
    render(&report, cli.json, stderr)
}

fn render(report: &Report, json: bool, stderr: String) -> Outcome {
    let code = report.exit_code();
    if json {
        return Outcome { code, stdout: report.to_json(), stderr };
    }
    match report.error {
        Some(_) => Outcome { code, stdout: String::new(), stderr: report.to_text() },
        None => Outcome { code, stdout: report.to_text(), stderr },
    }
}

/// Runs one command; failures become error reports.
pub fn execute(command: &Command) -> Report {
    let name = command_name(command);
    let result = match command {
        Command::Contains { q1, q2, strategy } => contains(q1, q2, *strategy),
        Command::Closure { acs } => closure_cmd(acs),
        Command::Normalize { query } => normalize_cmd(query),
        Command::Transform { q1, relevant } => transform_cmd(q1, relevant.as_deref()),
        Command::Mcr { query, views, plus } => mcr_cmd(query, views, *plus),
        Command::Certain { query, views, instance, oracle } => certain_cmd(query, views, instance, *oracle),
        Command::GenHard { formula, variant } => gen_hard(formula, *variant),
        Command::Selftest { corpus_size, seed } => Ok(selftest(*corpus_size, *seed)),
    };
    result.unwrap_or_else(|e| Report::failure(name, e))
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Contains { .. } => "contains",
        Command::Closure { .. } => "closure",
        Command::Normalize { .. } => "normalize",
        Command::Transform { .. } => "transform",
        Command::Mcr { .. } => "mcr",
        Command::Certain { .. } => "certain",
        Command::GenHard { .. } => "gen-hard",
        Command::Selftest { .. } => "selftest",
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(ErrorKind::Io, format!("{}: {e}", path.display())))
}

fn with_path<T, E: Into<CliError>>(path: &Path, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| {
        let mut e = e.into();
        e.message = format!("{}: {}", path.display(), e.message);
        e
    })
}

/// Loads the first query of a file.
pub fn load_query(path: &Path) -> Result<Query, CliError> {
    with_path(path, Query::parse(&read(path)?))
}

/// Loads the rules and facts of a file.
pub fn load_workspace(path: &Path) -> Result<Workspace, CliError> {
    with_path(path, Workspace::parse(&read(path)?))
}

/// Loads a fact file.
pub fn load_database(path: &Path) -> Result<Database, CliError> {
    with_path(path, Database::parse(&read(path)?))
}

/// Parses comparisons separated by commas, periods or line breaks.
pub fn parse_acset(text: &str) -> Result<ACSet, CliError> {
    let items: Vec<&str> = text
        .lines()
        .map(|l| l.split('%').next().unwrap_or_default())
        .flat_map(|l| l.split([',', '.']))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let mut acs = ACSet::new();
    if items.is_empty() {
        return Ok(acs);
    }
    let source = format!("acs() :- {}.", items.join(", "));
    for st in parse_statements(&source)? {
        let Statement::Rule { body, .. } = st else { continue };
        for item in body {
            let PItem::Cmp(l, op, r) = item else {
                return Err(CliError::new(ErrorKind::Parse, "expected only comparisons"));
            };
            acs.insert_atomic(Comparison::fold(plain(l)?, op, plain(r)?));
        }
    }
    Ok(acs)
}

fn plain(t: PTerm) -> Result<Term, CliError> {
    match t {
        PTerm::Var(v) => Ok(Term::Var(v)),
        PTerm::Const(c) => Ok(Term::Const(c)),
        PTerm::Func(..) => Err(CliError::new(ErrorKind::Parse, "functional term in a comparison")),
    }
}

fn tuple_text(t: &[Rat]) -> String {
    format!("({})", t.iter().map(fmt_rat).collect::<Vec<_>>().join(", "))
}

fn witness_report(r: &mut Report, witness: &Witness) {
    match witness {
        Witness::Mappings(ms) => {
            r.field("witness", "mappings").field("mappings", ms.len());
            r.lines.extend(ms.iter().map(|m| format!("mapping: {m}")));
        }
        Witness::Counterexample(db) => {
            r.field("witness", "counterexample");
            r.lines.extend(db.facts().map(|a| format!("counterexample: {a}.")));
        }
        Witness::Vacuous => {
            r.field("witness", "vacuous");
        }
        Witness::Exhaustive { databases } => {
            r.field("witness", "exhaustive").field("databases", databases);
        }
        Witness::None => {
            r.field("witness", "none");
        }
    }
}

fn contains(p1: &Path, p2: &Path, strategy: StrategyArg) -> Result<Report, CliError> {
    let (q1, q2) = (load_query(p1)?, load_query(p2)?);
    let result: ContainmentResult = match strategy {
        StrategyArg::Entailment => entailment_check(&q1, &q2),
        StrategyArg::Oracle => canonical_oracle_check_with(&q1, &q2, OracleOptions::default())?,
        StrategyArg::Auto => fast_contains(&q1, &q2, Strategy::Auto)?,
        StrategyArg::Hp => fast_contains(&q1, &q2, Strategy::Hp)?,
        StrategyArg::OneAc => fast_contains(&q1, &q2, Strategy::OneAc)?,
        StrategyArg::Rsi1 => fast_contains(&q1, &q2, Strategy::Rsi1)?,
    };
    let mut r = Report::new("contains");
    let name = strategy.to_possible_value().expect("named").get_name().to_string();
    r.field("strategy", name).field("fragment", classify_fragment(&q1, &q2));
    r.verdict(if result.holds { "CONTAINED" } else { "NOT CONTAINED" }, result.holds);
    witness_report(&mut r, &result.witness);
    Ok(r)
}

fn closure_cmd(path: &Path) -> Result<Report, CliError> {
    let acs = with_path(path, parse_acset(&read(path)?))?;
    let mut r = Report::new("closure");
    r.field("comparisons", acs.len());
    match contradiction_core(&acs) {
        Some(core) => {
            r.verdict("INCONSISTENT", true);
            r.lines.extend(core.iter().map(|c| format!("conflict: {c}")));
        }
        None => {
            r.verdict("CONSISTENT", true);
            let derived: BTreeSet<Comparison> = closure(&acs).derived();
            let shown: Vec<&Comparison> = derived.iter().filter(|c| c.lhs() != c.rhs()).collect();
            r.field("derived", shown.len());
            r.lines.extend(shown.iter().map(|c| c.to_string()));
        }
    }
    Ok(r)
}

fn normalize_cmd(path: &Path) -> Result<Report, CliError> {
    let q = load_query(path)?;
    let mut r = Report::new("normalize");
    r.lines.push(normalize(&q).to_string());
    Ok(r)
}

fn program_lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

fn transform_cmd(p1: &Path, relevant: Option<&Path>) -> Result<Report, CliError> {
    let q1 = booleanize(&load_query(p1)?);
    let mut r = Report::new("transform");
    let (sis, cq) = match relevant {
        Some(p2) => {
            let q2 = booleanize(&load_query(p2)?);
            let Some(m2) = merge_equalities(&q2) else {
                return Err(CliError::new(ErrorKind::Fragment, format!("{}: unsatisfiable query", p2.display())));
            };
            let constants: BTreeSet<Rat> = q1.constants().union(&m2.constants()).copied().collect();
            (relevant_sis(&m2, &constants), Some(to_cq(&m2, &constants)))
        }
        None => (BTreeSet::new(), None),
    };
    let (program, cx) = to_datalog_with(&q1, &sis, crate::datalog::ORDER_PREDICATE)?;
    r.field("rules", program.rules.len());
    if let Some(cq) = cq {
        let derived = contains_cq(&program, &cq)?;
        r.field("cq", cq);
        r.verdict(if derived { "CONTAINED" } else { "NOT CONTAINED" }, derived);
    }
    let annotated = MCRProgram { program, origins: cx.origins };
    r.lines = program_lines(&annotated.to_string());
    Ok(r)
}

fn mcr_cmd(query: &Path, views: &Path, plus: bool) -> Result<Report, CliError> {
    let q = load_query(query)?;
    let ws = load_workspace(views)?;
    let m = if plus { mcr_rsi1_plus(&q, &ws.rules)? } else { mcr_rsi1(&q, &ws.rules)? };
    let mut r = Report::new("mcr");
    r.field("views", ws.rules.len()).field("rules", m.program.rules.len()).field("query", &m.program.query);
    r.lines = program_lines(&m.to_string());
    Ok(r)
}

fn certain_cmd(query: &Path, views: &Path, instance: &Path, oracle: bool) -> Result<Report, CliError> {
    let q = load_query(query)?;
    let views = load_workspace(views)?.rules;
    let db = load_database(instance)?;
    let m = mcr_rsi1_plus(&q, &views)?;
    let answers = certain_answers(&m, &db)?;
    let mut r = Report::new("certain");
    r.field("facts", db.len()).field("answers", answers.len());
    r.lines.extend(answers.iter().map(|t| format!("answer: {}", tuple_text(t))));
    if oracle {
        r.field("scale_bound", scale_bound());
        match certain_answers_oracle(&q, &views, &db)? {
            CertainAnswers::Undefined => {
                r.field("oracle", "undefined");
                r.verdict("UNDEFINED", true);
            }
            CertainAnswers::Defined(expected) => {
                r.field("oracle", expected.len());
                let agree = expected == answers;
                r.verdict(if agree { "AGREE" } else { "DISAGREE" }, agree);
                r.lines.extend(expected.difference(&answers).map(|t| format!("missing: {}", tuple_text(t))));
                r.lines.extend(answers.difference(&expected).map(|t| format!("extra: {}", tuple_text(t))));
            }
        }
    }
    Ok(r)
}

fn gen_hard(path: &Path, variant: Option<GadgetVariant>) -> Result<Report, CliError> {
    let f: Pi2Formula = with_path(path, read(path)?.trim().parse::<Pi2Formula>())?;
    f.validate()?;
    let truth = eval_pi2sat(&f)?;
    let mut r = Report::new("gen-hard");
    r.field("formula", &f).field("formula_true", truth);
    r.field("expected", if truth { "CONTAINED" } else { "NOT CONTAINED" });
    let variants: Vec<GadgetVariant> = variant.map_or_else(|| GadgetVariant::ALL.to_vec(), |v| vec![v]);
    for v in variants {
        let (q1, q2) = reduce_pi2sat(&f, v);
        r.lines.push(format!("% {v}"));
        r.lines.push(q1.to_string());
        r.lines.push(q2.to_string());
    }
    Ok(r)
}

const PROFILES: [(AcProfile, AcProfile); 5] = [
    (AcProfile::Mixed, AcProfile::Mixed),
    (AcProfile::Clsi, AcProfile::Mixed),
    (AcProfile::Lsi, AcProfile::SiNe),
    (AcProfile::ClosedRsi1, AcProfile::Mixed),
    (AcProfile::Rsi1, AcProfile::SiNe),
];

/// Result of one selftest item.
#[derive(Clone, Debug, Default)]
struct Check {
    compared: usize,
    refused: usize,
    undefined: usize,
    failures: Vec<String>,
}

impl Check {
    fn merge(mut self, other: Check) -> Check {
        self.compared += other.compared;
        self.refused += other.refused;
        self.undefined += other.undefined;
        self.failures.extend(other.failures);
        self
    }
}

fn selftest_options() -> OracleOptions {
    let bound = if std::env::var_os(SCALE_ENV).is_some() { scale_bound() } else { SELFTEST_BOUND };
    OracleOptions::with_bound(bound)
}

fn item_seed(seed: u64, suite: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(suite << 48).wrapping_add(i as u64)
}

fn containment_item(seed: u64, i: usize, options: OracleOptions) -> Check {
    let (p1, p2) = PROFILES[i % PROFILES.len()];
    let (q1, q2) = random_pair(&mut rng(item_seed(seed, 1, i)), &CorpusOptions::default(), p1, p2);
    let mut check = Check::default();
    let e = entailment_check(&q1, &q2).holds;
    let mut verdicts = vec![("oracle", canonical_oracle_check_with(&q1, &q2, options).map(|r| r.holds))];
    verdicts.push(("auto", fast_contains(&q1, &q2, Strategy::Auto).map(|r| r.holds)));
    for s in [Strategy::Hp, Strategy::OneAc, Strategy::Rsi1] {
        if let Ok(r) = fast_contains(&q1, &q2, s) {
            verdicts.push((s.name(), Ok(r.holds)));
        }
    }
    if let Ok(t) = containment_via_transform(&q1, &q2) {
        verdicts.push(("transform", Ok(t)));
    }
    for (name, v) in verdicts {
        match v {
            Ok(v) if v == e => check.compared += 1,
            Ok(v) => check.failures.push(format!(
                "containment seed={seed} item={i}: {name}={v} entailment={e}: {q1} | {q2}"
            )),
            Err(_) => check.refused += 1,
        }
    }
    check
}

fn rewriting_item(seed: u64, i: usize, options: OracleOptions) -> Check {
    let opts = CorpusOptions { predicates: vec![("e", 2)], head_arity: 1, ..CorpusOptions::default() };
    let case = random_rewriting_case(&mut rng(item_seed(seed, 2, i)), &opts, 4);
    let mut check = Check::default();
    let Ok(m) = mcr_rsi1(&case.query, &case.views) else {
        check.refused += 1;
        return check;
    };
    let got = match certain_answers(&m, &case.instance) {
        Ok(got) => got,
        Err(e) => {
            check.failures.push(format!("rewriting seed={seed} item={i}: evaluation failed: {e}"));
            return check;
        }
    };
    match certain_answers_oracle_with(&case.query, &case.views, &case.instance, options) {
        Ok(CertainAnswers::Defined(expected)) if expected == got => check.compared += 1,
        Ok(CertainAnswers::Defined(expected)) => check.failures.push(format!(
            "rewriting seed={seed} item={i}: mcr={got:?} oracle={expected:?}: {}",
            case.query
        )),
        Ok(CertainAnswers::Undefined) => check.undefined += 1,
        Err(_) => check.refused += 1,
    }
    check
}

fn hardness_item(seed: u64, i: usize, options: OracleOptions) -> Check {
    let mut g = rng(item_seed(seed, 3, i));
    let n = 1 + i % 2;
    let f = random_formula(&mut g, n, 3 - n, 3);
    let mut check = Check::default();
    let truth = eval_pi2sat(&f).expect("small formula");
    for v in GadgetVariant::ALL {
        let (q1, q2) = reduce_pi2sat(&f, v);
        match canonical_oracle_check_with(&q1, &q2, options) {
            Ok(r) if r.holds == truth => check.compared += 1,
            Ok(r) => check.failures.push(format!("hardness seed={seed} item={i} {v}: oracle={} formula={truth}: {f}", r.holds)),
            Err(_) => check.refused += 1,
        }
    }
    check
}

/// Runs the three suites over seeded corpora: `corpus_size` containment pairs,
/// a fifth as many rewriting cases and a tenth as many formulas.
pub fn selftest(corpus_size: usize, seed: u64) -> Report {
    let options = selftest_options();
    let suite = |n: usize, f: fn(u64, usize, OracleOptions) -> Check| -> Check {
        (0..n).into_par_iter().map(|i| f(seed, i, options)).collect::<Vec<_>>().into_iter().fold(Check::default(), Check::merge)
    };
    let containment = suite(corpus_size, containment_item);
    let rewriting = suite(corpus_size.div_ceil(5), rewriting_item);
    let hardness = suite(corpus_size.div_ceil(10), hardness_item);
    let mut r = Report::new("selftest");
    r.field("seed", seed).field("corpus_size", corpus_size).field("scale_bound", options.bound);
    let mut failures = Vec::new();
    for (name, c) in [("containment", containment), ("rewriting", rewriting), ("hardness", hardness)] {
        r.field(&format!("{name}_compared"), c.compared).field(&format!("{name}_refused"), c.refused);
        if c.undefined > 0 {
            r.field(&format!("{name}_undefined"), c.undefined);
        }
        failures.extend(c.failures);
    }
    r.field("failures", failures.len());
    r.verdict(if failures.is_empty() { "PASS" } else { "FAIL" }, failures.is_empty());
    r.lines = failures;
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("cqac-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn cli(args: &[&str]) -> Outcome {
        run(std::iter::once("cqac").chain(args.iter().copied()))
    }

    fn s(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    #[test]
    fn contains_reports_verdict_and_exit_code() {
        let q1 = temp("c1.cq", "q() :- a(X,Y), X <= 5.");
        let q2 = temp("c2.cq", "q() :- a(X,Y), X <= 3.");
        let out = cli(&["contains", s(&q1), s(&q2)]);
        assert_eq!(out.code, 0, "{out:?}");
        assert!(out.stdout.starts_with("CONTAINED\n"), "{}", out.stdout);
        assert!(out.stdout.contains("mapping: X->X, Y->Y"));
        let out = cli(&["contains", s(&q2), s(&q1), "--strategy", "entailment"]);
        assert_eq!(out.code, 1);
        assert!(out.stdout.starts_with("NOT CONTAINED\n"));
        assert!(out.stdout.contains("counterexample: a("));
    }

    #[test]
    fn errors_have_kinds_and_codes() {
        let bad = temp("bad.cq", "q() :- a(X,");
        let good = temp("good.cq", "q() :- a(X,Y), X < Y, Y < 3.");
        let out = cli(&["contains", s(&bad), s(&good)]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.starts_with("error[parse]: "), "{}", out.stderr);
        let out = cli(&["contains", s(&good), s(&good), "--strategy", "hp", "--json"]);
        assert_eq!(out.code, 2);
        let r: Report = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(r.error.unwrap().kind, ErrorKind::Fragment);
        assert_eq!(cli(&["contains", s(&good)]).code, 2);
        assert_eq!(cli(&["frobnicate"]).code, 2);
        assert_eq!(cli(&["contains", "/nonexistent/a.cq", s(&good)]).code, 2);
    }

    #[test]
    fn scale_refusal_exits_three() {
        let body: Vec<String> = (0..12).map(|i| format!("a(X{i})")).collect();
        let q = temp("wide.cq", &format!("q() :- {}.", body.join(", ")));
        let out = cli(&["contains", s(&q), s(&q), "--strategy", "oracle", "--json"]);
        assert_eq!(out.code, 3, "{}", out.stdout);
        let r: Report = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(r.error.unwrap().kind, ErrorKind::ScaleBound);
    }

    #[test]
    fn json_round_trips() {
        let q1 = temp("j1.cq", "q(X) :- a(X,Y), Y <= 5.");
        let q2 = temp("j2.cq", "q(X) :- a(X,Y), Y < 5, X != 3.");
        for args in [vec!["contains", s(&q1), s(&q2), "--json"], vec!["--json", "normalize", s(&q2)]] {
            let out = cli(&args);
            let r: Report = serde_json::from_str(&out.stdout).unwrap();
            assert_eq!(r.to_json(), out.stdout);
        }
    }

    #[test]
    fn closure_lists_derived_comparisons() {
        let acs = temp("acs.txt", "X < Y\nY <= 5.\n");
        let out = cli(&["closure", s(&acs)]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.starts_with("CONSISTENT\n"));
        assert!(out.stdout.lines().any(|l| l == "X < 5"), "{}", out.stdout);
        let bad = temp("bad-acs.txt", "X < Y, Y < X");
        let out = cli(&["closure", s(&bad)]);
        assert!(out.stdout.starts_with("INCONSISTENT\n"), "{}", out.stdout);
        let atoms = temp("atoms.txt", "a(X)");
        assert_eq!(cli(&["closure", s(&atoms)]).code, 2);
    }

    #[test]
    fn transform_with_relevant_query() {
        let q1 = temp("t1.cq", "q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 8.");
        let q2 = temp("t2.cq", "q() :- e(A,B), e(B,C), e(C,D), e(D,E), A >= 6, E <= 7.");
        let out = cli(&["transform", s(&q1), "--relevant", s(&q2)]);
        assert_eq!(out.code, 0, "{out:?}");
        assert!(out.stdout.starts_with("CONTAINED\n"), "{}", out.stdout);
        assert!(out.stdout.contains("# link rule"), "{}", out.stdout);
        let alone = cli(&["transform", s(&q1)]);
        assert!(!alone.stdout.contains("# link rule"));
    }

    #[test]
    fn mcr_and_certain_answers() {
        let q = temp("m.cq", "q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 5.");
        let v = temp("m.views", "v1(Z) :- e(X,Y), e(Y,Z), X >= 5.\nv2(X) :- e(X,Y), e(Y,Z), Z <= 5.\n");
        let i = temp("m.facts", "v1(3).\n");
        let golden = std::env::temp_dir().join(format!("cqac-golden-{}.dl", std::process::id()));
        let out = cli(&["mcr", s(&q), "--views", s(&v), "--emit-golden", golden.to_str().unwrap()]);
        assert_eq!(out.code, 0, "{out:?}");
        assert_eq!(std::fs::read_to_string(&golden).unwrap(), out.stdout);
        assert!(out.stdout.contains("# inverse rule"));
        let out = cli(&["certain", s(&q), "--views", s(&v), "--instance", s(&i), "--oracle"]);
        assert_eq!(out.code, 0, "{out:?}");
        assert!(out.stdout.starts_with("AGREE\n"));
        assert!(out.stdout.contains("answer: ()"));
    }

    #[test]
    fn gen_hard_emits_pairs() {
        let f = temp("f.qbf", "(forall (p) (exists (q) (or p q)))");
        let out = cli(&["gen-hard", s(&f), "--variant", "osi-neq"]);
        assert_eq!(out.code, 0, "{out:?}");
        assert!(out.stdout.contains("formula_true: true"));
        assert_eq!(out.stdout.lines().filter(|l| l.ends_with('.')).count(), 2);
        assert_eq!(cli(&["gen-hard", s(&f), "--variant", "nope"]).code, 2);
    }

    #[test]
    fn selftest_is_deterministic() {
        let a = cli(&["selftest", "--corpus-size", "20", "--seed", "7", "--json"]);
        let b = cli(&["selftest", "--corpus-size", "20", "--seed", "7", "--json"]);
        assert_eq!(a, b);
        assert_eq!(a.code, 0, "{}", a.stdout);
    }
}
