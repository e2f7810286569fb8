//! Datalog programs with comparisons, builtin order predicates and
//! functional terms: bottom-up evaluation, bounded unfolding into
//! expansions and the program-contains-query test.

mod eval;
mod unfold;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ac_core::{fmt_rat, int, Atomic, Comparison, Name, Op, Rat, Term};
use crate::query_model::parse::{parse_statements, PAtom, PItem, PTerm, Statement};
use crate::query_model::{Atom, QueryError};

pub use eval::{evaluate_program, fixpoint, Derivation, EvalOptions, Fixpoint};
pub use unfold::{contains_cq, expansions_up_to_depth, project_out};

/// Name of the binary order predicate `u(X,Y)`, read as `X <= Y`.
pub const ORDER_PREDICATE: &str = "u";

/// Errors raised while building or evaluating programs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatalogError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("rule `{rule}`: variable {var} occurs in no body atom")]
    Unsafe { rule: String, var: String },
    #[error("rule `{rule}`: nested functional term")]
    Nested { rule: String },
    #[error("rule `{rule}`: functional term over {var}, which no stored relation binds")]
    Unbounded { rule: String, var: String },
    #[error("predicate {pred} used with arity {found}, expected {expected}")]
    Arity { pred: String, expected: usize, found: usize },
    #[error("`{0}` does not name a builtin comparison predicate")]
    Builtin(String),
    #[error("predicate {0} is declared stored but has rules")]
    Conflict(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// A variable, a constant or a functional term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DTerm {
    Var(Name),
    Const(Rat),
    Func(Name, Vec<DTerm>),
}

impl DTerm {
    pub fn var(name: &str) -> DTerm {
        DTerm::Var(Arc::from(name))
    }

    /// Variables in order of occurrence, with repetitions.
    pub fn vars(&self) -> Vec<&Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a Name>) {
        match self {
            DTerm::Var(v) => out.push(v),
            DTerm::Const(_) => {}
            DTerm::Func(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn is_func(&self) -> bool {
        matches!(self, DTerm::Func(..))
    }

    /// The plain term, when this is not a functional term.
    pub fn as_term(&self) -> Option<Term> {
        match self {
            DTerm::Var(v) => Some(Term::Var(v.clone())),
            DTerm::Const(c) => Some(Term::Const(*c)),
            DTerm::Func(..) => None,
        }
    }

    fn depth(&self) -> usize {
        match self {
            DTerm::Func(_, args) => 1 + args.iter().map(DTerm::depth).max().unwrap_or(0),
            _ => 0,
        }
    }
}

impl From<&Term> for DTerm {
    fn from(t: &Term) -> DTerm {
        match t {
            Term::Var(v) => DTerm::Var(v.clone()),
            Term::Const(c) => DTerm::Const(*c),
        }
    }
}

impl fmt::Display for DTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DTerm::Var(v) => write!(f, "{v}"),
            DTerm::Const(c) => f.write_str(&fmt_rat(c)),
            DTerm::Func(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

/// An atom whose arguments may be functional terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DAtom {
    pub pred: Name,
    pub args: Vec<DTerm>,
}

impl DAtom {
    pub fn new(pred: &str, args: Vec<DTerm>) -> DAtom {
        DAtom { pred: Arc::from(pred), args }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().flat_map(DTerm::vars)
    }

    /// The relational atom, when no argument is a functional term.
    pub fn as_atom(&self) -> Option<Atom> {
        let terms = self.args.iter().map(DTerm::as_term).collect::<Option<Vec<_>>>()?;
        Some(Atom { pred: self.pred.clone(), terms })
    }
}

impl From<&Atom> for DAtom {
    fn from(a: &Atom) -> DAtom {
        DAtom { pred: a.pred.clone(), args: a.terms.iter().map(DTerm::from).collect() }
    }
}

impl fmt::Display for DAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        write_list(f, &self.args)?;
        f.write_str(")")
    }
}

/// `head :- body, acs.`
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DatalogRule {
    pub head: DAtom,
    pub body: Vec<DAtom>,
    pub acs: Vec<Comparison>,
}

impl DatalogRule {
    pub fn new(head: DAtom, body: Vec<DAtom>, acs: Vec<Comparison>) -> DatalogRule {
        DatalogRule { head, body, acs }
    }

    /// The rule of a query without functional terms.
    pub fn from_query(q: &crate::query_model::Query) -> DatalogRule {
        DatalogRule {
            head: DAtom::from(&q.head),
            body: q.body.iter().map(DAtom::from).collect(),
            acs: q.acs.iter().cloned().collect(),
        }
    }

    fn atoms(&self) -> impl Iterator<Item = &DAtom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    /// The first head or comparison variable missing from the body atoms.
    pub fn unsafe_var(&self) -> Option<Name> {
        let bound: BTreeSet<&Name> = self.body.iter().flat_map(DAtom::vars).collect();
        self.head.vars().chain(self.acs.iter().flat_map(Comparison::vars)).find(|v| !bound.contains(v)).cloned()
    }
}

impl fmt::Display for DatalogRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :-", self.head)?;
        let mut first = true;
        for a in &self.body {
            f.write_str(if first { " " } else { ", " })?;
            first = false;
            write!(f, "{a}")?;
        }
        for c in &self.acs {
            f.write_str(if first { " " } else { ", " })?;
            first = false;
            write!(f, "{c}")?;
        }
        f.write_str(".")
    }
}

/// A comparison predicate whose extension is computed rather than stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    /// `u(X,Y)`: `X <= Y`.
    Le,
    /// `u_op_c(X)`: `X op c`.
    Si(Op, Rat),
}

impl Builtin {
    /// Reads the builtin encoded by a predicate name.
    pub fn from_name(name: &str) -> Option<Builtin> {
        if name == ORDER_PREDICATE {
            return Some(Builtin::Le);
        }
        match parse_si_name(name)? {
            (prefix, op, c) if prefix == ORDER_PREDICATE => Some(Builtin::Si(op, c)),
            _ => None,
        }
    }

    pub fn name(self) -> Name {
        match self {
            Builtin::Le => Arc::from(ORDER_PREDICATE),
            Builtin::Si(op, c) => si_name(ORDER_PREDICATE, op, c),
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Le => 2,
            Builtin::Si(..) => 1,
        }
    }

    pub fn holds(self, args: &[Rat]) -> bool {
        match self {
            Builtin::Le => args[0] <= args[1],
            Builtin::Si(op, c) => op.eval(&args[0], &c),
        }
    }

    /// The comparison stated by the builtin atom over `args`.
    pub fn comparison(self, args: &[Term]) -> Atomic {
        match self {
            Builtin::Le => Comparison::fold(args[0].clone(), Op::Le, args[1].clone()),
            Builtin::Si(op, c) => Comparison::fold(args[0].clone(), op, Term::Const(c)),
        }
    }
}

fn op_code(op: Op) -> &'static str {
    match op {
        Op::Lt => "lt",
        Op::Le => "le",
        Op::Eq => "eq",
        Op::Ne => "ne",
        Op::Ge => "ge",
        Op::Gt => "gt",
    }
}

fn rat_code(c: &Rat) -> String {
    let sign = if *c < int(0) { "m" } else { "" };
    let n = c.numer().abs();
    if c.denom() == &1 {
        format!("{sign}{n}")
    } else {
        format!("{sign}{n}d{}", c.denom())
    }
}

/// Predicate name for a semi-interval: `si_name("i", <=, 8)` is `i_le_8`.
/// Negative constants start with `m` and fractions use `d` for the slash.
pub fn si_name(prefix: &str, op: Op, c: Rat) -> Name {
    Arc::from(format!("{prefix}_{}_{}", op_code(op), rat_code(&c)).as_str())
}

/// Inverse of [`si_name`].
pub fn parse_si_name(name: &str) -> Option<(&str, Op, Rat)> {
    let mut parts = name.rsplitn(3, '_');
    let code = parts.next()?;
    let op = match parts.next()? {
        "lt" => Op::Lt,
        "le" => Op::Le,
        "eq" => Op::Eq,
        "ne" => Op::Ne,
        "ge" => Op::Ge,
        "gt" => Op::Gt,
        _ => return None,
    };
    let prefix = parts.next()?;
    let (negative, digits) = match code.strip_prefix('m') {
        Some(rest) => (true, rest),
        None => (false, code),
    };
    let (num, den) = match digits.split_once('d') {
        Some((n, d)) => (n, d),
        None => (digits, "1"),
    };
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) || !den.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let (num, den): (i64, i64) = (num.parse().ok()?, den.parse().ok()?);
    if den == 0 {
        return None;
    }
    let value = Rat::new(if negative { -num } else { num }, den);
    (si_name(prefix, op, value).as_ref() == name).then_some((prefix, op, value))
}

/// A ground value: a rational or a functional term over values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Num(Rat),
    Skolem(Name, Vec<Value>),
}

impl Value {
    pub fn as_num(&self) -> Option<&Rat> {
        match self {
            Value::Num(r) => Some(r),
            Value::Skolem(..) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => f.write_str(&fmt_rat(r)),
            Value::Skolem(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

/// Rules plus the roles of their predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatalogProgram {
    pub rules: Vec<DatalogRule>,
    /// Stored predicates with their arities.
    pub edb: BTreeMap<Name, usize>,
    /// Derived predicates with their arities.
    pub idb: BTreeMap<Name, usize>,
    /// Predicates with a computed comparison extension; they may also have rules.
    pub builtins: BTreeMap<Name, Builtin>,
    pub query: Name,
}

impl DatalogProgram {
    /// Infers predicate roles: rule heads are derived, declared builtins are
    /// computed, every other body predicate is stored.
    pub fn new(rules: Vec<DatalogRule>, query: &str, builtins: impl IntoIterator<Item = Builtin>) -> Result<DatalogProgram, DatalogError> {
        let builtins: BTreeMap<Name, Builtin> = builtins.into_iter().map(|b| (b.name(), b)).collect();
        let mut arity: BTreeMap<Name, usize> = BTreeMap::new();
        for (name, b) in &builtins {
            arity.insert(name.clone(), b.arity());
        }
        for a in rules.iter().flat_map(DatalogRule::atoms) {
            let expected = *arity.entry(a.pred.clone()).or_insert(a.args.len());
            if expected != a.args.len() {
                return Err(DatalogError::Arity { pred: a.pred.to_string(), expected, found: a.args.len() });
            }
        }
        let query: Name = Arc::from(query);
        let mut idb: BTreeMap<Name, usize> = rules.iter().map(|r| (r.head.pred.clone(), r.head.args.len())).collect();
        idb.entry(query.clone()).or_insert_with(|| arity.get(&query).copied().unwrap_or(0));
        let edb = arity
            .into_iter()
            .filter(|(p, _)| !idb.contains_key(p) && !builtins.contains_key(p))
            .collect();
        Ok(DatalogProgram { rules, edb, idb, builtins, query })
    }

    /// Moves a predicate from the stored to the derived side.
    pub fn declare_idb(&mut self, pred: &str, arity: usize) {
        let name: Name = Arc::from(pred);
        self.edb.remove(&name);
        self.idb.insert(name, arity);
    }

    /// Every constant written in the rules.
    pub fn constants(&self) -> BTreeSet<Rat> {
        fn walk(t: &DTerm, out: &mut BTreeSet<Rat>) {
            match t {
                DTerm::Const(c) => {
                    out.insert(*c);
                }
                DTerm::Var(_) => {}
                DTerm::Func(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = BTreeSet::new();
        for r in &self.rules {
            r.atoms().flat_map(|a| a.args.iter()).for_each(|t| walk(t, &mut out));
            out.extend(r.acs.iter().flat_map(|c| c.constants().copied()));
        }
        for b in self.builtins.values() {
            if let Builtin::Si(_, c) = b {
                out.insert(*c);
            }
        }
        out
    }

    /// Checks safety and the shape of functional terms: constructors are not
    /// nested and their variables are bound by stored atoms, so evaluation
    /// only ever builds terms of depth one.
    pub fn validate(&self) -> Result<(), DatalogError> {
        for r in &self.rules {
            if let Some(v) = r.unsafe_var() {
                return Err(DatalogError::Unsafe { rule: r.to_string(), var: v.to_string() });
            }
            if r.atoms().flat_map(|a| a.args.iter()).any(|t| t.depth() > 1) {
                return Err(DatalogError::Nested { rule: r.to_string() });
            }
            let stored: BTreeSet<&Name> =
                r.body.iter().filter(|a| self.edb.contains_key(&a.pred)).flat_map(DAtom::vars).collect();
            for t in r.head.args.iter().filter(|t| t.is_func()) {
                if let Some(v) = t.vars().into_iter().find(|v| !stored.contains(v)) {
                    return Err(DatalogError::Unbounded { rule: r.to_string(), var: v.to_string() });
                }
            }
        }
        Ok(())
    }

    /// Parses the text format: rules and facts plus optional `@edb`, `@idb`,
    /// `@builtin` and `@query` declarations. Without `@query` the head of the
    /// first rule is the query predicate.
    pub fn parse(text: &str) -> Result<DatalogProgram, DatalogError> {
        let mut rules = Vec::new();
        let mut query: Option<Name> = None;
        let mut builtins = Vec::new();
        let mut declared_edb: Vec<(Name, Option<usize>)> = Vec::new();
        let mut declared_idb: Vec<(Name, Option<usize>)> = Vec::new();
        for st in parse_statements(text).map_err(QueryError::from)? {
            match st {
                Statement::Rule { head, body, line } => rules.push(rule_from_parts(&head, &body, line)?),
                Statement::Fact { atom, line } => rules.push(rule_from_parts(&atom, &[], line)?),
                Statement::Directive { name, items, line } => match name.as_str() {
                    "query" if items.len() == 1 => query = Some(items[0].0.clone()),
                    "builtin" => {
                        for (p, _) in items {
                            builtins.push(Builtin::from_name(&p).ok_or_else(|| DatalogError::Builtin(p.to_string()))?);
                        }
                    }
                    "edb" => declared_edb.extend(items),
                    "idb" => declared_idb.extend(items),
                    _ => return Err(DatalogError::Syntax { line, message: format!("unknown directive @{name}") }),
                },
            }
        }
        let query = query
            .or_else(|| rules.first().map(|r| r.head.pred.clone()))
            .ok_or(DatalogError::Syntax { line: 1, message: "empty program".into() })?;
        let mut p = DatalogProgram::new(rules, &query, builtins)?;
        for (pred, arity) in declared_idb {
            let n = arity.or_else(|| p.edb.get(&pred).copied()).unwrap_or(0);
            p.declare_idb(&pred, n);
        }
        for (pred, arity) in declared_edb {
            if p.rules.iter().any(|r| r.head.pred == pred) {
                return Err(DatalogError::Conflict(pred.to_string()));
            }
            p.idb.remove(&pred);
            let n = arity.or_else(|| p.edb.get(&pred).copied()).unwrap_or(0);
            p.edb.insert(pred, n);
        }
        Ok(p)
    }
}

fn dterm(t: &PTerm) -> DTerm {
    match t {
        PTerm::Var(v) => DTerm::Var(v.clone()),
        PTerm::Const(c) => DTerm::Const(*c),
        PTerm::Func(f, args) => DTerm::Func(f.clone(), args.iter().map(dterm).collect()),
    }
}

fn datom(a: &PAtom) -> DAtom {
    DAtom { pred: a.pred.clone(), args: a.args.iter().map(dterm).collect() }
}

fn rule_from_parts(head: &PAtom, body: &[PItem], line: usize) -> Result<DatalogRule, DatalogError> {
    let mut atoms = Vec::new();
    let mut acs = Vec::new();
    for item in body {
        match item {
            PItem::Atom(a) => atoms.push(datom(a)),
            PItem::Cmp(l, op, r) => {
                let (Some(l), Some(r)) = (dterm(l).as_term(), dterm(r).as_term()) else {
                    return Err(QueryError::FunctionalTerm { line }.into());
                };
                match Comparison::fold(l, *op, r) {
                    Atomic::Cmp(c) => acs.push(c),
                    Atomic::Const(true) => {}
                    Atomic::Const(false) => {
                        return Err(DatalogError::Syntax { line, message: "comparison between constants is false".into() })
                    }
                }
            }
        }
    }
    Ok(DatalogRule { head: datom(head), body: atoms, acs })
}

fn write_decl(f: &mut fmt::Formatter<'_>, name: &str, preds: &BTreeMap<Name, usize>) -> fmt::Result {
    if preds.is_empty() {
        return Ok(());
    }
    let items: Vec<String> = preds.iter().map(|(p, n)| format!("{p}/{n}")).collect();
    writeln!(f, "@{name} {}.", items.join(", "))
}

impl fmt::Display for DatalogProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_decl(f, "edb", &self.edb)?;
        write_decl(f, "idb", &self.idb)?;
        let computed: BTreeMap<Name, usize> = self.builtins.iter().map(|(p, b)| (p.clone(), b.arity())).collect();
        write_decl(f, "builtin", &computed)?;
        writeln!(f, "@query {}.", self.query)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Ground facts over values, grouped by predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactSet {
    relations: BTreeMap<Name, BTreeSet<Vec<Value>>>,
}

impl FactSet {
    pub fn insert(&mut self, pred: Name, tuple: Vec<Value>) -> bool {
        self.relations.entry(pred).or_default().insert(tuple)
    }

    pub fn relation(&self, pred: &str) -> impl Iterator<Item = &Vec<Value>> {
        self.relations.get(pred).into_iter().flatten()
    }

    pub fn contains(&self, pred: &str, tuple: &[Value]) -> bool {
        self.relations.get(pred).is_some_and(|r| r.contains(tuple))
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn relations(&self) -> impl Iterator<Item = (&Name, &BTreeSet<Vec<Value>>)> {
        self.relations.iter()
    }
}
