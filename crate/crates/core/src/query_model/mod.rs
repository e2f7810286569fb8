//! Queries, views, rewritings and databases: parsing, normalization,
//! evaluation, view expansion and rectification.

mod eval;
mod expand;
mod normalize;
pub mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ac_core::{contradiction_core, is_consistent, ACSet, Comparison, Name, Rat, Term};
use parse::{parse_statements, PAtom, PItem, PTerm, ParseError, Statement};

pub use eval::{evaluate, for_each_assignment, materialize_views, satisfiable_in};
pub use expand::{expand, rectify, ExpandError};
pub use normalize::{booleanize, fresh_name, merge_equalities, normalize, unbooleanize, HEAD_PREDICATE};

/// Errors raised while building queries from text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("line {line}: unsafe variable {var} in `{pred}`")]
    Unsafe { line: usize, pred: String, var: String },
    #[error("line {line}: inconsistent comparisons in `{pred}`: {chain}")]
    Inconsistent { line: usize, pred: String, chain: String },
    #[error("line {line}: functional term not allowed here")]
    FunctionalTerm { line: usize },
    #[error("line {line}: predicate {pred} used with arity {found}, expected {expected}")]
    Arity { line: usize, pred: String, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Unexpected { line: usize, message: String },
}

/// A relational atom over variables and constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Name,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, terms: Vec<Term>) -> Atom {
        Atom { pred: Arc::from(pred), terms }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.terms.iter().filter_map(Term::as_var)
    }

    pub fn constants(&self) -> impl Iterator<Item = &Rat> {
        self.terms.iter().filter_map(Term::as_const)
    }

    pub fn substitute(&self, f: impl Fn(&Term) -> Term) -> Atom {
        Atom { pred: self.pred.clone(), terms: self.terms.iter().map(f).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A conjunctive query with arithmetic comparisons: head, relational subgoals and comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub acs: ACSet,
}

/// Conjunctive query with arithmetic comparisons.
pub type CQACQuery = Query;
/// A view is a named query.
pub type ViewDefinition = Query;
/// A query over view predicates.
pub type Rewriting = Query;

impl Query {
    pub fn new(head: Atom, body: Vec<Atom>, acs: impl IntoIterator<Item = Comparison>) -> Query {
        let mut q = Query { head, body, acs: acs.into_iter().collect() };
        q.declare_universe();
        q
    }

    /// Parses a single query.
    pub fn parse(text: &str) -> Result<Query, QueryError> {
        let ws = Workspace::parse(text)?;
        ws.rules.into_iter().next().ok_or(QueryError::Unexpected { line: 1, message: "no query found".into() })
    }

    /// Adds every body variable and constant to the comparison universe.
    pub fn declare_universe(&mut self) {
        let vars: Vec<Name> = self.body.iter().flat_map(|a| a.vars().cloned()).collect();
        let consts: Vec<Rat> = self.constants().into_iter().collect();
        for v in vars {
            self.acs.add_var(v);
        }
        self.acs.add_constants(consts);
    }

    pub fn is_boolean(&self) -> bool {
        self.head.terms.is_empty()
    }

    /// Variables of the relational subgoals, in first-occurrence order.
    pub fn body_vars(&self) -> Vec<Name> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in self.body.iter().flat_map(|a| a.vars()) {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
        out
    }

    /// All variables of head, body and comparisons.
    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self.head.vars().cloned().collect();
        out.extend(self.body.iter().flat_map(|a| a.vars().cloned()));
        out.extend(self.acs.iter().flat_map(|c| c.vars().cloned()));
        out
    }

    /// Constants of head, body and comparisons.
    pub fn constants(&self) -> BTreeSet<Rat> {
        let mut out: BTreeSet<Rat> = self.head.constants().copied().collect();
        out.extend(self.body.iter().flat_map(|a| a.constants().copied()));
        out.extend(self.acs.iter().flat_map(|c| c.constants().copied()));
        out
    }

    /// Applies a substitution to head, body and comparisons.
    pub fn substitute(&self, f: impl Fn(&Term) -> Term) -> Query {
        let mut acs = ACSet::new();
        if self.acs.has_false_fold() {
            acs.insert_atomic(crate::ac_core::Atomic::Const(false));
        }
        for c in self.acs.iter() {
            acs.insert_atomic(c.substitute(&f));
        }
        let mut q = Query {
            head: self.head.substitute(&f),
            body: self.body.iter().map(|a| a.substitute(&f)).collect(),
            acs,
        };
        q.declare_universe();
        q
    }

    /// Checks safety: head and comparison variables occur in relational subgoals.
    pub fn unsafe_var(&self) -> Option<Name> {
        let body: BTreeSet<&Name> = self.body.iter().flat_map(|a| a.vars()).collect();
        self.head
            .vars()
            .chain(self.acs.iter().flat_map(|c| c.vars()))
            .find(|v| !body.contains(v))
            .cloned()
    }

    pub fn is_consistent(&self) -> bool {
        is_consistent(&self.acs)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        let mut first = true;
        for a in &self.body {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        let mut written: Vec<String> = self.acs.iter().map(|c| c.to_string()).collect();
        written.sort();
        for c in written {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            f.write_str(&c)?;
        }
        if self.acs.has_false_fold() {
            if !first {
                f.write_str(", ")?;
            }
            f.write_str("1 < 0")?;
        }
        f.write_str(".")
    }
}

/// A finite set of ground facts over exact rationals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<Name, BTreeSet<Vec<Rat>>>,
}

/// A database over view predicates.
pub type ViewInstance = Database;

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    pub fn insert(&mut self, pred: Name, tuple: Vec<Rat>) -> bool {
        self.relations.entry(pred).or_default().insert(tuple)
    }

    /// Inserts a ground atom; returns `false` when it has a variable.
    pub fn insert_atom(&mut self, atom: &Atom) -> bool {
        let tuple: Option<Vec<Rat>> = atom.terms.iter().map(|t| t.as_const().copied()).collect();
        match tuple {
            Some(t) => {
                self.insert(atom.pred.clone(), t);
                true
            }
            None => false,
        }
    }

    pub fn relation(&self, pred: &str) -> Option<&BTreeSet<Vec<Rat>>> {
        self.relations.get(pred)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&Name, &BTreeSet<Vec<Rat>>)> {
        self.relations.iter()
    }

    pub fn contains(&self, pred: &str, tuple: &[Rat]) -> bool {
        self.relations.get(pred).is_some_and(|r| r.contains(tuple))
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All constants occurring in facts.
    pub fn constants(&self) -> BTreeSet<Rat> {
        self.relations.values().flat_map(|r| r.iter().flatten().copied()).collect()
    }

    pub fn facts(&self) -> impl Iterator<Item = Atom> + '_ {
        self.relations.iter().flat_map(|(p, r)| {
            r.iter().map(move |t| Atom { pred: p.clone(), terms: t.iter().map(|c| Term::Const(*c)).collect() })
        })
    }

    pub fn extend(&mut self, other: &Database) {
        for (p, r) in &other.relations {
            self.relations.entry(p.clone()).or_default().extend(r.iter().cloned());
        }
    }

    /// Parses a fact file.
    pub fn parse(text: &str) -> Result<Database, QueryError> {
        let ws = Workspace::parse(text)?;
        if let Some(r) = ws.rules.first() {
            return Err(QueryError::Unexpected { line: 1, message: format!("rule `{}` in fact file", r.head.pred) });
        }
        Ok(ws.facts)
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.facts() {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}

/// Queries, views and facts loaded from one file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workspace {
    pub rules: Vec<Query>,
    pub facts: Database,
}

fn plain_term(t: &PTerm, line: usize) -> Result<Term, QueryError> {
    match t {
        PTerm::Var(v) => Ok(Term::Var(v.clone())),
        PTerm::Const(c) => Ok(Term::Const(*c)),
        PTerm::Func(..) => Err(QueryError::FunctionalTerm { line }),
    }
}

fn plain_atom(a: &PAtom, line: usize) -> Result<Atom, QueryError> {
    Ok(Atom { pred: a.pred.clone(), terms: a.args.iter().map(|t| plain_term(t, line)).collect::<Result<_, _>>()? })
}

/// Builds a query from a parsed rule, enforcing safety and consistency.
pub fn query_from_rule(head: &PAtom, body: &[PItem], line: usize) -> Result<Query, QueryError> {
    let head = plain_atom(head, line)?;
    let mut atoms = Vec::new();
    let mut acs = ACSet::new();
    for item in body {
        match item {
            PItem::Atom(a) => atoms.push(plain_atom(a, line)?),
            PItem::Cmp(l, op, r) => {
                acs.insert_atomic(Comparison::fold(plain_term(l, line)?, *op, plain_term(r, line)?));
            }
        }
    }
    let mut q = Query { head, body: atoms, acs };
    q.declare_universe();
    if let Some(v) = q.unsafe_var() {
        return Err(QueryError::Unsafe { line, pred: q.head.pred.to_string(), var: v.to_string() });
    }
    if let Some(core) = contradiction_core(&q.acs) {
        let chain = if core.is_empty() {
            "comparison between constants is false".to_string()
        } else {
            core.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        };
        return Err(QueryError::Inconsistent { line, pred: q.head.pred.to_string(), chain });
    }
    Ok(q)
}

impl Workspace {
    pub fn parse(text: &str) -> Result<Workspace, QueryError> {
        let mut ws = Workspace::default();
        let mut arity: BTreeMap<Name, usize> = BTreeMap::new();
        let mut check = |a: &PAtom, line: usize| -> Result<(), QueryError> {
            let expected = *arity.entry(a.pred.clone()).or_insert(a.args.len());
            if expected != a.args.len() {
                return Err(QueryError::Arity { line, pred: a.pred.to_string(), expected, found: a.args.len() });
            }
            Ok(())
        };
        for st in parse_statements(text)? {
            match st {
                Statement::Rule { head, body, line } => {
                    check(&head, line)?;
                    for item in &body {
                        if let PItem::Atom(a) = item {
                            check(a, line)?;
                        }
                    }
                    ws.rules.push(query_from_rule(&head, &body, line)?);
                }
                Statement::Fact { atom, line } => {
                    check(&atom, line)?;
                    let a = plain_atom(&atom, line)?;
                    if !ws.facts.insert_atom(&a) {
                        return Err(QueryError::Unexpected { line, message: format!("fact `{a}` is not ground") });
                    }
                }
                Statement::Directive { line, name, .. } => {
                    return Err(QueryError::Unexpected { line, message: format!("directive @{name} outside a program") });
                }
            }
        }
        Ok(ws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_boolean_query() {
        let q = Query::parse("q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 8.").unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.body.len(), 2);
        assert_eq!(q.acs.len(), 2);
        assert_eq!(q.to_string(), "q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 8.");
    }

    #[test]
    fn rejects_inconsistent() {
        let e = Query::parse("q() :- a(X,Y), X < X.").unwrap_err();
        assert!(matches!(e, QueryError::Inconsistent { .. }), "{e}");
        let e = Query::parse("q() :- a(X,Y), X < Y, Y < X.").unwrap_err();
        assert!(e.to_string().contains("X < Y"), "{e}");
    }

    #[test]
    fn rejects_unsafe() {
        let e = Query::parse("q(W) :- a(X).").unwrap_err();
        assert!(matches!(e, QueryError::Unsafe { ref var, .. } if var == "W"), "{e}");
        assert!(Query::parse("q() :- a(X), Y < 3.").is_err());
    }

    #[test]
    fn rejects_arity_clash() {
        assert!(matches!(Workspace::parse("q() :- a(X), a(X,Y)."), Err(QueryError::Arity { .. })));
    }

    #[test]
    fn facts() {
        let db = Database::parse("a(3).\na(5).\ne(1, 2/3).").unwrap();
        assert_eq!(db.len(), 3);
        assert!(db.contains("e", &[crate::ac_core::int(1), Rat::new(2, 3)]));
    }
}
