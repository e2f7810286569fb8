//! Maximally contained rewritings of right-semi-interval queries over views
//! with comparisons, checking of contained rewritings, and certain answers.
//!
//! The construction turns every view into a comparison-free view over the
//! order predicates `u` and `u_op_c`, builds the Datalog program of the query
//! with `utr`, the transitive closure of `u`, in the coupling rules, inverts
//! the views with functional terms, and finally declares the order
//! predicates builtin so that they read as comparisons.

mod certain;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ac_core::{closure, Comparison, Name, Op, Rat, Term};
use crate::containment::{entailment_check, ContainmentError};
use crate::datalog::{
    fixpoint, Builtin, DAtom, DTerm, DatalogError, DatalogProgram, DatalogRule, EvalOptions, Fixpoint, Value, ORDER_PREDICATE,
};
use crate::query_model::{expand, rectify, Atom, Database, ExpandError, Query};
use crate::transform::{closed_rsi1, implies_si, to_cq, to_datalog_with, u_name, RuleOrigin, TransformError};

pub use certain::{certain_answers, certain_answers_oracle, certain_answers_oracle_with, instance_expansion, CertainAnswers};

/// Transitive closure of the order predicate.
pub const TRANSITIVE_ORDER: &str = "utr";
/// Prefix of the auxiliary views over the order predicates.
pub const AUX_PREFIX: &str = "aux_";
/// Candidate answers of a query with head variables.
pub const CANDIDATE_PREDICATE: &str = "cand";

/// Errors of rewriting construction and certain-answer computation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Containment(#[from] ContainmentError),
}

/// A Datalog program over view predicates with the origin of every rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MCRProgram {
    pub program: DatalogProgram,
    /// Origin of each rule, by position.
    pub origins: Vec<RuleOrigin>,
}

impl MCRProgram {
    /// Rules with their origins.
    pub fn rules(&self) -> impl Iterator<Item = (&DatalogRule, RuleOrigin)> {
        self.program.rules.iter().zip(self.origins.iter().copied())
    }
}

impl fmt::Display for MCRProgram {
    /// The program text with a trailing `# origin` comment on each rule.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = self.program.to_string();
        let lines: Vec<&str> = text.lines().collect();
        let first_rule = lines.len() - self.program.rules.len();
        for (i, line) in lines.iter().enumerate() {
            match i.checked_sub(first_rule) {
                Some(k) => writeln!(f, "{line}  # {}", self.origins[k])?,
                None => writeln!(f, "{line}")?,
            }
        }
        Ok(())
    }
}

/// Comparison-free forms of the views over the constants `constants` plus
/// the constants of the views, and the auxiliary views `aux_u_op_c(X) :-
/// u_op_c(X)` for `op` in `{<=, >=}` and `aux_u(X,Y) :- u(X,Y)`. Views with
/// inconsistent comparisons are left out.
pub fn build_cq_views(views: &[Query], constants: &BTreeSet<Rat>) -> (Vec<Query>, Vec<Query>) {
    let mut all = constants.clone();
    for v in views {
        all.extend(v.constants());
    }
    let cq = views.iter().filter(|v| v.is_consistent()).map(|v| to_cq(v, &all)).filter(|v| v.acs.is_empty()).collect();
    let x = Term::var("X");
    let y = Term::var("Y");
    let aux_view = |pred: Name, terms: Vec<Term>| {
        let head = Atom { pred: Arc::from(format!("{AUX_PREFIX}{pred}").as_str()), terms: terms.clone() };
        Query::new(head, vec![Atom { pred, terms }], [])
    };
    let mut aux = Vec::new();
    for c in &all {
        for op in [Op::Le, Op::Ge] {
            aux.push(aux_view(u_name(op, *c), vec![x.clone()]));
        }
    }
    aux.push(aux_view(Arc::from(ORDER_PREDICATE), vec![x, y]));
    (cq, aux)
}

/// Name of the functional term standing for `var` of `view`.
pub fn skolem_name(view: &str, var: &str) -> Name {
    Arc::from(format!("f_{view}_{var}").as_str())
}

/// Inverse rules of comparison-free views: one rule per subgoal, with each
/// nondistinguished variable replaced by a functional term over the
/// distinguished variables in order of first occurrence.
pub fn inverse_rules(views: &[Query]) -> Vec<DatalogRule> {
    let mut rules = Vec::new();
    for v in views {
        let head_vars: Vec<Name> = {
            let mut seen = BTreeSet::new();
            v.head.vars().filter(|x| seen.insert((*x).clone())).cloned().collect()
        };
        let args: Vec<DTerm> = head_vars.iter().map(|x| DTerm::Var(x.clone())).collect();
        let term = |t: &Term| match t {
            Term::Var(x) if head_vars.contains(x) => DTerm::Var(x.clone()),
            Term::Var(x) => DTerm::Func(skolem_name(&v.head.pred, x), args.clone()),
            Term::Const(c) => DTerm::Const(*c),
        };
        for b in &v.body {
            let head = DAtom { pred: b.pred.clone(), args: b.terms.iter().map(term).collect() };
            rules.push(DatalogRule::new(head, vec![DAtom::from(&v.head)], Vec::new()));
        }
    }
    rules
}

fn var(name: &str) -> DTerm {
    DTerm::var(name)
}

fn is_ij(pred: &str) -> bool {
    pred.starts_with("i_") || pred.starts_with("j_")
}

/// Adds the answer tuple to every I and J atom, so that the facts derived
/// for one candidate answer never mix with those of another.
fn parameterize(rules: Vec<(DatalogRule, RuleOrigin)>, q: &Query) -> Vec<(DatalogRule, RuleOrigin)> {
    if q.is_boolean() {
        return rules;
    }
    let own: Vec<DTerm> = q.head.terms.iter().map(DTerm::from).collect();
    let fresh: Vec<DTerm> = (1..=own.len()).map(|k| var(&format!("H{k}"))).collect();
    let extend = |a: &DAtom, params: &[DTerm]| {
        let mut a = a.clone();
        if is_ij(&a.pred) {
            a.args.extend(params.iter().cloned());
        }
        a
    };
    let mut out = Vec::with_capacity(rules.len() + 1);
    out.push((
        DatalogRule::new(DAtom { pred: Arc::from(CANDIDATE_PREDICATE), args: own.clone() }, q.body.iter().map(DAtom::from).collect(), Vec::new()),
        RuleOrigin::Query,
    ));
    for (r, origin) in rules {
        let params = if matches!(origin, RuleOrigin::Query | RuleOrigin::Mapping) { &own } else { &fresh };
        let mut body: Vec<DAtom> = r.body.iter().map(|a| extend(a, params)).collect();
        if !r.body.iter().any(|a| is_ij(&a.pred)) && is_ij(&r.head.pred) {
            body.push(DAtom { pred: Arc::from(CANDIDATE_PREDICATE), args: fresh.clone() });
        }
        out.push((DatalogRule::new(extend(&r.head, params), body, r.acs.clone()), origin));
    }
    out
}

/// Maximally contained rewriting of a closed right-semi-interval query `q`
/// using `views`, as a Datalog program with comparisons whose stored
/// predicates are the views.
///
/// Rules come in order: the program of `q` with link rules for every
/// closed semi-interval over the constants of `q` and the views, the rules
/// of `utr`, link rules through `utr`, and the inverse rules of the
/// comparison-free views. `u` and `u_op_c` are builtin; they also hold on
/// the functional terms the inverse rules attach them to. For a query with
/// head variables the I and J predicates carry the answer tuple and rules
/// without I or J body atoms draw it from `cand`, the relational body of `q`.
pub fn mcr_rsi1(q: &Query, views: &[Query]) -> Result<MCRProgram, RewriteError> {
    let (merged, _) = closed_rsi1(q)?;
    let mut constants = merged.constants();
    for v in views {
        constants.extend(v.constants());
    }
    let (cq_views, _aux) = build_cq_views(views, &constants);
    let relevant: BTreeSet<(Op, Rat)> = constants.iter().flat_map(|c| [(Op::Le, *c), (Op::Ge, *c)]).collect();
    let (p, cx) = to_datalog_with(q, &relevant, TRANSITIVE_ORDER)?;
    let mut rules: Vec<(DatalogRule, RuleOrigin)> = p.rules.into_iter().zip(cx.origins).collect();
    let u = |a: &str, b: &str| DAtom::new(ORDER_PREDICATE, vec![var(a), var(b)]);
    let utr = |a: &str, b: &str| DAtom::new(TRANSITIVE_ORDER, vec![var(a), var(b)]);
    rules.push((DatalogRule::new(utr("X", "Y"), vec![u("X", "Y")], Vec::new()), RuleOrigin::TransitiveClosure));
    rules.push((DatalogRule::new(utr("X", "Y"), vec![u("X", "Z"), utr("Z", "Y")], Vec::new()), RuleOrigin::TransitiveClosure));
    let targets: BTreeSet<(Op, Rat)> = cx.q1_sis.iter().map(|s| (s.1, s.2)).collect();
    for (op, c) in &relevant {
        for (_, c1) in targets.iter().filter(|(op1, c1)| op1 == op && implies_si(*op, *c, *c1)) {
            let head = DAtom::new(&crate::transform::i_name(*op, *c1), vec![var("X")]);
            let order = if *op == Op::Le { utr("X", "Y") } else { utr("Y", "X") };
            let body = vec![DAtom::new(&u_name(*op, *c), vec![var("Y")]), order];
            rules.push((DatalogRule::new(head, body, Vec::new()), RuleOrigin::TransitiveLink));
        }
    }
    let mut rules = parameterize(rules, &merged);
    rules.extend(inverse_rules(&cq_views).into_iter().map(|r| (r, RuleOrigin::Inverse)));
    let mut builtins = vec![Builtin::Le];
    builtins.extend(relevant.iter().map(|(op, c)| Builtin::Si(*op, *c)));
    let (rules, origins): (Vec<_>, Vec<_>) = rules.into_iter().unzip();
    let mut program = DatalogProgram::new(rules, &merged.head.pred, builtins)?;
    let params = merged.head.terms.len();
    for name in cx.registry.keys().filter(|n| is_ij(n)) {
        program.declare_idb(name, 1 + params);
    }
    for a in &merged.body {
        program.declare_idb(&a.pred, a.terms.len());
    }
    program.declare_idb(TRANSITIVE_ORDER, 2);
    program.validate()?;
    Ok(MCRProgram { program, origins })
}

/// Name of the query predicate of the core program built by [`mcr_rsi1_plus`].
pub fn core_name(pred: &str) -> Name {
    Arc::from(format!("{pred}_core").as_str())
}

/// [`mcr_rsi1`] for a query whose comparisons over head variables only are
/// arbitrary: those comparisons are removed, the rewriting of the remaining
/// query is built under the predicate `q_core`, and a last rule
/// `q(X..) :- q_core(X..), comparisons` restores them.
pub fn mcr_rsi1_plus(q: &Query, views: &[Query]) -> Result<MCRProgram, RewriteError> {
    let head: BTreeSet<&Name> = q.head.vars().collect();
    let (restored, kept): (Vec<Comparison>, Vec<Comparison>) =
        q.acs.iter().cloned().partition(|c| c.vars().next().is_some() && c.vars().all(|v| head.contains(v)));
    let core_pred = core_name(&q.head.pred);
    let core = Query::new(Atom { pred: core_pred.clone(), terms: q.head.terms.clone() }, q.body.clone(), kept);
    let mut m = mcr_rsi1(&core, views)?;
    let args: Vec<DTerm> = q.head.terms.iter().map(DTerm::from).collect();
    let rule = DatalogRule::new(
        DAtom { pred: q.head.pred.clone(), args: args.clone() },
        vec![DAtom { pred: core_pred, args }],
        restored,
    );
    m.program.rules.push(rule);
    m.origins.push(RuleOrigin::Restore);
    m.program.idb.insert(q.head.pred.clone(), q.head.terms.len());
    m.program.query = q.head.pred.clone();
    m.program.validate()?;
    Ok(m)
}

/// Whether `r` is a contained rewriting of `q`: the expansion of the
/// rectified rewriting is contained in `q`.
pub fn check_contained_rewriting(r: &Query, q: &Query, views: &[Query]) -> Result<bool, RewriteError> {
    let e = expand(&rectify(r, views)?, views)?;
    Ok(entailment_check(q, &e).holds)
}

/// A derivation of the frozen rewriting in the program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    /// The expansion read off the derivation tree, over the variables of the rewriting.
    pub expansion: Query,
    /// Height of the derivation tree.
    pub depth: usize,
}

fn tree_height(fp: &Fixpoint, fact: &(Name, Vec<Value>), leaves: &mut BTreeSet<(Name, Vec<Value>)>) -> usize {
    match fp.derivations.get(fact) {
        Some(d) => 1 + d.body.iter().map(|f| tree_height(fp, f, leaves)).max().unwrap_or(0),
        None => {
            leaves.insert(fact.clone());
            0
        }
    }
}

/// Runs the program on the frozen comparison-free form of the rectified
/// rewriting `r`, with order facts only where the comparisons of `r` imply
/// them. When the frozen head is derived, the leaves of its derivation tree
/// give an expansion of the program that `r` maps into.
pub fn cover(m: &MCRProgram, r: &Query, q: &Query, views: &[Query]) -> Result<Option<Cover>, RewriteError> {
    let rect = rectify(r, views)?;
    let mut constants = q.constants();
    constants.extend(m.program.constants());
    for v in views {
        constants.extend(v.constants());
    }
    let cq = to_cq(&rect, &constants);
    if !cq.acs.is_empty() {
        return Ok(None);
    }
    let mut acs = rect.acs.clone();
    acs.add_constants(constants.iter().copied());
    let Some(values) = closure(&acs).model() else { return Ok(None) };
    let mut names: BTreeMap<Rat, Term> = constants.iter().map(|c| (*c, Term::Const(*c))).collect();
    for (v, x) in &values {
        names.entry(*x).or_insert_with(|| Term::Var(v.clone()));
    }
    let freeze = |t: &Term| match t {
        Term::Var(v) => values[v],
        Term::Const(c) => *c,
    };
    let mut db = Database::new();
    for a in &cq.body {
        db.insert(a.pred.clone(), a.terms.iter().map(freeze).collect());
    }
    let fp = fixpoint(&m.program, &db, EvalOptions { computed_builtins: false, trace: true })?;
    let head: Vec<Value> = cq.head.terms.iter().map(|t| Value::Num(freeze(t))).collect();
    let fact = (m.program.query.clone(), head.clone());
    if !fp.facts.contains(&fact.0, &fact.1) {
        return Ok(None);
    }
    let mut leaves = BTreeSet::new();
    let depth = tree_height(&fp, &fact, &mut leaves);
    let unfreeze = |v: &Value| -> Term {
        let x = v.as_num().expect("leaves are stored facts");
        names.get(x).cloned().unwrap_or(Term::Const(*x))
    };
    let mut body = Vec::new();
    let mut comparisons = Vec::new();
    for (pred, tuple) in &leaves {
        let terms: Vec<Term> = tuple.iter().map(unfreeze).collect();
        match m.program.builtins.get(pred) {
            Some(b) => {
                if let crate::ac_core::Atomic::Cmp(c) = b.comparison(&terms) {
                    comparisons.push(c);
                }
            }
            None => body.push(Atom { pred: pred.clone(), terms }),
        }
    }
    let head = Atom { pred: m.program.query.clone(), terms: head.iter().map(unfreeze).collect() };
    Ok(Some(Cover { expansion: Query::new(head, body, comparisons), depth }))
}

/// Whether `r` is contained in an expansion of the program found by [`cover`].
pub fn covers(m: &MCRProgram, r: &Query, q: &Query, views: &[Query]) -> Result<bool, RewriteError> {
    let Some(c) = cover(m, r, q, views)? else { return Ok(false) };
    let mut e = c.expansion;
    e.head.pred = r.head.pred.clone();
    Ok(entailment_check(&e, &rectify(r, views)?).holds)
}
