//! Containment of a query in a closed right-semi-interval query through
//! Datalog: the containing query becomes a recursive program over I/J
//! predicates, the contained query becomes a plain conjunctive query over
//! order predicates, and containment becomes program containment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ac_core::{closure, Comparison, Name, Op, Rat, Term};
use crate::datalog::{contains_cq, si_name, DAtom, DTerm, DatalogError, DatalogProgram, DatalogRule, ORDER_PREDICATE};
use crate::query_model::{booleanize, merge_equalities, Atom, Query};

/// Errors of the transformations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("comparison `{ac}` is outside the closed right-semi-interval fragment: {reason}")]
    Fragment { ac: String, reason: String },
    #[error("the containing query has inconsistent comparisons")]
    Inconsistent,
    #[error(transparent)]
    Datalog(#[from] DatalogError),
}

/// Where a generated rule comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleOrigin {
    Query,
    Mapping,
    Coupling,
    Link,
    TransitiveLink,
    TransitiveClosure,
    Inverse,
    Restore,
}

impl fmt::Display for RuleOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleOrigin::Query => "query rule",
            RuleOrigin::Mapping => "mapping rule",
            RuleOrigin::Coupling => "coupling rule",
            RuleOrigin::Link => "link rule",
            RuleOrigin::TransitiveLink => "link rule through the order closure",
            RuleOrigin::TransitiveClosure => "order closure rule",
            RuleOrigin::Inverse => "inverse rule",
            RuleOrigin::Restore => "head comparison rule",
        })
    }
}

/// Predicate naming and the semi-intervals driving the construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransformContext {
    /// Semi-interval comparisons of the containing query, in order.
    pub q1_sis: Vec<(Name, Op, Rat)>,
    /// `(op, c)` pairs that produce link rules.
    pub relevant_sis: BTreeSet<(Op, Rat)>,
    /// Every generated I, J and U name with its `(op, c)`.
    pub registry: BTreeMap<Name, (Op, Rat)>,
    /// Origin of each rule of the program, by position.
    pub origins: Vec<RuleOrigin>,
}

impl TransformContext {
    fn name(&mut self, prefix: &str, op: Op, c: Rat) -> Name {
        let n = si_name(prefix, op, c);
        self.registry.insert(n.clone(), (op, c));
        n
    }
}

/// Predicate `i_op_c`, established semi-interval.
pub fn i_name(op: Op, c: Rat) -> Name {
    si_name("i", op, c)
}

/// Predicate `j_op_c`, semi-interval that a mapping failed on.
pub fn j_name(op: Op, c: Rat) -> Name {
    si_name("j", op, c)
}

/// Predicate `u_op_c`, semi-interval implied by the contained query.
pub fn u_name(op: Op, c: Rat) -> Name {
    si_name(ORDER_PREDICATE, op, c)
}

fn unary(pred: &Name, v: &str) -> DAtom {
    DAtom { pred: pred.clone(), args: vec![DTerm::var(v)] }
}

fn binary(pred: &str, a: &str, b: &str) -> DAtom {
    DAtom::new(pred, vec![DTerm::var(a), DTerm::var(b)])
}

/// Merges equalities and checks the closed right-semi-interval shape:
/// comparisons `X <= c` and at most one `X >= c`.
pub fn closed_rsi1(q1: &Query) -> Result<(Query, Vec<(Name, Op, Rat)>), TransformError> {
    let merged = merge_equalities(q1).ok_or(TransformError::Inconsistent)?;
    if merged.acs.has_false_fold() {
        return Err(TransformError::Inconsistent);
    }
    let mut sis = Vec::new();
    for c in merged.acs.iter() {
        let fail = |reason: &str| TransformError::Fragment { ac: c.to_string(), reason: reason.into() };
        match c.as_si() {
            Some((v, op @ (Op::Le | Op::Ge), k)) => sis.push((v.clone(), op, k)),
            Some(_) => return Err(fail("only closed semi-intervals are allowed")),
            None => return Err(fail("not a semi-interval")),
        }
    }
    let vars = merged.body_vars();
    sis.sort_by_key(|(v, op, k)| (vars.iter().position(|u| u == v), *op, *k));
    if sis.iter().filter(|s| s.1 == Op::Ge).count() > 1 {
        let ac = sis.iter().filter(|s| s.1 == Op::Ge).nth(1).map(|(v, _, k)| format!("{v} >= {}", crate::ac_core::fmt_rat(k)));
        return Err(TransformError::Fragment { ac: ac.unwrap_or_default(), reason: "more than one right semi-interval".into() });
    }
    Ok((merged, sis))
}

/// The program of a closed right-semi-interval query, with link rules for
/// `relevant_sis`. Rules come in order: query rule, mapping rules, coupling
/// rules, link rules.
pub fn to_datalog(q1: &Query, relevant_sis: &BTreeSet<(Op, Rat)>) -> Result<DatalogProgram, TransformError> {
    Ok(to_datalog_with(q1, relevant_sis, ORDER_PREDICATE)?.0)
}

/// [`to_datalog`] with the order predicate of the second-kind coupling rules named `order`.
pub fn to_datalog_with(q1: &Query, relevant_sis: &BTreeSet<(Op, Rat)>, order: &str) -> Result<(DatalogProgram, TransformContext), TransformError> {
    let (q1, sis) = closed_rsi1(q1)?;
    let mut cx = TransformContext { q1_sis: sis.clone(), relevant_sis: relevant_sis.clone(), ..TransformContext::default() };
    let mut rules = Vec::new();
    let atoms: Vec<DAtom> = q1.body.iter().map(DAtom::from).collect();
    let i_atoms: Vec<DAtom> = sis.iter().map(|(v, op, c)| DAtom { pred: cx.name("i", *op, *c), args: vec![DTerm::Var(v.clone())] }).collect();
    let mut body = atoms.clone();
    body.extend(i_atoms.iter().cloned());
    rules.push((DatalogRule::new(DAtom::from(&q1.head), body, Vec::new()), RuleOrigin::Query));
    for (k, (v, op, c)) in sis.iter().enumerate() {
        let mut body = atoms.clone();
        body.extend(i_atoms.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, a)| a.clone()));
        let head = DAtom { pred: cx.name("j", *op, *c), args: vec![DTerm::Var(v.clone())] };
        rules.push((DatalogRule::new(head, body, Vec::new()), RuleOrigin::Mapping));
    }
    let lower: BTreeSet<Rat> = sis.iter().filter(|s| s.1 == Op::Ge).map(|s| s.2).collect();
    let upper: BTreeSet<Rat> = sis.iter().filter(|s| s.1 == Op::Le).map(|s| s.2).collect();
    for c1 in &lower {
        for c2 in upper.iter().filter(|c2| c1 <= *c2) {
            let (i_le, i_ge) = (cx.name("i", Op::Le, *c2), cx.name("i", Op::Ge, *c1));
            let (j_le, j_ge) = (cx.name("j", Op::Le, *c2), cx.name("j", Op::Ge, *c1));
            for (head, body) in [
                (unary(&i_le, "X"), vec![unary(&j_ge, "X")]),
                (unary(&i_ge, "X"), vec![unary(&j_le, "X")]),
                (unary(&i_le, "X"), vec![unary(&j_ge, "Y"), binary(order, "X", "Y")]),
                (unary(&i_ge, "X"), vec![unary(&j_le, "Y"), binary(order, "Y", "X")]),
            ] {
                rules.push((DatalogRule::new(head, body, Vec::new()), RuleOrigin::Coupling));
            }
        }
    }
    let targets: BTreeSet<(Op, Rat)> = sis.iter().map(|s| (s.1, s.2)).collect();
    for (op, c) in relevant_sis {
        for (op1, c1) in targets.iter().filter(|(op1, c1)| op1 == op && implies_si(*op, *c, *c1)) {
            let head = unary(&cx.name("i", *op1, *c1), "X");
            let body = vec![unary(&cx.name(ORDER_PREDICATE, *op, *c), "X")];
            rules.push((DatalogRule::new(head, body, Vec::new()), RuleOrigin::Link));
        }
    }
    let (rules, origins): (Vec<_>, Vec<_>) = rules.into_iter().unzip();
    cx.origins = origins;
    let mut p = DatalogProgram::new(rules, &q1.head.pred, [])?;
    for (name, _) in cx.registry.iter().filter(|(n, _)| !n.starts_with(ORDER_PREDICATE)) {
        p.declare_idb(name, 1);
    }
    Ok((p, cx))
}

/// Whether `X op c` implies `X op c1`, for `op` in `{<=, >=}`.
pub fn implies_si(op: Op, c: Rat, c1: Rat) -> bool {
    match op {
        Op::Le => c <= c1,
        Op::Ge => c >= c1,
        _ => false,
    }
}

/// Closed semi-intervals and order facts implied by the comparisons of `q`
/// over the terms of its merged form: `(u atoms, u_op_c atoms)`.
fn implied_order(q: &Query, constants: &BTreeSet<Rat>) -> (Vec<(Term, Term)>, Vec<(Term, Op, Rat)>) {
    let mut acs = q.acs.clone();
    acs.add_constants(constants.iter().copied());
    let cl = closure(&acs);
    let mut terms: Vec<Term> = Vec::new();
    for t in q.body.iter().flat_map(|a| a.terms.iter()) {
        if !terms.contains(t) {
            terms.push(t.clone());
        }
    }
    let holds = |a: &Term, op: Op, b: &Term| match (a, b) {
        (Term::Const(x), Term::Const(y)) => op.eval(x, y),
        _ => cl.entails(&Comparison::new(a.clone(), op, b.clone())) == Some(true),
    };
    let mut pairs = Vec::new();
    for a in &terms {
        for b in &terms {
            if a != b && holds(a, Op::Le, b) {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    let mut sis = Vec::new();
    for t in &terms {
        for c in constants {
            for op in [Op::Ge, Op::Le] {
                if holds(t, op, &Term::Const(*c)) {
                    sis.push((t.clone(), op, *c));
                }
            }
        }
    }
    (pairs, sis)
}

/// The comparison-free form of a query: equalities merged, relational
/// subgoals kept, plus `u_op_c(X)` for each closed semi-interval implied
/// over the constants of `q` and `extra_constants`, and `u(X,Y)` for each
/// implied `X <= Y` between distinct terms. Disequalities and strictness
/// beyond these facts are dropped. An inconsistent query is returned with
/// its comparisons unchanged.
pub fn to_cq(q2: &Query, extra_constants: &BTreeSet<Rat>) -> Query {
    let Some(merged) = merge_equalities(q2) else { return q2.clone() };
    let mut constants = merged.constants();
    constants.extend(extra_constants.iter().copied());
    let (pairs, sis) = implied_order(&merged, &constants);
    let mut body = merged.body.clone();
    for (t, op, c) in sis {
        body.push(Atom { pred: u_name(op, c), terms: vec![t] });
    }
    for (a, b) in pairs {
        body.push(Atom { pred: Arc::from(ORDER_PREDICATE), terms: vec![a, b] });
    }
    Query::new(merged.head.clone(), body, [])
}

/// The `(op, c)` pairs of the `u_op_c` atoms in `to_cq(q2, extra_constants)`.
pub fn relevant_sis(q2: &Query, extra_constants: &BTreeSet<Rat>) -> BTreeSet<(Op, Rat)> {
    let Some(merged) = merge_equalities(q2) else { return BTreeSet::new() };
    let mut constants = merged.constants();
    constants.extend(extra_constants.iter().copied());
    implied_order(&merged, &constants).1.into_iter().map(|(_, op, c)| (op, c)).collect()
}

/// Decides `q2 ⊑ q1` for a closed right-semi-interval `q1` by evaluating the
/// program of `q1` on the canonical database of the comparison-free form of `q2`.
pub fn containment_via_transform(q1: &Query, q2: &Query) -> Result<bool, TransformError> {
    closed_rsi1(q1)?;
    let (b1, b2) = (booleanize(q1), booleanize(q2));
    let Some(m2) = merge_equalities(&b2) else { return Ok(true) };
    if m2.acs.has_false_fold() {
        return Ok(true);
    }
    let constants: BTreeSet<Rat> = b1.constants().union(&m2.constants()).copied().collect();
    let relevant = relevant_sis(&m2, &constants);
    let program = to_datalog(&b1, &relevant)?;
    let cq = to_cq(&m2, &constants);
    Ok(contains_cq(&program, &cq)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ac_core::int;
    use crate::containment::entailment_check;
    use crate::corpus::{corpus, AcProfile, CorpusOptions};

    fn q(text: &str) -> Query {
        Query::parse(text).unwrap()
    }

    fn rule_set(p: &DatalogProgram) -> BTreeSet<String> {
        p.rules.iter().map(ToString::to_string).collect()
    }

    const EX6: &str = "q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 8.";
    const EX7: &str = "q() :- e(A,B), e(B,C), e(C,D), e(D,E), A >= 6, E <= 7.";

    #[test]
    fn program_of_running_example() {
        let p = to_datalog(&q(EX6), &BTreeSet::new()).unwrap();
        let expected: BTreeSet<String> = [
            "q() :- e(X,Y), e(Y,Z), i_ge_5(X), i_le_8(Z).",
            "j_le_8(Z) :- e(X,Y), e(Y,Z), i_ge_5(X).",
            "j_ge_5(X) :- e(X,Y), e(Y,Z), i_le_8(Z).",
            "i_le_8(X) :- j_ge_5(X).",
            "i_ge_5(X) :- j_le_8(X).",
            "i_le_8(X) :- j_ge_5(Y), u(X,Y).",
            "i_ge_5(X) :- j_le_8(Y), u(Y,X).",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(p.rules.len(), 7);
        assert_eq!(rule_set(&p), expected);
        let relevant = BTreeSet::from([(Op::Ge, int(6)), (Op::Le, int(7))]);
        let p = to_datalog(&q(EX6), &relevant).unwrap();
        assert_eq!(p.rules.len(), 9);
        let rules = rule_set(&p);
        assert!(rules.contains("i_ge_5(X) :- u_ge_6(X)."));
        assert!(rules.contains("i_le_8(X) :- u_le_7(X)."));
    }

    #[test]
    fn comparison_free_forms() {
        let cq = to_cq(&q(EX7), &BTreeSet::new());
        assert_eq!(cq.to_string(), "q() :- e(A,B), e(B,C), e(C,D), e(D,E), u_ge_6(A), u_le_7(E).");
        let plain = q("q(X) :- e(X,Y), f(Y).");
        assert_eq!(to_cq(&plain, &BTreeSet::new()), plain);
        let chain = to_cq(&q("q() :- a(X,Y,Z), X <= Y, Y <= Z."), &BTreeSet::new());
        assert_eq!(chain.to_string(), "q() :- a(X,Y,Z), u(X,Y), u(X,Z), u(Y,Z).");
        let merged = to_cq(&q("q() :- a(X,Y), X <= Y, Y <= X, Y < 3."), &BTreeSet::new());
        assert_eq!(merged.to_string(), "q() :- a(X,X), u_le_3(X).");
    }

    #[test]
    fn sifree_query_gives_query_rule_only() {
        let p = to_datalog(&q("q(X) :- e(X,Y), e(Y,X)."), &BTreeSet::from([(Op::Le, int(3))])).unwrap();
        assert_eq!(p.rules.len(), 1);
    }

    #[test]
    fn running_example_containment() {
        let (q1, q2) = (q(EX6), q(EX7));
        let relevant = relevant_sis(&q2, &q1.constants());
        let program = to_datalog(&q1, &relevant).unwrap();
        assert!(contains_cq(&program, &to_cq(&q2, &q1.constants())).unwrap());
        let without_links = to_datalog(&q1, &BTreeSet::new()).unwrap();
        assert!(!contains_cq(&without_links, &to_cq(&q2, &q1.constants())).unwrap());
        assert!(containment_via_transform(&q1, &q2).unwrap());
        assert!(entailment_check(&q1, &q2).holds);
        let weaker = q("q() :- e(A,B), e(B,C), e(C,D), e(D,E), E <= 7.");
        assert!(!containment_via_transform(&q1, &weaker).unwrap());
        assert!(containment_via_transform(&q1, &q1).unwrap());
    }

    #[test]
    fn fragment_refusals() {
        let e = containment_via_transform(&q("q() :- a(X,Y), X >= 1, Y >= 2."), &q("q() :- a(X,Y).")).unwrap_err();
        assert!(matches!(e, TransformError::Fragment { ref ac, .. } if ac.contains(">= 2")), "{e}");
        assert!(matches!(to_datalog(&q("q() :- a(X), X < 3."), &BTreeSet::new()), Err(TransformError::Fragment { .. })));
        assert!(matches!(to_datalog(&q("q() :- a(X,Y), X <= Y."), &BTreeSet::new()), Err(TransformError::Fragment { .. })));
        assert!(to_datalog(&q("q() :- a(X,Y), X = 3, Y <= 2."), &BTreeSet::new()).is_ok());
    }

    #[test]
    fn rule_count_and_registry() {
        let opts = CorpusOptions::default();
        for (q1, q2) in corpus(11, 60, &opts, AcProfile::ClosedRsi1, AcProfile::Mixed) {
            let relevant = relevant_sis(&q2, &q1.constants());
            let (p, cx) = to_datalog_with(&q1, &relevant, ORDER_PREDICATE).unwrap();
            let (ge, le): (Vec<_>, Vec<_>) = cx.q1_sis.iter().partition(|s| s.1 == Op::Ge);
            let ge: BTreeSet<Rat> = ge.iter().map(|s| s.2).collect();
            let le: BTreeSet<Rat> = le.iter().map(|s| s.2).collect();
            let pairs = ge.iter().map(|a| le.iter().filter(|b| a <= *b).count()).sum::<usize>();
            let links = cx.origins.iter().filter(|o| **o == RuleOrigin::Link).count();
            assert_eq!(p.rules.len(), 1 + cx.q1_sis.len() + 4 * pairs + links, "{q1}");
            let associated: BTreeSet<(Op, Rat)> = cx.q1_sis.iter().map(|s| (s.1, s.2)).collect();
            for r in &p.rules {
                for a in r.body.iter().chain([&r.head]) {
                    if a.pred.starts_with("i_") || a.pred.starts_with("j_") {
                        assert!(associated.contains(&cx.registry[&a.pred]), "{r}");
                    }
                }
            }
        }
    }
}
