//! Normalization, equality merging and head encoding.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ac_core::{closure, Comparison, Name, Op, Term};

use super::{Atom, Query};

/// Reserved predicate carrying the head terms of a booleanized query.
pub const HEAD_PREDICATE: &str = "#head";

/// First of `base_1`, `base_2`, ... not in `used`; the result is added to `used`.
pub fn fresh_name(base: &str, used: &mut BTreeSet<Name>) -> Name {
    let mut k = 1;
    loop {
        let candidate: Name = Arc::from(format!("{base}_{k}").as_str());
        if used.insert(candidate.clone()) {
            return candidate;
        }
        k += 1;
    }
}

/// Rewrites the query so that each variable occurs once in the relational
/// subgoals and no constant occurs there, adding the matching equalities.
pub fn normalize(q: &Query) -> Query {
    let mut used = q.vars();
    let mut seen: BTreeSet<Name> = BTreeSet::new();
    let mut acs = q.acs.clone();
    let mut body = Vec::with_capacity(q.body.len());
    for atom in &q.body {
        let mut terms = Vec::with_capacity(atom.terms.len());
        for t in &atom.terms {
            match t {
                Term::Var(v) if seen.insert(v.clone()) => terms.push(t.clone()),
                Term::Var(v) => {
                    let fresh = fresh_name(v, &mut used);
                    acs.insert(Comparison::new(Term::Var(fresh.clone()), Op::Eq, t.clone()));
                    terms.push(Term::Var(fresh));
                }
                Term::Const(_) => {
                    let fresh = fresh_name("Z", &mut used);
                    acs.insert(Comparison::new(Term::Var(fresh.clone()), Op::Eq, t.clone()));
                    terms.push(Term::Var(fresh));
                }
            }
        }
        body.push(Atom { pred: atom.pred.clone(), terms });
    }
    let mut out = Query { head: q.head.clone(), body, acs };
    out.declare_universe();
    out
}

/// Replaces terms forced equal by the comparisons with one representative
/// (a constant when the class has one) and drops comparisons that become trivial.
/// Returns `None` when the comparisons are inconsistent.
pub fn merge_equalities(q: &Query) -> Option<Query> {
    let cl = closure(&q.acs);
    if !cl.consistent {
        return None;
    }
    let terms = cl.terms().to_vec();
    let mut rep: BTreeMap<Term, Term> = BTreeMap::new();
    for t in &terms {
        if rep.contains_key(t) {
            continue;
        }
        let class: Vec<&Term> = terms.iter().filter(|u| cl.equal(t, u)).collect();
        let chosen = class
            .iter()
            .find(|u| !u.is_var())
            .or_else(|| class.iter().min())
            .map(|u| (*u).clone())
            .expect("class contains t");
        for u in class {
            rep.insert(u.clone(), chosen.clone());
        }
    }
    Some(q.substitute(|t| rep.get(t).cloned().unwrap_or_else(|| t.clone())))
}

/// Moves the head terms into a leading reserved body atom and makes the head
/// 0-ary, so that head-preserving mappings become ordinary mappings.
/// Boolean queries are returned unchanged.
pub fn booleanize(q: &Query) -> Query {
    if q.is_boolean() {
        return q.clone();
    }
    let mut body = Vec::with_capacity(q.body.len() + 1);
    body.push(Atom { pred: Arc::from(HEAD_PREDICATE), terms: q.head.terms.clone() });
    body.extend(q.body.iter().cloned());
    let mut out = Query { head: Atom { pred: q.head.pred.clone(), terms: Vec::new() }, body, acs: q.acs.clone() };
    out.declare_universe();
    out
}

/// Inverse of [`booleanize`]: restores the head from the reserved atom.
pub fn unbooleanize(q: &Query) -> Query {
    let mut out = q.clone();
    if let Some(i) = out.body.iter().position(|a| &*a.pred == HEAD_PREDICATE) {
        let atom = out.body.remove(i);
        out.head.terms = atom.terms;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intro_pair_normal_forms() {
        let q1 = Query::parse("q() :- a(X,5), X < 5.").unwrap();
        assert_eq!(normalize(&q1).to_string(), "q() :- a(X,Z_1), X < 5, Z_1 = 5.");
        let q2 = Query::parse("q() :- a(X,5), a(Y,X), X <= 5, Y < 5.").unwrap();
        assert_eq!(normalize(&q2).to_string(), "q() :- a(X,Z_1), a(Y,X_1), X <= 5, X_1 = X, Y < 5, Z_1 = 5.");
    }

    #[test]
    fn normalized_is_fixpoint() {
        let q = Query::parse("q(X) :- a(X,Y), b(W,Z), Z != 3.").unwrap();
        assert_eq!(normalize(&q), q);
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let q = Query::parse("q() :- a(X,X,X_1).").unwrap();
        assert_eq!(normalize(&q).to_string(), "q() :- a(X,X_2,X_1), X_2 = X.");
    }

    #[test]
    fn merging() {
        let q = Query::parse("q(X) :- a(X,Y,Z), X <= Y, Y <= X, Z >= 5, Z <= 5, Y < 9.").unwrap();
        let m = merge_equalities(&q).unwrap();
        assert_eq!(m.to_string(), "q(X) :- a(X,X,5), X < 9.");
    }

    #[test]
    fn booleanize_round_trip() {
        let q = Query::parse("q(X,3) :- a(X,Y), Y < 3.").unwrap();
        let b = booleanize(&q);
        assert!(b.is_boolean());
        assert_eq!(b.body[0].pred.as_ref(), HEAD_PREDICATE);
        assert_eq!(unbooleanize(&b), q);
        let n = normalize(&b);
        assert_eq!(n.body[0].terms[0], Term::var("X"));
    }
}
