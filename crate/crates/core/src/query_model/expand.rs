//! View expansion and rectification of rewritings.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ac_core::{closure, Atomic, Comparison, Name, Op, Term};

use super::{fresh_name, Query};

/// Errors raised by view expansion.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpandError {
    #[error("no definition for view `{0}`")]
    UnknownView(String),
    #[error("view `{pred}` has arity {expected}, used with {found}")]
    Arity { pred: String, expected: usize, found: usize },
}

/// Replaces every view subgoal of `r` by the unified view body.
///
/// Nondistinguished view variables get fresh `name_k` names per occurrence.
/// Constants and repeated variables in view heads become equalities; a clash
/// between two constants makes the result unsatisfiable.
pub fn expand(r: &Query, views: &[Query]) -> Result<Query, ExpandError> {
    let mut used = r.vars();
    let mut acs = r.acs.clone();
    let mut body = Vec::new();
    for atom in &r.body {
        let view = views
            .iter()
            .find(|v| v.head.pred == atom.pred)
            .ok_or_else(|| ExpandError::UnknownView(atom.pred.to_string()))?;
        if view.head.terms.len() != atom.terms.len() {
            return Err(ExpandError::Arity {
                pred: atom.pred.to_string(),
                expected: view.head.terms.len(),
                found: atom.terms.len(),
            });
        }
        let mut sigma: BTreeMap<Name, Term> = BTreeMap::new();
        for (h, t) in view.head.terms.iter().zip(&atom.terms) {
            match h {
                Term::Const(_) => acs.insert_atomic(Comparison::fold(t.clone(), Op::Eq, h.clone())),
                Term::Var(x) => match sigma.get(x) {
                    Some(prev) => acs.insert_atomic(Comparison::fold(prev.clone(), Op::Eq, t.clone())),
                    None => {
                        sigma.insert(x.clone(), t.clone());
                    }
                },
            }
        }
        for y in view.vars() {
            if let std::collections::btree_map::Entry::Vacant(e) = sigma.entry(y) {
                let fresh = fresh_name(e.key(), &mut used);
                e.insert(Term::Var(fresh));
            }
        }
        let sub = |t: &Term| match t {
            Term::Var(v) => sigma[v].clone(),
            c => c.clone(),
        };
        body.extend(view.body.iter().map(|a| a.substitute(sub)));
        for c in view.acs.iter() {
            acs.insert_atomic(c.substitute(sub));
        }
        if view.acs.has_false_fold() {
            acs.insert_atomic(Atomic::Const(false));
        }
    }
    let mut q = Query { head: r.head.clone(), body, acs };
    q.declare_universe();
    Ok(q)
}

/// Adds to `r` every comparison of the expansion's closure over variables of `r`.
pub fn rectify(r: &Query, views: &[Query]) -> Result<Query, ExpandError> {
    let e = expand(r, views)?;
    let mut acs = e.acs.clone();
    acs.add_constants(r.constants());
    for v in views {
        acs.add_constants(v.constants());
    }
    let cl = closure(&acs);
    let mut out = r.clone();
    if !cl.consistent {
        out.acs.insert_atomic(Atomic::Const(false));
        return Ok(out);
    }
    let rvars = r.vars();
    for c in &cl.derived() {
        if c.lhs() == c.rhs() || !c.vars().all(|v| rvars.contains(v)) {
            continue;
        }
        out.acs.insert(c.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query_model::Workspace;

    fn views(text: &str) -> Vec<Query> {
        Workspace::parse(text).unwrap().rules
    }

    #[test]
    fn intro_expansion() {
        let vs = views("v1(Z) :- e(X,Y), e(Y,Z), X >= 5.");
        let r = Query::parse("r() :- v1(Z), Z <= 5.").unwrap();
        let e = expand(&r, &vs).unwrap();
        assert_eq!(e.to_string(), "r() :- e(X_1,Y_1), e(Y_1,Z), X_1 >= 5, Z <= 5.");
    }

    #[test]
    fn repeated_head_variable() {
        let vs = views("v2(Y,Z) :- p(W), s(Y,Z), Y <= W, W <= Z.");
        let r = Query::parse("r(X) :- v2(X,X), X < 4.").unwrap();
        let e = expand(&r, &vs).unwrap();
        assert_eq!(e.to_string(), "r(X) :- p(W_1), s(X,X), W_1 <= X, X < 4, X <= W_1.");
    }

    #[test]
    fn identity_view() {
        let vs = views("v(X) :- e(X).");
        let r = Query::parse("r(A) :- v(A).").unwrap();
        assert_eq!(expand(&r, &vs).unwrap().to_string(), "r(A) :- e(A).");
    }

    #[test]
    fn rectification_gains_order() {
        let vs = views("v2(Y,Z) :- p(X), s(Y,Z), Y <= X, X <= Z.");
        let r = Query::parse("r(Y1) :- v2(Y1,Z1), v2(Y2,Z2), Z1 <= Y2, Y1 >= Z2, Y1 < 4.").unwrap();
        let rect = rectify(&r, &vs).unwrap();
        let y1z1 = Comparison::new(Term::var("Y1"), Op::Le, Term::var("Z1"));
        let y2z2 = Comparison::new(Term::var("Y2"), Op::Le, Term::var("Z2"));
        assert!(rect.acs.contains(&y1z1));
        assert!(rect.acs.contains(&y2z2));
        let chain = views("v1(X,Y) :- e(X,Z), e(Z,Y), X <= Z, Z <= Y.");
        let r = Query::parse("r() :- v1(A,B), v1(B,C).").unwrap();
        let rect = rectify(&r, &chain).unwrap();
        for (a, b) in [("A", "B"), ("B", "C"), ("A", "C")] {
            assert!(rect.acs.contains(&Comparison::new(Term::var(a), Op::Le, Term::var(b))));
        }
    }

    #[test]
    fn ac_free_views_leave_rewriting_alone() {
        let vs = views("v(X,Y) :- e(X,Y).");
        let r = Query::parse("r() :- v(A,B), v(B,A).").unwrap();
        assert_eq!(rectify(&r, &vs).unwrap(), r);
    }
}
