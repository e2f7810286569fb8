//! Containment mappings and the single-mapping-variable reduction.

use std::collections::{BTreeMap, BTreeSet};

use crate::ac_core::{implication_holds, ACSet, Atomic, Name, Term};
use crate::query_model::{booleanize, normalize, unbooleanize, Atom, Query};

use super::{ContainmentError, ContainmentMapping};

/// Normalized forms of both queries with their heads moved into the body.
pub(crate) fn prepare(q1: &Query, q2: &Query) -> (Query, Query) {
    (normalize(&booleanize(q1)), normalize(&booleanize(q2)))
}

/// All predicate-preserving maps of `from` into `to`, in lexicographic order
/// of the chosen target indices.
pub fn homomorphisms(from: &[Atom], to: &[Atom]) -> Vec<ContainmentMapping> {
    let mut out = Vec::new();
    let mut env = BTreeMap::new();
    extend(from, to, 0, &mut env, &mut out);
    out
}

fn extend(
    from: &[Atom],
    to: &[Atom],
    i: usize,
    env: &mut BTreeMap<Name, Term>,
    out: &mut Vec<ContainmentMapping>,
) {
    if i == from.len() {
        out.push(ContainmentMapping { assignment: env.clone() });
        return;
    }
    let atom = &from[i];
    for target in to {
        if target.pred != atom.pred || target.terms.len() != atom.terms.len() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (s, t) in atom.terms.iter().zip(&target.terms) {
            match s {
                Term::Const(_) => ok = s == t,
                Term::Var(v) => match env.get(v) {
                    Some(prev) => ok = prev == t,
                    None => {
                        env.insert(v.clone(), t.clone());
                        added.push(v.clone());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok {
            extend(from, to, i + 1, env, out);
        }
        for v in added {
            env.remove(&v);
        }
    }
}

/// Image of a comparison set under a mapping; a false fold is kept.
pub(crate) fn image(m: &ContainmentMapping, acs: &ACSet) -> ACSet {
    let mut out = ACSet::new();
    if acs.has_false_fold() {
        out.insert_atomic(Atomic::Const(false));
    }
    for c in acs.iter() {
        out.insert_atomic(c.substitute(|t| m.apply(t)));
    }
    out
}

/// Containment mappings from the normalized `q1` to the normalized `q2`.
///
/// Heads are matched through a reserved leading atom, so the returned
/// assignments are over the normalized variable names.
pub fn enumerate_mappings(q1: &Query, q2: &Query) -> Vec<ContainmentMapping> {
    let (n1, n2) = prepare(q1, q2);
    homomorphisms(&n1.body, &n2.body)
}

fn common_image(n1: &Query, maps: &[ContainmentMapping]) -> BTreeSet<Name> {
    n1.body_vars()
        .into_iter()
        .filter(|v| {
            let first = &maps[0].assignment[v];
            maps.iter().all(|m| &m.assignment[v] == first)
        })
        .collect()
}

/// Variables of the normalized `q1` with the same image under every mapping.
pub fn single_mapping_vars(q1: &Query, q2: &Query) -> Result<BTreeSet<Name>, ContainmentError> {
    let (n1, n2) = prepare(q1, q2);
    let maps = homomorphisms(&n1.body, &n2.body);
    if maps.is_empty() {
        return Err(ContainmentError::NoMapping);
    }
    Ok(common_image(&n1, &maps))
}

/// Splits the comparisons of the normalized `q1` into those over single-mapping
/// variables and the rest. Returns whether the comparisons of `q2` imply the
/// image of the first part, and `q1` restricted to the second part.
pub fn reduce_by_single_mapping(q1: &Query, q2: &Query) -> Result<(bool, Query), ContainmentError> {
    let (n1, n2) = prepare(q1, q2);
    let maps = homomorphisms(&n1.body, &n2.body);
    if maps.is_empty() {
        return Err(ContainmentError::NoMapping);
    }
    let single = common_image(&n1, &maps);
    let (fixed, rest): (Vec<_>, Vec<_>) = n1.acs.iter().cloned().partition(|c| c.vars().all(|v| single.contains(v)));
    let mut fixed_acs: ACSet = fixed.into_iter().collect();
    if n1.acs.has_false_fold() {
        fixed_acs.insert_atomic(Atomic::Const(false));
    }
    let img = image(&maps[0], &fixed_acs);
    let head_check = if img.has_false_fold() {
        !n2.is_consistent()
    } else {
        let rhs: Vec<_> = img.iter().cloned().collect();
        rhs.iter().all(|e| implication_holds(&n2.acs, std::slice::from_ref(e)))
    };
    let mut reduced = n1.clone();
    reduced.acs = rest.into_iter().collect();
    reduced.declare_universe();
    Ok((head_check, unbooleanize(&reduced)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> Query {
        Query::parse(text).unwrap()
    }

    #[test]
    fn two_mappings_for_lsi_pair() {
        let q1 = q("q() :- a(X1,Y1,Z1), X1 = Y1, Z1 < 5.");
        let q2 = q("q() :- a(X,Y,Z2), a(X2,Y2,Z), X <= 5, Y <= X, Z <= Y, X2 = Y2, Z2 < 5.");
        let maps = enumerate_mappings(&q1, &q2);
        assert_eq!(maps.len(), 2);
        assert_eq!(maps[0].to_string(), "X1->X, Y1->Y, Z1->Z2");
        assert_eq!(maps[1].to_string(), "X1->X2, Y1->Y2, Z1->Z");
    }

    #[test]
    fn identity_is_a_mapping() {
        let a = q("q(X) :- e(X,Y), e(Y,Z), Y < 3.");
        let maps = enumerate_mappings(&a, &a);
        let (n, _) = prepare(&a, &a);
        let id: BTreeMap<Name, Term> = n.body_vars().into_iter().map(|v| (v.clone(), Term::Var(v))).collect();
        assert!(maps.iter().any(|m| m.assignment == id));
    }

    #[test]
    fn heads_must_match() {
        let q1 = q("q(X) :- e(X,Y).");
        let q2 = q("q(Y) :- e(X,Y).");
        for m in enumerate_mappings(&q1, &q2) {
            assert_eq!(m.apply(&Term::var("X")), Term::var("Y"));
        }
        let q3 = q("q(X,Y) :- e(X,Y).");
        assert!(enumerate_mappings(&q1, &q3).is_empty());
    }

    #[test]
    fn single_mapping_variables() {
        let q1 = q("q() :- r(A,B), s(C).");
        let q2 = q("q() :- r(X,Y), s(U), s(V).");
        let s = single_mapping_vars(&q1, &q2).unwrap();
        assert_eq!(s, BTreeSet::from([Name::from("A"), Name::from("B")]));
        let h = q("q(A) :- p(A), A < 4.");
        assert!(single_mapping_vars(&h, &h).unwrap().contains("A"));
        let none = q("q() :- t(X).");
        assert_eq!(single_mapping_vars(&none, &q2), Err(ContainmentError::NoMapping));
    }

    #[test]
    fn reduction_head_checks() {
        let q1 = q("q(A) :- p(A), A < 4.");
        let (ok, reduced) = reduce_by_single_mapping(&q1, &q("q(A) :- p(A), A < 3.")).unwrap();
        assert!(ok);
        assert!(reduced.acs.is_empty());
        assert_eq!(reduced.head.terms, vec![Term::var("A")]);
        let (ok, _) = reduce_by_single_mapping(&q1, &q("q(A) :- p(A), A <= 4.")).unwrap();
        assert!(!ok);
        let plain = q("q() :- e(X,Y), X < Y.");
        let two = q("q() :- e(U,V), e(V,W), U < 3.");
        let (ok, reduced) = reduce_by_single_mapping(&plain, &two).unwrap();
        assert!(ok);
        assert_eq!(reduced, plain);
    }
}
