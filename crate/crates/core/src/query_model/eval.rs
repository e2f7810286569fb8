//! Query evaluation by backtracking join.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use crate::ac_core::{ACSet, Comparison, Name, Rat, Term};

use super::{Atom, Database, Query};

/// Calls `f` on every assignment of the body variables that maps `body` into
/// `db` and satisfies `acs`. Each comparison is checked once its variables are bound.
pub fn for_each_assignment<F>(body: &[Atom], acs: &ACSet, db: &Database, mut f: F)
where
    F: FnMut(&BTreeMap<Name, Rat>) -> ControlFlow<()>,
{
    if acs.has_false_fold() {
        return;
    }
    let mut bound_after: Vec<Vec<&Comparison>> = vec![Vec::new(); body.len() + 1];
    let mut seen: BTreeSet<&Name> = BTreeSet::new();
    let mut level_of: BTreeMap<&Name, usize> = BTreeMap::new();
    for (i, a) in body.iter().enumerate() {
        for v in a.vars() {
            if seen.insert(v) {
                level_of.insert(v, i + 1);
            }
        }
    }
    for c in acs.iter() {
        let level = c.vars().map(|v| level_of.get(v).copied().unwrap_or(usize::MAX)).max().unwrap_or(0);
        if level == usize::MAX {
            return;
        }
        bound_after[level].push(c);
    }
    let mut env: BTreeMap<Name, Rat> = BTreeMap::new();
    let check = |env: &BTreeMap<Name, Rat>, cs: &[&Comparison]| {
        cs.iter().all(|c| c.eval(|v| env.get(v).copied()) == Some(true))
    };
    if !check(&env, &bound_after[0]) {
        return;
    }
    let _ = search(body, 0, db, &mut env, &bound_after, &check, &mut f);
}

fn search<F, C>(
    body: &[Atom],
    i: usize,
    db: &Database,
    env: &mut BTreeMap<Name, Rat>,
    bound_after: &[Vec<&Comparison>],
    check: &C,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&BTreeMap<Name, Rat>) -> ControlFlow<()>,
    C: Fn(&BTreeMap<Name, Rat>, &[&Comparison]) -> bool,
{
    if i == body.len() {
        return f(env);
    }
    let atom = &body[i];
    let Some(rel) = db.relation(&atom.pred) else {
        return ControlFlow::Continue(());
    };
    for tuple in rel {
        if tuple.len() != atom.terms.len() {
            continue;
        }
        let mut added: Vec<Name> = Vec::new();
        let mut ok = true;
        for (t, val) in atom.terms.iter().zip(tuple) {
            match t {
                Term::Const(c) => {
                    if c != val {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => match env.get(v) {
                    Some(b) if b != val => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        env.insert(v.clone(), *val);
                        added.push(v.clone());
                    }
                },
            }
        }
        if ok && check(env, &bound_after[i + 1]) {
            let flow = search(body, i + 1, db, env, bound_after, check, f);
            if flow.is_break() {
                for v in added {
                    env.remove(&v);
                }
                return flow;
            }
        }
        for v in added {
            env.remove(&v);
        }
    }
    ControlFlow::Continue(())
}

/// Head tuples of all satisfying assignments.
pub fn evaluate(q: &Query, db: &Database) -> BTreeSet<Vec<Rat>> {
    let mut out = BTreeSet::new();
    for_each_assignment(&q.body, &q.acs, db, |env| {
        let tuple = q
            .head
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => *c,
                Term::Var(v) => env[v],
            })
            .collect();
        out.insert(tuple);
        ControlFlow::Continue(())
    });
    out
}

/// Whether the body of `q` has a satisfying assignment in `db`.
pub fn satisfiable_in(q: &Query, db: &Database) -> bool {
    let mut found = false;
    for_each_assignment(&q.body, &q.acs, db, |_| {
        found = true;
        ControlFlow::Break(())
    });
    found
}

/// The view instance `V(db)`: each view evaluated on `db` under its head predicate.
pub fn materialize_views(views: &[Query], db: &Database) -> Database {
    let mut out = Database::new();
    for v in views {
        for t in evaluate(v, db) {
            out.insert(v.head.pred.clone(), t);
        }
    }
    out
}
