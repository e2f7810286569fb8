//! Certain answers: through the rewriting program, and by brute force over
//! the canonical databases of the expanded view instance.

use std::collections::{BTreeMap, BTreeSet};

use crate::ac_core::{closure, Name, Rat, Term};
use crate::containment::{canonical_oracle_check_with, freeze, OracleOptions};
use crate::datalog::evaluate_program;
use crate::query_model::{evaluate, expand, Atom, Database, Query};

use super::{MCRProgram, RewriteError};

/// Certain answers, or the report that no database produces the instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertainAnswers {
    Defined(BTreeSet<Vec<Rat>>),
    /// Some view fact contradicts the comparisons of its view.
    Undefined,
}

/// Answers of the rewriting program on the view instance.
pub fn certain_answers(mcr: &MCRProgram, instance: &Database) -> Result<BTreeSet<Vec<Rat>>, RewriteError> {
    Ok(evaluate_program(&mcr.program, instance)?)
}

/// The instance as a Boolean query over the views, expanded through the view
/// definitions: one copy of the view body per fact, with the fact's values
/// in place of the distinguished variables.
pub fn instance_expansion(views: &[Query], instance: &Database) -> Result<Query, RewriteError> {
    let r = Query::new(Atom::new("instance", Vec::new()), instance.facts().collect(), []);
    Ok(expand(&r, views)?)
}

/// The Boolean query asking whether `t` is an answer of `q`; `None` when the
/// head of `q` cannot produce `t`.
fn instantiate(q: &Query, t: &[Rat]) -> Option<Query> {
    let mut sigma: BTreeMap<Name, Rat> = BTreeMap::new();
    for (h, v) in q.head.terms.iter().zip(t) {
        match h {
            Term::Const(c) if c != v => return None,
            Term::Const(_) => {}
            Term::Var(x) => {
                if *sigma.entry(x.clone()).or_insert(*v) != *v {
                    return None;
                }
            }
        }
    }
    let mut b = q.substitute(|term| match term {
        Term::Var(x) => sigma.get(x).map_or_else(|| term.clone(), |v| Term::Const(*v)),
        c => c.clone(),
    });
    b.head.terms.clear();
    Some(b)
}

/// [`certain_answers_oracle_with`] with the scale bound from the environment.
pub fn certain_answers_oracle(q: &Query, views: &[Query], instance: &Database) -> Result<CertainAnswers, RewriteError> {
    certain_answers_oracle_with(q, views, instance, OracleOptions::default())
}

/// Certain answers of `q` on the view instance by brute force: a tuple is
/// certain when every canonical database of the expanded instance has it as
/// an answer of `q`. Candidates are the answers on one database that
/// produces the instance, restricted to constants of the instance, the query
/// and the views; other values stand for unknowns.
pub fn certain_answers_oracle_with(
    q: &Query,
    views: &[Query],
    instance: &Database,
    options: OracleOptions,
) -> Result<CertainAnswers, RewriteError> {
    let e = instance_expansion(views, instance)?;
    if e.acs.has_false_fold() || !e.is_consistent() {
        return Ok(CertainAnswers::Undefined);
    }
    let mut acs = e.acs.clone();
    acs.add_constants(q.constants());
    let values = closure(&acs).model().expect("consistent");
    let witness = freeze(&e, &values);
    let mut known = instance.constants();
    known.extend(q.constants());
    for v in views {
        known.extend(v.constants());
    }
    let mut certain = BTreeSet::new();
    for t in evaluate(q, &witness) {
        if !t.iter().all(|v| known.contains(v)) {
            continue;
        }
        let Some(qt) = instantiate(q, &t) else { continue };
        if canonical_oracle_check_with(&qt, &e, options)?.holds {
            certain.insert(t);
        }
    }
    Ok(CertainAnswers::Defined(certain))
}
