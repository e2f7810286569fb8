//! The containment entailment decided by case splitting over containment implications.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ac_core::{closure, is_consistent, ACSet, Comparison, Name, Rat, Term};
use crate::query_model::{Database, Query, HEAD_PREDICATE};

use super::mapping::{homomorphisms, image, prepare};
use super::{ContainmentMapping, ContainmentResult, Witness};

/// Outcome of deciding `lhs => OR_k AND images[k]`.
pub(crate) enum Decision {
    /// Indices of the disjuncts used by the proof.
    Proved(BTreeSet<usize>),
    /// A model of `lhs` falsifying every disjunct.
    Refuted(BTreeMap<Name, Rat>),
}

struct Search<'a> {
    images: &'a [Vec<Comparison>],
    proved: HashMap<(BTreeSet<Comparison>, Vec<usize>), BTreeSet<usize>>,
}

impl Search<'_> {
    fn run(&mut self, lhs: &ACSet, added: &BTreeSet<Comparison>, remaining: &[usize]) -> Decision {
        let key = (added.clone(), remaining.to_vec());
        if let Some(used) = self.proved.get(&key) {
            return Decision::Proved(used.clone());
        }
        let cl = closure(lhs);
        if !cl.consistent {
            return Decision::Proved(BTreeSet::new());
        }
        let entailed = |c: &Comparison| cl.entails(c);
        let mut live: Vec<(usize, Vec<&Comparison>)> = Vec::new();
        for &k in remaining {
            let mut open = Vec::new();
            let mut falsified = false;
            for a in &self.images[k] {
                let refuted = entailed(&a.negate()).unwrap_or_else(|| !is_consistent(&lhs.with([a])));
                if refuted {
                    falsified = true;
                    break;
                }
                let implied = entailed(a).unwrap_or_else(|| !is_consistent(&lhs.with([&a.negate()])));
                if !implied {
                    open.push(a);
                }
            }
            if falsified {
                continue;
            }
            if open.is_empty() {
                let used = BTreeSet::from([k]);
                self.proved.insert(key, used.clone());
                return Decision::Proved(used);
            }
            live.push((k, open));
        }
        let Some(pick) = (0..live.len()).min_by_key(|&i| (live[i].1.len(), live[i].0)) else {
            let model = cl.model().expect("consistent lhs has a model");
            return Decision::Refuted(model);
        };
        let (k, open) = &live[pick];
        let rest: Vec<usize> = live.iter().map(|(j, _)| *j).filter(|j| j != k).collect();
        let mut used = BTreeSet::from([*k]);
        for a in open {
            let neg = a.negate();
            let mut next_added = added.clone();
            next_added.insert(neg.clone());
            let next = lhs.with([&neg]);
            match self.run(&next, &next_added, &rest) {
                Decision::Proved(u) => used.extend(u),
                refuted => return refuted,
            }
        }
        self.proved.insert(key, used.clone());
        Decision::Proved(used)
    }
}

/// Decides `lhs => OR_k AND images[k]`; a disjunct containing a false fold is `None`.
pub(crate) fn decide(lhs: &ACSet, images: &[Option<Vec<Comparison>>]) -> Decision {
    let kept: Vec<usize> = (0..images.len()).filter(|&k| images[k].is_some()).collect();
    let flat: Vec<Vec<Comparison>> = images.iter().map(|i| i.clone().unwrap_or_default()).collect();
    let mut search = Search { images: &flat, proved: HashMap::new() };
    search.run(lhs, &BTreeSet::new(), &kept)
}

/// Instantiates the relational subgoals of `q` under `values`, leaving out the head atom.
pub(crate) fn freeze(q: &Query, values: &BTreeMap<Name, Rat>) -> Database {
    let mut db = Database::new();
    for atom in q.body.iter().filter(|a| &*a.pred != HEAD_PREDICATE) {
        let tuple = atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => *c,
                Term::Var(v) => values[v],
            })
            .collect();
        db.insert(atom.pred.clone(), tuple);
    }
    db
}

/// Decides `q2 ⊑ q1` through the containment entailment over all mappings of
/// the normalized queries.
pub fn entailment_check(q1: &Query, q2: &Query) -> ContainmentResult {
    let (n1, n2) = prepare(q1, q2);
    if n2.acs.has_false_fold() || !n2.is_consistent() {
        return ContainmentResult::contained(Witness::Vacuous);
    }
    let maps: Vec<ContainmentMapping> = homomorphisms(&n1.body, &n2.body);
    let images: Vec<Option<Vec<Comparison>>> = maps
        .iter()
        .map(|m| {
            let img = image(m, &n1.acs);
            (!img.has_false_fold()).then(|| img.iter().cloned().collect())
        })
        .collect();
    match decide(&n2.acs, &images) {
        Decision::Proved(used) => {
            ContainmentResult::contained(Witness::Mappings(used.into_iter().map(|k| maps[k].clone()).collect()))
        }
        Decision::Refuted(model) => ContainmentResult::not_contained(Witness::Counterexample(freeze(&n2, &model))),
    }
}
