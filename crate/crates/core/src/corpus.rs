//! Seeded random query pairs for cross-checking the deciders.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ac_core::{int, Atomic, Comparison, Op, Term};
use crate::query_model::{Atom, Database, Query};

/// Comparison shapes allowed in a generated query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcProfile {
    /// Any comparison type.
    Mixed,
    /// Semi-intervals and disequalities with constants.
    SiNe,
    /// Closed left semi-intervals and at most one closed right semi-interval.
    ClosedRsi1,
    /// Left semi-intervals and at most one right semi-interval, open or closed.
    Rsi1,
    /// Closed left semi-intervals only.
    Clsi,
    /// Left semi-intervals only.
    Lsi,
}

/// Shape limits of generated queries.
#[derive(Clone, Debug)]
pub struct CorpusOptions {
    pub max_subgoals: usize,
    pub max_vars: usize,
    pub max_acs: usize,
    pub constants: Vec<i64>,
    pub predicates: Vec<(&'static str, usize)>,
    pub head_arity: usize,
}

impl Default for CorpusOptions {
    fn default() -> CorpusOptions {
        CorpusOptions {
            max_subgoals: 3,
            max_vars: 4,
            max_acs: 3,
            constants: vec![3, 5, 7],
            predicates: vec![("a", 2), ("b", 1)],
            head_arity: 1,
        }
    }
}

const VAR_NAMES: [&str; 6] = ["X", "Y", "Z", "W", "U", "V"];

/// The seeded generator used across the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_op<R: Rng>(rng: &mut R, ops: &[Op]) -> Op {
    *ops.choose(rng).expect("nonempty")
}

fn random_comparison<R: Rng>(rng: &mut R, q: &Query, opts: &CorpusOptions, profile: AcProfile, rsi_used: &mut bool) -> Option<Comparison> {
    let vars: Vec<_> = q.body_vars();
    let x = Term::Var(vars.choose(rng)?.clone());
    let c = Term::Const(int(*opts.constants.choose(rng)?));
    let (lhs, op, rhs) = match profile {
        AcProfile::Mixed => {
            if vars.len() > 1 && rng.gen_bool(0.35) {
                let y = Term::Var(vars.choose(rng)?.clone());
                (x, random_op(rng, &[Op::Lt, Op::Le, Op::Eq, Op::Ne]), y)
            } else {
                (x, random_op(rng, &Op::ALL), c)
            }
        }
        AcProfile::SiNe => (x, random_op(rng, &[Op::Lt, Op::Le, Op::Gt, Op::Ge, Op::Ne]), c),
        AcProfile::Clsi => (x, Op::Le, c),
        AcProfile::Lsi => (x, random_op(rng, &[Op::Lt, Op::Le]), c),
        AcProfile::ClosedRsi1 | AcProfile::Rsi1 => {
            let right = !*rsi_used && rng.gen_bool(0.4);
            let op = match (right, profile == AcProfile::Rsi1) {
                (true, true) => random_op(rng, &[Op::Ge, Op::Gt]),
                (true, false) => Op::Ge,
                (false, true) => random_op(rng, &[Op::Le, Op::Lt]),
                (false, false) => Op::Le,
            };
            *rsi_used |= right;
            (x, op, c)
        }
    };
    match Comparison::fold(lhs, op, rhs) {
        Atomic::Cmp(c) => Some(c),
        Atomic::Const(_) => None,
    }
}

fn add_comparisons<R: Rng>(rng: &mut R, q: &mut Query, opts: &CorpusOptions, profile: AcProfile) {
    let n = rng.gen_range(0..=opts.max_acs);
    let mut rsi_used = false;
    for _ in 0..n {
        let Some(c) = random_comparison(rng, q, opts, profile, &mut rsi_used) else { continue };
        let trial = q.acs.with([&c]);
        if crate::ac_core::is_consistent(&trial) {
            q.acs = trial;
        }
    }
}

fn random_body<R: Rng>(rng: &mut R, opts: &CorpusOptions) -> Vec<Atom> {
    let k = rng.gen_range(1..=opts.max_vars.min(VAR_NAMES.len()));
    let n = rng.gen_range(1..=opts.max_subgoals);
    let mut body = Vec::with_capacity(n);
    for _ in 0..n {
        let (pred, arity) = *opts.predicates.choose(rng).expect("predicates");
        let terms = (0..arity)
            .map(|_| {
                if rng.gen_bool(0.08) {
                    Term::Const(int(*opts.constants.choose(rng).expect("constants")))
                } else {
                    Term::var(VAR_NAMES[rng.gen_range(0..k)])
                }
            })
            .collect();
        body.push(Atom::new(pred, terms));
    }
    body
}

fn with_head<R: Rng>(rng: &mut R, body: Vec<Atom>, arity: usize) -> Query {
    let vars = Query::new(Atom::new("q", vec![]), body.clone(), []).body_vars();
    let head_terms = if vars.is_empty() {
        Vec::new()
    } else {
        (0..arity).map(|_| Term::Var(vars.choose(rng).expect("nonempty").clone())).collect()
    };
    Query::new(Atom::new("q", head_terms), body, [])
}

/// A random safe query with consistent comparisons.
pub fn random_query<R: Rng>(rng: &mut R, opts: &CorpusOptions, profile: AcProfile) -> Query {
    let arity = rng.gen_range(0..=opts.head_arity);
    let body = random_body(rng, opts);
    let mut q = with_head(rng, body, arity);
    add_comparisons(rng, &mut q, opts, profile);
    q
}

/// A pair `(q1, q2)` for testing `q2 ⊑ q1`. Three quarters of the contained
/// queries are built from one or two homomorphic images of `q1`, so that
/// mappings exist and proofs may need several of them.
pub fn random_pair<R: Rng>(rng: &mut R, opts: &CorpusOptions, profile1: AcProfile, profile2: AcProfile) -> (Query, Query) {
    let q1 = random_query(rng, opts, profile1);
    let mode = rng.gen_range(0..4);
    if mode == 0 {
        let mut q2 = random_query(rng, opts, profile2);
        q2.head.terms.clear();
        let vars = q2.body_vars();
        for _ in 0..q1.head.terms.len() {
            let t = match vars.choose(rng) {
                Some(v) => Term::Var(v.clone()),
                None => Term::Const(int(opts.constants[0])),
            };
            q2.head.terms.push(t);
        }
        return (q1, q2);
    }
    let k = opts.max_vars.min(VAR_NAMES.len());
    let mut body: Vec<Atom> = Vec::new();
    let mut head: Vec<Term> = Vec::new();
    let mut inherited: Vec<Comparison> = Vec::new();
    let mut previous: Vec<Term> = Vec::new();
    let copies = mode.min(2);
    for copy in 0..copies {
        let mut image: Vec<Term> = (0..VAR_NAMES.len()).map(|_| Term::var(VAR_NAMES[rng.gen_range(0..k)])).collect();
        if copy == 1 && (mode == 3 || rng.gen_bool(0.3)) {
            image = previous.clone();
            image.swap(0, 1);
        }
        previous = image.clone();
        let rename = |t: &Term| match t {
            Term::Var(v) => VAR_NAMES.iter().position(|n| **n == **v).map_or(t.clone(), |i| image[i].clone()),
            c => c.clone(),
        };
        body.extend(q1.body.iter().map(|a| a.substitute(rename)));
        for c in q1.acs.iter() {
            if rng.gen_bool(0.5) {
                if let Atomic::Cmp(c) = c.substitute(rename) {
                    inherited.push(c);
                }
            }
        }
        if copy == 0 {
            head = q1.head.terms.iter().map(rename).collect();
        }
    }
    body.dedup();
    if body.len() < opts.max_subgoals && rng.gen_bool(0.4) {
        body.extend(random_body(rng, opts).into_iter().take(1));
    }
    body.truncate(opts.max_subgoals.max(1));
    let present: std::collections::BTreeSet<_> = body.iter().flat_map(|a| a.vars().cloned()).collect();
    if head.iter().any(|t| t.as_var().is_some_and(|v| !present.contains(v))) {
        body.truncate(1);
        let vars: Vec<_> = body[0].vars().cloned().collect();
        head = head.iter().map(|_| vars.first().map_or(Term::Const(int(opts.constants[0])), |v| Term::Var(v.clone()))).collect();
    }
    let mut q2 = Query::new(Atom::new("q", head), body, []);
    let present = q2.vars();
    for c in inherited {
        let trial = q2.acs.with([&c]);
        if c.vars().all(|v| present.contains(v)) && crate::ac_core::is_consistent(&trial) {
            q2.acs = trial;
        }
    }
    add_comparisons(rng, &mut q2, opts, profile2);
    (q1, q2)
}

/// `n` pairs from `seed`.
pub fn corpus(seed: u64, n: usize, opts: &CorpusOptions, profile1: AcProfile, profile2: AcProfile) -> Vec<(Query, Query)> {
    let mut r = rng(seed);
    (0..n).map(|_| random_pair(&mut r, opts, profile1, profile2)).collect()
}

/// A query, views and a view instance for comparing rewritings with certain answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewritingCase {
    pub query: Query,
    pub views: Vec<Query>,
    pub instance: Database,
}

/// A closed right-semi-interval query, one to three views built from renamed
/// pieces of its body with random comparisons, and at most `max_facts` view
/// facts over the constants plus their neighbours.
pub fn random_rewriting_case<R: Rng>(rng: &mut R, opts: &CorpusOptions, max_facts: usize) -> RewritingCase {
    let query = random_query(rng, opts, AcProfile::ClosedRsi1);
    let k = opts.max_vars.min(VAR_NAMES.len());
    let mut views = Vec::new();
    for i in 0..rng.gen_range(1..=3) {
        let image: Vec<Term> = (0..VAR_NAMES.len()).map(|_| Term::var(VAR_NAMES[rng.gen_range(0..k)])).collect();
        let rename = |t: &Term| match t {
            Term::Var(v) => VAR_NAMES.iter().position(|n| **n == **v).map_or(t.clone(), |i| image[i].clone()),
            c => c.clone(),
        };
        let mut body: Vec<Atom> = query.body.iter().filter(|_| rng.gen_bool(0.7)).map(|a| a.substitute(rename)).collect();
        if body.is_empty() {
            body.push(query.body[0].substitute(rename));
        }
        let vars = Query::new(Atom::new("v", vec![]), body.clone(), []).body_vars();
        let arity = if vars.is_empty() { 0 } else { rng.gen_range(1..=vars.len().min(2)) };
        let mut head: Vec<Term> = vars.choose_multiple(rng, arity).cloned().map(Term::Var).collect();
        head.sort();
        let mut v = Query::new(Atom::new(&format!("v{}", i + 1), head), body, []);
        let profile = if rng.gen_bool(0.5) { AcProfile::SiNe } else { AcProfile::Mixed };
        add_comparisons(rng, &mut v, opts, profile);
        views.push(v);
    }
    let mut pool: Vec<i64> = opts.constants.iter().flat_map(|c| [c - 1, *c, c + 1]).collect();
    pool.sort();
    pool.dedup();
    let mut instance = Database::new();
    for _ in 0..rng.gen_range(0..=max_facts) {
        let v = views.choose(rng).expect("views");
        let tuple = v.head.terms.iter().map(|_| int(*pool.choose(rng).expect("pool"))).collect();
        instance.insert(v.head.pred.clone(), tuple);
    }
    RewritingCase { query, views, instance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let opts = CorpusOptions::default();
        let a = corpus(7, 40, &opts, AcProfile::Mixed, AcProfile::Mixed);
        let b = corpus(7, 40, &opts, AcProfile::Mixed, AcProfile::Mixed);
        assert_eq!(a, b);
        for (q1, q2) in &a {
            for q in [q1, q2] {
                assert!(q.unsafe_var().is_none(), "{q}");
                assert!(q.is_consistent(), "{q}");
                assert!(q.vars().len() <= 4);
                assert!(q.body.len() <= 3);
                let reparsed = Query::parse(&q.to_string()).unwrap();
                assert_eq!(reparsed.to_string(), q.to_string());
            }
            assert_eq!(q1.head.terms.len(), q2.head.terms.len());
        }
    }

    #[test]
    fn rsi1_profile_has_one_right_interval() {
        let opts = CorpusOptions::default();
        for (q1, _) in corpus(3, 50, &opts, AcProfile::ClosedRsi1, AcProfile::Mixed) {
            let right = q1.acs.iter().filter(|c| matches!(c.as_si(), Some((_, Op::Ge | Op::Gt, _)))).count();
            assert!(right <= 1, "{q1}");
            assert!(q1.acs.iter().all(|c| c.as_si().is_some_and(|(_, op, _)| matches!(op, Op::Le | Op::Ge))));
        }
    }
}
