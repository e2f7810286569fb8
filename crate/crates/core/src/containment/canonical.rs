//! Canonical databases and the semantic containment oracle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::ac_core::{closure, interpolate, is_consistent, ACSet, Comparison, Name, Op, Rat, Term};
use crate::query_model::{booleanize, satisfiable_in, Database, Query, HEAD_PREDICATE};
#[cfg(test)]
use crate::query_model::evaluate;

use super::{ContainmentError, ContainmentResult, Witness};

/// Environment variable overriding the canonical enumeration bound.
pub const SCALE_ENV: &str = "CQAC_SCALE_BOUND";

const DEFAULT_BOUND: usize = 8;

/// Bound on `|vars(q2)| + |constants|` read from the environment, default 8.
pub fn scale_bound() -> usize {
    std::env::var(SCALE_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_BOUND)
}

/// Options of the canonical-database oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    pub bound: usize,
    /// Visit one database per coarse type when `q1` cannot order two variables.
    pub coarse_types: bool,
}

impl OracleOptions {
    pub fn with_bound(bound: usize) -> OracleOptions {
        OracleOptions { bound, coarse_types: true }
    }
}

impl Default for OracleOptions {
    fn default() -> OracleOptions {
        OracleOptions::with_bound(scale_bound())
    }
}

#[derive(Clone)]
struct Block {
    constant: Option<Rat>,
    vars: Vec<usize>,
}

enum Step {
    Continue,
    Prune,
    Stop,
}

/// Enumerates ordered partitions of the variables of `q2` and the constants,
/// keeping constants in separate blocks in their natural order.
struct Enumerator<'a> {
    q2: &'a Query,
    vars: Vec<Name>,
    checks: Vec<Vec<&'a Comparison>>,
    completes: Vec<Vec<usize>>,
}

impl<'a> Enumerator<'a> {
    fn new(q2: &'a Query) -> Enumerator<'a> {
        let mut vars: Vec<Name> = Vec::new();
        let mut remaining: Vec<usize> = (0..q2.body.len()).collect();
        while !remaining.is_empty() {
            let fresh = |i: &usize| q2.body[*i].vars().filter(|v| !vars.contains(v)).collect::<BTreeSet<_>>().len();
            let pos = (0..remaining.len()).min_by_key(|&p| (fresh(&remaining[p]), p)).expect("nonempty");
            let atom = &q2.body[remaining.remove(pos)];
            for v in atom.vars() {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        let level = |v: &Name| vars.iter().position(|u| u == v).map_or(usize::MAX, |p| p + 1);
        let mut checks = vec![Vec::new(); vars.len() + 1];
        for c in q2.acs.iter() {
            let l = c.vars().map(level).max().unwrap_or(0);
            if l != usize::MAX {
                checks[l].push(c);
            }
        }
        let mut completes = vec![Vec::new(); vars.len() + 1];
        for (i, a) in q2.body.iter().enumerate() {
            let l = a.vars().map(level).max().unwrap_or(0);
            completes[l].push(i);
        }
        Enumerator { q2, vars, checks, completes }
    }

    fn values(blocks: &[Block]) -> Vec<Rat> {
        let mut out: Vec<Option<Rat>> = blocks.iter().map(|b| b.constant).collect();
        let mut start = 0;
        let mut lower: Option<Rat> = None;
        for i in 0..=blocks.len() {
            let upper = if i < blocks.len() { blocks[i].constant } else { None };
            if i == blocks.len() || upper.is_some() {
                let run = i - start;
                for j in 0..run {
                    out[start + j] = Some(interpolate(lower.as_ref(), upper.as_ref(), j, run));
                }
                lower = upper;
                start = i + 1;
            }
        }
        out.into_iter().map(|v| v.expect("valued")).collect()
    }

    fn assignment(&self, blocks: &[Block], placed: usize) -> BTreeMap<Name, Rat> {
        let values = Self::values(blocks);
        let mut out = BTreeMap::new();
        for (b, block) in blocks.iter().enumerate() {
            for &v in &block.vars {
                if v < placed {
                    out.insert(self.vars[v].clone(), values[b]);
                }
            }
        }
        out
    }

    fn satisfied(&self, blocks: &[Block], level: usize) -> bool {
        let position = |t: &Term| -> usize {
            match t {
                Term::Var(v) => {
                    let i = self.vars.iter().position(|u| u == v).expect("placed");
                    blocks.iter().position(|b| b.vars.contains(&i)).expect("placed")
                }
                Term::Const(c) => blocks.iter().position(|b| b.constant == Some(*c)).expect("constant block"),
            }
        };
        self.checks[level].iter().all(|c| {
            let ord: Ordering = position(c.lhs()).cmp(&position(c.rhs()));
            c.op().holds(ord)
        })
    }

    /// Partial database of the subgoals whose variables are all placed.
    fn database(&self, blocks: &[Block], placed: usize) -> Database {
        let values = self.assignment(blocks, placed);
        let mut db = Database::new();
        for level in 0..=placed {
            for &i in &self.completes[level] {
                let atom = &self.q2.body[i];
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
        }
        db
    }

    fn walk<F>(&self, blocks: &mut Vec<Block>, placed: usize, visit: &mut F) -> bool
    where
        F: FnMut(&Self, &[Block], usize) -> Step,
    {
        match visit(self, blocks, placed) {
            Step::Stop => return false,
            Step::Prune => return true,
            Step::Continue => {}
        }
        if placed == self.vars.len() {
            return true;
        }
        let n = blocks.len();
        for slot in 0..(2 * n + 1) {
            if slot % 2 == 1 {
                blocks[slot / 2].vars.push(placed);
            } else {
                blocks.insert(slot / 2, Block { constant: None, vars: vec![placed] });
            }
            let stop = self.satisfied(blocks, placed + 1) && !self.walk(blocks, placed + 1, visit);
            if slot % 2 == 1 {
                blocks[slot / 2].vars.pop();
            } else {
                blocks.remove(slot / 2);
            }
            if stop {
                return false;
            }
        }
        true
    }
}

fn initial_blocks(constants: &BTreeSet<Rat>) -> Vec<Block> {
    constants.iter().map(|c| Block { constant: Some(*c), vars: Vec::new() }).collect()
}

fn all_constants(q1: &Query, q2: &Query) -> BTreeSet<Rat> {
    let mut out = q1.constants();
    out.extend(q2.constants());
    out
}

/// Canonical databases of `q2` over its variables and the constants of both queries.
///
/// One database per ordered partition consistent with the constant order whose
/// assignment satisfies the comparisons of `q2`.
pub fn canonical_databases(q2: &Query, q1: &Query) -> Vec<Database> {
    let mut out = Vec::new();
    if q2.acs.has_false_fold() {
        return out;
    }
    let e = Enumerator::new(q2);
    let mut blocks = initial_blocks(&all_constants(q1, q2));
    if !e.satisfied(&blocks, 0) {
        return out;
    }
    e.walk(&mut blocks, 0, &mut |e, blocks, placed| {
        if placed == e.vars.len() {
            out.push(e.database(blocks, placed));
        }
        Step::Continue
    });
    out
}

/// Oracle with options from the environment.
pub fn canonical_oracle_check(q1: &Query, q2: &Query) -> Result<ContainmentResult, ContainmentError> {
    canonical_oracle_check_with(q1, q2, OracleOptions::default())
}

/// Decides `q2 ⊑ q1` by evaluating both queries on every canonical database of `q2`.
///
/// A branch of the enumeration is closed early once `q1` holds on the subgoals
/// already placed, since later placements keep the relative order of earlier values.
/// When `q1` never orders two variables against each other, databases that agree on
/// equalities and on positions relative to the constants are visited once.
pub fn canonical_oracle_check_with(
    q1: &Query,
    q2: &Query,
    options: OracleOptions,
) -> Result<ContainmentResult, ContainmentError> {
    let constants = all_constants(q1, q2);
    let size = q2.vars().len() + constants.len();
    if size > options.bound {
        return Err(ContainmentError::ScaleBound { size, bound: options.bound });
    }
    let b1 = booleanize(q1);
    let b2 = booleanize(q2);
    if b2.acs.has_false_fold() {
        return Ok(ContainmentResult::contained(Witness::Vacuous));
    }
    let e = Enumerator::new(&b2);
    let mut blocks = initial_blocks(&constants);
    if !e.satisfied(&blocks, 0) {
        return Ok(ContainmentResult::contained(Witness::Vacuous));
    }
    let mode = if options.coarse_types { TypeMode::of(&b1) } else { TypeMode::Ordered };
    let outcome = match mode {
        TypeMode::Ordered => ordered_search(&e, &b1, &mut blocks),
        mode => TypedSearch::new(&e, &b1, q1, mode).run(),
    };
    Ok(match outcome {
        Err(db) => ContainmentResult::not_contained(Witness::Counterexample(without_head(&db))),
        Ok(leaves) => ContainmentResult::contained(Witness::Exhaustive { databases: leaves }),
    })
}

fn without_head(db: &Database) -> Database {
    let mut plain = Database::new();
    for (pred, tuples) in db.relations() {
        if &**pred != HEAD_PREDICATE {
            for t in tuples {
                plain.insert(pred.clone(), t.clone());
            }
        }
    }
    plain
}

fn ordered_search(e: &Enumerator<'_>, b1: &Query, blocks: &mut Vec<Block>) -> Result<usize, Database> {
    let mut leaves = 0;
    let mut failure: Option<Database> = None;
    e.walk(blocks, 0, &mut |e, blocks, placed| {
        let complete = placed == e.vars.len();
        if !complete && e.completes[placed].is_empty() {
            return Step::Continue;
        }
        let db = e.database(blocks, placed);
        if satisfiable_in(b1, &db) {
            leaves += 1;
            return Step::Prune;
        }
        if !complete {
            return Step::Continue;
        }
        leaves += 1;
        failure = Some(db);
        Step::Stop
    });
    failure.map_or(Ok(leaves), Err)
}

/// How much of a canonical database the containing query can observe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TypeMode {
    /// Order between variables matters.
    Ordered,
    /// Equalities between variables matter, their order does not.
    Partition,
    /// Only positions relative to constants matter; equalities are kept minimal.
    Finest,
}

impl TypeMode {
    fn of(q1: &Query) -> TypeMode {
        let var_var = |c: &&Comparison| c.lhs().is_var() && c.rhs().is_var();
        let mut mode = TypeMode::Finest;
        for c in q1.acs.iter().filter(var_var) {
            match c.op() {
                Op::Eq => {}
                Op::Ne => mode = TypeMode::Partition,
                _ => return TypeMode::Ordered,
            }
        }
        mode
    }
}

/// Position of a value: equal to a constant, or inside a range of values that
/// the comparisons of the containing query cannot tell apart. Range ends carry
/// whether they are included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Position {
    At(Rat),
    Range { lo: Option<(Rat, bool)>, hi: Option<(Rat, bool)> },
}

/// Maximal runs of the constants of `q1` and the gaps between them on which
/// every comparison of `q1` with a constant, and every match against a
/// constant of its subgoals, has the same truth value.
fn regions(q1: &Query) -> Vec<Position> {
    let cuts: Vec<Rat> = q1.constants().into_iter().collect();
    let in_atoms: BTreeSet<Rat> = q1.body.iter().flat_map(|a| a.constants().copied()).collect();
    let signature = |x: &Rat| -> Vec<bool> {
        let mut out: Vec<bool> = q1
            .acs
            .iter()
            .filter(|c| c.vars().count() == 1)
            .map(|c| c.eval(|_| Some(*x)).expect("one variable"))
            .collect();
        out.extend(in_atoms.iter().map(|c| c == x));
        out
    };
    // Elementary pieces: (lower end, upper end, representative).
    let mut pieces: Vec<(Option<(Rat, bool)>, Option<(Rat, bool)>, Rat)> = Vec::new();
    for g in 0..=cuts.len() {
        let lo = g.checked_sub(1).map(|i| cuts[i]);
        let hi = cuts.get(g).copied();
        pieces.push((lo.map(|c| (c, false)), hi.map(|c| (c, false)), interpolate(lo.as_ref(), hi.as_ref(), 0, 1)));
        if let Some(c) = hi {
            pieces.push((Some((c, true)), Some((c, true)), c));
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < pieces.len() {
        let sig = signature(&pieces[i].2);
        let mut j = i;
        while j + 1 < pieces.len() && signature(&pieces[j + 1].2) == sig {
            j += 1;
        }
        let (lo, hi) = (pieces[i].0, pieces[j].1);
        out.push(match (lo, hi) {
            (Some((a, true)), Some((b, true))) if a == b => Position::At(a),
            _ => Position::Range { lo, hi },
        });
        i = j + 1;
    }
    out
}

/// Argument positions of `q1` that one of its variables can tie together,
/// directly or through a comparison between two variables.
fn position_classes(q1: &Query) -> BTreeMap<(Name, usize), usize> {
    let mut ids: BTreeMap<(Name, usize), usize> = BTreeMap::new();
    let mut parent: Vec<usize> = Vec::new();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut first: BTreeMap<&Name, usize> = BTreeMap::new();
    for atom in &q1.body {
        for (i, t) in atom.terms.iter().enumerate() {
            let id = *ids.entry((atom.pred.clone(), i)).or_insert_with(|| {
                parent.push(parent.len());
                parent.len() - 1
            });
            if let Term::Var(v) = t {
                let root = *first.entry(v).or_insert(id);
                let (x, y) = (find(&mut parent, root), find(&mut parent, id));
                parent[x] = y;
            }
        }
    }
    for c in q1.acs.iter() {
        if let (Term::Var(l), Term::Var(r)) = (c.lhs(), c.rhs()) {
            if let (Some(&x), Some(&y)) = (first.get(l), first.get(r)) {
                let (x, y) = (find(&mut parent, x), find(&mut parent, y));
                parent[x] = y;
            }
        }
    }
    ids.into_iter().map(|(k, id)| (k, find(&mut parent, id))).collect()
}

/// Depth-first search over coarse types of canonical databases.
///
/// A type fixes the position of every variable of `q2` and, when `q1` has
/// disequalities between variables, the equalities among variables that share
/// a position class of `q1`. Each type is realized by the closure model of its
/// constraints, which keeps values apart unless forced equal.
struct TypedSearch<'a> {
    e: &'a Enumerator<'a>,
    b1: &'a Query,
    mode: TypeMode,
    cuts: Vec<Rat>,
    regions: Vec<Position>,
    /// Position classes of `q1` met by each variable of `q2`.
    classes: Vec<BTreeSet<usize>>,
    /// Position classes of `q1` met by each constant occurring in `q2` only.
    constant_classes: BTreeMap<Rat, BTreeSet<usize>>,
    /// Position and block of each placed variable.
    pos_of: Vec<Position>,
    block_of: Vec<usize>,
    leaves: usize,
}

impl<'a> TypedSearch<'a> {
    fn new(e: &'a Enumerator<'a>, b1: &'a Query, q1: &Query, mode: TypeMode) -> Self {
        let cuts: Vec<Rat> = q1.constants().into_iter().collect();
        let ids = position_classes(b1);
        let classes = e
            .vars
            .iter()
            .map(|v| {
                let mut out = BTreeSet::new();
                for atom in &e.q2.body {
                    for (i, t) in atom.terms.iter().enumerate() {
                        if t.as_var() == Some(v) {
                            out.extend(ids.get(&(atom.pred.clone(), i)).copied());
                        }
                    }
                }
                out
            })
            .collect();
        let mut constant_classes: BTreeMap<Rat, BTreeSet<usize>> = BTreeMap::new();
        for atom in &e.q2.body {
            for (i, t) in atom.terms.iter().enumerate() {
                if let Some(k) = t.as_const().filter(|k| !cuts.contains(k)) {
                    constant_classes.entry(*k).or_default().extend(ids.get(&(atom.pred.clone(), i)).copied());
                }
            }
        }
        TypedSearch {
            e,
            b1,
            mode,
            regions: regions(b1),
            cuts,
            classes,
            constant_classes,
            pos_of: Vec::new(),
            block_of: Vec::new(),
            leaves: 0,
        }
    }

    /// Constants of `q2` alone that `q1` could join with the variable at `level`.
    fn visible_constants(&self, level: usize) -> Vec<Rat> {
        if self.mode != TypeMode::Partition {
            return Vec::new();
        }
        self.constant_classes
            .iter()
            .filter(|(_, cls)| !cls.is_disjoint(&self.classes[level]))
            .map(|(k, _)| *k)
            .collect()
    }

    /// Candidate positions of the variable at `level`.
    fn positions(&self, level: usize) -> Vec<Position> {
        let mut out = self.regions.clone();
        out.extend(self.visible_constants(level).into_iter().map(Position::At));
        out
    }

    fn constraints(&self, level: usize, pos: Position, acs: &mut ACSet) {
        let v = &self.e.vars[level];
        let var = Term::Var(v.clone());
        acs.add_var(v.clone());
        match pos {
            Position::At(k) => acs.insert(Comparison::new(var, Op::Eq, Term::Const(k))),
            Position::Range { lo, hi } => {
                for k in self.visible_constants(level) {
                    acs.insert(Comparison::new(var.clone(), Op::Ne, Term::Const(k)));
                }
                let op = |closed: bool| if closed { Op::Le } else { Op::Lt };
                if let Some((c, closed)) = lo {
                    acs.insert(Comparison::new(Term::Const(c), op(closed), var.clone()));
                }
                if let Some((c, closed)) = hi {
                    acs.insert(Comparison::new(var, op(closed), Term::Const(c)));
                }
            }
        }
    }

    fn database(&self, model: &BTreeMap<Name, Rat>, placed: usize) -> Database {
        let mut db = Database::new();
        for level in 0..=placed {
            for &i in &self.e.completes[level] {
                let atom = &self.e.q2.body[i];
                let tuple = atom
                    .terms
                    .iter()
                    .map(|t| match t {
                        Term::Const(c) => *c,
                        Term::Var(v) => model[v],
                    })
                    .collect();
                db.insert(atom.pred.clone(), tuple);
            }
        }
        db
    }

    fn run(mut self) -> Result<usize, Database> {
        let mut acs = ACSet::new();
        acs.add_constants(self.e.q2.constants());
        acs.add_constants(self.cuts.iter().copied());
        for c in &self.e.checks[0] {
            acs.insert((*c).clone());
        }
        self.walk(&acs, 0).map(|()| self.leaves)
    }

    fn walk(&mut self, acs: &ACSet, placed: usize) -> Result<(), Database> {
        let complete = placed == self.e.vars.len();
        if complete || !self.e.completes[placed].is_empty() {
            let model = closure(acs).model().expect("consistent type");
            let db = self.database(&model, placed);
            if satisfiable_in(self.b1, &db) {
                self.leaves += 1;
                return Ok(());
            }
            if complete {
                self.leaves += 1;
                return Err(db);
            }
        }
        let v = self.e.vars[placed].clone();
        for pos in self.positions(placed) {
            let mut base = acs.clone();
            self.constraints(placed, pos, &mut base);
            for c in &self.e.checks[placed + 1] {
                base.insert((*c).clone());
            }
            let related: Vec<usize> = if self.mode == TypeMode::Partition && matches!(pos, Position::Range { .. }) {
                (0..placed)
                    .filter(|&u| self.pos_of[u] == pos && !self.classes[u].is_disjoint(&self.classes[placed]))
                    .collect()
            } else {
                Vec::new()
            };
            let mut blocks: Vec<usize> = related.iter().map(|&u| self.block_of[u]).collect();
            blocks.sort_unstable();
            blocks.dedup();
            for mask in 0..(1usize << blocks.len()) {
                let joined = |b: usize| mask >> blocks.iter().position(|&x| x == b).expect("block") & 1 == 1;
                let mut next = base.clone();
                for &u in &related {
                    let op = if joined(self.block_of[u]) { Op::Eq } else { Op::Ne };
                    next.insert(Comparison::new(Term::Var(v.clone()), op, Term::Var(self.e.vars[u].clone())));
                }
                if !is_consistent(&next) {
                    continue;
                }
                let saved = self.block_of.clone();
                for b in self.block_of.iter_mut() {
                    if blocks.contains(b) && joined(*b) {
                        *b = placed;
                    }
                }
                self.block_of.push(placed);
                self.pos_of.push(pos);
                let result = self.walk(&next, placed + 1);
                self.pos_of.pop();
                self.block_of = saved;
                result?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ac_core::int;

    fn q(text: &str) -> Query {
        Query::parse(text).unwrap()
    }

    fn big() -> OracleOptions {
        OracleOptions::with_bound(64)
    }

    #[test]
    fn one_variable_three_databases() {
        let q2 = q("q() :- a(X), X != 4.");
        let q1 = q("q() :- a(X), X < 5.");
        let dbs = canonical_databases(&q("q() :- a(X)."), &q1);
        assert_eq!(dbs.len(), 3);
        let xs: Vec<Rat> = dbs.iter().map(|d| d.relation(&Name::from("a")).unwrap().iter().next().unwrap()[0]).collect();
        assert!(xs.contains(&int(4)) && xs.contains(&int(5)) && xs.contains(&int(6)));
        assert_eq!(canonical_databases(&q2, &q("q() :- a(X).")).len(), 2);
    }

    #[test]
    fn ground_query_has_one_database() {
        assert_eq!(canonical_databases(&q("q() :- a(1,2)."), &q("q() :- a(X,Y).")).len(), 1);
    }

    #[test]
    fn databases_satisfy_contained_comparisons() {
        let q2 = q("q() :- a(X,Y,Z2), a(X2,Y2,Z), X <= 5, Y <= X, Z <= Y, X2 = Y2, Z2 < 5.");
        let q1 = q("q() :- a(X1,Y1,Z1), X1 = Y1, Z1 < 5.");
        let dbs = canonical_databases(&q2, &q1);
        assert!(!dbs.is_empty());
        for db in &dbs {
            assert!(!evaluate(&q2, db).is_empty());
        }
        assert!(canonical_oracle_check_with(&q1, &q2, big()).unwrap().holds);
    }

    #[test]
    fn boundary_counterexample() {
        let r = canonical_oracle_check(&q("q() :- a(X), X < 5."), &q("q() :- a(X), X <= 5.")).unwrap();
        assert!(!r.holds);
        let db = r.counterexample().unwrap();
        assert_eq!(db, &Database::parse("a(5).").unwrap());
    }

    #[test]
    fn self_containment() {
        let a = q("q(X) :- e(X,Y), e(Y,Z), X < Y, Z != 3.");
        assert!(canonical_oracle_check(&a, &a).unwrap().holds);
    }

    #[test]
    fn six_mapping_pair_is_refused() {
        let q1 = q("q() :- a(X,Y,Z), X <= 8, Y <= 7, Z >= 6.");
        let q2 = q("q() :- a(X,Y,Z), a(U1,U2,X), a(V1,V2,Y), a(Z,Z1,Z2), a(P1,P2,U1), a(R1,R2,V1), \
                    P1 <= 8, P2 <= 7, U2 <= 7, R1 <= 8, R2 <= 7, V2 <= 7, Z1 <= 7, Z2 >= 6.");
        assert!(matches!(
            canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(8)),
            Err(ContainmentError::ScaleBound { size: 16, bound: 8 })
        ));
    }

    #[test]
    fn six_mapping_pair_holds_with_raised_bound() {
        let q1 = q("q() :- a(X,Y,Z), X <= 8, Y <= 7, Z >= 6.");
        let q2 = q("q() :- a(X,Y,Z), a(U1,U2,X), a(V1,V2,Y), a(Z,Z1,Z2), a(P1,P2,U1), a(R1,R2,V1), \
                    P1 <= 8, P2 <= 7, U2 <= 7, R1 <= 8, R2 <= 7, V2 <= 7, Z1 <= 7, Z2 >= 6.");
        assert!(canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(16)).unwrap().holds);
        let weaker = q("q() :- a(X,Y,Z), a(U1,U2,X), a(V1,V2,Y), a(Z,Z1,Z2), a(P1,P2,U1), a(R1,R2,V1), \
                    P1 <= 8, P2 <= 7, U2 <= 7, R1 <= 8, R2 <= 7, V2 <= 7, Z1 <= 7.");
        let r = canonical_oracle_check_with(&q1, &weaker, OracleOptions::with_bound(16)).unwrap();
        assert!(!r.holds);
        assert!(evaluate(&q1, r.counterexample().unwrap()).is_empty());
    }

    #[test]
    fn coarse_types_count_positions_only() {
        let q1 = q("q() :- a(X), X < 5.");
        let q2 = q("q() :- a(X), a(Y), a(Z).");
        let r = canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(16)).unwrap();
        assert!(!r.holds);
        let q2 = q("q() :- a(X), a(Y), X < 5, Y < X.");
        let r = canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(16)).unwrap();
        assert_eq!(r.witness, Witness::Exhaustive { databases: 1 });
        let ordered = OracleOptions { bound: 16, coarse_types: false };
        assert!(canonical_oracle_check_with(&q1, &q2, ordered).unwrap().holds);
    }

    #[test]
    fn non_boolean_heads() {
        let q1 = q("q(X) :- a(X,Y), Y < 3.");
        let q2 = q("q(X) :- a(X,Y), Y < 2.");
        assert!(canonical_oracle_check(&q1, &q2).unwrap().holds);
        let r = canonical_oracle_check(&q2, &q1).unwrap();
        assert!(!r.holds);
        let db = r.counterexample().unwrap();
        assert!(!evaluate(&q1, db).is_subset(&evaluate(&q2, db)));
    }
}
