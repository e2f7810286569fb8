//! Unfolding programs into expansions and the program-contains-query test.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ac_core::{Atomic, Comparison, Name, Op, Rat, Term};
use crate::query_model::{Atom, Database, Query};

use super::{evaluate_program, Builtin, DAtom, DTerm, DatalogError, DatalogProgram};

type Subst = BTreeMap<Name, DTerm>;

fn resolve(t: &DTerm, s: &Subst) -> DTerm {
    match t {
        DTerm::Var(v) => match s.get(v) {
            Some(b) => resolve(b, s),
            None => t.clone(),
        },
        DTerm::Const(_) => t.clone(),
        DTerm::Func(f, args) => DTerm::Func(f.clone(), args.iter().map(|a| resolve(a, s)).collect()),
    }
}

fn occurs(v: &Name, t: &DTerm, s: &Subst) -> bool {
    match resolve(t, s) {
        DTerm::Var(w) => &w == v,
        DTerm::Const(_) => false,
        DTerm::Func(_, args) => args.iter().any(|a| occurs(v, a, s)),
    }
}

fn unify(a: &DTerm, b: &DTerm, s: &mut Subst) -> bool {
    let (a, b) = (resolve(a, s), resolve(b, s));
    match (&a, &b) {
        _ if a == b => true,
        (DTerm::Var(v), t) | (t, DTerm::Var(v)) => {
            if occurs(v, t, s) {
                return false;
            }
            s.insert(v.clone(), t.clone());
            true
        }
        (DTerm::Func(f, xs), DTerm::Func(g, ys)) if f == g && xs.len() == ys.len() => {
            xs.iter().zip(ys).all(|(x, y)| unify(x, y, s))
        }
        _ => false,
    }
}

#[derive(Clone)]
struct Partial {
    head: Vec<DTerm>,
    goals: Vec<(DAtom, usize)>,
    acs: Vec<(DTerm, Op, DTerm)>,
}

impl Partial {
    fn apply(&self, s: &Subst) -> Partial {
        let atom = |a: &DAtom| DAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| resolve(t, s)).collect() };
        Partial {
            head: self.head.iter().map(|t| resolve(t, s)).collect(),
            goals: self.goals.iter().map(|(a, l)| (atom(a), *l)).collect(),
            acs: self.acs.iter().map(|(l, op, r)| (resolve(l, s), *op, resolve(r, s))).collect(),
        }
    }
}

struct Unfolder<'a> {
    p: &'a DatalogProgram,
    depth: usize,
    fresh: usize,
    seen: BTreeSet<String>,
    out: Vec<Query>,
}

impl Unfolder<'_> {
    fn rename(&mut self, r: &super::DatalogRule) -> (DAtom, Vec<DAtom>, Vec<(DTerm, Op, DTerm)>) {
        self.fresh += 1;
        let k = self.fresh;
        let s: Subst = r
            .head
            .vars()
            .chain(r.body.iter().flat_map(DAtom::vars))
            .map(|v| (v.clone(), DTerm::Var(Arc::from(format!("{v}_{k}").as_str()))))
            .collect();
        let atom = |a: &DAtom| DAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| resolve(t, &s)).collect() };
        let acs = r
            .acs
            .iter()
            .map(|c| (resolve(&DTerm::from(c.lhs()), &s), c.op(), resolve(&DTerm::from(c.rhs()), &s)))
            .collect();
        (atom(&r.head), r.body.iter().map(atom).collect(), acs)
    }

    fn unfold_with(&mut self, state: &Partial, idx: usize, rule: usize) {
        let (goal, level) = state.goals[idx].clone();
        if level >= self.depth {
            return;
        }
        let (head, body, acs) = self.rename(&self.p.rules[rule]);
        let mut s = Subst::new();
        if !head.args.iter().zip(&goal.args).all(|(a, b)| unify(a, b, &mut s)) {
            return;
        }
        let mut next = state.clone();
        next.goals.splice(idx..=idx, body.into_iter().map(|a| (a, level + 1)));
        next.acs.extend(acs);
        self.search(next.apply(&s));
    }

    fn search(&mut self, state: Partial) {
        let Some(idx) = state.goals.iter().position(|(a, _)| !self.p.edb.contains_key(&a.pred)) else {
            self.finish(&state);
            return;
        };
        let goal = state.goals[idx].0.clone();
        if let Some(b) = self.p.builtins.get(&goal.pred) {
            let mut next = state.clone();
            next.goals.remove(idx);
            next.acs.push(match b {
                Builtin::Le => (goal.args[0].clone(), Op::Le, goal.args[1].clone()),
                Builtin::Si(op, c) => (goal.args[0].clone(), *op, DTerm::Const(*c)),
            });
            self.search(next);
        }
        for ri in 0..self.p.rules.len() {
            if self.p.rules[ri].head.pred == goal.pred {
                self.unfold_with(&state, idx, ri);
            }
        }
    }

    fn finish(&mut self, state: &Partial) {
        let Some(head) = state.head.iter().map(DTerm::as_term).collect::<Option<Vec<Term>>>() else { return };
        let Some(mut body) = state.goals.iter().map(|(a, _)| a.as_atom()).collect::<Option<Vec<Atom>>>() else { return };
        let mut present = BTreeSet::new();
        body.retain(|a| present.insert(a.clone()));
        let mut acs = Vec::new();
        for (l, op, r) in &state.acs {
            match (l.as_term(), r.as_term()) {
                (Some(l), Some(r)) => match Comparison::fold(l, *op, r) {
                    Atomic::Cmp(c) => acs.push(c),
                    Atomic::Const(true) => {}
                    Atomic::Const(false) => return,
                },
                _ if l == r && matches!(op, Op::Le | Op::Eq | Op::Ge) => {}
                _ => return,
            }
        }
        let keep: BTreeSet<Name> = head.iter().chain(body.iter().flat_map(|a| a.terms.iter())).filter_map(|t| t.as_var().cloned()).collect();
        let Some(acs) = project_out(&acs, &keep) else { return };
        let q = canonical(&Query::new(Atom { pred: self.p.query.clone(), terms: head }, body, acs));
        if q.is_consistent() && self.seen.insert(q.to_string()) {
            self.out.push(q);
        }
    }
}

/// Renames variables to `X1, X2, ...` in order of first occurrence.
fn canonical(q: &Query) -> Query {
    let mut names: BTreeMap<Name, Name> = BTreeMap::new();
    let order = q.head.vars().chain(q.body.iter().flat_map(Atom::vars)).chain(q.acs.iter().flat_map(Comparison::vars));
    for v in order {
        let n = names.len() + 1;
        names.entry(v.clone()).or_insert_with(|| Arc::from(format!("X{n}").as_str()));
    }
    q.substitute(|t| match t {
        Term::Var(v) => Term::Var(names[v].clone()),
        c => c.clone(),
    })
}

/// Eliminates the variables outside `keep` from a conjunction of
/// comparisons over a dense order. Disequalities on an eliminated variable
/// are dropped. Returns `None` when the conjunction is found inconsistent.
pub fn project_out(acs: &[Comparison], keep: &BTreeSet<Name>) -> Option<Vec<Comparison>> {
    let mut acs: Vec<Comparison> = acs.to_vec();
    loop {
        let Some(y) = acs.iter().flat_map(Comparison::vars).find(|v| !keep.contains(*v)).cloned() else {
            return Some(acs);
        };
        let is_y = |t: &Term| t.as_var() == Some(&y);
        let mut next = Vec::new();
        let push = |a: Atomic, next: &mut Vec<Comparison>| match a {
            Atomic::Cmp(c) => {
                next.push(c);
                true
            }
            Atomic::Const(b) => b,
        };
        if let Some(eq) = acs.iter().find(|c| c.op() == Op::Eq && (is_y(c.lhs()) || is_y(c.rhs()))) {
            let other = if is_y(eq.lhs()) { eq.rhs().clone() } else { eq.lhs().clone() };
            for c in &acs {
                let a = c.substitute(|t| if is_y(t) { other.clone() } else { t.clone() });
                if !push(a, &mut next) {
                    return None;
                }
            }
        } else {
            let mut lower: Vec<(Term, bool)> = Vec::new();
            let mut upper: Vec<(Term, bool)> = Vec::new();
            for c in &acs {
                match (is_y(c.lhs()), is_y(c.rhs()), c.op()) {
                    (false, false, _) => next.push(c.clone()),
                    (_, _, Op::Ne) => {}
                    (true, _, op) => upper.push((c.rhs().clone(), op == Op::Lt)),
                    (_, true, op) => lower.push((c.lhs().clone(), op == Op::Lt)),
                }
            }
            for (l, s1) in &lower {
                for (u, s2) in &upper {
                    let op = if *s1 || *s2 { Op::Lt } else { Op::Le };
                    if !push(Comparison::fold(l.clone(), op, u.clone()), &mut next) {
                        return None;
                    }
                }
            }
        }
        next.sort();
        next.dedup();
        acs = next;
    }
}

/// Every expansion of the query predicate whose derivation tree has height
/// at most `depth`, with comparisons accumulated. Builtin atoms become
/// comparisons or are unfolded through their rules. Expansions keeping a
/// functional term in a stored atom or in the head, and inconsistent ones,
/// are dropped. Variables are renamed `X1, X2, ...`; the order is deterministic.
pub fn expansions_up_to_depth(p: &DatalogProgram, depth: usize) -> Vec<Query> {
    let mut u = Unfolder { p, depth, fresh: 0, seen: BTreeSet::new(), out: Vec::new() };
    for (ri, r) in p.rules.iter().enumerate() {
        if r.head.pred != p.query || depth == 0 {
            continue;
        }
        let (head, body, acs) = u.rename(&p.rules[ri]);
        let state = Partial { head: head.args, goals: body.into_iter().map(|a| (a, 1)).collect(), acs };
        u.search(state);
    }
    u.out
}

/// Whether the program derives the frozen head of `q` on its canonical
/// database: one fact per subgoal with a fresh constant per variable. The
/// fresh constants lie above every constant of `q` and of the program, so
/// the test is meant for programs without comparisons or builtins.
pub fn contains_cq(p: &DatalogProgram, q: &Query) -> Result<bool, DatalogError> {
    let mut consts = q.constants();
    consts.extend(p.constants());
    let start = consts.iter().max().map_or(Rat::from_integer(0), |m| m.floor()) + Rat::from_integer(1);
    let mut values: BTreeMap<Name, Rat> = BTreeMap::new();
    for v in q.head.vars().chain(q.body.iter().flat_map(Atom::vars)) {
        let k = values.len() as i64;
        values.entry(v.clone()).or_insert(start + Rat::from_integer(k));
    }
    let freeze = |t: &Term| match t {
        Term::Var(v) => values[v],
        Term::Const(c) => *c,
    };
    let mut db = Database::new();
    for a in &q.body {
        db.insert(a.pred.clone(), a.terms.iter().map(freeze).collect());
    }
    let head: Vec<Rat> = q.head.terms.iter().map(freeze).collect();
    Ok(evaluate_program(p, &db)?.contains(&head))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query_model::evaluate;

    fn prog(text: &str) -> DatalogProgram {
        DatalogProgram::parse(text).unwrap()
    }

    fn q(text: &str) -> Query {
        Query::parse(text).unwrap()
    }

    fn strings(qs: &[Query]) -> Vec<String> {
        qs.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn nonrecursive_program() {
        let p = prog("@query q.\nq(X) :- p(X,Y), e(Y).\np(X,Y) :- a(X,Y), X < 3.\np(X,X) :- b(X).");
        let e2 = expansions_up_to_depth(&p, 2);
        assert_eq!(strings(&e2), ["q(X1) :- a(X1,X2), e(X2), X1 < 3.", "q(X1) :- b(X1), e(X1)."]);
        assert_eq!(expansions_up_to_depth(&p, 5), e2);
        assert!(expansions_up_to_depth(&p, 1).is_empty());
    }

    #[test]
    fn program_with_empty_base_rule() {
        let p = prog(
            "@builtin u/2.\n@query r.\n\
             r() :- v1(X,W), t1(W,Z), v2(Z,Y).\n\
             t(W,W) :- .\n\
             t(W,Z) :- t(W,V), v3(V,Z).\n\
             t1(W,V) :- t(W,V).\n\
             t1(W,Z) :- t1(W,V), u(V,U), t1(U,Z).",
        );
        let e3 = strings(&expansions_up_to_depth(&p, 3));
        assert!(e3.contains(&"r() :- v1(X1,X2), v2(X2,X3).".to_string()), "{e3:?}");
        let e4 = strings(&expansions_up_to_depth(&p, 4));
        assert!(e4.contains(&"r() :- v1(X1,X2), v3(X2,X3), v2(X3,X4).".to_string()), "{e4:?}");
        for e in &e3 {
            assert!(e4.contains(e));
        }
        let e5 = strings(&expansions_up_to_depth(&p, 5));
        assert!(e5.iter().any(|s| s.contains("X2 <= X3")), "{e5:?}");
    }

    #[test]
    fn functional_terms_unify_or_drop() {
        let p = prog(
            "@query q.\n\
             e(X,f_v_z(X,Y)) :- v(X,Y).\n\
             e(f_v_z(X,Y),Y) :- v(X,Y).\n\
             q(X,Y) :- e(X,Z), e(Z,Y).",
        );
        assert_eq!(strings(&expansions_up_to_depth(&p, 2)), ["q(X1,X2) :- v(X1,X2)."]);
    }

    #[test]
    fn builtin_goals_become_comparisons_or_unfold() {
        let p = prog("@builtin u_ge_5/1.\n@query q.\nq(X) :- a(X,Y), i(Y).\ni(X) :- u_ge_5(X).\nu_ge_5(X) :- big(X).");
        let e = strings(&expansions_up_to_depth(&p, 3));
        assert_eq!(e, ["q(X1) :- a(X1,X2), X2 >= 5.", "q(X1) :- a(X1,X2), big(X2)."]);
    }

    #[test]
    fn comparison_only_variables_are_projected() {
        let acs = q("q() :- a(X,Z), b(Y), X <= Y, Y <= 8, Y < Z, Y != 3.").acs;
        let keep: BTreeSet<Name> = ["X".into(), "Z".into()].into();
        let out = project_out(&acs.iter().cloned().collect::<Vec<_>>(), &keep).unwrap();
        let s: Vec<String> = out.iter().map(ToString::to_string).collect();
        assert_eq!(s, ["X < Z", "X <= 8"]);
        let bad = vec![
            Comparison::new(Term::var("X"), Op::Le, Term::var("Y")),
            Comparison::new(Term::var("Y"), Op::Lt, Term::constant(2)),
            Comparison::new(Term::constant(2), Op::Le, Term::var("Y")),
        ];
        assert!(project_out(&bad, &["X".into()].into()).is_none());
    }

    #[test]
    fn expansions_are_sound() {
        let p = prog("@query q.\nq(X) :- p(X,Y), e(Y).\np(X,Y) :- a(X,Y), X < 3.\np(X,Z) :- p(X,Y), a(Y,Z).");
        let db = Database::parse("a(1,2). a(2,3). a(3,4). a(5,1). e(3). e(4). e(2).").unwrap();
        let all = evaluate_program(&p, &db).unwrap();
        for e in expansions_up_to_depth(&p, 4) {
            assert!(evaluate(&e, &db).is_subset(&all), "{e}");
        }
    }

    #[test]
    fn contains_copy_rule() {
        assert!(contains_cq(&prog("q() :- e(X)."), &q("q() :- e(A).")).unwrap());
        assert!(!contains_cq(&prog("q() :- e(X,X)."), &q("q() :- e(A,B).")).unwrap());
        assert!(contains_cq(&prog("q(X) :- e(X,3)."), &q("q(A) :- e(A,3), f(A).")).unwrap());
    }
}
