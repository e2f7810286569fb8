//! Semi-naive bottom-up evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::ac_core::{Name, Op, Rat, Term};
use crate::query_model::Database;

use super::{Builtin, DTerm, DatalogError, DatalogProgram, FactSet, Value};

/// Evaluation switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Materialize builtin predicates over the active domain. When off,
    /// builtin predicates hold only on the facts given or derived.
    pub computed_builtins: bool,
    /// Record the first derivation of every derived fact.
    pub trace: bool,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions { computed_builtins: true, trace: false }
    }
}

/// The rule instance that first derived a fact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: usize,
    pub body: Vec<(Name, Vec<Value>)>,
}

/// Least fixpoint of a program over a database.
#[derive(Clone, Debug, Default)]
pub struct Fixpoint {
    pub facts: FactSet,
    pub derivations: HashMap<(Name, Vec<Value>), Derivation>,
    pub rounds: usize,
}

impl Fixpoint {
    /// Rational tuples of `pred`; tuples holding functional terms are left out.
    pub fn answers(&self, pred: &str) -> BTreeSet<Vec<Rat>> {
        self.facts
            .relation(pred)
            .filter_map(|t| t.iter().map(|v| v.as_num().copied()).collect::<Option<Vec<Rat>>>())
            .collect()
    }
}

/// Answers of the query predicate: the least fixpoint restricted to tuples of rationals.
pub fn evaluate_program(p: &DatalogProgram, db: &Database) -> Result<BTreeSet<Vec<Rat>>, DatalogError> {
    Ok(fixpoint(p, db, EvalOptions::default())?.answers(&p.query))
}

#[derive(Clone, Debug)]
enum Pat {
    Var(usize),
    Const(Value),
    Func(Name, Vec<Pat>),
}

struct Compiled {
    head_pred: Name,
    head: Vec<Pat>,
    body: Vec<(Name, Vec<Pat>)>,
    acs: Vec<(Pat, Op, Pat)>,
    ac_vars: Vec<Vec<usize>>,
    nvars: usize,
}

fn compile_term(t: &DTerm, ids: &mut BTreeMap<Name, usize>) -> Pat {
    match t {
        DTerm::Var(v) => {
            let n = ids.len();
            Pat::Var(*ids.entry(v.clone()).or_insert(n))
        }
        DTerm::Const(c) => Pat::Const(Value::Num(*c)),
        DTerm::Func(f, args) => Pat::Func(f.clone(), args.iter().map(|a| compile_term(a, ids)).collect()),
    }
}

fn compile_plain(t: &Term, ids: &mut BTreeMap<Name, usize>) -> Pat {
    compile_term(&DTerm::from(t), ids)
}

fn compile(r: &super::DatalogRule) -> Compiled {
    let mut ids = BTreeMap::new();
    let body = r.body.iter().map(|a| (a.pred.clone(), a.args.iter().map(|t| compile_term(t, &mut ids)).collect())).collect();
    let head = r.head.args.iter().map(|t| compile_term(t, &mut ids)).collect();
    let mut acs = Vec::new();
    let mut ac_vars = Vec::new();
    for c in &r.acs {
        let (l, op, rt) = (c.lhs(), c.op(), c.rhs());
        let lp = compile_plain(l, &mut ids);
        let rp = compile_plain(rt, &mut ids);
        ac_vars.push(c.vars().map(|v| ids[v]).collect());
        acs.push((lp, op, rp));
    }
    Compiled { head_pred: r.head.pred.clone(), head, body, acs, ac_vars, nvars: ids.len() }
}

fn pat_vars(p: &Pat, out: &mut Vec<usize>) {
    match p {
        Pat::Var(i) => out.push(*i),
        Pat::Const(_) => {}
        Pat::Func(_, args) => args.iter().for_each(|a| pat_vars(a, out)),
    }
}

/// Join order starting from `first`, plus the comparisons checkable after each step.
fn plan(c: &Compiled, first: Option<usize>) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut bound = vec![false; c.nvars];
    let mut order = Vec::with_capacity(c.body.len());
    let mut remaining: Vec<usize> = (0..c.body.len()).collect();
    let vars_of = |i: usize| {
        let mut v = Vec::new();
        c.body[i].1.iter().for_each(|p| pat_vars(p, &mut v));
        v
    };
    if let Some(f) = first {
        remaining.retain(|&i| i != f);
        order.push(f);
        vars_of(f).into_iter().for_each(|v| bound[v] = true);
    }
    while !remaining.is_empty() {
        let pick = *remaining
            .iter()
            .max_by_key(|&&i| {
                let vs = vars_of(i);
                let b = vs.iter().filter(|&&v| bound[v]).count();
                (b * 2 >= vs.len() && b > 0, b, std::cmp::Reverse(i))
            })
            .expect("nonempty");
        remaining.retain(|&i| i != pick);
        order.push(pick);
        vars_of(pick).into_iter().for_each(|v| bound[v] = true);
    }
    let mut after = vec![Vec::new(); order.len() + 1];
    let mut seen = vec![false; c.nvars];
    let mut step_of = vec![0usize; c.nvars];
    for (k, &i) in order.iter().enumerate() {
        for v in vars_of(i) {
            if !seen[v] {
                seen[v] = true;
                step_of[v] = k + 1;
            }
        }
    }
    for (j, vs) in c.ac_vars.iter().enumerate() {
        let step = vs.iter().map(|&v| step_of[v]).max().unwrap_or(0);
        after[step].push(j);
    }
    (order, after)
}

#[derive(Default)]
struct Rel {
    tuples: Vec<Vec<Value>>,
    set: HashSet<Vec<Value>>,
    index: HashMap<(usize, Value), Vec<usize>>,
}

impl Rel {
    fn insert(&mut self, t: Vec<Value>) -> bool {
        if self.set.contains(&t) {
            return false;
        }
        let id = self.tuples.len();
        for (i, v) in t.iter().enumerate() {
            self.index.entry((i, v.clone())).or_default().push(id);
        }
        self.set.insert(t.clone());
        self.tuples.push(t);
        true
    }
}

type Rels = HashMap<Name, Rel>;

fn value_of(p: &Pat, env: &[Option<Value>]) -> Option<Value> {
    match p {
        Pat::Var(i) => env[*i].clone(),
        Pat::Const(v) => Some(v.clone()),
        Pat::Func(f, args) => Some(Value::Skolem(f.clone(), args.iter().map(|a| value_of(a, env)).collect::<Option<_>>()?)),
    }
}

fn unify(p: &Pat, v: &Value, env: &mut [Option<Value>], trail: &mut Vec<usize>) -> bool {
    match p {
        Pat::Var(i) => match &env[*i] {
            Some(b) => b == v,
            None => {
                env[*i] = Some(v.clone());
                trail.push(*i);
                true
            }
        },
        Pat::Const(c) => c == v,
        Pat::Func(f, args) => match v {
            Value::Skolem(g, vals) if g == f && vals.len() == args.len() => {
                args.iter().zip(vals).all(|(a, x)| unify(a, x, env, trail))
            }
            _ => false,
        },
    }
}

/// Comparisons on functional terms hold only reflexively.
pub(crate) fn compare(a: &Value, op: Op, b: &Value) -> bool {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => op.eval(x, y),
        _ => a == b && matches!(op, Op::Le | Op::Eq | Op::Ge),
    }
}

struct Join<'a> {
    rule: &'a Compiled,
    order: &'a [usize],
    after: &'a [Vec<usize>],
    full: &'a Rels,
    delta: Option<&'a Rels>,
    trace: bool,
}

impl Join<'_> {
    fn acs_hold(&self, k: usize, env: &[Option<Value>]) -> bool {
        self.after[k].iter().all(|&j| {
            let (l, op, r) = &self.rule.acs[j];
            match (value_of(l, env), value_of(r, env)) {
                (Some(a), Some(b)) => compare(&a, *op, &b),
                _ => false,
            }
        })
    }

    fn run(&self, k: usize, env: &mut Vec<Option<Value>>, used: &mut Vec<(Name, Vec<Value>)>, out: &mut Vec<(Vec<Value>, Vec<(Name, Vec<Value>)>)>) {
        if k == self.order.len() {
            if let Some(head) = self.rule.head.iter().map(|p| value_of(p, env)).collect::<Option<Vec<_>>>() {
                out.push((head, if self.trace { used.clone() } else { Vec::new() }));
            }
            return;
        }
        let (pred, pats) = &self.rule.body[self.order[k]];
        let source = match (k, self.delta) {
            (0, Some(d)) => d,
            _ => self.full,
        };
        let Some(rel) = source.get(pred) else { return };
        let key = pats.iter().enumerate().find_map(|(i, p)| value_of(p, env).map(|v| (i, v)));
        let candidates: Box<dyn Iterator<Item = &Vec<Value>>> = match key {
            Some(key) => match rel.index.get(&key) {
                Some(ids) => Box::new(ids.iter().map(|&id| &rel.tuples[id])),
                None => return,
            },
            None => Box::new(rel.tuples.iter()),
        };
        let mut trail = Vec::new();
        for tuple in candidates {
            let ok = pats.iter().zip(tuple).all(|(p, v)| unify(p, v, env, &mut trail));
            if ok && self.acs_hold(k + 1, env) {
                if self.trace {
                    used.push((pred.clone(), tuple.clone()));
                }
                self.run(k + 1, env, used, out);
                if self.trace {
                    used.pop();
                }
            }
            for i in trail.drain(..) {
                env[i] = None;
            }
        }
    }
}

fn materialize(b: Builtin, domain: &BTreeSet<Rat>, rel: &mut Rel) {
    match b {
        Builtin::Le => {
            for x in domain {
                for y in domain.range(x..) {
                    rel.insert(vec![Value::Num(*x), Value::Num(*y)]);
                }
            }
        }
        Builtin::Si(..) => {
            for x in domain.iter().filter(|x| b.holds(&[**x])) {
                rel.insert(vec![Value::Num(*x)]);
            }
        }
    }
}

/// Computes the least fixpoint by semi-naive iteration. Every rule instance
/// joins at least one fact that is new in the previous round. Comparisons are
/// checked as soon as their variables are bound.
pub fn fixpoint(p: &DatalogProgram, db: &Database, options: EvalOptions) -> Result<Fixpoint, DatalogError> {
    p.validate()?;
    let compiled: Vec<Compiled> = p.rules.iter().map(compile).collect();
    let mut full: Rels = HashMap::new();
    for (pred, rel) in db.relations() {
        let r = full.entry(pred.clone()).or_default();
        for t in rel {
            r.insert(t.iter().map(|c| Value::Num(*c)).collect());
        }
    }
    if options.computed_builtins {
        let mut domain = db.constants();
        domain.extend(p.constants());
        for (name, b) in &p.builtins {
            materialize(*b, &domain, full.entry(name.clone()).or_default());
        }
    }
    let mut result = Fixpoint::default();
    let plans: Vec<Vec<(usize, (Vec<usize>, Vec<Vec<usize>>))>> = compiled
        .iter()
        .map(|c| (0..c.body.len()).map(|d| (d, plan(c, Some(d)))).collect())
        .collect();
    let mut delta: Option<Rels> = None;
    loop {
        let mut fresh: Vec<(usize, Name, Vec<Value>, Vec<(Name, Vec<Value>)>)> = Vec::new();
        for (ri, c) in compiled.iter().enumerate() {
            let mut out = Vec::new();
            if c.body.is_empty() {
                if delta.is_none() {
                    let (order, after) = plan(c, None);
                    let j = Join { rule: c, order: &order, after: &after, full: &full, delta: None, trace: options.trace };
                    let mut env = vec![None; c.nvars];
                    if j.acs_hold(0, &env) {
                        j.run(0, &mut env, &mut Vec::new(), &mut out);
                    }
                }
            } else {
                let source = delta.as_ref().unwrap_or(&full);
                for (d, (order, after)) in &plans[ri] {
                    if source.get(&c.body[*d].0).is_none_or(|r| r.tuples.is_empty()) {
                        continue;
                    }
                    let j = Join { rule: c, order, after, full: &full, delta: Some(source), trace: options.trace };
                    let mut env = vec![None; c.nvars];
                    if j.acs_hold(0, &env) {
                        j.run(0, &mut env, &mut Vec::new(), &mut out);
                    }
                    if delta.is_none() {
                        break;
                    }
                }
            }
            fresh.extend(out.into_iter().map(|(t, used)| (ri, c.head_pred.clone(), t, used)));
        }
        result.rounds += 1;
        let mut next: Rels = HashMap::new();
        for (ri, pred, tuple, used) in fresh {
            if full.get(&pred).is_some_and(|r| r.set.contains(&tuple)) {
                continue;
            }
            if next.entry(pred.clone()).or_default().insert(tuple.clone()) && options.trace {
                result.derivations.insert((pred, tuple), Derivation { rule: ri, body: used });
            }
        }
        if next.values().all(|r| r.tuples.is_empty()) {
            break;
        }
        for (pred, rel) in &next {
            let r = full.entry(pred.clone()).or_default();
            for t in &rel.tuples {
                r.insert(t.clone());
            }
        }
        delta = Some(next);
    }
    for (pred, rel) in full {
        for t in rel.tuples {
            result.facts.insert(pred.clone(), t);
        }
    }
    Ok(result)
}
