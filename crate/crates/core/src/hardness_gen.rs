//! Quantified Boolean formulas `forall p exists q [psi]` and their reduction
//! to containment of Boolean queries with comparisons.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::ac_core::{int, Comparison, Op, Rat, Term};
use crate::query_model::{Atom, Query};

/// Truth value `e` as a rational.
pub const TRUE_VALUE: i64 = 1;
/// Truth value `f` as a rational.
pub const FALSE_VALUE: i64 = 0;

/// Largest `n + m` accepted by [`eval_pi2sat`].
pub const EVAL_LIMIT: usize = 20;

/// Errors of formula parsing and evaluation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("formula syntax: {0}")]
    Syntax(String),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("variable `{0}` declared twice")]
    Duplicate(String),
    #[error("{0} quantified variables exceed the evaluation limit")]
    TooLarge(usize),
}

/// A propositional formula tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prop {
    Var(String),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
}

impl Prop {
    fn eval(&self, env: &BTreeMap<&str, bool>) -> bool {
        match self {
            Prop::Var(v) => env[v.as_str()],
            Prop::Not(p) => !p.eval(env),
            Prop::And(a, b) => a.eval(env) && b.eval(env),
            Prop::Or(a, b) => a.eval(env) || b.eval(env),
        }
    }

    /// Number of internal nodes.
    pub fn size(&self) -> usize {
        match self {
            Prop::Var(_) => 0,
            Prop::Not(p) => 1 + p.size(),
            Prop::And(a, b) | Prop::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Prop::Var(v) => out.push(v),
            Prop::Not(p) => p.leaves(out),
            Prop::And(a, b) | Prop::Or(a, b) => {
                a.leaves(out);
                b.leaves(out);
            }
        }
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Var(v) => f.write_str(v),
            Prop::Not(p) => write!(f, "(not {p})"),
            Prop::And(a, b) => write!(f, "(and {a} {b})"),
            Prop::Or(a, b) => write!(f, "(or {a} {b})"),
        }
    }
}

/// `forall universal exists existential [body]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pi2Formula {
    pub universal: Vec<String>,
    pub existential: Vec<String>,
    pub body: Prop,
}

impl Pi2Formula {
    /// Checks that leaves are declared and names are unique.
    pub fn validate(&self) -> Result<(), FormulaError> {
        let mut seen = std::collections::BTreeSet::new();
        for v in self.universal.iter().chain(&self.existential) {
            if !seen.insert(v.as_str()) {
                return Err(FormulaError::Duplicate(v.clone()));
            }
        }
        let mut leaves = Vec::new();
        self.body.leaves(&mut leaves);
        match leaves.into_iter().find(|l| !seen.contains(l)) {
            Some(l) => Err(FormulaError::Undeclared(l.to_string())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Pi2Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(forall ({}) (exists ({}) {}))", self.universal.join(" "), self.existential.join(" "), self.body)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Sym(String),
    List(Vec<Sexp>),
}

fn parse_sexp(text: &str) -> Result<Sexp, FormulaError> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let mut tokens = spaced.split_whitespace().peekable();
    fn read<'a>(tokens: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>) -> Result<Sexp, FormulaError> {
        match tokens.next() {
            None => Err(FormulaError::Syntax("unexpected end of input".into())),
            Some(")") => Err(FormulaError::Syntax("unexpected `)`".into())),
            Some("(") => {
                let mut items = Vec::new();
                loop {
                    match tokens.peek() {
                        None => return Err(FormulaError::Syntax("missing `)`".into())),
                        Some(&")") => {
                            tokens.next();
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(read(tokens)?),
                    }
                }
            }
            Some(s) => Ok(Sexp::Sym(s.to_string())),
        }
    }
    let out = read(&mut tokens)?;
    match tokens.next() {
        Some(t) => Err(FormulaError::Syntax(format!("trailing input at `{t}`"))),
        None => Ok(out),
    }
}

fn symbols(s: &Sexp) -> Result<Vec<String>, FormulaError> {
    match s {
        Sexp::List(items) => items
            .iter()
            .map(|i| match i {
                Sexp::Sym(v) => Ok(v.clone()),
                Sexp::List(_) => Err(FormulaError::Syntax("expected a variable list".into())),
            })
            .collect(),
        Sexp::Sym(v) => Ok(vec![v.clone()]),
    }
}

fn to_prop(s: &Sexp) -> Result<Prop, FormulaError> {
    match s {
        Sexp::Sym(v) if !matches!(v.as_str(), "and" | "or" | "not" | "forall" | "exists") => Ok(Prop::Var(v.clone())),
        Sexp::Sym(v) => Err(FormulaError::Syntax(format!("keyword `{v}` used as a variable"))),
        Sexp::List(items) => {
            let head = match items.first() {
                Some(Sexp::Sym(h)) => h.as_str(),
                _ => return Err(FormulaError::Syntax("expected an operator".into())),
            };
            let args: Vec<Prop> = items[1..].iter().map(to_prop).collect::<Result<_, _>>()?;
            match (head, args.len()) {
                ("not", 1) => Ok(Prop::Not(Box::new(args.into_iter().next().expect("one")))),
                ("and" | "or", n) if n >= 2 => {
                    let mut it = args.into_iter();
                    let first = it.next().expect("two");
                    Ok(it.fold(first, |acc, p| {
                        if head == "and" {
                            Prop::And(Box::new(acc), Box::new(p))
                        } else {
                            Prop::Or(Box::new(acc), Box::new(p))
                        }
                    }))
                }
                _ => Err(FormulaError::Syntax(format!("bad use of `{head}`"))),
            }
        }
    }
}

fn quantifier<'a>(s: &'a Sexp, word: &str) -> Option<(&'a Sexp, &'a Sexp)> {
    match s {
        Sexp::List(items) if items.len() == 3 && items[0] == Sexp::Sym(word.to_string()) => Some((&items[1], &items[2])),
        _ => None,
    }
}

impl FromStr for Pi2Formula {
    type Err = FormulaError;

    /// Parses `(forall (p..) (exists (q..) psi))`; either quantifier may be omitted.
    fn from_str(text: &str) -> Result<Pi2Formula, FormulaError> {
        let s = parse_sexp(text)?;
        let (universal, rest) = match quantifier(&s, "forall") {
            Some((vars, rest)) => (symbols(vars)?, rest),
            None => (Vec::new(), &s),
        };
        let (existential, body) = match quantifier(rest, "exists") {
            Some((vars, body)) => (symbols(vars)?, body),
            None => (Vec::new(), rest),
        };
        let f = Pi2Formula { universal, existential, body: to_prop(body)? };
        f.validate()?;
        Ok(f)
    }
}

/// Whether every assignment of the universal variables extends to one making the body true.
pub fn eval_pi2sat(f: &Pi2Formula) -> Result<bool, FormulaError> {
    f.validate()?;
    let (n, m) = (f.universal.len(), f.existential.len());
    if n + m > EVAL_LIMIT {
        return Err(FormulaError::TooLarge(n + m));
    }
    let mut env: BTreeMap<&str, bool> = BTreeMap::new();
    for p in 0u32..(1 << n) {
        for (i, v) in f.universal.iter().enumerate() {
            env.insert(v, p >> i & 1 == 1);
        }
        let witnessed = (0u32..(1 << m)).any(|q| {
            for (j, v) in f.existential.iter().enumerate() {
                env.insert(v, q >> j & 1 == 1);
            }
            f.body.eval(&env)
        });
        if !witnessed {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-variable gadgets of the reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GadgetVariant {
    /// Open semi-intervals in both queries, a disequality in the contained one.
    OsiNeq,
    /// Open left semi-intervals and a constant in the containing query.
    OlsiConst,
    /// Open left semi-intervals against closed ones with a disequality.
    OlsiClsiNeq,
    /// Disequalities only.
    NeqOnly,
}

impl GadgetVariant {
    pub const ALL: [GadgetVariant; 4] =
        [GadgetVariant::OsiNeq, GadgetVariant::OlsiConst, GadgetVariant::OlsiClsiNeq, GadgetVariant::NeqOnly];

    pub fn name(self) -> &'static str {
        match self {
            GadgetVariant::OsiNeq => "osi-neq",
            GadgetVariant::OlsiConst => "olsi-const",
            GadgetVariant::OlsiClsiNeq => "olsi-clsi-neq",
            GadgetVariant::NeqOnly => "neq-only",
        }
    }
}

impl fmt::Display for GadgetVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GadgetVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        GadgetVariant::ALL.into_iter().find(|v| v.name() == norm).ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

fn v(name: String) -> Term {
    Term::var(&name)
}

fn c(value: i64) -> Term {
    Term::Const(int(value))
}

fn cmp(l: Term, op: Op, r: Term) -> Comparison {
    Comparison::new(l, op, r)
}

/// Builds `(q1, q2)` with `q2 ⊑ q1` iff the formula is true.
pub fn reduce_pi2sat(f: &Pi2Formula, variant: GadgetVariant) -> (Query, Query) {
    let (e, fv) = (c(TRUE_VALUE), c(FALSE_VALUE));
    let mut body2 = Vec::new();
    let mut acs2 = Vec::new();
    for (pred, rows) in [
        ("a", vec![[e.clone(), e.clone(), e.clone()], [e.clone(), fv.clone(), fv.clone()], [fv.clone(), e.clone(), fv.clone()], [fv.clone(), fv.clone(), fv.clone()]]),
        ("o", vec![[e.clone(), e.clone(), e.clone()], [e.clone(), fv.clone(), e.clone()], [fv.clone(), e.clone(), e.clone()], [fv.clone(), fv.clone(), fv.clone()]]),
    ] {
        for row in rows {
            body2.push(Atom::new(pred, row.to_vec()));
        }
    }
    body2.push(Atom::new("n", vec![e.clone(), fv.clone()]));
    body2.push(Atom::new("n", vec![fv.clone(), e.clone()]));
    body2.push(Atom::new("t", vec![e.clone()]));

    let mut body1 = Vec::new();
    let mut acs1 = Vec::new();
    let mut leaf: BTreeMap<&str, Term> = BTreeMap::new();
    for (i, p) in f.universal.iter().enumerate() {
        let i = i + 1;
        let g = format!("a{i}");
        let t = v(format!("T{i}"));
        leaf.insert(p, t.clone());
        match variant {
            GadgetVariant::OsiNeq => {
                let (u, vv, w) = (v(format!("U{i}")), v(format!("V{i}")), v(format!("W{i}")));
                body2.push(Atom::new(&g, vec![u.clone(), e.clone()]));
                body2.push(Atom::new(&g, vec![vv.clone(), fv.clone()]));
                body2.push(Atom::new(&g, vec![w.clone(), e.clone()]));
                body2.push(Atom::new(&g, vec![w.clone(), fv.clone()]));
                acs2.push(cmp(u, Op::Lt, c(7)));
                acs2.push(cmp(c(7), Op::Lt, vv));
                acs2.push(cmp(w, Op::Ne, c(7)));
                let (l, r) = (v(format!("L{i}")), v(format!("R{i}")));
                body1.push(Atom::new(&g, vec![l.clone(), t.clone()]));
                body1.push(Atom::new(&g, vec![r.clone(), t]));
                acs1.push(cmp(l, Op::Lt, c(7)));
                acs1.push(cmp(c(7), Op::Lt, r));
            }
            GadgetVariant::OlsiConst => {
                let (x, y) = (v(format!("X{i}")), v(format!("Y{i}")));
                body2.push(Atom::new(&g, vec![x.clone(), c(5), e.clone()]));
                body2.push(Atom::new(&g, vec![y.clone(), x.clone(), fv.clone()]));
                acs2.push(cmp(x, Op::Le, c(5)));
                acs2.push(cmp(y, Op::Lt, c(5)));
                let s = v(format!("S{i}"));
                body1.push(Atom::new(&g, vec![s.clone(), c(5), t]));
                acs1.push(cmp(s, Op::Lt, c(5)));
            }
            GadgetVariant::OlsiClsiNeq => {
                let (x, y) = (v(format!("X{i}")), v(format!("Y{i}")));
                body2.push(Atom::new(&g, vec![x.clone(), e.clone()]));
                body2.push(Atom::new(&g, vec![y.clone(), fv.clone()]));
                acs2.push(cmp(x.clone(), Op::Le, c(5)));
                acs2.push(cmp(y.clone(), Op::Le, c(5)));
                acs2.push(cmp(x, Op::Ne, y));
                let s = v(format!("S{i}"));
                body1.push(Atom::new(&g, vec![s.clone(), t]));
                acs1.push(cmp(s, Op::Lt, c(5)));
            }
            GadgetVariant::NeqOnly => {
                let (x, y, z) = (v(format!("X{i}")), v(format!("Y{i}")), v(format!("Z{i}")));
                body2.push(Atom::new(&g, vec![x.clone(), y.clone(), e.clone()]));
                body2.push(Atom::new(&g, vec![y, z.clone(), fv.clone()]));
                acs2.push(cmp(x, Op::Ne, z));
                let (s, r) = (v(format!("S{i}")), v(format!("R{i}")));
                body1.push(Atom::new(&g, vec![s.clone(), r.clone(), t]));
                acs1.push(cmp(s, Op::Ne, r));
            }
        }
    }
    for (j, q) in f.existential.iter().enumerate() {
        leaf.insert(q, v(format!("Q{}", j + 1)));
    }
    let mut fresh = 0;
    let root = encode(&f.body, &leaf, &mut body1, &mut fresh);
    body1.push(Atom::new("t", vec![root]));
    let head = Atom::new("q", vec![]);
    (Query::new(head.clone(), body1, acs1), Query::new(head, body2, acs2))
}

fn encode(p: &Prop, leaf: &BTreeMap<&str, Term>, body: &mut Vec<Atom>, fresh: &mut usize) -> Term {
    match p {
        Prop::Var(x) => leaf[x.as_str()].clone(),
        Prop::Not(a) => {
            let a = encode(a, leaf, body, fresh);
            *fresh += 1;
            let t = v(format!("N{fresh}"));
            body.push(Atom::new("n", vec![a, t.clone()]));
            t
        }
        Prop::And(a, b) | Prop::Or(a, b) => {
            let pred = if matches!(p, Prop::And(..)) { "a" } else { "o" };
            let a = encode(a, leaf, body, fresh);
            let b = encode(b, leaf, body, fresh);
            *fresh += 1;
            let t = v(format!("N{fresh}"));
            body.push(Atom::new(pred, vec![a, b, t.clone()]));
            t
        }
    }
}

/// A random formula with `n` universal and `m` existential variables and at
/// most `max_size` internal nodes; every variable occurs at least once when
/// the size allows. With `n = m = 0` one existential variable is used.
pub fn random_formula<R: Rng>(rng: &mut R, n: usize, m: usize, max_size: usize) -> Pi2Formula {
    let m = if n + m == 0 { 1 } else { m };
    let universal: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    let existential: Vec<String> = (1..=m).map(|j| format!("q{j}")).collect();
    let all: Vec<String> = universal.iter().chain(&existential).cloned().collect();
    let mut leaves: Vec<String> = all.clone();
    leaves.shuffle(rng);
    let mut nodes = 0;
    let mut parts: Vec<Prop> = leaves.into_iter().map(Prop::Var).collect();
    while parts.len() > 1 && nodes < max_size {
        let a = parts.remove(rng.gen_range(0..parts.len()));
        let b = parts.remove(rng.gen_range(0..parts.len()));
        let a = if nodes + 2 <= max_size && rng.gen_bool(0.25) {
            nodes += 1;
            Prop::Not(Box::new(a))
        } else {
            a
        };
        nodes += 1;
        parts.push(if rng.gen_bool(0.5) { Prop::And(Box::new(a), Box::new(b)) } else { Prop::Or(Box::new(a), Box::new(b)) });
    }
    let mut body = parts.swap_remove(0);
    if nodes < max_size && rng.gen_bool(0.2) {
        body = Prop::Not(Box::new(body));
    }
    Pi2Formula { universal, existential, body }
}

/// Values of the truth constants.
pub fn truth_values() -> (Rat, Rat) {
    (int(TRUE_VALUE), int(FALSE_VALUE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ac_core::SiLabel;

    fn formula(text: &str) -> Pi2Formula {
        text.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        let f = formula("(forall (p1 p2) (exists (q1) (or p1 q1)))");
        assert_eq!(f.universal, vec!["p1", "p2"]);
        assert_eq!(f.to_string(), "(forall (p1 p2) (exists (q1) (or p1 q1)))");
        assert_eq!(formula(&f.to_string()), f);
        let g = formula("(exists (q) q)");
        assert!(g.universal.is_empty());
        assert!(matches!("(forall (p) (and p r))".parse::<Pi2Formula>(), Err(FormulaError::Undeclared(_))));
        assert!(matches!("(forall (p) (and p".parse::<Pi2Formula>(), Err(FormulaError::Syntax(_))));
    }

    #[test]
    fn evaluation() {
        assert!(eval_pi2sat(&formula("(forall (p) (exists (q) (or p q)))")).unwrap());
        assert!(!eval_pi2sat(&formula("(forall (p) (exists (q) (and p q)))")).unwrap());
        assert!(eval_pi2sat(&formula("(forall (x) (or x (not x)))")).unwrap());
        assert!(eval_pi2sat(&formula("(forall (p) (exists (q) (and (or p q) (or (not p) (not q)))))")).unwrap());
    }

    #[test]
    fn structure_of_reduction() {
        let (q1, q2) = reduce_pi2sat(&formula("(forall (p) (exists (q) (or p q)))"), GadgetVariant::OsiNeq);
        assert_eq!(q1.body.iter().filter(|a| &*a.pred == "o").count(), 1);
        assert_eq!(q1.body.iter().filter(|a| &*a.pred == "a1").count(), 2);
        assert_eq!(q1.body.last().unwrap().pred.as_ref(), "t");
        assert_eq!(q2.body.iter().filter(|a| &*a.pred == "a1").count(), 4);
        assert_eq!(q2.body.len(), 11 + 4);
        assert_eq!(q2.acs.len(), 3);
        let (q1, _) = reduce_pi2sat(&formula("(exists (q) q)"), GadgetVariant::OsiNeq);
        assert_eq!(q1.to_string(), "q() :- t(Q1).");
    }

    #[test]
    fn variant_inventories() {
        let f = formula("(forall (p) (exists (q) (and p q)))");
        let labels = |q: &Query| -> Vec<Option<SiLabel>> { q.acs.iter().map(|c| c.ac_type().si_label()).collect() };
        let (q1, q2) = reduce_pi2sat(&f, GadgetVariant::OlsiConst);
        assert_eq!(labels(&q1), vec![Some(SiLabel::Olsi)]);
        assert!(q1.body.iter().any(|a| a.to_string() == "a1(S1,5,T1)"));
        assert!(q2.body.iter().any(|a| a.to_string() == "a1(Y1,X1,0)"));
        assert!(labels(&q2).contains(&Some(SiLabel::Clsi)));
        let (q1, q2) = reduce_pi2sat(&f, GadgetVariant::OlsiClsiNeq);
        assert_eq!(labels(&q1), vec![Some(SiLabel::Olsi)]);
        assert!(q2.acs.iter().any(|c| c.op() == Op::Ne));
        let (q1, q2) = reduce_pi2sat(&f, GadgetVariant::NeqOnly);
        assert!(q1.acs.iter().chain(q2.acs.iter()).all(|c| c.op() == Op::Ne));
        let (q1, q2) = reduce_pi2sat(&f, GadgetVariant::OsiNeq);
        assert!(q1.acs.iter().all(|c| c.ac_type().si_label().is_some_and(SiLabel::is_open)));
        assert!(q2.acs.iter().all(|c| c.op() == Op::Ne || c.ac_type().si_label().is_some_and(SiLabel::is_open)));
    }

    #[test]
    fn reduction_matches_evaluation() {
        use crate::containment::{canonical_oracle_check_with, OracleOptions};
        let cases = [
            "(forall (p) (exists (q) (or p q)))",
            "(forall (p) (exists (q) (and p q)))",
            "(forall (p) (not p))",
            "(exists (q) q)",
            "(forall (p1 p2) (exists (q) (and (or p1 q) (or p2 (not q)))))",
            "(forall (p1 p2) (or p1 p2))",
        ];
        for text in cases {
            let f = formula(text);
            let truth = eval_pi2sat(&f).unwrap();
            for variant in GadgetVariant::ALL {
                let (q1, q2) = reduce_pi2sat(&f, variant);
                let r = canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(16)).unwrap();
                assert_eq!(r.holds, truth, "{variant} {text}");
            }
        }
    }

    #[test]
    fn random_formulas_are_valid() {
        let mut r = crate::corpus::rng(5);
        for _ in 0..50 {
            let n = r.gen_range(0..=2);
            let m = r.gen_range(0..=2);
            let f = random_formula(&mut r, n, m, 6);
            f.validate().unwrap();
            assert!(f.body.size() <= 6);
            assert_eq!(formula(&f.to_string()), f);
        }
    }
}
