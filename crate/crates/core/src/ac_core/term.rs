//! Terms, comparison operators and single arithmetic comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num::rational::Ratio;
use num::One;

/// Exact rational constant.
pub type Rat = Ratio<i64>;

/// Interned variable or predicate name.
pub type Name = Arc<str>;

/// Builds a rational from an integer.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(n)
}

/// Parses `12`, `-3`, `2.75` or `7/3` into an exact rational.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().ok()?;
        let q: i64 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return None;
        }
        let negative = whole.starts_with('-');
        let w: i64 = if whole == "-" || whole.is_empty() { 0 } else { whole.parse().ok()? };
        let f: i64 = frac.parse().ok()?;
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let magnitude = w.abs().checked_mul(den)?.checked_add(f)?;
        let num = if negative { -magnitude } else { magnitude };
        return Some(Rat::new(num, den));
    }
    text.parse::<i64>().ok().map(int)
}

/// Renders a rational as `n` or `p/q`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Midpoint of two rationals.
pub fn midpoint(a: &Rat, b: &Rat) -> Rat {
    (a + b) / int(2)
}

/// A variable or an exact rational constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Const(Rat),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    pub fn constant(value: i64) -> Term {
        Term::Const(int(value))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Rat> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{}", fmt_rat(c)),
        }
    }
}

/// Comparison operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Lt, Op::Le, Op::Eq, Op::Ne, Op::Ge, Op::Gt];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Ge => ">=",
            Op::Gt => ">",
        }
    }

    pub fn parse(text: &str) -> Option<Op> {
        Some(match text {
            "<" => Op::Lt,
            "<=" | "=<" => Op::Le,
            "=" | "==" => Op::Eq,
            "!=" | "<>" => Op::Ne,
            ">=" | "=>" => Op::Ge,
            ">" => Op::Gt,
            _ => return None,
        })
    }

    /// Operator with sides exchanged: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> Op {
        match self {
            Op::Lt => Op::Gt,
            Op::Le => Op::Ge,
            Op::Ge => Op::Le,
            Op::Gt => Op::Lt,
            other => other,
        }
    }

    /// Complement: `!(a op b)` iff `a op.negate() b`.
    pub fn negate(self) -> Op {
        match self {
            Op::Lt => Op::Ge,
            Op::Le => Op::Gt,
            Op::Eq => Op::Ne,
            Op::Ne => Op::Eq,
            Op::Ge => Op::Lt,
            Op::Gt => Op::Le,
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Op::Lt | Op::Gt)
    }

    /// Decides `a op b` on concrete rationals.
    pub fn eval(self, a: &Rat, b: &Rat) -> bool {
        self.holds(a.cmp(b))
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Op::Lt => ord == Ordering::Less,
            Op::Le => ord != Ordering::Greater,
            Op::Eq => ord == Ordering::Equal,
            Op::Ne => ord != Ordering::Equal,
            Op::Ge => ord != Ordering::Less,
            Op::Gt => ord == Ordering::Greater,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Result of building a comparison: either a stored comparison or a folded truth value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atomic {
    Cmp(Comparison),
    Const(bool),
}

/// An arithmetic comparison with at least one variable side.
///
/// Stored canonically with operator in `{<, <=, =, !=}`; `=`/`!=` order their
/// sides. The written orientation is kept for display only and does not take
/// part in equality, ordering or hashing.
#[derive(Clone, Debug)]
pub struct Comparison {
    lhs: Term,
    op: Op,
    rhs: Term,
    swapped: bool,
}

impl PartialEq for Comparison {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op && self.lhs == other.lhs && self.rhs == other.rhs
    }
}

impl Eq for Comparison {}

impl Hash for Comparison {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lhs.hash(state);
        self.op.hash(state);
        self.rhs.hash(state);
    }
}

impl PartialOrd for Comparison {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Comparison {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.lhs, self.op, &self.rhs).cmp(&(&other.lhs, other.op, &other.rhs))
    }
}

impl Comparison {
    /// Builds `lhs op rhs`, folding comparisons without variables or with identical sides.
    pub fn fold(lhs: Term, op: Op, rhs: Term) -> Atomic {
        if let (Term::Const(a), Term::Const(b)) = (&lhs, &rhs) {
            return Atomic::Const(op.eval(a, b));
        }
        if lhs == rhs {
            return Atomic::Const(matches!(op, Op::Le | Op::Eq | Op::Ge));
        }
        let (lhs, op, rhs, swapped) = match op {
            Op::Ge | Op::Gt => (rhs, op.flip(), lhs, true),
            Op::Eq | Op::Ne if rhs < lhs => (rhs, op, lhs, true),
            _ => (lhs, op, rhs, false),
        };
        Atomic::Cmp(Comparison { lhs, op, rhs, swapped })
    }

    /// Builds `lhs op rhs`; panics when the comparison folds to a constant.
    pub fn new(lhs: Term, op: Op, rhs: Term) -> Comparison {
        match Comparison::fold(lhs, op, rhs) {
            Atomic::Cmp(c) => c,
            Atomic::Const(_) => panic!("comparison has no variable side"),
        }
    }

    /// The reflexive comparison `X <= X`, which otherwise folds to true.
    pub fn reflexive(v: Name) -> Comparison {
        Comparison { lhs: Term::Var(v.clone()), op: Op::Le, rhs: Term::Var(v), swapped: false }
    }

    /// Canonical left side.
    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    /// Canonical operator, one of `<`, `<=`, `=`, `!=`.
    pub fn op(&self) -> Op {
        self.op
    }

    /// Canonical right side.
    pub fn rhs(&self) -> &Term {
        &self.rhs
    }

    /// The comparison in the orientation it was written.
    pub fn written(&self) -> (&Term, Op, &Term) {
        if self.swapped {
            (&self.rhs, self.op.flip(), &self.lhs)
        } else {
            (&self.lhs, self.op, &self.rhs)
        }
    }

    /// Complementary comparison.
    pub fn negate(&self) -> Comparison {
        let (l, op, r) = self.written();
        Comparison::new(l.clone(), op.negate(), r.clone())
    }

    pub fn terms(&self) -> [&Term; 2] {
        [&self.lhs, &self.rhs]
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.terms().into_iter().filter_map(Term::as_var)
    }

    pub fn constants(&self) -> impl Iterator<Item = &Rat> {
        self.terms().into_iter().filter_map(Term::as_const)
    }

    /// Applies a term substitution, folding the result.
    pub fn substitute(&self, f: impl Fn(&Term) -> Term) -> Atomic {
        let (l, op, r) = self.written();
        Comparison::fold(f(l), op, f(r))
    }

    /// Evaluates the comparison under a valuation of its variables.
    pub fn eval(&self, value: impl Fn(&Name) -> Option<Rat>) -> Option<bool> {
        let get = |t: &Term| match t {
            Term::Var(v) => value(v),
            Term::Const(c) => Some(*c),
        };
        Some(self.op.eval(&get(&self.lhs)?, &get(&self.rhs)?))
    }

    pub fn ac_type(&self) -> ACType {
        classify_ac(self)
    }

    /// The constant of a semi-interval comparison.
    pub fn si_constant(&self) -> Option<Rat> {
        match (&self.lhs, &self.rhs) {
            (Term::Var(_), Term::Const(c)) | (Term::Const(c), Term::Var(_)) if self.op != Op::Ne => {
                Some(*c)
            }
            _ => None,
        }
    }

    /// For a semi-interval `X op c` returns `(X, op, c)` with `op` in `{<, <=, =, >=, >}`.
    pub fn as_si(&self) -> Option<(&Name, Op, Rat)> {
        match (&self.lhs, &self.rhs) {
            (Term::Var(v), Term::Const(c)) if self.op != Op::Ne => Some((v, self.op, *c)),
            (Term::Const(c), Term::Var(v)) => Some((v, self.op.flip(), *c)),
            _ => None,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, op, r) = self.written();
        write!(f, "{l} {op} {r}")
    }
}

/// The ten comparison types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ACType {
    VarLeVar,
    VarLtVar,
    VarLeConst,
    VarLtConst,
    ConstLeVar,
    ConstLtVar,
    VarEqVar,
    VarEqConst,
    VarNeVar,
    VarNeConst,
}

/// Semi-interval labels: closed/open, left/right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiLabel {
    /// `X <= c`
    Clsi,
    /// `X < c`
    Olsi,
    /// `X >= c`
    Crsi,
    /// `X > c`
    Orsi,
}

impl SiLabel {
    pub fn is_open(self) -> bool {
        matches!(self, SiLabel::Olsi | SiLabel::Orsi)
    }

    pub fn is_left(self) -> bool {
        matches!(self, SiLabel::Clsi | SiLabel::Olsi)
    }

    /// The operator of `X op c`.
    pub fn op(self) -> Op {
        match self {
            SiLabel::Clsi => Op::Le,
            SiLabel::Olsi => Op::Lt,
            SiLabel::Crsi => Op::Ge,
            SiLabel::Orsi => Op::Gt,
        }
    }

    pub fn from_op(op: Op) -> Option<SiLabel> {
        Some(match op {
            Op::Le => SiLabel::Clsi,
            Op::Lt => SiLabel::Olsi,
            Op::Ge => SiLabel::Crsi,
            Op::Gt => SiLabel::Orsi,
            _ => return None,
        })
    }
}

impl ACType {
    pub fn si_label(self) -> Option<SiLabel> {
        match self {
            ACType::VarLeConst => Some(SiLabel::Clsi),
            ACType::VarLtConst => Some(SiLabel::Olsi),
            ACType::ConstLeVar => Some(SiLabel::Crsi),
            ACType::ConstLtVar => Some(SiLabel::Orsi),
            _ => None,
        }
    }

    pub fn is_equation(self) -> bool {
        matches!(self, ACType::VarEqVar | ACType::VarEqConst)
    }
}

/// Returns the unique type of a stored comparison.
pub fn classify_ac(c: &Comparison) -> ACType {
    let lv = c.lhs.is_var();
    let rv = c.rhs.is_var();
    match (c.op, lv, rv) {
        (Op::Le, true, true) => ACType::VarLeVar,
        (Op::Lt, true, true) => ACType::VarLtVar,
        (Op::Le, true, false) => ACType::VarLeConst,
        (Op::Lt, true, false) => ACType::VarLtConst,
        (Op::Le, false, true) => ACType::ConstLeVar,
        (Op::Lt, false, true) => ACType::ConstLtVar,
        (Op::Eq, true, true) => ACType::VarEqVar,
        (Op::Eq, _, _) => ACType::VarEqConst,
        (Op::Ne, true, true) => ACType::VarNeVar,
        (Op::Ne, _, _) => ACType::VarNeConst,
        _ => unreachable!("stored comparisons use canonical operators"),
    }
}



#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rat("7/3"), Some(Rat::new(7, 3)));
        assert_eq!(parse_rat("2.75"), Some(Rat::new(11, 4)));
        assert_eq!(parse_rat("-0.5"), Some(Rat::new(-1, 2)));
        assert_eq!(parse_rat("-3"), Some(int(-3)));
        assert_eq!(parse_rat("4/8"), parse_rat("0.5"));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(fmt_rat(&Rat::new(6, 4)), "3/2");
    }

    #[test]
    fn canonical_orientation() {
        let ge = Comparison::new(v("X"), Op::Ge, Term::constant(5));
        assert_eq!(ge.op(), Op::Le);
        assert_eq!(ge.lhs(), &Term::constant(5));
        assert_eq!(ge.to_string(), "X >= 5");
        assert_eq!(ge, Comparison::new(Term::constant(5), Op::Le, v("X")));
        let ne = Comparison::new(v("Y"), Op::Ne, v("X"));
        assert_eq!(ne, Comparison::new(v("X"), Op::Ne, v("Y")));
        assert_eq!(ne.to_string(), "Y != X");
    }

    #[test]
    fn folding() {
        assert_eq!(Comparison::fold(Term::constant(3), Op::Lt, Term::constant(5)), Atomic::Const(true));
        assert_eq!(Comparison::fold(Term::constant(5), Op::Lt, Term::constant(5)), Atomic::Const(false));
        assert_eq!(Comparison::fold(v("X"), Op::Lt, v("X")), Atomic::Const(false));
        assert_eq!(Comparison::fold(v("X"), Op::Ge, v("X")), Atomic::Const(true));
    }

    #[test]
    fn negation_table() {
        let cases = [
            (Op::Le, Op::Gt),
            (Op::Lt, Op::Ge),
            (Op::Eq, Op::Ne),
            (Op::Ne, Op::Eq),
            (Op::Ge, Op::Lt),
            (Op::Gt, Op::Le),
        ];
        for (op, neg) in cases {
            let c = Comparison::new(v("X"), op, Term::constant(5));
            assert_eq!(c.negate(), Comparison::new(v("X"), neg, Term::constant(5)));
        }
    }

    #[test]
    fn classification() {
        let x5 = Comparison::new(v("X"), Op::Le, Term::constant(5));
        assert_eq!(classify_ac(&x5), ACType::VarLeConst);
        assert_eq!(classify_ac(&x5).si_label(), Some(SiLabel::Clsi));
        let orsi = Comparison::new(Term::constant(5), Op::Lt, v("X"));
        assert_eq!(classify_ac(&orsi), ACType::ConstLtVar);
        assert_eq!(classify_ac(&orsi).si_label(), Some(SiLabel::Orsi));
        let ne = Comparison::new(v("X"), Op::Ne, v("Y"));
        assert_eq!(classify_ac(&ne), ACType::VarNeVar);
        let eqc = Comparison::new(Term::constant(5), Op::Eq, v("X"));
        assert_eq!(classify_ac(&eqc), ACType::VarEqConst);
        assert_eq!(classify_ac(&Comparison::new(v("X"), Op::Gt, v("Y"))), ACType::VarLtVar);
    }

    #[test]
    fn si_view() {
        let c = Comparison::new(v("X"), Op::Ge, Term::constant(6));
        assert_eq!(c.as_si(), Some((&Arc::from("X"), Op::Ge, int(6))));
        assert_eq!(c.si_constant(), Some(int(6)));
        assert!(Comparison::new(v("X"), Op::Ne, Term::constant(6)).as_si().is_none());
    }
}
