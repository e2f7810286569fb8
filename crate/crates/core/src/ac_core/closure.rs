//! Comparison sets, their closure under the elemental implications, and
//! implication of single comparisons and disjunctions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::term::{int, Atomic, Comparison, Name, Op, Rat, Term};

/// Errors raised by implication queries.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AcError {
    #[error("left-hand side is inconsistent")]
    Inconsistent,
    #[error("implication does not hold")]
    NotImplied,
}

/// A finite set of comparisons with its declared variables and relevant constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ACSet {
    comparisons: BTreeSet<Comparison>,
    universe: BTreeSet<Name>,
    constants: BTreeSet<Rat>,
    false_fold: bool,
}

impl ACSet {
    pub fn new() -> ACSet {
        ACSet::default()
    }

    pub fn insert(&mut self, c: Comparison) {
        self.universe.extend(c.vars().cloned());
        self.constants.extend(c.constants().copied());
        self.comparisons.insert(c);
    }

    /// Inserts a possibly folded comparison; a false fold makes the set inconsistent.
    pub fn insert_atomic(&mut self, a: Atomic) {
        match a {
            Atomic::Cmp(c) => self.insert(c),
            Atomic::Const(true) => {}
            Atomic::Const(false) => self.false_fold = true,
        }
    }

    pub fn add_var(&mut self, v: Name) {
        self.universe.insert(v);
    }

    pub fn add_constant(&mut self, c: Rat) {
        self.constants.insert(c);
    }

    pub fn add_constants(&mut self, cs: impl IntoIterator<Item = Rat>) {
        self.constants.extend(cs);
    }

    pub fn comparisons(&self) -> &BTreeSet<Comparison> {
        &self.comparisons
    }

    pub fn iter(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter()
    }

    pub fn universe(&self) -> &BTreeSet<Name> {
        &self.universe
    }

    pub fn relevant_constants(&self) -> &BTreeSet<Rat> {
        &self.constants
    }

    /// True when a comparison between constants folded to false.
    pub fn has_false_fold(&self) -> bool {
        self.false_fold
    }

    pub fn len(&self) -> usize {
        self.comparisons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparisons.is_empty() && !self.false_fold
    }

    pub fn contains(&self, c: &Comparison) -> bool {
        self.comparisons.contains(c)
    }

    /// Copy of `self` with extra comparisons conjoined.
    pub fn with<'a>(&self, extra: impl IntoIterator<Item = &'a Comparison>) -> ACSet {
        let mut out = self.clone();
        for c in extra {
            out.insert(c.clone());
        }
        out
    }

    /// Conjunction of two sets.
    pub fn union(&self, other: &ACSet) -> ACSet {
        let mut out = self.with(other.iter());
        out.universe.extend(other.universe.iter().cloned());
        out.constants.extend(other.constants.iter().copied());
        out.false_fold |= other.false_fold;
        out
    }
}

impl FromIterator<Comparison> for ACSet {
    fn from_iter<I: IntoIterator<Item = Comparison>>(iter: I) -> ACSet {
        let mut s = ACSet::new();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl Extend<Comparison> for ACSet {
    fn extend<I: IntoIterator<Item = Comparison>>(&mut self, iter: I) {
        for c in iter {
            self.insert(c);
        }
    }
}

/// Closure tuning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClosureOptions {
    /// Let rule (8) consume inequalities it derived itself.
    pub unrestricted_rule8: bool,
}

#[derive(Clone, Debug)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> BitMatrix {
        let words = n.div_ceil(64).max(1);
        BitMatrix { n, words, bits: vec![0; n * words] }
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn or_row_from(&mut self, dst: usize, src: &[u64]) {
        let w = self.words;
        for (d, s) in self.bits[dst * w..(dst + 1) * w].iter_mut().zip(src) {
            *d |= s;
        }
    }

    fn transitive(&mut self) {
        for k in 0..self.n {
            let rk = self.row(k).to_vec();
            for i in 0..self.n {
                if self.get(i, k) {
                    self.or_row_from(i, &rk);
                }
            }
        }
    }

    fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::new(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    t.set(j, i);
                }
            }
        }
        t
    }

    fn count(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }
}

fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

/// Result of saturating a comparison set.
#[derive(Clone, Debug)]
pub struct ACClosure {
    pub base: ACSet,
    pub consistent: bool,
    nv: usize,
    terms: Vec<Term>,
    index: BTreeMap<Term, usize>,
    le: BitMatrix,
    lt: BitMatrix,
    ne: BitMatrix,
}

impl ACClosure {
    fn position(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Whether the closure contains `c`; `None` when a term of `c` is not indexed.
    pub fn entails(&self, c: &Comparison) -> Option<bool> {
        if !self.consistent {
            return Some(true);
        }
        let i = self.position(c.lhs())?;
        let j = self.position(c.rhs())?;
        Some(match c.op() {
            Op::Lt => self.lt.get(i, j),
            Op::Le => self.le.get(i, j),
            Op::Eq => self.le.get(i, j) && self.le.get(j, i),
            Op::Ne => self.ne.get(i, j),
            Op::Ge | Op::Gt => unreachable!("canonical comparisons"),
        })
    }

    /// Every comparison in the closure over the indexed terms.
    pub fn derived(&self) -> BTreeSet<Comparison> {
        let mut derived = BTreeSet::new();
        for i in 0..self.terms.len() {
            for j in 0..self.terms.len() {
                if i >= self.nv && j >= self.nv {
                    continue;
                }
                let (a, b) = (&self.terms[i], &self.terms[j]);
                if i == j {
                    if let (true, Term::Var(x)) = (self.le.get(i, i), a) {
                        derived.insert(Comparison::reflexive(x.clone()));
                    }
                    continue;
                }
                if self.le.get(i, j) {
                    derived.insert(Comparison::new(a.clone(), Op::Le, b.clone()));
                    if self.le.get(j, i) && i < j {
                        derived.insert(Comparison::new(a.clone(), Op::Eq, b.clone()));
                    }
                }
                if self.lt.get(i, j) {
                    derived.insert(Comparison::new(a.clone(), Op::Lt, b.clone()));
                }
                if self.ne.get(i, j) && i < j {
                    derived.insert(Comparison::new(a.clone(), Op::Ne, b.clone()));
                }
            }
        }
        if self.consistent {
            derived.extend(self.base.comparisons.iter().cloned());
        }
        derived
    }

    /// Whether `a` and `b` are forced equal.
    pub fn equal(&self, a: &Term, b: &Term) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(i), Some(j)) => self.le.get(i, j) && self.le.get(j, i),
            _ => a == b,
        }
    }

    /// Indexed terms: universe variables followed by sorted relevant constants.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// A satisfying assignment that keeps terms apart unless forced equal.
    pub fn model(&self) -> Option<BTreeMap<Name, Rat>> {
        if !self.consistent {
            return None;
        }
        let n = self.terms.len();
        let mut class = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for i in 0..n {
            if class[i] != usize::MAX {
                continue;
            }
            let id = reps.len();
            reps.push(i);
            for (j, cl) in class.iter_mut().enumerate().skip(i) {
                if self.le.get(i, j) && self.le.get(j, i) {
                    *cl = id;
                }
            }
        }
        let k = reps.len();
        let mut value_of_class: Vec<Option<Rat>> = vec![None; k];
        for (i, t) in self.terms.iter().enumerate() {
            if let Term::Const(c) = t {
                value_of_class[class[i]] = Some(*c);
            }
        }
        let mut placed = vec![false; k];
        let mut order = Vec::with_capacity(k);
        while order.len() < k {
            let next = (0..k)
                .find(|&a| {
                    !placed[a]
                        && (0..k).all(|b| {
                            b == a || placed[b] || !self.le.get(reps[b], reps[a])
                        })
                })
                .expect("closure order is acyclic");
            placed[next] = true;
            order.push(next);
        }
        let mut values: Vec<Option<Rat>> = vec![None; k];
        let fixed: Vec<(usize, Rat)> = order
            .iter()
            .enumerate()
            .filter_map(|(p, &c)| value_of_class[c].map(|v| (p, v)))
            .collect();
        let mut start = 0;
        let mut lower: Option<Rat> = None;
        let mut bounds: Vec<(usize, usize, Option<Rat>, Option<Rat>)> = Vec::new();
        for &(p, v) in &fixed {
            bounds.push((start, p, lower, Some(v)));
            values[order[p]] = Some(v);
            start = p + 1;
            lower = Some(v);
        }
        bounds.push((start, k, lower, None));
        for (from, to, lo, hi) in bounds {
            let run = to - from;
            for j in 0..run {
                let v = interpolate(lo.as_ref(), hi.as_ref(), j, run);
                values[order[from + j]] = Some(v);
            }
        }
        let mut out = BTreeMap::new();
        for (i, t) in self.terms.iter().enumerate() {
            if let Term::Var(name) = t {
                out.insert(name.clone(), values[class[i]].expect("every class valued"));
            }
        }
        Some(out)
    }
}

/// Value for the `j`-th of `run` free positions strictly between `lo` and `hi`.
pub fn interpolate(lo: Option<&Rat>, hi: Option<&Rat>, j: usize, run: usize) -> Rat {
    let j = j as i64;
    let run = run as i64;
    match (lo, hi) {
        (Some(lo), Some(hi)) => lo + (hi - lo) * Rat::new(j + 1, run + 1),
        (Some(lo), None) => lo + int(j + 1),
        (None, Some(hi)) => hi - int(run - j),
        (None, None) => int(j),
    }
}

/// Closure with default options.
pub fn closure(acs: &ACSet) -> ACClosure {
    closure_with(acs, ClosureOptions::default())
}

/// Saturates `acs` under the elemental implications over its universe and relevant constants.
pub fn closure_with(acs: &ACSet, options: ClosureOptions) -> ACClosure {
    let mut terms: Vec<Term> = acs.universe.iter().cloned().map(Term::Var).collect();
    terms.extend(acs.constants.iter().copied().map(Term::Const));
    let index: BTreeMap<Term, usize> = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let n = terms.len();
    let mut le = BitMatrix::new(n);
    let mut lt = BitMatrix::new(n);
    let mut ne_base = BitMatrix::new(n);
    let nv = acs.universe.len();
    for i in nv..n {
        for j in i + 1..n {
            lt.set(i, j);
        }
    }
    for c in &acs.comparisons {
        let i = index[c.lhs()];
        let j = index[c.rhs()];
        match c.op() {
            Op::Lt => lt.set(i, j),
            Op::Le => le.set(i, j),
            Op::Eq => {
                le.set(i, j);
                le.set(j, i);
            }
            Op::Ne => {
                ne_base.set(i, j);
                ne_base.set(j, i);
            }
            Op::Ge | Op::Gt => unreachable!("canonical comparisons"),
        }
    }
    let mut ne = ne_base.clone();
    let mut consistent = !acs.false_fold;
    if consistent {
        consistent = saturate(n, &mut le, &mut lt, &mut ne_base, &mut ne, options);
    }
    ACClosure { base: acs.clone(), consistent, nv, terms, index, le, lt, ne }
}

fn saturate(
    n: usize,
    le: &mut BitMatrix,
    lt: &mut BitMatrix,
    ne_base: &mut BitMatrix,
    ne: &mut BitMatrix,
    options: ClosureOptions,
) -> bool {
    loop {
        let before = (le.count(), lt.count(), ne.count());
        // (1) reflexivity, (2) strict implies weak, (7) weak transitivity.
        for i in 0..n {
            le.set(i, i);
            let r = lt.row(i).to_vec();
            le.or_row_from(i, &r);
        }
        le.transitive();
        // (4) weak plus inequality gives strict, (6) strict transitivity.
        for i in 0..n {
            let both: Vec<u64> = le.row(i).iter().zip(ne.row(i)).map(|(a, b)| a & b).collect();
            lt.or_row_from(i, &both);
        }
        lt.transitive();
        // (3) strict implies inequality, (5) symmetry.
        let ltt = lt.transpose();
        for i in 0..n {
            let r = lt.row(i).to_vec();
            ne_base.or_row_from(i, &r);
            let r = ltt.row(i).to_vec();
            ne_base.or_row_from(i, &r);
        }
        *ne_base = symmetric(ne_base);
        for i in 0..n {
            let r = ne_base.row(i).to_vec();
            ne.or_row_from(i, &r);
        }
        // (8) two distinct points inside [X, Y] separate X from Y.
        let source = if options.unrestricted_rule8 { ne.clone() } else { ne_base.clone() };
        let let_ = le.transpose();
        let mut found = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x == y || !le.get(x, y) || ne.get(x, y) {
                    continue;
                }
                let inside: Vec<u64> = le.row(x).iter().zip(let_.row(y)).map(|(a, b)| a & b).collect();
                let hit = (0..n).any(|w| {
                    inside[w / 64] >> (w % 64) & 1 == 1 && intersects(source.row(w), &inside)
                });
                if hit {
                    found.push((x, y));
                }
            }
        }
        for (x, y) in found {
            ne.set(x, y);
            ne.set(y, x);
        }
        if (0..n).any(|i| lt.get(i, i) || ne.get(i, i)) {
            return false;
        }
        if (le.count(), lt.count(), ne.count()) == before {
            return true;
        }
    }
}

fn symmetric(m: &BitMatrix) -> BitMatrix {
    let t = m.transpose();
    let mut out = m.clone();
    for i in 0..m.n {
        let r = t.row(i).to_vec();
        out.or_row_from(i, &r);
    }
    out
}

/// True iff some rational assignment satisfies every comparison.
pub fn is_consistent(acs: &ACSet) -> bool {
    closure(acs).consistent
}

/// True iff the closure of `acs`, with the target's constants made relevant, contains `target`.
pub fn implies(acs: &ACSet, target: &Comparison) -> Result<bool, AcError> {
    let mut extended = acs.clone();
    extended.add_constants(target.constants().copied());
    for v in target.vars() {
        extended.add_var(v.clone());
    }
    let cl = closure(&extended);
    if !cl.consistent {
        return Err(AcError::Inconsistent);
    }
    Ok(cl.entails(target).expect("target terms are indexed"))
}

/// True iff `lhs` implies the disjunction of `rhs`, decided by one consistency check.
pub fn implication_holds(lhs: &ACSet, rhs: &[Comparison]) -> bool {
    let negated: Vec<Comparison> = rhs.iter().map(Comparison::negate).collect();
    !is_consistent(&lhs.with(negated.iter()))
}

/// Drops disjuncts from `rhs`, last first, while the implication keeps holding.
pub fn minimal_form(lhs: &ACSet, rhs: &[Comparison]) -> Result<Vec<Comparison>, AcError> {
    if !implication_holds(lhs, rhs) {
        return Err(AcError::NotImplied);
    }
    let mut keep = rhs.to_vec();
    let mut i = keep.len();
    while i > 0 {
        i -= 1;
        let mut trial = keep.clone();
        trial.remove(i);
        if implication_holds(lhs, &trial) {
            keep = trial;
        }
    }
    Ok(keep)
}

/// A minimal inconsistent subset of `acs`, or `None` when `acs` is consistent.
pub fn contradiction_core(acs: &ACSet) -> Option<Vec<Comparison>> {
    if is_consistent(acs) {
        return None;
    }
    let mut core: Vec<Comparison> = acs.iter().cloned().collect();
    if acs.has_false_fold() {
        return Some(Vec::new());
    }
    let mut i = core.len();
    while i > 0 {
        i -= 1;
        let mut trial = core.clone();
        trial.remove(i);
        let mut set: ACSet = trial.iter().cloned().collect();
        set.add_constants(acs.relevant_constants().iter().copied());
        if !is_consistent(&set) {
            core = trial;
        }
    }
    Some(core)
}
