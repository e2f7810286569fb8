//! Fragment classification and the single-certificate containment procedures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::ac_core::{closure, implication_holds, is_consistent, ACSet, Comparison, Name, Op, Rat, SiLabel, Term};
use crate::query_model::{booleanize, merge_equalities, normalize, Query};

use super::entail::entailment_check;
use super::mapping::{homomorphisms, image};
use super::{ContainmentError, ContainmentMapping, ContainmentResult, Witness};

/// Fragments of query pairs with a known containment procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentClass {
    /// The containing query has no comparisons once equalities are merged.
    Cq,
    /// At most one comparison besides equations in the containing query.
    OneAc,
    /// The containing query has only closed left semi-intervals.
    ClsiHp,
    /// Only left semi-intervals, with the constant-sharing conditions met.
    LsiHpCond,
    /// Closed left semi-intervals and at most one closed right semi-interval.
    Rsi1Closed,
    /// Left semi-intervals and one right semi-interval, mixed open and closed, conditions met.
    Rsi1MixedCond,
    /// No specialized procedure applies.
    General,
}

impl FragmentClass {
    pub const ALL: [FragmentClass; 7] = [
        FragmentClass::Cq,
        FragmentClass::OneAc,
        FragmentClass::ClsiHp,
        FragmentClass::LsiHpCond,
        FragmentClass::Rsi1Closed,
        FragmentClass::Rsi1MixedCond,
        FragmentClass::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FragmentClass::Cq => "CQ",
            FragmentClass::OneAc => "ONE_AC",
            FragmentClass::ClsiHp => "CLSI_HP",
            FragmentClass::LsiHpCond => "LSI_HP_COND",
            FragmentClass::Rsi1Closed => "RSI1_CLOSED",
            FragmentClass::Rsi1MixedCond => "RSI1_MIXED_COND",
            FragmentClass::General => "GENERAL",
        }
    }
}

impl fmt::Display for FragmentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FragmentClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FragmentClass::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown fragment `{s}`"))
    }
}

/// Procedures of [`fast_contains`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Hp,
    OneAc,
    Rsi1,
    Auto,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Hp => "hp",
            Strategy::OneAc => "one-ac",
            Strategy::Rsi1 => "rsi1",
            Strategy::Auto => "auto",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Strategy::Hp, Strategy::OneAc, Strategy::Rsi1, Strategy::Auto]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Options of [`classify_fragment_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassifyOptions {
    /// Read the constant-sharing conditions off the written comparisons
    /// instead of their closures.
    pub syntactic: bool,
}

/// How a variable relates to a constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Relation {
    Si(SiLabel),
    Equal,
    Differ,
}

impl Relation {
    fn is_closed(self) -> bool {
        matches!(self, Relation::Equal | Relation::Si(SiLabel::Clsi) | Relation::Si(SiLabel::Crsi))
    }

    fn is_open_si(self) -> bool {
        matches!(self, Relation::Si(SiLabel::Olsi) | Relation::Si(SiLabel::Orsi))
    }
}

/// Variable-to-constant relations and variable disequalities of one comparison set.
struct Relations {
    var_const: Vec<(Name, Relation, Rat)>,
    var_ne: Vec<(Name, Name)>,
}

fn relations(acs: &ACSet, syntactic: bool) -> Relations {
    let mut var_const = Vec::new();
    let mut var_ne = Vec::new();
    if syntactic {
        for c in acs.iter() {
            match (c.lhs(), c.op(), c.rhs()) {
                (Term::Var(x), Op::Ne, Term::Var(y)) => var_ne.push((x.clone(), y.clone())),
                (Term::Var(x), Op::Eq, Term::Const(k)) => var_const.push((x.clone(), Relation::Equal, *k)),
                (Term::Var(x), Op::Ne, Term::Const(k)) => var_const.push((x.clone(), Relation::Differ, *k)),
                _ => {
                    if let Some((x, op, k)) = c.as_si() {
                        let label = SiLabel::from_op(op).expect("semi-interval operator");
                        var_const.push((x.clone(), Relation::Si(label), k));
                    }
                }
            }
        }
        return Relations { var_const, var_ne };
    }
    let cl = closure(acs);
    let vars: Vec<Name> = acs.universe().iter().cloned().collect();
    let entails = |l: Term, op: Op, r: Term| match Comparison::fold(l, op, r) {
        crate::ac_core::Atomic::Cmp(c) => cl.entails(&c).unwrap_or(false),
        crate::ac_core::Atomic::Const(b) => b,
    };
    for x in &vars {
        for k in acs.relevant_constants() {
            let (vx, vk) = (Term::Var(x.clone()), Term::Const(*k));
            if entails(vx.clone(), Op::Eq, vk.clone()) {
                var_const.push((x.clone(), Relation::Equal, *k));
                continue;
            }
            let mut related = false;
            if entails(vx.clone(), Op::Lt, vk.clone()) {
                var_const.push((x.clone(), Relation::Si(SiLabel::Olsi), *k));
                related = true;
            } else if entails(vx.clone(), Op::Le, vk.clone()) {
                var_const.push((x.clone(), Relation::Si(SiLabel::Clsi), *k));
                related = true;
            }
            if entails(vk.clone(), Op::Lt, vx.clone()) {
                var_const.push((x.clone(), Relation::Si(SiLabel::Orsi), *k));
                related = true;
            } else if entails(vk.clone(), Op::Le, vx.clone()) {
                var_const.push((x.clone(), Relation::Si(SiLabel::Crsi), *k));
                related = true;
            }
            if !related && entails(vx, Op::Ne, vk) {
                var_const.push((x.clone(), Relation::Differ, *k));
            }
        }
    }
    for (i, x) in vars.iter().enumerate() {
        for y in &vars[i + 1..] {
            if entails(Term::Var(x.clone()), Op::Ne, Term::Var(y.clone())) {
                var_ne.push((x.clone(), y.clone()));
            }
        }
    }
    Relations { var_const, var_ne }
}

/// Comparison-type inventory of a pair and the side conditions of the fragments.
struct Inventory {
    labels: Vec<Option<SiLabel>>,
    ne_condition: bool,
    shared_equation_constant: bool,
    rsi_meets_lsi: bool,
    open_meets_closed: bool,
}

fn inventory(m1: &Query, q1: &Query, q2: &Query, syntactic: bool) -> Inventory {
    let labels: Vec<Option<SiLabel>> = m1.acs.iter().map(|c| c.ac_type().si_label()).collect();
    let mut si_constants: BTreeMap<SiLabel, BTreeSet<Rat>> = BTreeMap::new();
    for c in m1.acs.iter() {
        if let Some(label) = c.ac_type().si_label() {
            si_constants.entry(label).or_default().insert(c.si_constant().expect("semi-interval"));
        }
    }
    let r1 = relations(&m1.acs, syntactic);
    let r2 = relations(&q2.acs, syntactic);
    let open1: BTreeSet<Rat> = r1.var_const.iter().filter(|(_, r, _)| r.is_open_si()).map(|(_, _, k)| *k).collect();
    let rel2 = |x: &Name, k: &Rat| -> Vec<Relation> {
        r2.var_const.iter().filter(|(y, _, c)| y == x && c == k).map(|(_, r, _)| *r).collect()
    };
    let constants2: BTreeSet<Rat> = r2.var_const.iter().map(|(_, _, k)| *k).collect();
    let ne_condition = r2.var_ne.iter().all(|(x, y)| {
        constants2.iter().all(|k| {
            let (rx, ry) = (rel2(x, k), rel2(y, k));
            if rx.is_empty() || ry.is_empty() {
                return true;
            }
            let both_closed = rx.iter().any(|r| r.is_closed()) && ry.iter().any(|r| r.is_closed());
            !both_closed || !open1.contains(k)
        })
    });
    let n1 = normalize(q1);
    let eq1: BTreeSet<Rat> = relations(&n1.acs, syntactic)
        .var_const
        .iter()
        .filter(|(_, r, _)| *r == Relation::Equal)
        .map(|(_, _, k)| *k)
        .collect();
    let olsi1: BTreeSet<Rat> = r1
        .var_const
        .iter()
        .filter(|(_, r, _)| *r == Relation::Si(SiLabel::Olsi))
        .map(|(_, _, k)| *k)
        .collect();
    let closed2: BTreeSet<Rat> = r2
        .var_const
        .iter()
        .filter(|(_, r, _)| r.is_closed() && *r != Relation::Equal)
        .map(|(_, _, k)| *k)
        .collect();
    let clsi2: BTreeSet<Rat> = r2
        .var_const
        .iter()
        .filter(|(_, r, _)| *r == Relation::Si(SiLabel::Clsi))
        .map(|(_, _, k)| *k)
        .collect();
    let shared_equation_constant = eq1.iter().any(|k| olsi1.contains(k) && clsi2.contains(k));
    let lsi: BTreeSet<Rat> = [SiLabel::Clsi, SiLabel::Olsi].iter().filter_map(|l| si_constants.get(l)).flatten().copied().collect();
    let rsi: BTreeSet<Rat> = [SiLabel::Crsi, SiLabel::Orsi].iter().filter_map(|l| si_constants.get(l)).flatten().copied().collect();
    let rsi_meets_lsi = !rsi.is_disjoint(&lsi);
    let open_meets_closed = !open1.is_disjoint(&closed2);
    Inventory { labels, ne_condition, shared_equation_constant, rsi_meets_lsi, open_meets_closed }
}

/// Classifies with closure-based side conditions.
pub fn classify_fragment(q1: &Query, q2: &Query) -> FragmentClass {
    classify_fragment_with(q1, q2, ClassifyOptions::default())
}

/// First applicable fragment among CQ, CLSI_HP, LSI_HP_COND, RSI1_CLOSED,
/// RSI1_MIXED_COND, ONE_AC; GENERAL otherwise.
pub fn classify_fragment_with(q1: &Query, q2: &Query, options: ClassifyOptions) -> FragmentClass {
    classify_explained(q1, q2, options).0
}

/// The class and, for each fragment that does not apply, the reason.
fn classify_explained(q1: &Query, q2: &Query, options: ClassifyOptions) -> (FragmentClass, BTreeMap<FragmentClass, String>) {
    let mut why = BTreeMap::new();
    let Some(m1) = merge_equalities(q1) else {
        for c in FragmentClass::ALL {
            why.insert(c, "containing query is unsatisfiable".to_string());
        }
        return (FragmentClass::General, why);
    };
    let m2 = merge_equalities(q2).unwrap_or_else(|| q2.clone());
    if m1.acs.is_empty() {
        return (FragmentClass::Cq, why);
    }
    why.insert(FragmentClass::Cq, "containing query has comparisons".into());
    let inv = inventory(&m1, q1, &m2, options.syntactic);
    let count = |l: SiLabel| inv.labels.iter().filter(|x| **x == Some(l)).count();
    let all_si = inv.labels.iter().all(Option::is_some);
    let (clsi, olsi, crsi, orsi) = (count(SiLabel::Clsi), count(SiLabel::Olsi), count(SiLabel::Crsi), count(SiLabel::Orsi));
    let only_lsi = all_si && crsi + orsi == 0;
    let all_closed = all_si && olsi + orsi == 0;
    let one_ac = m1.acs.len() <= 1;
    if only_lsi && all_closed {
        return (FragmentClass::ClsiHp, why);
    }
    why.insert(FragmentClass::ClsiHp, "containing query has comparisons other than closed left semi-intervals".into());
    if !only_lsi {
        why.insert(FragmentClass::LsiHpCond, "containing query has comparisons other than left semi-intervals".into());
    } else if !inv.ne_condition {
        why.insert(FragmentClass::LsiHpCond, "a disequality of the contained query shares a closed constant with an open comparison".into());
    } else if inv.shared_equation_constant {
        why.insert(FragmentClass::LsiHpCond, "a constant is shared by an equation and an open left semi-interval of the containing query and a closed left semi-interval of the contained query".into());
    } else {
        return (FragmentClass::LsiHpCond, why);
    }
    if !all_si || crsi + orsi > 1 {
        let reason = "containing query is not semi-interval with at most one right semi-interval";
        why.insert(FragmentClass::Rsi1Closed, reason.into());
        why.insert(FragmentClass::Rsi1MixedCond, reason.into());
    } else if all_closed {
        return (FragmentClass::Rsi1Closed, why);
    } else {
        why.insert(FragmentClass::Rsi1Closed, "containing query has open semi-intervals".into());
        if clsi > 0 && olsi > 0 {
            why.insert(FragmentClass::Rsi1MixedCond, "left semi-intervals mix open and closed".into());
        } else if inv.rsi_meets_lsi {
            why.insert(FragmentClass::Rsi1MixedCond, "the right semi-interval shares its constant with a left semi-interval".into());
        } else if inv.open_meets_closed {
            why.insert(FragmentClass::Rsi1MixedCond, "an open constant of the containing query is closed in the contained query".into());
        } else if !inv.ne_condition {
            why.insert(FragmentClass::Rsi1MixedCond, "a disequality of the contained query shares a closed constant with an open comparison".into());
        } else {
            return (FragmentClass::Rsi1MixedCond, why);
        }
    }
    if one_ac {
        return (FragmentClass::OneAc, why);
    }
    why.insert(FragmentClass::OneAc, "containing query has more than one comparison besides equations".into());
    (FragmentClass::General, why)
}

fn merged_pair(q1: &Query, q2: &Query) -> Result<(Query, Query), ContainmentResult> {
    let Some(m2) = merge_equalities(&booleanize(q2)) else {
        return Err(ContainmentResult::contained(Witness::Vacuous));
    };
    let Some(m1) = merge_equalities(&booleanize(q1)) else {
        return Err(ContainmentResult::not_contained(Witness::None));
    };
    Ok((m1, m2))
}

fn images(maps: &[ContainmentMapping], acs: &ACSet) -> Vec<Option<Vec<Comparison>>> {
    maps.iter()
        .map(|m| {
            let img = image(m, acs);
            (!img.has_false_fold()).then(|| img.iter().cloned().collect())
        })
        .collect()
}

fn implied(lhs: &ACSet, e: &Comparison) -> bool {
    implication_holds(lhs, std::slice::from_ref(e))
}

fn homomorphism_property(q1: &Query, q2: &Query) -> ContainmentResult {
    let (m1, m2) = match merged_pair(q1, q2) {
        Ok(p) => p,
        Err(r) => return r,
    };
    let maps = homomorphisms(&m1.body, &m2.body);
    for (m, img) in maps.iter().zip(images(&maps, &m1.acs)) {
        if let Some(img) = img {
            if img.iter().all(|e| implied(&m2.acs, e)) {
                return ContainmentResult::contained(Witness::Mappings(vec![m.clone()]));
            }
        }
    }
    ContainmentResult::not_contained(Witness::None)
}

fn rsi1_procedure(q1: &Query, q2: &Query) -> ContainmentResult {
    let (m1, m2) = match merged_pair(q1, q2) {
        Ok(p) => p,
        Err(r) => return r,
    };
    let maps = homomorphisms(&m1.body, &m2.body);
    let imgs = images(&maps, &m1.acs);
    let mut lhs = m2.acs.clone();
    let mut used: Vec<ContainmentMapping> = Vec::new();
    let mut spent = vec![false; maps.len()];
    loop {
        if !is_consistent(&lhs) {
            return ContainmentResult::contained(Witness::Mappings(used));
        }
        let mut progress = false;
        for (k, img) in imgs.iter().enumerate() {
            let Some(img) = img else { continue };
            if spent[k] {
                continue;
            }
            let open: Vec<&Comparison> = img.iter().filter(|e| !implied(&lhs, e)).collect();
            match open.len() {
                0 => {
                    used.push(maps[k].clone());
                    return ContainmentResult::contained(Witness::Mappings(used));
                }
                1 => {
                    lhs.insert(open[0].negate());
                    used.push(maps[k].clone());
                    spent[k] = true;
                    progress = true;
                    break;
                }
                _ => {}
            }
        }
        if !progress {
            return ContainmentResult::not_contained(Witness::None);
        }
    }
}

fn one_ac_procedure(q1: &Query, q2: &Query) -> ContainmentResult {
    let (m1, _) = match merged_pair(q1, q2) {
        Ok(p) => p,
        Err(r) => return r,
    };
    let n1 = normalize(&m1);
    let n2 = normalize(&booleanize(q2));
    let maps = homomorphisms(&n1.body, &n2.body);
    let imgs = images(&maps, &n1.acs);
    let mut lhs = n2.acs.clone();
    let mut used: Vec<ContainmentMapping> = Vec::new();
    let mut spent = vec![false; maps.len()];
    loop {
        if !is_consistent(&lhs) {
            return ContainmentResult::contained(Witness::Mappings(used));
        }
        let mut progress = false;
        for (k, img) in imgs.iter().enumerate() {
            let Some(img) = img else { continue };
            if spent[k] {
                continue;
            }
            let (eqs, rest): (Vec<&Comparison>, Vec<&Comparison>) = img.iter().partition(|c| c.ac_type().is_equation());
            if !eqs.iter().all(|e| implied(&lhs, e)) {
                continue;
            }
            let open: Vec<&&Comparison> = rest.iter().filter(|e| !implied(&lhs, e)).collect();
            used.push(maps[k].clone());
            if open.is_empty() {
                return ContainmentResult::contained(Witness::Mappings(used));
            }
            for e in open {
                lhs.insert(e.negate());
            }
            spent[k] = true;
            progress = true;
            break;
        }
        if !progress {
            return ContainmentResult::not_contained(Witness::None);
        }
    }
}

/// Decides `q2 ⊑ q1` with a single-certificate procedure, refusing pairs
/// outside the fragment where the procedure is complete.
pub fn fast_contains(q1: &Query, q2: &Query, strategy: Strategy) -> Result<ContainmentResult, ContainmentError> {
    let (class, why) = classify_explained(q1, q2, ClassifyOptions::default());
    let allowed: &[FragmentClass] = match strategy {
        Strategy::Auto => {
            return Ok(match class {
                FragmentClass::Cq | FragmentClass::ClsiHp | FragmentClass::LsiHpCond => homomorphism_property(q1, q2),
                FragmentClass::Rsi1Closed | FragmentClass::Rsi1MixedCond => rsi1_procedure(q1, q2),
                FragmentClass::OneAc => one_ac_procedure(q1, q2),
                FragmentClass::General => entailment_check(q1, q2),
            })
        }
        Strategy::Hp => &[FragmentClass::Cq, FragmentClass::ClsiHp, FragmentClass::LsiHpCond],
        Strategy::Rsi1 => &[
            FragmentClass::Cq,
            FragmentClass::ClsiHp,
            FragmentClass::LsiHpCond,
            FragmentClass::Rsi1Closed,
            FragmentClass::Rsi1MixedCond,
        ],
        Strategy::OneAc => &[FragmentClass::Cq, FragmentClass::OneAc],
    };
    let fits = allowed.contains(&class)
        || (strategy == Strategy::OneAc && merge_equalities(q1).is_some_and(|m| m.acs.len() <= 1));
    if !fits {
        let target = *allowed.last().expect("nonempty");
        let condition = why.get(&target).cloned().unwrap_or_else(|| format!("pair is classified {class}"));
        return Err(ContainmentError::Fragment { strategy, class, condition });
    }
    Ok(match strategy {
        Strategy::Hp => homomorphism_property(q1, q2),
        Strategy::Rsi1 => rsi1_procedure(q1, q2),
        _ => one_ac_procedure(q1, q2),
    })
}
