//! Algebraic laws of comparison closure and implication on random instances.

use std::collections::BTreeMap;

use cqac::ac_core::{closure, implication_holds, is_consistent, minimal_form, ACSet, Comparison, Name, Op, Rat, Term};
use proptest::prelude::*;

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];
const CONSTANTS: [i64; 3] = [3, 5, 7];
const OPS: [Op; 6] = [Op::Lt, Op::Le, Op::Eq, Op::Ne, Op::Ge, Op::Gt];

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        3 => prop::sample::select(&VARS[..]).prop_map(Term::var),
        1 => prop::sample::select(&CONSTANTS[..]).prop_map(Term::constant),
    ]
}

fn comparison() -> impl Strategy<Value = (Term, Op, Term)> {
    (term(), prop::sample::select(&OPS[..]), term())
}

fn acset() -> impl Strategy<Value = ACSet> {
    prop::collection::vec(comparison(), 1..6).prop_map(|cs| {
        let mut acs = ACSet::new();
        for (l, op, r) in cs {
            acs.insert_atomic(Comparison::fold(l, op, r));
        }
        acs
    })
}

fn closed_si() -> impl Strategy<Value = Comparison> {
    (prop::sample::select(&VARS[..]), prop::sample::select(&[Op::Le, Op::Ge][..]), prop::sample::select(&CONSTANTS[..]))
        .prop_map(|(v, op, c)| Comparison::new(Term::var(v), op, Term::constant(c)))
}

fn closed_lsi() -> impl Strategy<Value = Comparison> {
    (prop::sample::select(&VARS[..]), prop::sample::select(&CONSTANTS[..]))
        .prop_map(|(v, c)| Comparison::new(Term::var(v), Op::Le, Term::constant(c)))
}

/// Half-integer grid around the constants.
fn value() -> impl Strategy<Value = Rat> {
    (4i64..=16).prop_map(|n| Rat::new(n, 2))
}

fn assignment() -> impl Strategy<Value = BTreeMap<Name, Rat>> {
    prop::collection::vec(value(), VARS.len()).prop_map(|vs| VARS.iter().map(|v| Name::from(*v)).zip(vs).collect())
}

fn satisfies(c: &Comparison, a: &BTreeMap<Name, Rat>) -> bool {
    c.eval(|v| a.get(v).copied()).expect("assigned")
}

fn satisfies_all(acs: &ACSet, a: &BTreeMap<Name, Rat>) -> bool {
    !acs.has_false_fold() && acs.iter().all(|c| satisfies(c, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closure_is_idempotent(acs in acset()) {
        let once = closure(&acs);
        prop_assume!(once.consistent);
        let derived: ACSet = once.derived().into_iter().collect();
        prop_assert_eq!(closure(&derived).derived(), once.derived());
        for c in acs.iter() {
            prop_assert_eq!(once.entails(c), Some(true), "{}", c);
        }
    }

    #[test]
    fn closure_is_sound(acs in acset(), assignments in prop::collection::vec(assignment(), 100)) {
        let cl = closure(&acs);
        let derived = cl.derived();
        for a in &assignments {
            if satisfies_all(&acs, a) {
                prop_assert!(cl.consistent);
                for c in &derived {
                    prop_assert!(satisfies(c, a), "{} under {:?}", c, a);
                }
            }
        }
        if let Some(model) = cl.model() {
            prop_assert!(satisfies_all(&acs, &model));
            prop_assert!(derived.iter().all(|c| satisfies(c, &model)));
        } else {
            prop_assert!(!is_consistent(&acs));
        }
    }

    #[test]
    fn closed_lsi_rhs_needs_one_disjunct(acs in acset(), rhs in prop::collection::vec(closed_lsi(), 1..5)) {
        prop_assume!(is_consistent(&acs));
        if implication_holds(&acs, &rhs) {
            prop_assert_eq!(minimal_form(&acs, &rhs).unwrap().len(), 1);
        }
    }

    #[test]
    fn closed_si_rhs_needs_at_most_two_disjuncts(acs in acset(), rhs in prop::collection::vec(closed_si(), 1..6)) {
        prop_assume!(is_consistent(&acs));
        if implication_holds(&acs, &rhs) {
            let m = minimal_form(&acs, &rhs).unwrap();
            prop_assert!(m.len() <= 2, "{:?}", m.iter().map(ToString::to_string).collect::<Vec<_>>());
        }
    }

    #[test]
    fn implication_matches_assignments(acs in acset(), rhs in prop::collection::vec(comparison(), 1..4), assignments in prop::collection::vec(assignment(), 100)) {
        prop_assume!(is_consistent(&acs));
        let rhs: Vec<Comparison> = rhs
            .into_iter()
            .filter_map(|(l, op, r)| match Comparison::fold(l, op, r) {
                cqac::ac_core::Atomic::Cmp(c) => Some(c),
                cqac::ac_core::Atomic::Const(_) => None,
            })
            .collect();
        prop_assume!(!rhs.is_empty());
        if implication_holds(&acs, &rhs) {
            for a in &assignments {
                if satisfies_all(&acs, a) {
                    prop_assert!(rhs.iter().any(|c| satisfies(c, a)));
                }
            }
        }
    }
}
