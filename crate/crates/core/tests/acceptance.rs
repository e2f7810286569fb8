//! Acceptance criteria, one PASS/FAIL line each.

#![allow(clippy::type_complexity)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cqac::ac_core::{
    closure, implication_holds, int, is_consistent, minimal_form, ACSet, Comparison, Name, Op, Rat, Term,
};
use cqac::containment::*;
use cqac::corpus::*;
use cqac::datalog::{contains_cq, expansions_up_to_depth};
use cqac::hardness_gen::{eval_pi2sat, random_formula, reduce_pi2sat, GadgetVariant};
use cqac::query_model::{evaluate, expand, materialize_views, Database, Query, Workspace};
use cqac::rewriting::*;
use cqac::transform::{containment_via_transform, relevant_sis, to_cq, to_datalog};
use rand::Rng;

type Verdict = Result<String, String>;

fn q(text: &str) -> Query {
    Query::parse(text).unwrap()
}

fn views(text: &str) -> Vec<Query> {
    Workspace::parse(text).unwrap().rules
}

fn db(text: &str) -> Database {
    Database::parse(text).unwrap()
}

fn oracle(q1: &Query, q2: &Query) -> Result<bool, ContainmentError> {
    canonical_oracle_check_with(q1, q2, OracleOptions::with_bound(16)).map(|r| r.holds)
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const PROFILES: [(AcProfile, AcProfile); 5] = [
    (AcProfile::Mixed, AcProfile::Mixed),
    (AcProfile::Clsi, AcProfile::Mixed),
    (AcProfile::Lsi, AcProfile::SiNe),
    (AcProfile::ClosedRsi1, AcProfile::Mixed),
    (AcProfile::Rsi1, AcProfile::SiNe),
];

fn oracle_agreement() -> Verdict {
    let start = Instant::now();
    let opts = CorpusOptions::default();
    let (mut pairs, mut fast, mut transformed, mut held) = (0, 0, 0, 0);
    let mut bad = Vec::new();
    for (i, (p1, p2)) in PROFILES.iter().enumerate() {
        for (q1, q2) in corpus(1000 + i as u64, 60, &opts, *p1, *p2) {
            pairs += 1;
            let e = entailment_check(&q1, &q2).holds;
            held += usize::from(e);
            let mut verdicts = vec![("oracle", oracle(&q1, &q2).map_err(|err| err.to_string()))];
            for s in [Strategy::Auto, Strategy::Hp, Strategy::OneAc, Strategy::Rsi1] {
                if let Ok(r) = fast_contains(&q1, &q2, s) {
                    fast += 1;
                    verdicts.push((s.name(), Ok(r.holds)));
                }
            }
            if let Ok(t) = containment_via_transform(&q1, &q2) {
                transformed += 1;
                verdicts.push(("transform", Ok(t)));
            }
            for (name, v) in verdicts {
                if v != Ok(e) {
                    bad.push(format!("{name}={v:?} entailment={e}: {q1} | {q2}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        pairs >= 200 && bad.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{pairs} pairs ({held} contained), {fast} fast verdicts, {transformed} transform verdicts, {} discrepancies{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

fn fixture_goldens() -> Verdict {
    let mut failures = Vec::new();
    let mut expect = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let q1 = q("q() :- a(X1,Y1,Z1), X1 = Y1, Z1 < 5.");
    let q2 = q("q() :- a(X,Y,Z2), a(X2,Y2,Z), X <= 5, Y <= X, Z <= Y, X2 = Y2, Z2 < 5.");
    let maps = enumerate_mappings(&q1, &q2);
    expect("two mappings", maps.len() == 2);
    expect("two-mapping pair contained", entailment_check(&q1, &q2).holds);

    let q1 = q("q() :- a(X,Y,Z), X <= 8, Y <= 7, Z >= 6.");
    let q2 = q("q() :- a(X,Y,Z), a(U1,U2,X), a(V1,V2,Y), a(Z,Z1,Z2), a(P1,P2,U1), a(R1,R2,V1), \
                P1 <= 8, P2 <= 7, U2 <= 7, R1 <= 8, R2 <= 7, V2 <= 7, Z1 <= 7, Z2 >= 6.");
    expect("six mappings", enumerate_mappings(&q1, &q2).len() == 6);
    expect("six-mapping pair contained", entailment_check(&q1, &q2).holds);

    let (x, y) = (Term::var("X"), Term::var("Y"));
    let lhs: ACSet = [
        Comparison::new(x.clone(), Op::Ne, y.clone()),
        Comparison::new(Term::constant(5), Op::Le, y.clone()),
        Comparison::new(Term::constant(5), Op::Le, x.clone()),
    ]
    .into_iter()
    .collect();
    let rhs = [
        Comparison::new(x.clone(), Op::Gt, Term::constant(5)),
        Comparison::new(y.clone(), Op::Gt, Term::constant(5)),
        Comparison::new(x, Op::Le, Term::constant(9)),
    ];
    expect("disjunctive implication", implication_holds(&lhs, &rhs[..2]));
    expect("neither disjunct alone", !implication_holds(&lhs, &rhs[..1]) && !implication_holds(&lhs, &rhs[1..2]));
    expect("minimal form of two", minimal_form(&lhs, &rhs).map(|m| m.len()) == Ok(2));

    let q6 = q("q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 8.");
    let q7 = q("q() :- e(A,B), e(B,C), e(C,D), e(D,E), A >= 6, E <= 7.");
    let p = to_datalog(&q6, &BTreeSet::new()).unwrap();
    let rules: BTreeSet<String> = p.rules.iter().map(ToString::to_string).collect();
    let listed: BTreeSet<String> = [
        "q() :- e(X,Y), e(Y,Z), i_ge_5(X), i_le_8(Z).",
        "j_le_8(Z) :- e(X,Y), e(Y,Z), i_ge_5(X).",
        "j_ge_5(X) :- e(X,Y), e(Y,Z), i_le_8(Z).",
        "i_le_8(X) :- j_ge_5(X).",
        "i_ge_5(X) :- j_le_8(X).",
        "i_le_8(X) :- j_ge_5(Y), u(X,Y).",
        "i_ge_5(X) :- j_le_8(Y), u(Y,X).",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    expect("program rules", rules == listed);
    let constants = q6.constants();
    let linked = to_datalog(&q6, &relevant_sis(&q7, &constants)).unwrap();
    let rules: BTreeSet<String> = linked.rules.iter().map(ToString::to_string).collect();
    expect("link rules", rules.contains("i_ge_5(X) :- u_ge_6(X).") && rules.contains("i_le_8(X) :- u_le_7(X)."));
    expect("program contains the comparison-free query", contains_cq(&linked, &to_cq(&q7, &constants)).unwrap());

    let query = q("q() :- e(X,Z), e(Z,Y), X >= 50, Y <= 80, Z <= 30.");
    let vs = views(
        "v1(X,Y) :- e(X,Z), e(Z,Y), Z >= 50.\n\
         v2(X,Y) :- e(X,Z), e(Z,Y), Z <= 80, X <= 30.\n\
         v3(X,Y) :- e(X,Z1), e(Z1,Z2), e(Z2,Z3), e(Z3,Y), X <= Z2, Z2 <= Y.",
    );
    let base = db(
        "e(2,81). e(81,21). e(21,82). e(82,22). e(22,83). e(83,23). e(23,84). e(84,24). \
         e(24,85). e(85,25). e(25,86). e(86,26). e(26,41). e(41,27). e(27,42). e(42,28). \
         e(28,43). e(43,29). e(29,44). e(44,30). e(30,45). e(45,1).",
    );
    let yes = BTreeSet::from([Vec::<Rat>::new()]);
    expect("22 facts", base.len() == 22);
    expect("query true on the database", evaluate(&query, &base) == yes);
    let instance = db("v1(2,21). v1(21,22). v2(29,30). v2(30,1). v3(22,24). v3(24,26). v3(26,28). v3(28,30).");
    let m = mcr_rsi1(&query, &vs).unwrap();
    expect("rewriting derives the query", certain_answers(&m, &instance).unwrap() == yes);

    check(failures.is_empty(), if failures.is_empty() { "all goldens match".into() } else { failures.join(", ") })
}

fn reduction_correctness() -> Verdict {
    let mut r = rng(2024);
    let mut bad = Vec::new();
    let mut per_variant = BTreeMap::new();
    let mut truths = 0;
    for variant in GadgetVariant::ALL {
        for _ in 0..20 {
            let n = r.gen_range(1..=2);
            let m = r.gen_range(1..=4 - n).min(2);
            let f = random_formula(&mut r, n, m, 4);
            let truth = eval_pi2sat(&f).unwrap();
            truths += usize::from(truth);
            let (q1, q2) = reduce_pi2sat(&f, variant);
            match canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(32)) {
                Ok(res) if res.holds == truth => *per_variant.entry(variant.name()).or_insert(0) += 1,
                other => bad.push(format!("{variant} {f}: {other:?} formula={truth}")),
            }
        }
    }
    check(
        bad.is_empty() && per_variant.values().all(|&k| k >= 20),
        format!("{per_variant:?}, {truths} true formulas, {} disagreements{}", bad.len(), bad.first().map(|b| format!("; {b}")).unwrap_or_default()),
    )
}

fn transform_equivalence() -> Verdict {
    let opts = CorpusOptions::default();
    let (mut compared, mut held) = (0, 0);
    let mut bad = Vec::new();
    for (i, profile) in [AcProfile::Mixed, AcProfile::SiNe, AcProfile::ClosedRsi1].into_iter().enumerate() {
        for (q1, q2) in corpus(2000 + i as u64, 60, &opts, AcProfile::ClosedRsi1, profile) {
            let e = entailment_check(&q1, &q2).holds;
            match containment_via_transform(&q1, &q2) {
                Ok(t) if t == e => {
                    compared += 1;
                    held += usize::from(e);
                }
                other => bad.push(format!("{other:?} entailment={e}: {q1} | {q2}")),
            }
        }
    }
    check(
        compared >= 100 && bad.is_empty(),
        format!("{compared} pairs ({held} contained), {} disagreements{}", bad.len(), bad.first().map(|b| format!("; {b}")).unwrap_or_default()),
    )
}

fn certain_answer_agreement() -> Verdict {
    let mut r = rng(4242);
    let (mut compared, mut nonempty, mut undefined) = (0, 0, 0);
    let mut bad = Vec::new();
    for arity in [0, 1, 1] {
        let opts = CorpusOptions { predicates: vec![("e", 2)], head_arity: arity, ..CorpusOptions::default() };
        for _ in 0..40 {
            let case = random_rewriting_case(&mut r, &opts, 4);
            let m = mcr_rsi1(&case.query, &case.views).unwrap();
            match certain_answers_oracle_with(&case.query, &case.views, &case.instance, OracleOptions::with_bound(24)).unwrap() {
                CertainAnswers::Undefined => undefined += 1,
                CertainAnswers::Defined(expected) => {
                    let got = certain_answers(&m, &case.instance).unwrap();
                    compared += 1;
                    nonempty += usize::from(!expected.is_empty());
                    if got != expected {
                        bad.push(format!("{} on {}: {got:?} vs {expected:?}", case.query, case.instance));
                    }
                }
            }
        }
    }
    check(
        compared >= 30 && bad.is_empty(),
        format!("{compared} instances ({nonempty} with answers, {undefined} undefined skipped), {} disagreements", bad.len()),
    )
}

/// A database on which the query holds: the body of `q` under a model of its comparisons.
fn frozen(q: &Query) -> Option<Database> {
    let model = closure(&q.acs).model()?;
    let mut d = Database::new();
    for a in &q.body {
        let atom = a.substitute(|t| match t {
            Term::Var(v) => Term::Const(model[v]),
            c => c.clone(),
        });
        d.insert_atom(&atom);
    }
    Some(d)
}

fn random_edges<R: Rng>(r: &mut R, pool: &[Rat]) -> Database {
    let mut d = Database::new();
    for _ in 0..r.gen_range(3..=8) {
        let a = pool[r.gen_range(0..pool.len())];
        let b = pool[r.gen_range(0..pool.len())];
        d.insert(Name::from("e"), vec![a, b]);
    }
    d
}

fn sandwich() -> Verdict {
    let intro = (
        q("q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 5."),
        views("v1(Z) :- e(X,Y), e(Y,Z), X >= 5.\nv2(X) :- e(X,Y), e(Y,Z), Z <= 5."),
    );
    let chain = (
        q("q() :- e(X,Z), e(Z,Y), X >= 5, Y <= 8."),
        views(
            "v1(X,Y) :- e(X,Z), e(Z,Y), Z >= 5.\n\
             v2(X,Y) :- e(X,Z), e(Z,Y), Z <= 8.\n\
             v3(X,Y) :- e(X,Z1), e(Z1,Z2), e(Z2,Z3), e(Z3,Y).",
        ),
    );
    let transitive = (
        q("q() :- e(X,Z), e(Z,Y), X >= 50, Y <= 80, Z <= 30."),
        views(
            "v1(X,Y) :- e(X,Z), e(Z,Y), Z >= 50.\n\
             v2(X,Y) :- e(X,Z), e(Z,Y), Z <= 80, X <= 30.\n\
             v3(X,Y) :- e(X,Z1), e(Z1,Z2), e(Z2,Z3), e(Z3,Y), X <= Z2, Z2 <= Y.",
        ),
    );
    let heads = (
        q("q(A) :- e(A,X), e(X,Y), X >= 5, Y <= 8."),
        views("v1(A,Y) :- e(A,X), e(X,Y), X >= 5.\nv2(A,X) :- e(A,X).\nv3(X) :- e(X,Y), Y <= 7."),
    );
    let mut r = rng(606);
    let (mut expansions, mut databases) = (0, 0);
    let mut bad = Vec::new();
    for (query, vs) in [&intro, &chain, &transitive, &heads] {
        let m = mcr_rsi1(query, vs).unwrap();
        let mut pool: Vec<Rat> = query.constants().into_iter().collect();
        for v in vs.iter() {
            pool.extend(v.constants());
        }
        let extra: Vec<Rat> = pool.iter().flat_map(|c| [c - int(1), c + int(1)]).collect();
        pool.extend(extra);
        pool.extend((1..=4).map(int));
        for e in expansions_up_to_depth(&m.program, 3) {
            expansions += 1;
            if !check_contained_rewriting(&e, query, vs).unwrap() {
                bad.push(format!("not contained: {e}"));
            }
            let x = expand(&e, vs).unwrap();
            let mut dbs: Vec<Database> = frozen(&x).into_iter().collect();
            dbs.extend((0..50).map(|_| random_edges(&mut r, &pool)));
            for d in &dbs {
                databases += 1;
                let got = evaluate(&e, &materialize_views(vs, d));
                if !got.is_subset(&evaluate(query, d)) {
                    bad.push(format!("{e} answers {got:?} beyond the query on {d}"));
                }
            }
        }
    }
    let (query, vs) = &intro;
    let m = mcr_rsi1(query, vs).unwrap();
    for text in ["r() :- v1(Z), Z <= 5.", "r() :- v2(X), X >= 5.", "r() :- v1(Z), v2(X), X >= Z."] {
        if !covers(&m, &q(text), query, vs).unwrap() {
            bad.push(format!("not covered: {text}"));
        }
    }
    let (query, vs) = &transitive;
    let m = mcr_rsi1(query, vs).unwrap();
    let chain_rewriting = q("r() :- v1(X,Y), v3(Y,Z1), v3(Z1,Z2), v3(Z2,Z3), v3(Z3,Z4), v2(Z4,W), \
                             Y <= Z1, Z1 <= Z2, Z2 <= Z3, Z3 <= Z4, Z4 <= W.");
    if !covers(&m, &chain_rewriting, query, vs).unwrap() {
        bad.push(format!("not covered: {chain_rewriting}"));
    }
    check(
        bad.is_empty() && expansions > 0,
        format!("{expansions} expansions on {databases} databases, 4 rewritings covered, {} violations{}", bad.len(), bad.first().map(|b| format!("; {b}")).unwrap_or_default()),
    )
}

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];
const OPS: [Op; 6] = [Op::Lt, Op::Le, Op::Eq, Op::Ne, Op::Ge, Op::Gt];

fn random_term<R: Rng>(r: &mut R) -> Term {
    if r.gen_bool(0.75) {
        Term::var(VARS[r.gen_range(0..VARS.len())])
    } else {
        Term::constant([3, 5, 7][r.gen_range(0..3)])
    }
}

fn random_acset<R: Rng>(r: &mut R) -> ACSet {
    let mut acs = ACSet::new();
    for _ in 0..r.gen_range(1..=5) {
        let (a, op, b) = (random_term(r), OPS[r.gen_range(0..OPS.len())], random_term(r));
        acs.insert_atomic(Comparison::fold(a, op, b));
    }
    acs
}

fn random_si<R: Rng>(r: &mut R, ops: &[Op]) -> Comparison {
    Comparison::new(
        Term::var(VARS[r.gen_range(0..VARS.len())]),
        ops[r.gen_range(0..ops.len())],
        Term::constant([3, 5, 7][r.gen_range(0..3)]),
    )
}

fn satisfied(acs: &ACSet, a: &BTreeMap<Name, Rat>) -> bool {
    !acs.has_false_fold() && acs.iter().all(|c| c.eval(|v| a.get(v).copied()) == Some(true))
}

fn closure_laws() -> Verdict {
    let mut r = rng(7007);
    let (mut trials, mut satisfying, mut implications) = (0, 0, [0, 0]);
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let acs = random_acset(&mut r);
        let cl = closure(&acs);
        let derived = cl.derived();
        if cl.consistent {
            let again: ACSet = derived.iter().cloned().collect();
            if closure(&again).derived() != derived {
                bad.push(format!("not idempotent on {:?}", acs.iter().map(ToString::to_string).collect::<Vec<_>>()));
            }
        }
        for _ in 0..100 {
            trials += 1;
            let a: BTreeMap<Name, Rat> = VARS.iter().map(|v| (Name::from(*v), Rat::new(r.gen_range(4..=16), 2))).collect();
            if satisfied(&acs, &a) {
                satisfying += 1;
                if !cl.consistent || derived.iter().any(|c| c.eval(|v| a.get(v).copied()) != Some(true)) {
                    bad.push(format!("unsound closure under {a:?}"));
                }
            }
        }
        if !is_consistent(&acs) {
            continue;
        }
        for (law, ops, limit) in [(0, &[Op::Le][..], 1), (1, &[Op::Le, Op::Ge][..], 2)] {
            let rhs: Vec<Comparison> = (0..r.gen_range(1..=4)).map(|_| random_si(&mut r, ops)).collect();
            if implication_holds(&acs, &rhs) {
                implications[law] += 1;
                let m = minimal_form(&acs, &rhs).unwrap();
                if m.len() > limit {
                    bad.push(format!("minimal form of {} disjuncts", m.len()));
                }
            }
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{trials} assignment trials ({satisfying} satisfying), {} closed-LSI and {} closed-SI implications, {} violations",
            implications[0],
            implications[1],
            bad.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("oracle agreement", oracle_agreement),
        ("fixture goldens", fixture_goldens),
        ("reduction correctness", reduction_correctness),
        ("transformation equivalence", transform_equivalence),
        ("certain answers", certain_answer_agreement),
        ("rewriting sandwich", sandwich),
        ("closure laws", closure_laws),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let (status, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let line = format!("criterion {} {name}: {status} ({detail}; {:.1}s)\n", i + 1, start.elapsed().as_secs_f64());
        let _ = std::io::stderr().write_all(line.as_bytes());
        if verdict.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
