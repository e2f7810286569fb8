//! Containment of queries with comparisons under each decision procedure.

use std::error::Error;

use cqac::containment::{
    canonical_oracle_check, classify_fragment, entailment_check, fast_contains, Strategy, Witness,
};
use cqac::query_model::{evaluate, Query};

pub fn run() -> Result<(), Box<dyn Error>> {
    let q1 = Query::parse("q() :- r(X,Y), s(Y,Z), X <= 4, Z >= 7.")?;
    let q2 = Query::parse("q() :- r(A,B), s(B,C), r(C,D), A <= 3, C >= 8.")?;
    println!("q1: {q1}\nq2: {q2}");
    println!("fragment: {}", classify_fragment(&q1, &q2));

    let e = entailment_check(&q1, &q2);
    if let Witness::Mappings(ms) = &e.witness {
        for m in ms {
            println!("mapping: {m}");
        }
    }
    let fast = fast_contains(&q1, &q2, Strategy::Auto)?;
    let oracle = canonical_oracle_check(&q1, &q2)?;
    println!("entailment {} / auto {} / oracle {}", e.holds, fast.holds, oracle.holds);
    assert!(e.holds && fast.holds && oracle.holds);

    let reverse = entailment_check(&q2, &q1);
    let db = reverse.counterexample().ok_or("expected a counterexample")?;
    println!("q1 is not contained in q2: {} satisfies q1 only", db.to_string().replace('\n', " ").trim_end());
    assert!(!evaluate(&q1, db).is_empty() && evaluate(&q2, db).is_empty());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
