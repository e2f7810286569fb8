//! Containment of a closed right-semi-interval query through its Datalog program.

use std::collections::BTreeSet;
use std::error::Error;

use cqac::containment::entailment_check;
use cqac::datalog::contains_cq;
use cqac::query_model::Query;
use cqac::transform::{containment_via_transform, relevant_sis, to_cq, to_datalog};

pub fn run() -> Result<(), Box<dyn Error>> {
    let q1 = Query::parse("q() :- e(X,Y), e(Y,Z), X >= 5, Z <= 8.")?;
    let q2 = Query::parse("q() :- e(A,B), e(B,C), e(C,D), e(D,E), A >= 6, E <= 7.")?;
    let constants: BTreeSet<_> = q1.constants().union(&q2.constants()).copied().collect();
    let relevant = relevant_sis(&q2, &constants);
    let program = to_datalog(&q1, &relevant)?;
    print!("{program}");
    let cq = to_cq(&q2, &constants);
    println!("comparison-free form: {cq}");
    let derived = contains_cq(&program, &cq)?;
    println!("program derives the query: {derived}");
    assert_eq!(derived, entailment_check(&q1, &q2).holds);
    assert_eq!(containment_via_transform(&q1, &q2)?, derived);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
