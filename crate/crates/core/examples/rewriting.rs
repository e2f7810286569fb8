//! Maximally contained rewriting over views and certain answers on a view instance.

use std::collections::BTreeSet;
use std::error::Error;

use cqac::ac_core::{fmt_rat, Rat};
use cqac::containment::OracleOptions;
use cqac::query_model::{Database, Query, Workspace};
use cqac::rewriting::{certain_answers, certain_answers_oracle_with, check_contained_rewriting, mcr_rsi1, CertainAnswers};

pub fn run() -> Result<(), Box<dyn Error>> {
    let q = Query::parse("q(X) :- e(X,Y), e(Y,Z), Z <= 5.")?;
    let views = Workspace::parse("v1(X,Y) :- e(X,Y).\nv2(Y) :- e(Y,Z), Z <= 3.")?.rules;
    let m = mcr_rsi1(&q, &views)?;
    print!("{m}");

    let r = Query::parse("q(X) :- v1(X,Y), v2(Y).")?;
    println!("{r} is contained: {}", check_contained_rewriting(&r, &q, &views)?);

    let instance = Database::parse("v1(1,2). v2(2). v1(4,6). v1(6,7).")?;
    let answers = certain_answers(&m, &instance)?;
    println!("certain answers: {}", tuples(&answers));
    let oracle = certain_answers_oracle_with(&q, &views, &instance, OracleOptions::with_bound(16))?;
    assert_eq!(oracle, CertainAnswers::Defined(answers));
    Ok(())
}

fn tuples(set: &BTreeSet<Vec<Rat>>) -> String {
    let items: Vec<String> = set.iter().map(|t| format!("({})", t.iter().map(fmt_rat).collect::<Vec<_>>().join(","))).collect();
    format!("{{{}}}", items.join(", "))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
