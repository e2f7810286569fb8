//! Parsing, normalization, evaluation and view expansion.

use std::collections::BTreeSet;
use std::error::Error;

use cqac::ac_core::{fmt_rat, Rat};
use cqac::query_model::{evaluate, expand, materialize_views, normalize, Database, Query, Workspace};

pub fn run() -> Result<(), Box<dyn Error>> {
    let q = Query::parse("q(X) :- e(X,Y), e(Y,Y), Y >= 2.")?;
    println!("normalized: {}", normalize(&q));

    let db = Database::parse("e(1,2). e(2,2). e(3,1). e(1,1).")?;
    println!("answers: {}", tuples(&evaluate(&q, &db)));

    let views = Workspace::parse("v(A,B) :- e(A,B), B >= 2.\nw(A) :- e(A,A).")?.rules;
    let r = Query::parse("r(X) :- v(X,Y), w(Y).")?;
    let e = expand(&r, &views)?;
    println!("expansion of {r}\n  {e}");
    let vdb = materialize_views(&views, &db);
    println!("view instance: {}", vdb.to_string().replace('\n', " ").trim_end());
    assert_eq!(evaluate(&e, &db), evaluate(&r, &vdb));
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
