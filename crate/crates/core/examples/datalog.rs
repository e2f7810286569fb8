//! Semi-naive evaluation with comparison predicates, derivations and expansions.

use std::collections::BTreeSet;
use std::error::Error;

use cqac::ac_core::{fmt_rat, Rat};
use cqac::datalog::{evaluate_program, expansions_up_to_depth, fixpoint, DatalogProgram, EvalOptions};
use cqac::query_model::Database;

pub fn run() -> Result<(), Box<dyn Error>> {
    let p = DatalogProgram::parse(
        "@builtin u_le_4/1.\n\
         reach(X) :- start(X).\n\
         reach(Y) :- reach(X), e(X,Y), u_le_4(Y).\n\
         goal() :- reach(X), stop(X).\n\
         @query goal.",
    )?;
    print!("{p}");
    let db = Database::parse("start(1). e(1,3). e(3,4). e(4,6). e(3,7). stop(4).")?;
    println!("goal holds: {}", !evaluate_program(&p, &db)?.is_empty());

    let fx = fixpoint(&p, &db, EvalOptions { trace: true, ..EvalOptions::default() })?;
    println!("reach: {} after {} rounds", tuples(&fx.answers("reach")), fx.rounds);
    for ((pred, args), d) in &fx.derivations {
        if pred.as_ref() == "goal" {
            let body: Vec<String> = d.body.iter().map(|(p, vs)| format!("{p}({})", vs.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))).collect();
            let args: Vec<String> = args.iter().map(ToString::to_string).collect();
            println!("goal({}) by rule {} from {}", args.join(","), d.rule, body.join(", "));
        }
    }

    for e in expansions_up_to_depth(&p, 3) {
        println!("expansion: {e}");
    }
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
