//! Closure of a comparison set and implication of disjunctions.

use std::error::Error;

use cqac::ac_core::{closure, implication_holds, implies, minimal_form, ACSet, Comparison, Op, Term};

pub fn run() -> Result<(), Box<dyn Error>> {
    let (x, y) = (Term::var("X"), Term::var("Y"));
    let acs: ACSet = [Comparison::new(x.clone(), Op::Lt, y.clone()), Comparison::new(y.clone(), Op::Le, Term::constant(5))]
        .into_iter()
        .collect();
    let cl = closure(&acs);
    println!("closure of {{X < Y, Y <= 5}}:");
    for c in cl.derived().iter().filter(|c| c.lhs() != c.rhs()) {
        println!("  {c}");
    }
    assert!(implies(&acs, &Comparison::new(x.clone(), Op::Lt, Term::constant(5)))?);
    println!("model: {:?}", cl.model().ok_or("inconsistent")?);

    let order: ACSet = [Comparison::new(x.clone(), Op::Le, y.clone())].into_iter().collect();
    let rhs = [
        Comparison::new(x.clone(), Op::Lt, Term::constant(3)),
        Comparison::new(y.clone(), Op::Gt, Term::constant(2)),
        Comparison::new(y, Op::Gt, Term::constant(100)),
    ];
    assert!(implication_holds(&order, &rhs));
    let minimal = minimal_form(&order, &rhs)?;
    let text: Vec<String> = minimal.iter().map(ToString::to_string).collect();
    println!("X <= Y implies {}", text.join(" or "));
    assert_eq!(minimal.len(), 2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
