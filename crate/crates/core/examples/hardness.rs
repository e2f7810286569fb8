//! Containment pairs from quantified Boolean formulas, checked by the oracle.

use std::error::Error;

use cqac::containment::{canonical_oracle_check_with, OracleOptions};
use cqac::corpus::rng;
use cqac::hardness_gen::{eval_pi2sat, random_formula, reduce_pi2sat, GadgetVariant, Pi2Formula};

pub fn run() -> Result<(), Box<dyn Error>> {
    let f: Pi2Formula = "(forall (p) (exists (q) (and (or p q) (or (not p) (not q)))))".parse()?;
    let (q1, q2) = reduce_pi2sat(&f, GadgetVariant::NeqOnly);
    println!("{f} is {}\ncontaining: {q1}\ncontained:  {q2}", eval_pi2sat(&f)?);

    let mut g = rng(5);
    for i in 0..4 {
        let f = random_formula(&mut g, 1, 1 + i % 2, 3);
        let truth = eval_pi2sat(&f)?;
        for v in GadgetVariant::ALL {
            let (q1, q2) = reduce_pi2sat(&f, v);
            let r = canonical_oracle_check_with(&q1, &q2, OracleOptions::with_bound(24))?;
            assert_eq!(r.holds, truth, "{f} {v}");
        }
        println!("{f}: {truth} under every variant");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
