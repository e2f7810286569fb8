//! Symbolic reasoning over arithmetic comparisons on a dense rational order.

mod closure;
mod term;

pub use closure::{
    closure, closure_with, contradiction_core, implication_holds, implies, interpolate,
    is_consistent, minimal_form, ACClosure, ACSet, AcError, ClosureOptions,
};
pub use term::{
    classify_ac, fmt_rat, int, midpoint, parse_rat, ACType, Atomic, Comparison, Name, Op, Rat,
    SiLabel, Term,
};
