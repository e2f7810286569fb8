//! Containment of conjunctive queries with arithmetic comparisons.
//!
//! `entailment_check` decides containment through the containment entailment
//! over all mappings of the normalized queries. `canonical_oracle_check` is an
//! independent semantic decider over canonical databases. `fast_contains`
//! runs the single-certificate procedures on the fragments where they are complete.

mod canonical;
mod entail;
mod fast;
mod mapping;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ac_core::{Name, Term};
use crate::query_model::Database;

pub use canonical::{canonical_databases, canonical_oracle_check, canonical_oracle_check_with, scale_bound, OracleOptions, SCALE_ENV};
pub use entail::entailment_check;
pub(crate) use entail::freeze;
pub use fast::{classify_fragment, classify_fragment_with, fast_contains, ClassifyOptions, FragmentClass, Strategy};
pub use mapping::{enumerate_mappings, homomorphisms, reduce_by_single_mapping, single_mapping_vars};

/// An assignment of the containing query's variables to terms of the contained query.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ContainmentMapping {
    pub assignment: BTreeMap<Name, Term>,
}

impl ContainmentMapping {
    /// Image of a term; constants and unmapped variables are kept.
    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.assignment.get(v).cloned().unwrap_or_else(|| t.clone()),
            c => c.clone(),
        }
    }
}

impl fmt::Display for ContainmentMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, t)) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        Ok(())
    }
}

/// Supporting evidence for a containment verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Mappings whose images prove the entailment.
    Mappings(Vec<ContainmentMapping>),
    /// A database on which the contained query has an answer the containing query lacks.
    Counterexample(Database),
    /// The contained query is unsatisfiable.
    Vacuous,
    /// Every canonical database was covered; the count is of partial or complete
    /// databases on which the containing query was evaluated.
    Exhaustive { databases: usize },
    /// The verdict carries no certificate.
    None,
}

/// Verdict of a containment test `q2 ⊑ q1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentResult {
    pub holds: bool,
    pub witness: Witness,
}

impl ContainmentResult {
    pub fn contained(witness: Witness) -> ContainmentResult {
        ContainmentResult { holds: true, witness }
    }

    pub fn not_contained(witness: Witness) -> ContainmentResult {
        ContainmentResult { holds: false, witness }
    }

    pub fn counterexample(&self) -> Option<&Database> {
        match &self.witness {
            Witness::Counterexample(db) => Some(db),
            _ => None,
        }
    }
}

/// Errors and refusals of the containment deciders.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContainmentError {
    #[error("canonical enumeration needs {size} elements, bound is {bound}")]
    ScaleBound { size: usize, bound: usize },
    #[error("strategy {strategy} does not apply to fragment {class}: {condition}")]
    Fragment { strategy: Strategy, class: FragmentClass, condition: String },
    #[error("no containment mapping exists")]
    NoMapping,
}
