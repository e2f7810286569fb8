//! Containment, Datalog transformation and view-based rewriting for
//! conjunctive queries with arithmetic comparisons over a dense order.

#![allow(clippy::type_complexity)]

pub mod ac_core;
pub mod cli;
pub mod query_model;
pub mod containment;
pub mod corpus;
pub mod datalog;
pub mod hardness_gen;
pub mod rewriting;
pub mod transform;
