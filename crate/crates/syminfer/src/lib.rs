//! Invariant generation for a small integer imperative language.
//!
//! The pipeline infers candidate polynomial equalities and octagonal
//! inequalities from concrete states, then verifies or refutes each candidate
//! against the disjunction of depth-bounded symbolic states, feeding
//! counterexamples back into inference until the set stabilizes.
//!
//! See the crate examples for end-to-end usage; the `syminfer` binary wraps
//! the same entry points.

pub mod bounds;
pub mod cegir;
pub mod cstates;
pub mod infer;
pub mod lang;
pub mod poly;
pub mod runner;
pub mod smt;
pub mod symexec;
