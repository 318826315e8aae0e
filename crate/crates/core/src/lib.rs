//! Dynamic epistemic logics parameterized by action signatures: exact
//! model checking over update-product semantics, bisimulation machinery,
//! rewriting to normal form with a verified termination measure, a
//! filtration-based satisfiability decider for the star-free fragment, and
//! a semantics-preserving translation into PDL.

pub mod bisim;
pub mod canon;
pub mod corpus;
pub mod decide;
pub mod kripke;
pub mod oracle;
pub mod pdl;
pub mod rewrite;
pub mod semantics;
pub mod syntax;
