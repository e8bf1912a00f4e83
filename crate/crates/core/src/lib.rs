//! Constraint-based local search where constraints are described by finite
//! automata.
//!
//! An automaton is unrolled over the constrained sequence into a
//! [`layered::LayeredGraph`]. A [`segviol::SegmentationState`] then keeps the
//! constraint violation and the violation of every variable up to date as
//! variables change, in time linear in the length of the changed suffix. The
//! [`model`] and [`search`] modules use this to solve rotating-roster and
//! similar personnel scheduling instances with tabu search.

pub mod automaton;
pub mod baseline;
pub mod bench;
pub mod cli;
pub mod layered;
pub mod model;
pub mod search;
pub mod segviol;
