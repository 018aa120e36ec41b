//! Verification of uninterpreted programs.
//!
//! Programs are compiled to execution automata and intersected with a
//! streaming congruence-closure automaton that tracks, over variable classes,
//! what the executions assume about the terms they compute. The reference
//! oracles in [`terms`] evaluate the same questions by brute force on
//! explicit terms and serve as ground truth in tests.

pub mod coherence;
pub mod error;
pub mod exec;
pub mod ghost;
pub mod recvpa;
pub mod scc;
pub mod search;
pub mod syntax;
pub mod terms;
pub mod verifier;

pub use error::AnalysisError;
pub use search::Limits;
