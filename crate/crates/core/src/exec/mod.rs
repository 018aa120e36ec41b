//! Executions: the letter alphabet, trace files, computed terms, and the
//! execution automata of flat programs.

mod letter;
pub(crate) mod nfa;
mod semantics;
mod trace;

pub use letter::{Letter, LetterDisplay, LetterKind};
pub use nfa::{exec_nfa, stmt_nfa, Mode, Nfa, NfaError};
pub use semantics::{assumes, comp, evaluate, Evaluation, ExecError};
pub use trace::{parse_trace, print_trace, Trace};
