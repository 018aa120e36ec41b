//! Verification of flat programs: a coherence check of the lowered program,
//! then a search for a feasible complete execution of it.

use crate::coherence::program_is_coherent;
use crate::error::AnalysisError;
use crate::exec::{exec_nfa, Mode, Trace};
use crate::scc::{self, SccState};
use crate::search::{bfs, Limits};
use crate::syntax::{lower_postcondition, Formula, Program};
use crate::terms::ViolationKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    /// A feasible complete execution of the lowered program and the
    /// automaton state it ends in. With ghosts, `ghost_witness` is a
    /// coherent execution whose projection is `counterexample`.
    Violated {
        counterexample: Trace,
        final_state: SccState,
        ghost_witness: Option<Trace>,
    },
    NotCoherent {
        witness: Trace,
        kind: ViolationKind,
        detail: String,
    },
    NotKCoherent {
        k: usize,
        witness: Trace,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Violated { .. } => "violated",
            Verdict::NotCoherent { .. } => "not-coherent",
            Verdict::NotKCoherent { .. } => "not-k-coherent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub verdict: Verdict,
    /// Product states visited by the searches.
    pub explored: usize,
}

/// The program's postcondition, `false` when absent.
pub fn postcondition(p: &Program) -> Formula {
    p.post.clone().unwrap_or(Formula::False)
}

/// Shortest feasible complete execution of a flat program, with the
/// automaton state it ends in.
pub fn shortest_feasible(p: &Program, limits: &Limits) -> Result<(Option<(Trace, SccState)>, usize), AnalysisError> {
    let nfa = exec_nfa(p, Mode::Complete).map_err(|_| AnalysisError::Recursive)?;
    let sig = &p.sig;
    let out = bfs(
        vec![(nfa.initial, scc::initial_state(sig))],
        |(q, s)| {
            let mut next = Vec::new();
            for (a, t) in nfa.successors(*q) {
                let s2 = scc::step(sig, s, a)?;
                if s2 != SccState::Reject {
                    next.push((a.clone(), (*t, s2)));
                }
            }
            Ok(next)
        },
        |(q, s)| nfa.accepting[*q] && *s != SccState::Reject,
        limits,
    )?;
    let found = out.found.map(|f| {
        let last = f.states.last().expect("nonempty path").1.clone();
        (Trace::new(sig.clone(), f.letters), last)
    });
    Ok((found, out.explored))
}

/// Shortest feasible complete execution of a flat program, if any.
pub fn shortest_feasible_execution(p: &Program, limits: &Limits) -> Result<Option<Trace>, AnalysisError> {
    Ok(shortest_feasible(p, limits)?.0.map(|(t, _)| t))
}

/// Decides whether every complete execution of `p` satisfies `post`.
pub fn verify(p: &Program, post: &Formula, limits: &Limits) -> Result<Report, AnalysisError> {
    if p.is_recursive() {
        return Err(AnalysisError::Recursive);
    }
    let lowered = lower_postcondition(p, post);
    let coh = program_is_coherent(&lowered, limits)?;
    let mut explored = coh.explored;
    if let Some((witness, kind)) = coh.witness {
        let original = program_is_coherent(p, limits)?;
        explored += original.explored;
        let detail = if original.coherent() {
            "the program is coherent but checking its postcondition is not; try ghost variables with --k".to_string()
        } else {
            "the program is not coherent; try ghost variables with --k".to_string()
        };
        return Ok(Report {
            verdict: Verdict::NotCoherent { witness, kind, detail },
            explored,
        });
    }
    let (found, n) = shortest_feasible(&lowered, limits)?;
    explored += n;
    let verdict = match found {
        None => Verdict::Verified,
        Some((counterexample, final_state)) => Verdict::Violated {
            counterexample,
            final_state,
            ghost_witness: None,
        },
    };
    Ok(Report { verdict, explored })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn verdict(src: &str) -> Verdict {
        let p = parse_program(src).unwrap();
        verify(&p, &postcondition(&p), &Limits::default()).unwrap().verdict
    }

    #[test]
    fn congruent_results_verify() {
        let v = verdict("vars x, y, z, w; funs f/1; program { assume(x = y); z := f(x); w := f(y); } post: z = w;");
        assert_eq!(v, Verdict::Verified);
    }

    #[test]
    fn skip_violates_false() {
        let v = verdict("vars x; program { skip }");
        let Verdict::Violated { counterexample, .. } = v else {
            panic!("{v:?}")
        };
        assert!(counterexample.is_empty());
    }

    #[test]
    fn contradictory_program_has_no_execution() {
        let p = parse_program("vars x; program { assume(x != x); skip }").unwrap();
        assert_eq!(shortest_feasible_execution(&p, &Limits::default()).unwrap(), None);
    }

    #[test]
    fn loop_exit_is_the_shortest_execution() {
        let p = parse_program("vars x; program { while (x != x) { skip } }").unwrap();
        let t = shortest_feasible_execution(&p, &Limits::default()).unwrap().unwrap();
        assert_eq!(t.letters.len(), 1);
        assert_eq!(t.letters[0].display(&p.sig).to_string(), "assume(x = x)");
    }

    #[test]
    fn violated_postcondition_is_reported() {
        let v = verdict("vars x, y; funs f/1; program { y := f(x); } post: x = y;");
        let Verdict::Violated { counterexample, .. } = v else {
            panic!("{v:?}")
        };
        assert_eq!(counterexample.len(), 2);
    }
}
