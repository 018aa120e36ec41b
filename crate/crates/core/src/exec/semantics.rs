//! Terms computed by an execution, and the assumptions it makes about them.

use std::collections::HashSet;

use thiserror::Error;

use crate::syntax::{MethodId, Signature, Var};
use crate::terms::{TermArena, TermId};

use super::{Letter, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("letter {position}: variable `{var}` is undefined")]
    Undefined { position: usize, var: String },
    #[error("letter {position}: return without a matching call")]
    UnmatchedReturn { position: usize },
    #[error("letter {position}: return assigns {got} variable(s) but `{method}` has {expected} output(s)")]
    ReturnArity {
        position: usize,
        method: String,
        expected: usize,
        got: usize,
    },
    #[error("letter {position}: reference outside the trace vocabulary")]
    Malformed { position: usize },
}

/// Result of evaluating an execution in the free term algebra.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub arena: TermArena,
    /// `frames[i][v]` is the term held by `v` after the first `i` letters;
    /// `None` for ghosts not yet assigned.
    pub frames: Vec<Vec<Option<TermId>>>,
    pub alpha: Vec<(TermId, TermId)>,
    pub beta: Vec<(TermId, TermId)>,
    /// Every term held by some variable after some prefix, in order of
    /// first appearance.
    pub terms_seen: Vec<TermId>,
    /// Number of calls still pending at the end.
    pub pending_calls: usize,
}

impl Evaluation {
    /// The term held by `v` after the whole execution.
    pub fn comp(&self, v: Var) -> Option<TermId> {
        self.frames.last().expect("at least the initial frame")[v.index()]
    }
}

fn check_letter(sig: &Signature, position: usize, l: &Letter) -> Result<(), ExecError> {
    let bad = ExecError::Malformed { position };
    let var_ok = |v: &Var| v.index() < sig.var_count();
    let ok = match l {
        Letter::Copy { dst, src } => var_ok(dst) && var_ok(src),
        Letter::Ghost { ghost, src } => var_ok(ghost) && var_ok(src),
        Letter::Apply { dst, fun, args } => {
            var_ok(dst) && fun.index() < sig.funs.len() && sig.arity(*fun) == args.len() && args.iter().all(var_ok)
        }
        Letter::AssumeEq(x, y) | Letter::AssumeNe(x, y) => var_ok(x) && var_ok(y),
        Letter::Call(m) => m.index() < sig.methods.len(),
        Letter::Return(ws) => ws.iter().all(var_ok),
    };
    if ok {
        Ok(())
    } else {
        Err(bad)
    }
}

/// Evaluates `trace` letter by letter. Calls save the caller's frame; the
/// callee starts from the caller's values. A return restores the saved frame
/// and assigns the callee's outputs to the returned variables.
pub fn evaluate(sig: &Signature, trace: &Trace) -> Result<Evaluation, ExecError> {
    let mut arena = TermArena::new(sig);
    let mut cur: Vec<Option<TermId>> = sig
        .all_var_ids()
        .map(|v| if sig.is_ghost(v) { None } else { Some(arena.init(v)) })
        .collect();
    let mut frames = vec![cur.clone()];
    let mut seen: HashSet<TermId> = HashSet::new();
    let mut terms_seen = Vec::new();
    let mut record = |frame: &[Option<TermId>], seen: &mut HashSet<TermId>| {
        for t in frame.iter().flatten() {
            if seen.insert(*t) {
                terms_seen.push(*t);
            }
        }
    };
    record(&cur, &mut seen);
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut stack: Vec<(Vec<Option<TermId>>, MethodId)> = Vec::new();

    for (i, l) in trace.letters.iter().enumerate() {
        check_letter(sig, i, l)?;
        let read = |v: Var| {
            cur[v.index()].ok_or_else(|| ExecError::Undefined {
                position: i,
                var: sig.var_name(v).to_string(),
            })
        };
        match l {
            Letter::Copy { dst, src } => cur[dst.index()] = Some(read(*src)?),
            Letter::Ghost { ghost, src } => cur[ghost.index()] = Some(read(*src)?),
            Letter::Apply { dst, fun, args } => {
                let ts = args.iter().map(|a| read(*a)).collect::<Result<Vec<_>, _>>()?;
                let t = arena.app(*fun, &ts).map_err(|_| ExecError::Malformed { position: i })?;
                cur[dst.index()] = Some(t);
            }
            Letter::AssumeEq(x, y) => alpha.push((read(*x)?, read(*y)?)),
            Letter::AssumeNe(x, y) => beta.push((read(*x)?, read(*y)?)),
            Letter::Call(m) => stack.push((cur.clone(), *m)),
            Letter::Return(ws) => {
                let (saved, m) = stack.pop().ok_or(ExecError::UnmatchedReturn { position: i })?;
                let outs = sig.outs(m);
                if outs.len() != ws.len() {
                    return Err(ExecError::ReturnArity {
                        position: i,
                        method: sig.method_name(m).to_string(),
                        expected: outs.len(),
                        got: ws.len(),
                    });
                }
                let results: Vec<Option<TermId>> = outs.iter().map(|o| cur[o.index()]).collect();
                cur = saved;
                for (w, t) in ws.iter().zip(results) {
                    cur[w.index()] = t;
                }
            }
        }
        record(&cur, &mut seen);
        frames.push(cur.clone());
    }
    Ok(Evaluation {
        arena,
        frames,
        alpha,
        beta,
        terms_seen,
        pending_calls: stack.len(),
    })
}

/// The term `x` holds after `trace`, rendered with the arena that built it.
pub fn comp(sig: &Signature, trace: &Trace, x: Var) -> Result<Option<(TermArena, TermId)>, ExecError> {
    let ev = evaluate(sig, trace)?;
    Ok(ev.comp(x).map(|t| (ev.arena, t)))
}

/// Equality and disequality assumptions of `trace`, in order.
pub fn assumes(
    sig: &Signature,
    trace: &Trace,
) -> Result<(TermArena, Vec<(TermId, TermId)>, Vec<(TermId, TermId)>), ExecError> {
    let ev = evaluate(sig, trace)?;
    Ok((ev.arena, ev.alpha, ev.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::parse_trace;

    fn render(ev: &Evaluation, sig: &Signature, v: &str) -> String {
        ev.arena.display(sig, ev.comp(sig.lookup_var(v).unwrap()).unwrap())
    }

    #[test]
    fn empty_execution_holds_initial_values() {
        let t = parse_trace("vars x;").unwrap();
        let ev = evaluate(&t.sig, &t).unwrap();
        assert_eq!(render(&ev, &t.sig, "x"), "x^");
        assert!(ev.alpha.is_empty() && ev.beta.is_empty());
    }

    #[test]
    fn return_rebinds_outputs_and_restores_the_rest() {
        let src = "vars x, y; funs n/1; methods m(out x);\ncall m\nx := n(x)\ny := x\n";
        let t = parse_trace(&format!("{src}<x> := return\n")).unwrap();
        let ev = evaluate(&t.sig, &t).unwrap();
        assert_eq!(render(&ev, &t.sig, "x"), "n(x^)");
        assert_eq!(render(&ev, &t.sig, "y"), "y^");
        let t = parse_trace(&format!("{src}<y> := return\n")).unwrap();
        let ev = evaluate(&t.sig, &t).unwrap();
        assert_eq!(render(&ev, &t.sig, "x"), "x^");
        assert_eq!(render(&ev, &t.sig, "y"), "n(x^)");
    }

    #[test]
    fn unassigned_ghost_is_undefined() {
        let t = parse_trace("vars x; ghosts g;\ng := x\n").unwrap();
        let ev = evaluate(&t.sig, &t).unwrap();
        assert_eq!(ev.frames[0][1], None);
        assert_eq!(ev.frames[1][1], ev.frames[1][0]);
    }

    #[test]
    fn unmatched_return_is_an_error() {
        let t = parse_trace("vars x; methods m();\n<> := return\n").unwrap();
        assert_eq!(
            evaluate(&t.sig, &t).unwrap_err(),
            ExecError::UnmatchedReturn { position: 0 }
        );
    }
}
