#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use uncover::coherence::{coh_initial, coh_step, CohState};
use uncover::exec::{evaluate, Letter, Trace};
use uncover::scc::{self, SccState};
use uncover::syntax::{Cond, FunDecl, FunId, MethodDecl, MethodId, Program, ProgramKind, Signature, Stmt, Var};
use uncover::terms::{congruence_closure, TermId};

/// Three variables, one unary and one binary function.
pub fn small_sig() -> Signature {
    Signature::new(
        vec!["x".into(), "y".into(), "z".into()],
        vec![
            FunDecl {
                name: "f".into(),
                arity: 1,
            },
            FunDecl {
                name: "g".into(),
                arity: 2,
            },
        ],
    )
}

/// Every internal letter over the program variables, except self-copies
/// and assumptions with a repeated or reversed pair.
pub fn alphabet(sig: &Signature) -> Vec<Letter> {
    let vars: Vec<Var> = sig.program_var_ids().collect();
    let mut out = Vec::new();
    for &x in &vars {
        for &y in &vars {
            if x != y {
                out.push(Letter::Copy { dst: x, src: y });
            }
        }
    }
    for (i, f) in sig.funs.iter().enumerate() {
        let fun = FunId(i as u16);
        let mut tuples: Vec<Vec<Var>> = vec![vec![]];
        for _ in 0..f.arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    vars.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(*v);
                        t
                    })
                })
                .collect();
        }
        for &dst in &vars {
            for args in &tuples {
                out.push(Letter::apply(dst, fun, args));
            }
        }
    }
    for &x in &vars {
        for &y in &vars {
            if x < y {
                out.push(Letter::AssumeEq(x, y));
            }
        }
    }
    for &x in &vars {
        for &y in &vars {
            if x < y {
                out.push(Letter::AssumeNe(x, y));
            }
        }
    }
    out
}

/// Calls `visit` on every word of length at most `max_len`, depth first,
/// with the feasibility and coherence states of the word.
pub fn for_each_word(
    sig: &Signature,
    letters: &[Letter],
    max_len: usize,
    visit: &mut impl FnMut(&[Letter], &SccState, &CohState),
) {
    fn go(
        sig: &Signature,
        letters: &[Letter],
        max_len: usize,
        word: &mut Vec<Letter>,
        q: &SccState,
        c: &CohState,
        visit: &mut impl FnMut(&[Letter], &SccState, &CohState),
    ) {
        visit(word, q, c);
        if word.len() == max_len {
            return;
        }
        for a in letters {
            let q2 = scc::step(sig, q, a).unwrap();
            let c2 = coh_step(c, a);
            word.push(a.clone());
            go(sig, letters, max_len, word, &q2, &c2, visit);
            word.pop();
        }
    }
    let mut word = Vec::new();
    go(
        sig,
        letters,
        max_len,
        &mut word,
        &scc::initial_state(sig),
        &coh_initial(sig),
        visit,
    );
}

/// A random word of length `len`; with `coherent` set, every letter is
/// drawn among those the coherence automaton accepts.
pub fn random_word(sig: &Signature, letters: &[Letter], len: usize, coherent: bool, rng: &mut impl Rng) -> Vec<Letter> {
    let mut word = Vec::with_capacity(len);
    let mut c = coh_initial(sig);
    while word.len() < len {
        let a = letters.choose(rng).unwrap();
        let c2 = coh_step(&c, a);
        if coherent && !c2.is_coherent() {
            continue;
        }
        c = c2;
        word.push(a.clone());
    }
    word
}

/// Checks the three consistency clauses between the automaton state after
/// `trace` and the congruence closure of its equality assumptions.
pub fn check_consistency(trace: &Trace) -> Result<(), String> {
    let sig = &trace.sig;
    let report = scc::run(trace, false).map_err(|e| e.to_string())?;
    let SccState::Live(q) = report.final_state else {
        return Err("automaton rejected".into());
    };
    let ev = evaluate(sig, trace).map_err(|e| e.to_string())?;
    let mut arena = ev.arena.clone();
    let vars: Vec<Var> = sig.all_var_ids().filter(|v| ev.comp(*v).is_some()).collect();
    let comp = |v: Var| ev.comp(v).unwrap();
    let mut extra: Vec<(FunId, Vec<Var>, TermId)> = Vec::new();
    for (i, f) in sig.funs.iter().enumerate() {
        let mut tuples: Vec<Vec<Var>> = vec![vec![]];
        for _ in 0..f.arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    vars.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(*v);
                        t
                    })
                })
                .collect();
        }
        for args in tuples {
            let ts: Vec<TermId> = args.iter().map(|a| comp(*a)).collect();
            let t = arena.app(FunId(i as u16), &ts).unwrap();
            extra.push((FunId(i as u16), args, t));
        }
    }
    let domain = arena.subterm_closure(ev.terms_seen.iter().copied().chain(extra.iter().map(|e| e.2)));
    let cc = congruence_closure(&arena, &domain, &ev.alpha).unwrap();
    let cong = |a: TermId, b: TermId| cc.congruent(a, b).unwrap();
    for &x in &vars {
        for &y in &vars {
            let (ix, iy) = (x.index(), y.index());
            if q.same(ix, iy) != cong(comp(x), comp(y)) {
                return Err(format!(
                    "class clause fails for {} {}",
                    sig.var_name(x),
                    sig.var_name(y)
                ));
            }
            let in_d = q.has_diseq(q.class(ix).unwrap(), q.class(iy).unwrap());
            let in_beta = ev
                .beta
                .iter()
                .any(|(s, t)| (cong(*s, comp(x)) && cong(*t, comp(y))) || (cong(*s, comp(y)) && cong(*t, comp(x))));
            if in_d != in_beta {
                return Err(format!(
                    "disequality clause fails for {} {}",
                    sig.var_name(x),
                    sig.var_name(y)
                ));
            }
        }
    }
    for (f, args, t) in &extra {
        let slots: Vec<usize> = args.iter().map(|a| a.index()).collect();
        for &v in &vars {
            let automaton = q.lookup(*f, &slots) == q.class(v.index());
            if automaton != cong(*t, comp(v)) {
                return Err(format!(
                    "function clause fails for {} at {}",
                    sig.fun_name(*f),
                    sig.var_name(v)
                ));
            }
        }
    }
    Ok(())
}

/// Parses a program from the shared example corpus.
pub fn corpus_program(name: &str) -> uncover::syntax::Program {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    uncover::syntax::parse_program(&src).unwrap_or_else(|e| panic!("{}", e.render(&path)))
}

/// Parses a trace from the shared example corpus.
pub fn corpus_trace(name: &str) -> Trace {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    uncover::exec::parse_trace(&src).unwrap_or_else(|e| panic!("{}", e.render(&path)))
}

fn two_method_signature() -> Signature {
    let mut sig = small_sig();
    sig.vars.push("w".into());
    sig.program_vars = 4;
    sig.methods = vec![
        MethodDecl {
            name: "m".into(),
            outs: vec![Var(1)],
        },
        MethodDecl {
            name: "go".into(),
            outs: vec![],
        },
    ];
    sig
}

fn var<R: Rng>(rng: &mut R) -> Var {
    Var(rng.gen_range(0..4))
}

/// A random statement; calls only when `calls` is set, which holds inside
/// conditional branches so that recursion can stop.
fn random_stmt<R: Rng>(rng: &mut R, depth: usize, calls: bool) -> Stmt {
    let cond = |rng: &mut R| {
        let (a, b) = (var(rng), var(rng));
        if rng.gen_bool(0.5) {
            Cond::Eq(a, b)
        } else {
            Cond::Ne(a, b)
        }
    };
    let kinds = match (depth > 0, calls) {
        (false, false) => 4,
        (true, false) => 6,
        (_, true) => 8,
    };
    match rng.gen_range(0..kinds) {
        0 => Stmt::Copy {
            dst: var(rng),
            src: var(rng),
        },
        1 => Stmt::Apply {
            dst: var(rng),
            fun: FunId(0),
            args: vec![var(rng)],
        },
        2 => Stmt::Apply {
            dst: var(rng),
            fun: FunId(1),
            args: vec![var(rng), var(rng)],
        },
        3 => Stmt::Assume(cond(rng)),
        4 | 5 if depth > 0 => Stmt::If {
            cond: cond(rng),
            then: Box::new(random_block(rng, depth - 1, true)),
            els: Box::new(random_block(rng, depth - 1, true)),
        },
        4 | 5 => random_stmt(rng, depth, false),
        _ => {
            if rng.gen_bool(0.7) {
                Stmt::Call {
                    outs: vec![var(rng)],
                    method: MethodId(0),
                }
            } else {
                Stmt::Call {
                    outs: vec![],
                    method: MethodId(1),
                }
            }
        }
    }
}

fn random_block<R: Rng>(rng: &mut R, depth: usize, calls: bool) -> Stmt {
    Stmt::seq(
        (0..rng.gen_range(1..3))
            .map(|_| random_stmt(rng, depth, calls))
            .collect(),
    )
}

/// A random program with methods `m(out y)` and `go()`, entered at `go`.
/// Only `go` may call unconditionally.
pub fn random_two_method_program<R: Rng>(rng: &mut R) -> Program {
    let m = Stmt::seq((0..rng.gen_range(2..5)).map(|_| random_stmt(rng, 2, false)).collect());
    let go = Stmt::seq((0..rng.gen_range(2..5)).map(|_| random_stmt(rng, 2, true)).collect());
    Program {
        sig: two_method_signature(),
        kind: ProgramKind::Recursive,
        bodies: vec![m, go],
        main: MethodId(1),
        post: None,
    }
}
