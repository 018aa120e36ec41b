//! Lowering of postconditions to `false`: the negated postcondition is put
//! in disjunctive normal form and appended to the main body as a choice
//! over clauses, each clause a sequence of `assume` literals. The lowered
//! program has a feasible complete execution iff the original violates its
//! postcondition.

use super::ast::*;

/// Disjunctive normal form of `f`. Clauses containing `x != x` are dropped,
/// literals `x = x` are removed. An empty result denotes `false`; a clause
/// with no literals denotes `true`.
pub fn dnf(f: &Formula) -> Vec<Vec<Cond>> {
    let clauses = dnf_rec(f, true);
    let mut out: Vec<Vec<Cond>> = Vec::new();
    'clauses: for clause in clauses {
        let mut lits: Vec<Cond> = Vec::new();
        for lit in clause {
            match lit {
                Cond::Eq(x, y) if x == y => continue,
                Cond::Ne(x, y) if x == y => continue 'clauses,
                _ => {}
            }
            if !lits.contains(&lit) {
                lits.push(lit);
            }
        }
        if !out.contains(&lits) {
            out.push(lits);
        }
    }
    out
}

fn dnf_rec(f: &Formula, positive: bool) -> Vec<Vec<Cond>> {
    match (f, positive) {
        (Formula::True, true) | (Formula::False, false) => vec![vec![]],
        (Formula::True, false) | (Formula::False, true) => vec![],
        (Formula::Eq(x, y), true) => vec![vec![Cond::Eq(*x, *y)]],
        (Formula::Eq(x, y), false) => vec![vec![Cond::Ne(*x, *y)]],
        (Formula::Not(g), p) => dnf_rec(g, !p),
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            let mut out = dnf_rec(a, positive);
            out.extend(dnf_rec(b, positive));
            out
        }
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            let left = dnf_rec(a, positive);
            let right = dnf_rec(b, positive);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    let mut c = l.clone();
                    c.extend(r.iter().copied());
                    out.push(c);
                }
            }
            out
        }
    }
}

/// The statement checking `!post`: a choice over its DNF clauses.
pub fn violation_check(post: &Formula) -> Stmt {
    let clauses = dnf(&Formula::not(post.clone()));
    let mut arms: Vec<Stmt> = clauses
        .into_iter()
        .map(|c| Stmt::seq(c.into_iter().map(Stmt::Assume).collect()))
        .collect();
    if arms.len() == 1 {
        arms.pop().unwrap()
    } else {
        Stmt::Choice(arms)
    }
}

/// Appends the violation check for `post` to the main body and sets the
/// postcondition to `false`.
pub fn lower_postcondition(p: &Program, post: &Formula) -> Program {
    let mut out = p.clone();
    let main = out.main.index();
    let body = std::mem::replace(&mut out.bodies[main], Stmt::Skip);
    out.bodies[main] = Stmt::seq(vec![body, violation_check(post)]);
    out.post = Some(Formula::False);
    out
}

/// Lowers the program's own postcondition; a missing postcondition is `false`.
pub fn lower(p: &Program) -> Program {
    let post = p.post.clone().unwrap_or(Formula::False);
    lower_postcondition(p, &post)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::exec::{evaluate, exec_nfa, Mode, Trace};
    use crate::syntax::parse_program;
    use crate::terms::{oracle_feasible, TermArena, TermId, TermNode};

    const X: Var = Var(0);
    const Y: Var = Var(1);
    const Z: Var = Var(2);

    #[test]
    fn single_equality_appends_one_disequality() {
        assert_eq!(violation_check(&Formula::Eq(X, Y)), Stmt::Assume(Cond::Ne(X, Y)));
    }

    #[test]
    fn implication_becomes_one_clause() {
        let p = parse_program("vars b, T, u, k; program { skip } post: b = T => u = k;").unwrap();
        let check = violation_check(p.post.as_ref().unwrap());
        assert_eq!(
            check,
            Stmt::Seq(vec![Stmt::Assume(Cond::Eq(X, Y)), Stmt::Assume(Cond::Ne(Z, Var(3)))])
        );
    }

    #[test]
    fn disjunction_becomes_a_conjunction_of_disequalities() {
        let f = Formula::or(Formula::Eq(X, Y), Formula::Eq(X, Z));
        assert_eq!(dnf(&Formula::not(f)), vec![vec![Cond::Ne(X, Y), Cond::Ne(X, Z)]]);
    }

    #[test]
    fn trivial_literals_are_simplified() {
        assert_eq!(dnf(&Formula::Eq(X, X)), vec![vec![]]);
        assert_eq!(dnf(&Formula::ne(X, X)), Vec::<Vec<Cond>>::new());
        assert_eq!(violation_check(&Formula::True), Stmt::Choice(vec![]));
    }

    #[test]
    fn lowering_keeps_the_signature() {
        let p = parse_program("vars x, y, z; funs f/1; program { y := f(x); } post: x = y || z != y;").unwrap();
        let l = lower(&p);
        assert_eq!(l.sig, p.sig);
        assert_eq!(l.post, Some(Formula::False));
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let atom = (0..3u16, 0..3u16).prop_map(|(a, b)| Formula::Eq(Var(a), Var(b)));
        prop_oneof![atom, Just(Formula::True), Just(Formula::False)].prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::and(a, b)),
            ]
        })
    }

    fn arb_line() -> impl Strategy<Value = Stmt> {
        let v = || (0..3u16).prop_map(Var);
        prop_oneof![
            (v(), v()).prop_map(|(dst, src)| Stmt::Copy { dst, src }),
            (v(), v()).prop_map(|(dst, a)| Stmt::Apply {
                dst,
                fun: FunId(0),
                args: vec![a]
            }),
            (v(), v()).prop_map(|(a, b)| Stmt::Assume(Cond::Eq(a, b))),
            (v(), v()).prop_map(|(a, b)| Stmt::Assume(Cond::Ne(a, b))),
        ]
    }

    /// Every congruence on the finite `domain` satisfying `alpha` and
    /// `beta`, as a class-index function.
    fn models(
        arena: &TermArena,
        domain: &[TermId],
        alpha: &[(TermId, TermId)],
        beta: &[(TermId, TermId)],
    ) -> Vec<impl Fn(TermId) -> usize> {
        let n = domain.len();
        let mut out = Vec::new();
        let mut rgs = vec![0usize; n];
        loop {
            let class = |t: TermId| rgs[domain.iter().position(|&d| d == t).unwrap()];
            let closed = domain.iter().all(|&s| {
                domain.iter().all(|&t| {
                    let (TermNode::App(f, a), TermNode::App(g, b)) = (arena.node(s), arena.node(t)) else {
                        return true;
                    };
                    f != g || a.iter().zip(b).any(|(x, y)| class(*x) != class(*y)) || class(s) == class(t)
                })
            });
            if closed
                && alpha.iter().all(|&(a, b)| class(a) == class(b))
                && beta.iter().all(|&(a, b)| class(a) != class(b))
            {
                let snapshot = rgs.clone();
                let dom = domain.to_vec();
                out.push(move |t| snapshot[dom.iter().position(|&d| d == t).unwrap()]);
            }
            let mut i = n;
            loop {
                if i <= 1 {
                    return out;
                }
                i -= 1;
                let max = rgs[..i].iter().copied().max().unwrap_or(0);
                if rgs[i] <= max {
                    rgs[i] += 1;
                    rgs[i + 1..].iter_mut().for_each(|r| *r = 0);
                    break;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lowered_program_is_feasible_iff_post_fails(lines in proptest::collection::vec(arb_line(), 3), post in arb_formula()) {
            let sig = Signature::new(
                vec!["x".into(), "y".into(), "z".into()],
                vec![FunDecl { name: "f".into(), arity: 1 }],
            );
            let p = Program::flat(sig.clone(), Stmt::seq(lines), Some(post.clone()));
            let run = exec_nfa(&p, Mode::Complete).unwrap().words_up_to(3).into_iter().next().unwrap();
            let t = Trace::new(sig.clone(), run);
            let ev = evaluate(&sig, &t).unwrap();
            let comps: Vec<_> = sig.program_var_ids().map(|v| ev.comp(v).unwrap()).collect();
            let domain = ev.arena.subterm_closure(ev.terms_seen.iter().copied().chain(comps.iter().copied()));
            let violated = models(&ev.arena, &domain, &ev.alpha, &ev.beta)
                .iter()
                .any(|m| !post.eval(&|a, b| m(comps[a.index()]) == m(comps[b.index()])));

            let lowered = lower(&p);
            let mut lowered_feasible = false;
            for w in exec_nfa(&lowered, Mode::Complete).unwrap().words_up_to(3 + 12) {
                lowered_feasible |= oracle_feasible(&sig, &Trace::new(sig.clone(), w)).unwrap();
            }
            prop_assert_eq!(lowered_feasible, violated);
        }
    }
}
