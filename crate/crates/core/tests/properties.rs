mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uncover::coherence::first_violation;
use uncover::exec::{parse_trace, print_trace, Trace};
use uncover::scc::{self, SccState};
use uncover::syntax::{FunId, Var};
use uncover::terms::{congruence_closure, oracle_feasible, TermArena, TermId, TermNode};

/// Congruence closure by repeated full passes until nothing changes.
fn naive_classes(arena: &TermArena, domain: &[TermId], pairs: &[(TermId, TermId)]) -> Vec<Vec<TermId>> {
    let mut class: Vec<usize> = (0..domain.len()).collect();
    let idx = |t: TermId| domain.iter().position(|&d| d == t).unwrap();
    let merge = |class: &mut Vec<usize>, a: usize, b: usize| {
        let (from, to) = (class[a].max(class[b]), class[a].min(class[b]));
        let changed = from != to;
        class.iter_mut().filter(|c| **c == from).for_each(|c| *c = to);
        changed
    };
    for &(a, b) in pairs {
        merge(&mut class, idx(a), idx(b));
    }
    loop {
        let mut changed = false;
        for i in 0..domain.len() {
            for j in 0..domain.len() {
                if let (TermNode::App(f, xs), TermNode::App(g, ys)) = (arena.node(domain[i]), arena.node(domain[j])) {
                    if f == g && xs.iter().zip(ys).all(|(x, y)| class[idx(*x)] == class[idx(*y)]) {
                        changed |= merge(&mut class, i, j);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<Vec<TermId>> = Vec::new();
    for c in 0..domain.len() {
        let mut members: Vec<TermId> = (0..domain.len())
            .filter(|&i| class[i] == c)
            .map(|i| domain[i])
            .collect();
        if !members.is_empty() {
            members.sort();
            out.push(members);
        }
    }
    out.sort();
    out
}

fn random_word_for(seed: u64) -> Trace {
    let sig = small_sig();
    let letters = alphabet(&sig);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(0..12);
    let coherent = rng.gen();
    Trace::new(sig.clone(), random_word(&sig, &letters, len, coherent, &mut rng))
}

proptest! {
    #[test]
    fn closure_matches_naive_fixpoint(seed in any::<u64>()) {
        let sig = small_sig();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut arena = TermArena::new(&sig);
        let mut terms: Vec<TermId> = (0..3).map(|v| arena.init(Var(v))).collect();
        for _ in 0..rng.gen_range(0..10) {
            let pick = |rng: &mut ChaCha8Rng| terms[rng.gen_range(0..terms.len())];
            let t = if rng.gen() {
                let a = pick(&mut rng);
                arena.app(FunId(0), &[a]).unwrap()
            } else {
                let (a, b) = (pick(&mut rng), pick(&mut rng));
                arena.app(FunId(1), &[a, b]).unwrap()
            };
            terms.push(t);
        }
        let pairs: Vec<(TermId, TermId)> = (0..rng.gen_range(0..4))
            .map(|_| (terms[rng.gen_range(0..terms.len())], terms[rng.gen_range(0..terms.len())]))
            .collect();
        let domain = arena.subterm_closure(terms.iter().copied());
        let cc = congruence_closure(&arena, &domain, &pairs).unwrap();
        prop_assert_eq!(cc.classes(), naive_classes(&arena, &domain, &pairs));
    }

    #[test]
    fn traces_print_and_parse_back(seed in any::<u64>()) {
        let t = random_word_for(seed);
        let text = print_trace(&t);
        prop_assert_eq!(parse_trace(&text).unwrap(), t);
    }

    #[test]
    fn infeasibility_and_rejection_persist_under_extension(seed in any::<u64>()) {
        let t = random_word_for(seed);
        let mut infeasible = false;
        let mut state = scc::initial_state(&t.sig);
        for n in 0..=t.len() {
            let prefix = t.prefix(n);
            if n > 0 {
                state = scc::step(&t.sig, &state, &t.letters[n - 1]).unwrap();
            }
            let feasible = oracle_feasible(&t.sig, &prefix).unwrap();
            prop_assert!(!(infeasible && feasible));
            infeasible |= !feasible;
            if first_violation(&prefix).is_none() {
                prop_assert_eq!(state == SccState::Reject, !feasible);
            }
        }
        if let Some((pos, _)) = first_violation(&t) {
            for n in pos + 1..=t.len() {
                prop_assert_eq!(first_violation(&t.prefix(n)).map(|v| v.0), Some(pos));
            }
        }
    }
}
