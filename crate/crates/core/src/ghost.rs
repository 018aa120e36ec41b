//! k-coherence: executions that become coherent once up to `k` write-only
//! ghost variables are assigned at suitable points.
//!
//! The automaton for k-coherent executions runs the coherence automaton
//! over program and ghost variables and guesses ghost assignments. Only
//! assignments `g := x` made right before `x` is overwritten are guessed:
//! moving a ghost assignment later, up to the next write of its source,
//! keeps the same value in the ghost and the old one for longer, and
//! storing more terms never breaks coherence. Decisions determinize the
//! automaton on the fly: a subset state is the set of states reachable
//! under some ghost interleaving.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use crate::coherence::{coh_initial, coh_step, CohClasses, CohState};
use crate::error::AnalysisError;
use crate::exec::{exec_nfa, Letter, Mode, Trace};
use crate::scc::{step_classes, SccState, VarClasses};
use crate::search::{bfs, Limits};
use crate::syntax::{lower_postcondition, Formula, Program, Signature, Var};
use crate::verifier::{Report, Verdict};

/// A coherence state over program and ghost variables, paired with the
/// feasibility state of the same execution when it is tracked.
pub type GhostState = (CohClasses, Option<VarClasses>);

/// A determinized state: the ids of all states reachable so far under
/// some ghost interleaving.
pub type SubsetState = BTreeSet<u32>;

/// Interned states and their cached transitions.
#[derive(Default)]
struct Table {
    states: Vec<GhostState>,
    ids: HashMap<GhostState, u32>,
    succ: HashMap<(u32, Letter), Arc<[u32]>>,
}

impl Table {
    fn intern(&mut self, q: GhostState) -> u32 {
        if let Some(&i) = self.ids.get(&q) {
            return i;
        }
        let i = self.states.len() as u32;
        self.states.push(q.clone());
        self.ids.insert(q, i);
        i
    }
}

/// The nondeterministic automaton over program letters whose runs guess
/// ghost assignments.
pub struct KccAutomaton {
    /// Signature over program and ghost variables.
    pub sig: Signature,
    pub k: usize,
    track_feasibility: bool,
    table: Mutex<Table>,
}

/// The automaton for `k`-coherent executions over the program variables of
/// `sig`.
pub fn kcc_automaton(sig: &Signature, k: usize) -> KccAutomaton {
    KccAutomaton::new(sig, k, false)
}

impl KccAutomaton {
    fn new(sig: &Signature, k: usize, track_feasibility: bool) -> Self {
        let sig = sig.with_ghosts(k);
        KccAutomaton {
            sig,
            k,
            track_feasibility,
            table: Mutex::new(Table::default()),
        }
    }

    /// One step on a letter; `None` if the execution stops being coherent
    /// or, when tracked, feasible.
    pub fn step(&self, q: &GhostState, a: &Letter) -> Option<GhostState> {
        let CohState::Live(c) = coh_step(&CohState::Live(q.0.clone()), a) else {
            return None;
        };
        let f = match &q.1 {
            Some(f) => {
                let mut f = f.clone();
                step_classes(&self.sig, &mut f, a).ok()?.then_some(())?;
                Some(f)
            }
            None => None,
        };
        Some((c, f))
    }

    /// Ghost assignments worth guessing right before `a`.
    pub fn saves_before(&self, a: &Letter) -> Vec<Letter> {
        match a {
            Letter::Copy { dst, .. } | Letter::Apply { dst, .. } => self
                .sig
                .ghost_ids()
                .map(|g| Letter::Ghost { ghost: g, src: *dst })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Whether no other variable or ghost holds the value of `x`.
    fn sole_holder(&self, q: &GhostState, x: Var) -> bool {
        let c = &q.0.classes;
        (0..c.slots()).all(|i| i == x.index() || !c.same(i, x.index()))
    }

    /// Successors of `q` on `a`, each with the ghost assignment guessed
    /// before it.
    pub fn moves(&self, q: &GhostState, a: &Letter) -> Vec<(Option<Letter>, GhostState)> {
        let mut out: Vec<(Option<Letter>, GhostState)> = self.step(q, a).map(|r| (None, r)).into_iter().collect();
        let saves = match a {
            Letter::Copy { dst, .. } | Letter::Apply { dst, .. } if self.sole_holder(q, *dst) => self.saves_before(a),
            _ => Vec::new(),
        };
        for g in saves {
            if let Some(r) = self.step(q, &g).and_then(|q2| self.step(&q2, a)) {
                out.push((Some(g), r));
            }
        }
        out
    }

    pub fn initial_state(&self) -> GhostState {
        let CohState::Live(c) = coh_initial(&self.sig) else {
            unreachable!("initial state is coherent")
        };
        let f = self
            .track_feasibility
            .then(|| VarClasses::initial(self.sig.var_count(), |i| !self.sig.is_ghost(Var(i as u16))));
        (c, f)
    }

    /// The state with the given id.
    pub fn state(&self, id: u32) -> GhostState {
        self.lock().states[id as usize].clone()
    }

    /// Number of distinct states interned so far.
    pub fn interned(&self) -> usize {
        self.lock().states.len()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Table> {
        self.table.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn initial(&self) -> SubsetState {
        BTreeSet::from([self.lock().intern(self.initial_state())])
    }

    fn successors(&self, id: u32, a: &Letter) -> Arc<[u32]> {
        let key = (id, a.clone());
        if let Some(s) = self.lock().succ.get(&key) {
            return s.clone();
        }
        let q = self.state(id);
        let next: Vec<GhostState> = self.moves(&q, a).into_iter().map(|(_, r)| r).collect();
        let mut t = self.lock();
        let ids: Arc<[u32]> = next.into_iter().map(|r| t.intern(r)).collect();
        t.succ.insert(key, ids.clone());
        ids
    }

    /// Subset transition on a program letter.
    pub fn subset_step(&self, s: &SubsetState, a: &Letter) -> SubsetState {
        s.iter().flat_map(|q| self.successors(*q, a).to_vec()).collect()
    }

    /// Whether `word` (over program letters) is `k`-coherent.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut s = self.initial();
        for a in word {
            if s.is_empty() {
                return false;
            }
            s = self.subset_step(&s, a);
        }
        !s.is_empty()
    }

    /// A ghost interleaving of `word` that stays coherent (and feasible, if
    /// tracked).
    pub fn interleaving(&self, word: &[Letter]) -> Option<Trace> {
        let mut layer: HashMap<GhostState, Vec<Letter>> = HashMap::from([(self.initial_state(), Vec::new())]);
        for a in word {
            let mut next: HashMap<GhostState, Vec<Letter>> = HashMap::new();
            let mut sorted: Vec<_> = layer.into_iter().collect();
            sorted.sort();
            for (q, path) in sorted {
                for (g, r) in self.moves(&q, a) {
                    next.entry(r).or_insert_with(|| {
                        let mut p = path.clone();
                        p.extend(g);
                        p.push(a.clone());
                        p
                    });
                }
            }
            if next.is_empty() {
                return None;
            }
            layer = next;
        }
        let path = layer.into_values().min_by_key(|p| (p.len(), p.clone()))?;
        Some(Trace::new(self.sig.clone(), path))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KCoherenceReport {
    /// A shortest partial execution with no coherent ghost interleaving.
    pub witness: Option<Trace>,
    pub explored: usize,
}

impl KCoherenceReport {
    pub fn k_coherent(&self) -> bool {
        self.witness.is_none()
    }
}

fn subset_budget(limits: &Limits) -> Limits {
    Limits {
        max_states: limits.max_subset_states,
        ..*limits
    }
}

fn as_subset_error(e: AnalysisError) -> AnalysisError {
    match e {
        AnalysisError::StateBudget { limit } => AnalysisError::SubsetBudget { limit },
        e => e,
    }
}

/// Decides whether every execution of a flat program is `k`-coherent.
pub fn is_k_coherent(p: &Program, k: usize, limits: &Limits) -> Result<KCoherenceReport, AnalysisError> {
    let nfa = exec_nfa(p, Mode::Partial).map_err(|_| AnalysisError::Recursive)?;
    let kcc = kcc_automaton(&p.sig, k);
    let out = bfs(
        vec![(nfa.initial, kcc.initial())],
        |(q, s)| {
            Ok(nfa
                .successors(*q)
                .iter()
                .map(|(a, t)| (a.clone(), (*t, kcc.subset_step(s, a))))
                .collect())
        },
        |(_, s)| s.is_empty(),
        &subset_budget(limits),
    )
    .map_err(as_subset_error)?;
    Ok(KCoherenceReport {
        witness: out.found.map(|f| Trace::new(p.sig.without_ghosts(), f.letters)),
        explored: out.explored,
    })
}

/// Verifies a flat program against `post` using `k` ghost variables.
pub fn verify_k(p: &Program, post: &Formula, k: usize, limits: &Limits) -> Result<Report, AnalysisError> {
    if p.is_recursive() {
        return Err(AnalysisError::Recursive);
    }
    let lowered = lower_postcondition(p, post);
    let gate = is_k_coherent(&lowered, k, limits)?;
    let mut explored = gate.explored;
    if let Some(witness) = gate.witness {
        return Ok(Report {
            verdict: Verdict::NotKCoherent { k, witness },
            explored,
        });
    }
    let nfa = exec_nfa(&lowered, Mode::Complete).map_err(|_| AnalysisError::Recursive)?;
    let auto = KccAutomaton::new(&p.sig, k, true);
    let out = bfs(
        vec![(nfa.initial, auto.initial())],
        |(q, s)| {
            Ok(nfa
                .successors(*q)
                .iter()
                .filter_map(|(a, t)| {
                    let s2 = auto.subset_step(s, a);
                    (!s2.is_empty()).then(|| (a.clone(), (*t, s2)))
                })
                .collect())
        },
        |(q, s)| nfa.accepting[*q] && !s.is_empty(),
        &subset_budget(limits),
    )
    .map_err(as_subset_error)?;
    explored += out.explored;
    let verdict = match out.found {
        None => Verdict::Verified,
        Some(f) => {
            let witness = auto.interleaving(&f.letters);
            let final_state = match &witness {
                Some(w) => {
                    let mut q = VarClasses::initial(auto.sig.var_count(), |i| !auto.sig.is_ghost(Var(i as u16)));
                    for a in &w.letters {
                        step_classes(&auto.sig, &mut q, a)?;
                    }
                    SccState::Live(q)
                }
                None => SccState::Reject,
            };
            Verdict::Violated {
                counterexample: Trace::new(p.sig.without_ghosts(), f.letters),
                final_state,
                ghost_witness: witness,
            }
        }
    };
    Ok(Report { verdict, explored })
}

/// Smallest `k` up to `k_max` for which the program is `k`-coherent.
pub fn min_k(p: &Program, k_max: usize, limits: &Limits) -> Result<Option<usize>, AnalysisError> {
    for k in 0..=k_max {
        if is_k_coherent(p, k, limits)?.k_coherent() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::coherent_language_member;
    use crate::exec::parse_trace;
    use crate::terms::oracle_coherent;

    #[test]
    fn one_ghost_rescues_early_assume() {
        let t = parse_trace("vars x, y, z; funs f/1;\nz := f(x)\nz := f(z)\nassume(x = y)\n").unwrap();
        assert!(!coherent_language_member(&t));
        assert!(!kcc_automaton(&t.sig, 0).accepts(&t.letters));
        let kcc = kcc_automaton(&t.sig, 1);
        assert!(kcc.accepts(&t.letters));
        let w = kcc.interleaving(&t.letters).unwrap();
        assert_eq!(w.project().letters, t.letters);
        assert_eq!(oracle_coherent(&w.sig, &w).unwrap(), None);
    }

    #[test]
    fn zero_ghosts_is_plain_coherence() {
        let t = parse_trace("vars x, y; funs n/1;\ny := n(x)\ny := n(y)\nx := n(x)\n").unwrap();
        assert_eq!(
            kcc_automaton(&t.sig, 0).accepts(&t.letters),
            coherent_language_member(&t)
        );
    }
}
