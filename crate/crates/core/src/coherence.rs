//! The coherence automaton and the coherence decision for flat programs.
//!
//! States extend the feasibility state (without disequalities) by the set
//! of function applications ever computed on the current classes.

use std::collections::{BTreeMap, BTreeSet};

use smallvec::SmallVec;

use crate::error::AnalysisError;
use crate::exec::{exec_nfa, Letter, Mode, Trace};
use crate::scc::{ClassId, FunKey, Renaming, VarClasses};
use crate::search::{bfs, Limits};
use crate::syntax::{FunId, Program, Signature, Var};
use crate::terms::ViolationKind;

/// A computed application with at least one argument class no longer held
/// by any variable (`None`), and the class holding its result, if any.
pub type Orphan = (FunId, SmallVec<[Option<ClassId>; 2]>, Option<ClassId>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CohClasses {
    pub classes: VarClasses,
    /// Applications computed at some point, keyed by argument classes.
    /// Every key of the partial functions is also in here.
    pub computed: BTreeSet<FunKey>,
    /// Computed applications whose arguments are partly forgotten. They can
    /// never be recomputed by a coherent continuation, but they remain
    /// superterms of their surviving arguments.
    pub orphans: BTreeSet<Orphan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CohState {
    NotCoherent(ViolationKind),
    Live(CohClasses),
}

impl CohState {
    pub fn is_coherent(&self) -> bool {
        matches!(self, CohState::Live(_))
    }
}

pub fn coh_initial(sig: &Signature) -> CohState {
    CohState::Live(CohClasses {
        classes: VarClasses::initial(sig.var_count(), |i| !sig.is_ghost(Var(i as u16))),
        computed: BTreeSet::new(),
        orphans: BTreeSet::new(),
    })
}

impl CohClasses {
    /// Classes reachable from `seeds` (inclusive) along argument-to-result
    /// edges of the partial functions and of stored orphans.
    fn superterm_classes(&self, seeds: &[ClassId]) -> BTreeSet<ClassId> {
        let mut reach: BTreeSet<ClassId> = seeds.iter().copied().collect();
        loop {
            let before = reach.len();
            for ((_, args), t) in self.classes.funcs() {
                if args.iter().any(|a| reach.contains(a)) {
                    reach.insert(*t);
                }
            }
            for (_, args, t) in &self.orphans {
                if let Some(t) = t {
                    if args.iter().flatten().any(|a| reach.contains(a)) {
                        reach.insert(*t);
                    }
                }
            }
            if reach.len() == before {
                return reach;
            }
        }
    }

    /// Rewrites the bookkeeping after the classes were updated by `ren`.
    /// `old_funcs` are the partial functions before the update; `fresh`
    /// is an application just computed together with its result class.
    fn carry(&mut self, old_funcs: &BTreeMap<FunKey, ClassId>, ren: &Renaming, fresh: Option<(FunKey, ClassId)>) {
        let mut computed = BTreeSet::new();
        let mut orphans = BTreeSet::new();
        let old_computed = std::mem::take(&mut self.computed);
        for key in old_computed {
            let target = match &fresh {
                Some((k, t)) if *k == key => Some(*t),
                _ => old_funcs.get(&key).and_then(|t| ren.get(t).copied()),
            };
            let args: SmallVec<[Option<ClassId>; 2]> = key.1.iter().map(|a| ren.get(a).copied()).collect();
            match args.iter().copied().collect::<Option<SmallVec<[ClassId; 2]>>>() {
                Some(alive) => {
                    computed.insert((key.0, alive));
                }
                None => {
                    orphans.insert((key.0, args, target));
                }
            }
        }
        for (f, args, t) in std::mem::take(&mut self.orphans) {
            let args = args.iter().map(|a| a.and_then(|a| ren.get(&a).copied())).collect();
            orphans.insert((f, args, t.and_then(|t| ren.get(&t).copied())));
        }
        self.computed = computed;
        self.orphans = orphans;
    }

    /// Applies a letter; `Err` carries the violated clause.
    pub fn step(&mut self, a: &Letter) -> Result<(), ViolationKind> {
        match a {
            Letter::AssumeNe(..) | Letter::Call(_) | Letter::Return(_) => {}
            Letter::Copy { dst, src } | Letter::Ghost { ghost: dst, src } => {
                let old = self.classes.funcs().clone();
                let ren = self.classes.copy(dst.index(), src.index());
                self.carry(&old, &ren, None);
            }
            Letter::Apply { dst, fun, args } => {
                let c = &self.classes;
                let slots: SmallVec<[usize; 2]> = args.iter().map(|v| v.index()).collect();
                let ids: SmallVec<[ClassId; 2]> = slots
                    .iter()
                    .map(|s| c.class(*s).expect("arguments are defined"))
                    .collect();
                let key = (*fun, ids);
                if self.computed.contains(&key) && !c.funcs().contains_key(&key) {
                    return Err(ViolationKind::Memoizing);
                }
                let old = c.funcs().clone();
                self.computed.insert(key.clone());
                let ren = self.classes.apply(dst.index(), *fun, &slots);
                let target = self.classes.class(dst.index()).expect("just assigned");
                self.carry(&old, &ren, Some((key, target)));
            }
            Letter::AssumeEq(x, y) => {
                let cx = self.classes.class(x.index()).expect("defined");
                let cy = self.classes.class(y.index()).expect("defined");
                let reach = self.superterm_classes(&[cx, cy]);
                let funcs = self.classes.funcs();
                let early = self
                    .computed
                    .iter()
                    .any(|key| key.1.iter().any(|a| reach.contains(a)) && !funcs.contains_key(key))
                    || self
                        .orphans
                        .iter()
                        .any(|(_, args, t)| t.is_none() && args.iter().flatten().any(|a| reach.contains(a)));
                if early {
                    return Err(ViolationKind::EarlyAssume);
                }
                let old = funcs.clone();
                let ren = self
                    .classes
                    .merge_classes(&[(cx, cy)])
                    .expect("no disequalities are tracked");
                self.carry(&old, &ren, None);
            }
        }
        Ok(())
    }
}

/// One transition; `NotCoherent` is absorbing.
pub fn coh_step(q: &CohState, a: &Letter) -> CohState {
    match q {
        CohState::NotCoherent(_) => q.clone(),
        CohState::Live(c) => {
            let mut c = c.clone();
            match c.step(a) {
                Ok(()) => CohState::Live(c),
                Err(kind) => CohState::NotCoherent(kind),
            }
        }
    }
}

/// First violation of coherence along `trace`, as `(position, kind)`.
pub fn first_violation(trace: &Trace) -> Option<(usize, ViolationKind)> {
    let mut q = coh_initial(&trace.sig);
    for (i, a) in trace.letters.iter().enumerate() {
        q = coh_step(&q, a);
        if let CohState::NotCoherent(kind) = q {
            return Some((i, kind));
        }
    }
    None
}

/// Whether the automaton accepts `trace` as coherent.
pub fn coherent_language_member(trace: &Trace) -> bool {
    first_violation(trace).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoherenceReport {
    /// A shortest partial execution that is not coherent.
    pub witness: Option<(Trace, ViolationKind)>,
    pub explored: usize,
}

impl CoherenceReport {
    pub fn coherent(&self) -> bool {
        self.witness.is_none()
    }
}

/// Decides whether every execution of a flat program is coherent.
pub fn program_is_coherent(p: &Program, limits: &Limits) -> Result<CoherenceReport, AnalysisError> {
    let nfa = exec_nfa(p, Mode::Partial).map_err(|_| AnalysisError::Recursive)?;
    let init = (nfa.initial, coh_initial(&p.sig));
    let out = bfs(
        vec![init],
        |(q, c)| {
            Ok(nfa
                .successors(*q)
                .iter()
                .map(|(a, t)| (a.clone(), (*t, coh_step(c, a))))
                .collect())
        },
        |(_, c)| !c.is_coherent(),
        limits,
    )?;
    let witness = out.found.map(|f| {
        let kind = match &f.states.last().expect("nonempty path").1 {
            CohState::NotCoherent(k) => *k,
            CohState::Live(_) => unreachable!("goal states are not coherent"),
        };
        (Trace::new(p.sig.clone(), f.letters), kind)
    });
    Ok(CoherenceReport {
        witness,
        explored: out.explored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::parse_trace;

    #[test]
    fn recomputing_a_dropped_term_is_not_memoizing() {
        let t = parse_trace(
            "vars x, y, z; funs n/1;
assume(x != z)
y := n(x)
assume(y != z)
y := n(y)
assume(y != z)
x := n(x)
",
        )
        .unwrap();
        assert_eq!(first_violation(&t), Some((5, ViolationKind::Memoizing)));
    }

    #[test]
    fn late_equality_is_not_early() {
        let t = parse_trace("vars x, y, z; funs f/1;\nz := f(x)\nz := f(z)\nassume(x = y)\n").unwrap();
        assert_eq!(first_violation(&t), Some((2, ViolationKind::EarlyAssume)));
    }

    #[test]
    fn remembered_term_keeps_execution_coherent() {
        let t = parse_trace(
            "vars x, y, z, g; funs n/1;
assume(x != z)
y := n(x)
g := y
assume(y != z)
y := n(y)
assume(y != z)
x := n(x)
",
        )
        .unwrap();
        assert!(coherent_language_member(&t));
    }

    #[test]
    fn recomputing_a_stored_term_is_fine() {
        let t = parse_trace("vars x, y, z; funs n/1;\ny := n(x)\nz := n(x)\n").unwrap();
        assert!(coherent_language_member(&t));
    }
}
