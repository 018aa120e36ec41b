//! Ground terms, congruence closure, and the reference oracles.
//!
//! Everything here works on explicit terms and is deliberately brute force:
//! it is the ground truth the automata are tested against.

use std::collections::{BTreeSet, HashMap};

use smallvec::SmallVec;
use thiserror::Error;

use crate::exec::{evaluate, ExecError, Letter, Trace};
use crate::syntax::{FunId, Signature, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Structure of a term: the initial value of a variable, or an application.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermNode {
    Init(Var),
    App(FunId, SmallVec<[TermId; 2]>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("function #{fun} expects {expected} argument(s), got {got}")]
    ArityMismatch { fun: u16, expected: usize, got: usize },
    #[error("unknown function #{0}")]
    UnknownFunction(u16),
    #[error("term #{0} is not interned")]
    UnknownTerm(u32),
    #[error("term #{0} is outside the closure domain")]
    OutsideDomain(u32),
    #[error("closure domain is not subterm-closed at term #{0}")]
    NotSubtermClosed(u32),
}

/// Append-only, hash-consed table of ground terms.
#[derive(Debug, Clone, Default)]
pub struct TermArena {
    nodes: Vec<TermNode>,
    index: HashMap<TermNode, TermId>,
    arities: Vec<usize>,
}

impl TermArena {
    pub fn new(sig: &Signature) -> Self {
        TermArena {
            nodes: Vec::new(),
            index: HashMap::new(),
            arities: sig.funs.iter().map(|f| f.arity).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intern(&mut self, node: TermNode) -> Result<TermId, TermError> {
        if let TermNode::App(f, args) = &node {
            let expected = *self.arities.get(f.index()).ok_or(TermError::UnknownFunction(f.0))?;
            if expected != args.len() {
                return Err(TermError::ArityMismatch {
                    fun: f.0,
                    expected,
                    got: args.len(),
                });
            }
            if let Some(bad) = args.iter().find(|a| a.index() >= self.nodes.len()) {
                return Err(TermError::UnknownTerm(bad.0));
            }
        }
        if let Some(id) = self.index.get(&node) {
            return Ok(*id);
        }
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        Ok(id)
    }

    pub fn init(&mut self, v: Var) -> TermId {
        self.intern(TermNode::Init(v)).expect("constants always intern")
    }

    pub fn app(&mut self, f: FunId, args: &[TermId]) -> Result<TermId, TermError> {
        self.intern(TermNode::App(f, args.iter().copied().collect()))
    }

    pub fn node(&self, t: TermId) -> &TermNode {
        &self.nodes[t.index()]
    }

    pub fn children(&self, t: TermId) -> &[TermId] {
        match &self.nodes[t.index()] {
            TermNode::Init(_) => &[],
            TermNode::App(_, args) => args,
        }
    }

    pub fn lookup(&self, node: &TermNode) -> Option<TermId> {
        self.index.get(node).copied()
    }

    /// Smallest subterm-closed superset of `seeds`, sorted.
    pub fn subterm_closure(&self, seeds: impl IntoIterator<Item = TermId>) -> Vec<TermId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<TermId> = seeds.into_iter().collect();
        while let Some(t) = stack.pop() {
            if seen.insert(t) {
                stack.extend_from_slice(self.children(t));
            }
        }
        seen.into_iter().collect()
    }

    /// Renders a term as `f(g(x^), y^)`; initial values carry a caret.
    pub fn display(&self, sig: &Signature, t: TermId) -> String {
        match &self.nodes[t.index()] {
            TermNode::Init(v) => format!("{}^", sig.var_name(*v)),
            TermNode::App(f, args) => {
                let args: Vec<_> = args.iter().map(|a| self.display(sig, *a)).collect();
                format!("{}({})", sig.fun_name(*f), args.join(", "))
            }
        }
    }
}

/// Congruence closure of a pair set over a finite subterm-closed domain.
#[derive(Debug, Clone)]
pub struct Congruence {
    domain: Vec<TermId>,
    slot: HashMap<TermId, usize>,
    parent: Vec<usize>,
}

impl Congruence {
    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    fn find_mut(&mut self, i: usize) -> usize {
        let root = self.find(i);
        let mut j = i;
        while self.parent[j] != root {
            let next = self.parent[j];
            self.parent[j] = root;
            j = next;
        }
        root
    }

    fn slot_of(&self, t: TermId) -> Result<usize, TermError> {
        self.slot.get(&t).copied().ok_or(TermError::OutsideDomain(t.0))
    }

    pub fn domain(&self) -> &[TermId] {
        &self.domain
    }

    pub fn contains(&self, t: TermId) -> bool {
        self.slot.contains_key(&t)
    }

    pub fn congruent(&self, a: TermId, b: TermId) -> Result<bool, TermError> {
        Ok(self.find(self.slot_of(a)?) == self.find(self.slot_of(b)?))
    }

    /// Canonical class identifier: the smallest term id in the class.
    pub fn class_of(&self, t: TermId) -> Result<TermId, TermError> {
        let root = self.find(self.slot_of(t)?);
        Ok(self
            .domain
            .iter()
            .enumerate()
            .filter(|(i, _)| self.find(*i) == root)
            .map(|(_, t)| *t)
            .min()
            .expect("class is nonempty"))
    }

    /// Classes as sorted member lists, ordered by smallest member.
    pub fn classes(&self) -> Vec<Vec<TermId>> {
        let mut by_root: HashMap<usize, Vec<TermId>> = HashMap::new();
        for (i, t) in self.domain.iter().enumerate() {
            by_root.entry(self.find(i)).or_default().push(*t);
        }
        let mut out: Vec<Vec<TermId>> = by_root.into_values().collect();
        for c in &mut out {
            c.sort();
        }
        out.sort();
        out
    }

    /// Root index of each domain element, for class-level graph algorithms.
    fn roots(&self) -> Vec<usize> {
        (0..self.domain.len()).map(|i| self.find(i)).collect()
    }
}

/// Congruence closure of `pairs` restricted to the subterm-closed `domain`.
///
/// Union-find with a signature table keyed by `(function, child roots)`;
/// whenever a class absorbs another, the parents of the absorbed class are
/// re-signed and collisions are queued as new merges.
pub fn congruence_closure(
    arena: &TermArena,
    domain: &[TermId],
    pairs: &[(TermId, TermId)],
) -> Result<Congruence, TermError> {
    let mut sorted: Vec<TermId> = domain.to_vec();
    sorted.sort();
    sorted.dedup();
    let slot: HashMap<TermId, usize> = sorted.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    for &t in &sorted {
        if t.index() >= arena.len() {
            return Err(TermError::UnknownTerm(t.0));
        }
        if arena.children(t).iter().any(|c| !slot.contains_key(c)) {
            return Err(TermError::NotSubtermClosed(t.0));
        }
    }
    let n = sorted.len();
    let mut cc = Congruence {
        domain: sorted,
        slot,
        parent: (0..n).collect(),
    };
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut size = vec![1usize; n];
    for i in 0..n {
        for c in arena.children(cc.domain[i]) {
            let ci = cc.slot[c];
            if !uses[ci].contains(&i) {
                uses[ci].push(i);
            }
        }
    }

    let signature = |cc: &Congruence, i: usize| -> Option<(FunId, SmallVec<[usize; 2]>)> {
        match arena.node(cc.domain[i]) {
            TermNode::Init(_) => None,
            TermNode::App(f, args) => Some((*f, args.iter().map(|a| cc.find(cc.slot[a])).collect())),
        }
    };

    let mut table: HashMap<(FunId, SmallVec<[usize; 2]>), usize> = HashMap::new();
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        if let Some(sig) = signature(&cc, i) {
            match table.get(&sig) {
                Some(&j) => pending.push((i, j)),
                None => {
                    table.insert(sig, i);
                }
            }
        }
    }
    for (a, b) in pairs {
        pending.push((cc.slot_of(*a)?, cc.slot_of(*b)?));
    }

    while let Some((a, b)) = pending.pop() {
        let (mut ra, mut rb) = (cc.find_mut(a), cc.find_mut(b));
        if ra == rb {
            continue;
        }
        if size[ra] < size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        let moved = std::mem::take(&mut uses[rb]);
        for &p in &moved {
            if let Some(sig) = signature(&cc, p) {
                if table.get(&sig) == Some(&p) {
                    table.remove(&sig);
                }
            }
        }
        cc.parent[rb] = ra;
        size[ra] += size[rb];
        for p in moved {
            if let Some(sig) = signature(&cc, p) {
                match table.get(&sig) {
                    Some(&q) if cc.find(q) != cc.find(p) => pending.push((p, q)),
                    Some(_) => {}
                    None => {
                        table.insert(sig, p);
                    }
                }
            }
            if !uses[ra].contains(&p) {
                uses[ra].push(p);
            }
        }
    }
    Ok(cc)
}

/// Terms computed by an execution together with its assumptions, as the
/// oracles need them.
pub struct Semantics {
    pub arena: TermArena,
    pub terms: Vec<TermId>,
    pub alpha: Vec<(TermId, TermId)>,
    pub beta: Vec<(TermId, TermId)>,
}

/// Feasibility in the initial term model: the congruence closure of the
/// equality assumptions separates every disequality assumption.
pub fn oracle_feasible(sig: &Signature, trace: &Trace) -> Result<bool, ExecError> {
    let ev = evaluate(sig, trace)?;
    let mut arena = ev.arena;
    let domain = arena.subterm_closure(ev.terms_seen.iter().copied());
    let _ = &mut arena;
    let cc = congruence_closure(&arena, &domain, &ev.alpha).expect("domain is subterm-closed");
    Ok(ev
        .beta
        .iter()
        .all(|(a, b)| !cc.congruent(*a, *b).expect("assumed terms are computed")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Memoizing,
    EarlyAssume,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Memoizing => "memoizing",
            ViolationKind::EarlyAssume => "early-assume",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoherenceViolation {
    /// Index of the offending letter.
    pub position: usize,
    pub kind: ViolationKind,
}

/// Direct evaluation of both coherence clauses on every prefix.
///
/// Returns the first violation, or `None` for a coherent execution.
pub fn oracle_coherent(sig: &Signature, trace: &Trace) -> Result<Option<CoherenceViolation>, ExecError> {
    let ev = evaluate(sig, trace)?;
    let mut arena = ev.arena;
    let mut seen: BTreeSet<TermId> = ev.frames[0].iter().flatten().copied().collect();
    let mut alpha: Vec<(TermId, TermId)> = Vec::new();

    for (i, letter) in trace.letters.iter().enumerate() {
        let before = &ev.frames[i];
        let stored: Vec<TermId> = before.iter().flatten().copied().collect();
        match letter {
            Letter::Apply { fun, args, .. } => {
                let arg_terms: Vec<TermId> = args
                    .iter()
                    .map(|a| before[a.index()].expect("evaluated trace reads defined variables"))
                    .collect();
                let t = arena.app(*fun, &arg_terms).expect("arity checked by evaluate");
                let mut domain: Vec<TermId> = seen.iter().copied().collect();
                domain.push(t);
                let cc = congruence_closure(&arena, &domain, &alpha).expect("subterm-closed");
                let recomputed = seen.iter().any(|s| cc.congruent(*s, t).unwrap());
                if recomputed && !stored.iter().any(|s| cc.congruent(*s, t).unwrap()) {
                    return Ok(Some(CoherenceViolation {
                        position: i,
                        kind: ViolationKind::Memoizing,
                    }));
                }
            }
            Letter::AssumeEq(x, y) => {
                let domain: Vec<TermId> = seen.iter().copied().collect();
                let cc = congruence_closure(&arena, &domain, &alpha).expect("subterm-closed");
                let tx = before[x.index()].expect("defined");
                let ty = before[y.index()].expect("defined");
                if !superterms_stored(&arena, &cc, &[tx, ty], &stored) {
                    return Ok(Some(CoherenceViolation {
                        position: i,
                        kind: ViolationKind::EarlyAssume,
                    }));
                }
                alpha.push((tx, ty));
            }
            _ => {}
        }
        seen.extend(ev.frames[i + 1].iter().flatten().copied());
    }
    Ok(None)
}

/// Every class of `cc` that is a proper superterm (modulo congruence) of one
/// of `bases` contains a stored term.
fn superterms_stored(arena: &TermArena, cc: &Congruence, bases: &[TermId], stored: &[TermId]) -> bool {
    let roots = cc.roots();
    let root_of = |t: TermId| roots[cc.slot[&t]];
    // Lifted immediate-subterm edges: class(child) -> class(parent).
    let mut up: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for (i, t) in cc.domain().iter().enumerate() {
        for c in arena.children(*t) {
            up.entry(root_of(*c)).or_default().insert(roots[i]);
        }
    }
    let mut reached: BTreeSet<usize> = BTreeSet::new();
    let mut stack: Vec<usize> = bases
        .iter()
        .flat_map(|b| up.get(&root_of(*b)).into_iter().flatten().copied())
        .collect();
    while let Some(r) = stack.pop() {
        if reached.insert(r) {
            stack.extend(up.get(&r).into_iter().flatten().copied());
        }
    }
    let stored_roots: BTreeSet<usize> = stored.iter().map(|t| root_of(*t)).collect();
    reached.iter().all(|r| stored_roots.contains(r))
}

/// Terms, α and β of a whole execution, for tests and reports.
pub fn semantics(sig: &Signature, trace: &Trace) -> Result<Semantics, ExecError> {
    let ev = evaluate(sig, trace)?;
    Ok(Semantics {
        terms: ev.terms_seen.clone(),
        alpha: ev.alpha.clone(),
        beta: ev.beta.clone(),
        arena: ev.arena,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::FunDecl;

    fn sig() -> Signature {
        Signature::new(
            vec!["x".into(), "y".into()],
            vec![FunDecl {
                name: "f".into(),
                arity: 1,
            }],
        )
    }

    #[test]
    fn interning_is_hash_consed() {
        let mut a = TermArena::new(&sig());
        let x1 = a.init(Var(0));
        let x2 = a.init(Var(0));
        assert_eq!(x1, x2);
        let fx = a.app(FunId(0), &[x1]).unwrap();
        assert_ne!(fx, x1);
        assert_eq!(a.app(FunId(0), &[x2]).unwrap(), fx);
    }

    #[test]
    fn interning_checks_arity() {
        let mut a = TermArena::new(&sig());
        let x = a.init(Var(0));
        let y = a.init(Var(1));
        assert!(matches!(
            a.app(FunId(0), &[x, y]),
            Err(TermError::ArityMismatch {
                expected: 1,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn one_congruence_step() {
        let mut a = TermArena::new(&sig());
        let x = a.init(Var(0));
        let y = a.init(Var(1));
        let fx = a.app(FunId(0), &[x]).unwrap();
        let fy = a.app(FunId(0), &[y]).unwrap();
        let cc = congruence_closure(&a, &[x, y, fx, fy], &[(x, y)]).unwrap();
        assert_eq!(cc.classes(), vec![vec![x, y], vec![fx, fy]]);
        let id = congruence_closure(&a, &[x, y, fx, fy], &[]).unwrap();
        assert_eq!(id.classes().len(), 4);
    }

    #[test]
    fn closure_rejects_foreign_pairs() {
        let mut a = TermArena::new(&sig());
        let x = a.init(Var(0));
        let y = a.init(Var(1));
        let fx = a.app(FunId(0), &[x]).unwrap();
        assert_eq!(
            congruence_closure(&a, &[x], &[(x, y)]).unwrap_err(),
            TermError::OutsideDomain(y.0)
        );
        assert_eq!(
            congruence_closure(&a, &[fx], &[]).unwrap_err(),
            TermError::NotSubtermClosed(fx.0)
        );
    }
}
