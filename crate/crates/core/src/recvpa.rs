//! Recursive programs: visibly pushdown automata for executions and for
//! feasibility, their product, and emptiness by summaries.
//!
//! The feasibility automaton keeps classes over `2r` slots: the method's
//! current values `V` and the caller's values at the time of the call `V'`.
//! A call pushes the caller's state; a return pops it, identifies the
//! caller's values with the callee's `V'`, and rebinds the returned
//! variables to the callee's outputs.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Debug;
use std::fmt::Write;
use std::hash::Hash;

use crate::error::AnalysisError;
use crate::exec::nfa::{RawEdge, RawGraph};
use crate::exec::{ExecError, Letter, LetterKind, Mode, Trace};
use crate::scc::{step_classes, SccState, VarClasses};
use crate::search::Limits;
use crate::syntax::{violation_check, Formula, MethodId, Program, Signature, Stmt, Var};
use crate::terms::oracle_coherent;
use crate::verifier::{Report, Verdict};

/// A visibly pushdown automaton over execution letters: call letters push,
/// return letters pop, all other letters leave the stack alone.
pub trait Vpa {
    type State: Clone + Eq + Hash + Debug;
    type Stack: Clone + Eq + Hash + Debug;

    fn initial(&self) -> Vec<Self::State>;
    fn internal(&self, q: &Self::State, a: &Letter) -> Vec<Self::State>;
    fn call(&self, q: &Self::State, a: &Letter) -> Vec<(Self::State, Self::Stack)>;
    fn ret(&self, q: &Self::State, a: &Letter, top: &Self::Stack) -> Vec<Self::State>;
    fn accepting(&self, q: &Self::State) -> bool;
    /// Whether words may end with calls still pending.
    fn accepts_pending(&self) -> bool;
    /// Letters worth trying from `q` with stack top `top`, or `None` if the
    /// automaton reads every letter.
    fn enabled(&self, q: &Self::State, top: Option<&Self::Stack>) -> Option<Vec<Letter>>;

    /// Membership by simulating all configurations.
    fn accepts(&self, word: &[Letter]) -> bool {
        let mut configs: Vec<(Self::State, Vec<Self::Stack>)> =
            self.initial().into_iter().map(|q| (q, Vec::new())).collect();
        for a in word {
            let mut next = Vec::new();
            for (q, stack) in &configs {
                match a.kind() {
                    LetterKind::Internal => {
                        next.extend(self.internal(q, a).into_iter().map(|r| (r, stack.clone())));
                    }
                    LetterKind::Call => {
                        for (r, g) in self.call(q, a) {
                            let mut s = stack.clone();
                            s.push(g);
                            next.push((r, s));
                        }
                    }
                    LetterKind::Return => {
                        if let Some((top, rest)) = stack.split_last() {
                            next.extend(self.ret(q, a, top).into_iter().map(|r| (r, rest.to_vec())));
                        }
                    }
                }
            }
            let mut seen = std::collections::HashSet::new();
            next.retain(|c| seen.insert(c.clone()));
            configs = next;
        }
        configs
            .iter()
            .any(|(q, s)| self.accepting(q) && (s.is_empty() || self.accepts_pending()))
    }
}

/// One method body (or the top-level body) of an execution automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fragment {
    Method(MethodId),
    Top,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum VEdge {
    Internal(Letter),
    /// Index into the call sites.
    Call(usize),
}

/// A call statement: callee, variables receiving the outputs, and the
/// state to continue in after the return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub method: MethodId,
    pub outs: Vec<Var>,
    pub resume: usize,
}

/// Execution automaton of a recursive program, assembled from one fragment
/// per method body plus the top-level body. Stack symbols are call sites.
#[derive(Debug, Clone)]
pub struct ExecVpa {
    pub sig: Signature,
    pub mode: Mode,
    pub start: usize,
    entries: Vec<usize>,
    fragment: Vec<Fragment>,
    /// The state ends its fragment's body.
    at_end: Vec<bool>,
    /// Some complete run passes through the state.
    live: Vec<bool>,
    edges: Vec<Vec<(VEdge, usize)>>,
    pub sites: Vec<CallSite>,
}

/// Execution automaton of a program with method calls.
pub fn exec_vpa(p: &Program, mode: Mode) -> ExecVpa {
    ExecVpa::with_top(p, p.main_body(), mode)
}

impl ExecVpa {
    /// Execution automaton whose top-level body is `top` instead of the
    /// main method's body; recursive calls still use the method bodies.
    pub fn with_top(p: &Program, top: &Stmt, mode: Mode) -> ExecVpa {
        let mut g = RawGraph::default();
        let mut fragment = Vec::new();
        let mut entries = Vec::new();
        let mut ends = Vec::new();
        let bodies = p
            .bodies
            .iter()
            .enumerate()
            .map(|(i, b)| (Fragment::Method(MethodId(i as u16)), b))
            .chain(std::iter::once((Fragment::Top, top)));
        for (frag, body) in bodies {
            let first = g.edges.len();
            let start = g.node();
            let end = g.build(body, start, None);
            fragment.resize(g.edges.len(), frag);
            debug_assert!(fragment[first..].iter().all(|f| *f == frag));
            entries.push(start);
            ends.push(end);
        }
        let start = entries.pop().expect("top fragment");
        let (raw, at_end) = g.eliminate(&ends);
        let n = raw.len();

        let mut live = at_end.clone();
        loop {
            let mut changed = false;
            for q in 0..n {
                if live[q] {
                    continue;
                }
                let ok = raw[q].iter().any(|(e, t)| match e {
                    RawEdge::Letter(_) => live[*t],
                    RawEdge::Call { method, .. } => live[*t] && live[entries[method.index()]],
                    RawEdge::Eps => false,
                });
                if ok {
                    live[q] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut sites = Vec::new();
        let edges = raw
            .into_iter()
            .map(|es| {
                es.into_iter()
                    .filter_map(|(e, t)| match e {
                        RawEdge::Letter(l) if live[t] => Some((VEdge::Internal(l), t)),
                        RawEdge::Call { method, outs } if live[t] && live[entries[method.index()]] => {
                            sites.push(CallSite {
                                method,
                                outs,
                                resume: t,
                            });
                            Some((VEdge::Call(sites.len() - 1), t))
                        }
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        ExecVpa {
            sig: p.sig.clone(),
            mode,
            start,
            entries,
            fragment,
            at_end,
            live,
            edges,
            sites,
        }
    }

    pub fn state_count(&self) -> usize {
        self.edges.len()
    }

    fn returns_from(&self, q: usize, site: usize) -> bool {
        self.at_end[q] && self.fragment[q] == Fragment::Method(self.sites[site].method)
    }

    /// Runs of length at most `max_len` with at most `max_depth` pending
    /// calls at any point. `visit` gets each run and whether it is complete;
    /// runs that cannot be extended within the bounds are reported even if
    /// incomplete.
    pub fn for_each_run(&self, max_len: usize, max_depth: usize, visit: &mut impl FnMut(&[Letter], bool)) {
        let mut word = Vec::new();
        let mut stack = Vec::new();
        if self.live[self.start] {
            self.runs_from(self.start, &mut word, &mut stack, max_len, max_depth, visit);
        }
    }

    fn runs_from(
        &self,
        q: usize,
        word: &mut Vec<Letter>,
        stack: &mut Vec<usize>,
        max_len: usize,
        max_depth: usize,
        visit: &mut impl FnMut(&[Letter], bool),
    ) {
        let complete = stack.is_empty() && self.at_end[q] && self.fragment[q] == Fragment::Top;
        let mut extended = false;
        if word.len() < max_len {
            for (e, t) in &self.edges[q] {
                match e {
                    VEdge::Internal(a) => {
                        word.push(a.clone());
                        self.runs_from(*t, word, stack, max_len, max_depth, visit);
                        word.pop();
                        extended = true;
                    }
                    VEdge::Call(site) if stack.len() < max_depth => {
                        let m = self.sites[*site].method;
                        word.push(Letter::Call(m));
                        stack.push(*site);
                        self.runs_from(self.entries[m.index()], word, stack, max_len, max_depth, visit);
                        stack.pop();
                        word.pop();
                        extended = true;
                    }
                    VEdge::Call(_) => {}
                }
            }
            if let Some(&site) = stack.last() {
                if self.returns_from(q, site) {
                    let s = &self.sites[site];
                    word.push(Letter::Return(s.outs.clone()));
                    stack.pop();
                    self.runs_from(s.resume, word, stack, max_len, max_depth, visit);
                    stack.push(site);
                    word.pop();
                    extended = true;
                }
            }
        }
        if complete || !extended {
            visit(word, complete);
        }
    }

    /// Complete executions within the bounds.
    pub fn complete_words(&self, max_len: usize, max_depth: usize) -> BTreeSet<Vec<Letter>> {
        let mut out = BTreeSet::new();
        self.for_each_run(max_len, max_depth, &mut |w, complete| {
            if complete {
                out.insert(w.to_vec());
            }
        });
        out
    }

    /// Graphviz rendering; call edges lead to the callee's entry and are
    /// labelled with the call site, return edges are dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph exec {\n  rankdir=LR;\n  start [shape=point];\n");
        for q in 0..self.state_count() {
            if !self.live[q] {
                continue;
            }
            let shape = if self.at_end[q] { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  q{q} [shape={shape}];");
        }
        let _ = writeln!(out, "  start -> q{};", self.start);
        for (q, es) in self.edges.iter().enumerate() {
            for (e, t) in es {
                let (label, target) = match e {
                    VEdge::Internal(a) => (a.display(&self.sig).to_string(), *t),
                    VEdge::Call(s) => {
                        let m = self.sites[*s].method;
                        (
                            format!("call {} / push {s}", self.sig.method_name(m)),
                            self.entries[m.index()],
                        )
                    }
                };
                let _ = writeln!(out, "  q{q} -> q{target} [label=\"{}\"];", label.replace('"', "\\\""));
            }
        }
        for (i, s) in self.sites.iter().enumerate() {
            for q in 0..self.state_count() {
                if self.live[q] && self.returns_from(q, i) {
                    let label = Letter::Return(s.outs.clone()).display(&self.sig).to_string();
                    let _ = writeln!(
                        out,
                        "  q{q} -> q{} [label=\"{label} / pop {i}\", style=dashed];",
                        s.resume
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

impl Vpa for ExecVpa {
    type State = usize;
    type Stack = usize;

    fn initial(&self) -> Vec<usize> {
        vec![self.start]
    }

    fn internal(&self, q: &usize, a: &Letter) -> Vec<usize> {
        self.edges[*q]
            .iter()
            .filter_map(|(e, t)| matches!(e, VEdge::Internal(b) if b == a).then_some(*t))
            .collect()
    }

    fn call(&self, q: &usize, a: &Letter) -> Vec<(usize, usize)> {
        let Letter::Call(m) = a else { return Vec::new() };
        self.edges[*q]
            .iter()
            .filter_map(|(e, _)| match e {
                VEdge::Call(s) if self.sites[*s].method == *m => Some((self.entries[m.index()], *s)),
                _ => None,
            })
            .collect()
    }

    fn ret(&self, q: &usize, a: &Letter, top: &usize) -> Vec<usize> {
        match a {
            Letter::Return(ws) if self.returns_from(*q, *top) && self.sites[*top].outs == *ws => {
                vec![self.sites[*top].resume]
            }
            _ => Vec::new(),
        }
    }

    fn accepting(&self, q: &usize) -> bool {
        match self.mode {
            Mode::Complete => self.at_end[*q] && self.fragment[*q] == Fragment::Top,
            Mode::Partial => self.live[*q],
        }
    }

    fn accepts_pending(&self) -> bool {
        self.mode == Mode::Partial
    }

    fn enabled(&self, q: &usize, top: Option<&usize>) -> Option<Vec<Letter>> {
        let mut out: Vec<Letter> = Vec::new();
        for (e, _) in &self.edges[*q] {
            let a = match e {
                VEdge::Internal(a) => a.clone(),
                VEdge::Call(s) => Letter::Call(self.sites[*s].method),
            };
            if !out.contains(&a) {
                out.push(a);
            }
        }
        if let Some(&s) = top {
            if self.returns_from(*q, s) {
                out.push(Letter::Return(self.sites[s].outs.clone()));
            }
        }
        Some(out)
    }
}

/// Synchronized product of two automata.
#[derive(Debug, Clone)]
pub struct Product<A, B>(pub A, pub B);

/// The automaton accepting the intersection of both languages.
pub fn vpa_intersect<A: Vpa, B: Vpa>(a: A, b: B) -> Product<A, B> {
    Product(a, b)
}

fn pairs<X: Clone, Y: Clone>(xs: Vec<X>, ys: &[Y]) -> Vec<(X, Y)> {
    xs.into_iter()
        .flat_map(|x| ys.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

impl<A: Vpa, B: Vpa> Vpa for Product<A, B> {
    type State = (A::State, B::State);
    type Stack = (A::Stack, B::Stack);

    fn initial(&self) -> Vec<Self::State> {
        pairs(self.0.initial(), &self.1.initial())
    }

    fn internal(&self, q: &Self::State, a: &Letter) -> Vec<Self::State> {
        pairs(self.0.internal(&q.0, a), &self.1.internal(&q.1, a))
    }

    fn call(&self, q: &Self::State, a: &Letter) -> Vec<(Self::State, Self::Stack)> {
        pairs(self.0.call(&q.0, a), &self.1.call(&q.1, a))
            .into_iter()
            .map(|((p, g), (r, h))| ((p, r), (g, h)))
            .collect()
    }

    fn ret(&self, q: &Self::State, a: &Letter, top: &Self::Stack) -> Vec<Self::State> {
        pairs(self.0.ret(&q.0, a, &top.0), &self.1.ret(&q.1, a, &top.1))
    }

    fn accepting(&self, q: &Self::State) -> bool {
        self.0.accepting(&q.0) && self.1.accepting(&q.1)
    }

    fn accepts_pending(&self) -> bool {
        self.0.accepts_pending() && self.1.accepts_pending()
    }

    fn enabled(&self, q: &Self::State, top: Option<&Self::Stack>) -> Option<Vec<Letter>> {
        self.0
            .enabled(&q.0, top.map(|t| &t.0))
            .or_else(|| self.1.enabled(&q.1, top.map(|t| &t.1)))
    }
}

/// Accepts every word with well-matched returns; pending calls allowed.
#[derive(Debug, Clone, Copy, Default)]
pub struct Universal;

impl Vpa for Universal {
    type State = ();
    type Stack = ();

    fn initial(&self) -> Vec<()> {
        vec![()]
    }
    fn internal(&self, _: &(), _: &Letter) -> Vec<()> {
        vec![()]
    }
    fn call(&self, _: &(), _: &Letter) -> Vec<((), ())> {
        vec![((), ())]
    }
    fn ret(&self, _: &(), _: &Letter, _: &()) -> Vec<()> {
        vec![()]
    }
    fn accepting(&self, _: &()) -> bool {
        true
    }
    fn accepts_pending(&self) -> bool {
        true
    }
    fn enabled(&self, _: &(), _: Option<&()>) -> Option<Vec<Letter>> {
        None
    }
}

/// How a summary node was first reached.
#[derive(Debug, Clone)]
enum How {
    Start,
    Internal {
        prev: usize,
        letter: Letter,
    },
    Summary {
        prev: usize,
        call: Letter,
        inner: usize,
        ret: Letter,
    },
}

/// Outcome of an emptiness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emptiness {
    /// An accepted word, if the language is not empty.
    pub witness: Option<Vec<Letter>>,
    /// Summary nodes created.
    pub explored: usize,
}

impl Emptiness {
    pub fn is_empty(&self) -> bool {
        self.witness.is_none()
    }
}

/// Emptiness check by saturating, for every state entered after a call,
/// the states reachable from it by well-matched words.
pub fn vpa_empty<V: Vpa>(v: &V, limits: &Limits) -> Result<Emptiness, AnalysisError> {
    struct Entry<S, G> {
        state: S,
        parent: Option<(usize, Letter)>,
        reach: Vec<usize>,
        callers: Vec<(usize, Letter, G)>,
    }
    let mut entries: Vec<Entry<V::State, V::Stack>> = Vec::new();
    let mut entry_index: HashMap<V::State, usize> = HashMap::new();
    let mut nodes: Vec<(usize, V::State, How)> = Vec::new();
    let mut node_index: HashMap<(usize, V::State), usize> = HashMap::new();
    let mut work: VecDeque<usize> = VecDeque::new();

    let mut add_node = |nodes: &mut Vec<(usize, V::State, How)>,
                        entries: &mut Vec<Entry<V::State, V::Stack>>,
                        work: &mut VecDeque<usize>,
                        e: usize,
                        q: V::State,
                        how: How|
     -> Result<Option<usize>, AnalysisError> {
        if node_index.contains_key(&(e, q.clone())) {
            return Ok(None);
        }
        if nodes.len() >= limits.max_states {
            return Err(AnalysisError::StateBudget {
                limit: limits.max_states,
            });
        }
        let i = nodes.len();
        node_index.insert((e, q.clone()), i);
        nodes.push((e, q, how));
        entries[e].reach.push(i);
        work.push_back(i);
        Ok(Some(i))
    };

    for q in v.initial() {
        if entry_index.contains_key(&q) {
            continue;
        }
        entry_index.insert(q.clone(), entries.len());
        entries.push(Entry {
            state: q.clone(),
            parent: None,
            reach: Vec::new(),
            callers: Vec::new(),
        });
        let e = entries.len() - 1;
        add_node(&mut nodes, &mut entries, &mut work, e, q, How::Start)?;
    }

    let word_of = |nodes: &[(usize, V::State, How)], n: usize| -> Vec<Letter> {
        fn go<S>(nodes: &[(usize, S, How)], n: usize, out: &mut Vec<Letter>) {
            match &nodes[n].2 {
                How::Start => {}
                How::Internal { prev, letter } => {
                    go(nodes, *prev, out);
                    out.push(letter.clone());
                }
                How::Summary { prev, call, inner, ret } => {
                    go(nodes, *prev, out);
                    out.push(call.clone());
                    go(nodes, *inner, out);
                    out.push(ret.clone());
                }
            }
        }
        let mut out = Vec::new();
        go(nodes, n, &mut out);
        out
    };

    while let Some(n) = work.pop_front() {
        let (e, q) = (nodes[n].0, nodes[n].1.clone());
        let top_level = entries[e].parent.is_none();
        if v.accepting(&q) && (top_level || v.accepts_pending()) {
            let mut word = word_of(&nodes, n);
            let mut cur = e;
            while let Some((caller, call)) = entries[cur].parent.clone() {
                let mut prefix = word_of(&nodes, caller);
                prefix.push(call);
                prefix.extend(word);
                word = prefix;
                cur = nodes[caller].0;
            }
            return Ok(Emptiness {
                witness: Some(word),
                explored: nodes.len(),
            });
        }
        let letters = v
            .enabled(&q, None)
            .expect("emptiness needs an automaton that enumerates its letters");
        let mut returns: Vec<(usize, Letter, V::Stack, usize)> = Vec::new();
        for a in letters {
            match a.kind() {
                LetterKind::Internal => {
                    for r in v.internal(&q, &a) {
                        let how = How::Internal {
                            prev: n,
                            letter: a.clone(),
                        };
                        add_node(&mut nodes, &mut entries, &mut work, e, r, how)?;
                    }
                }
                LetterKind::Call => {
                    for (r, g) in v.call(&q, &a) {
                        let e2 = match entry_index.get(&r) {
                            Some(&e2) => e2,
                            None => {
                                let e2 = entries.len();
                                entry_index.insert(r.clone(), e2);
                                entries.push(Entry {
                                    state: r.clone(),
                                    parent: Some((n, a.clone())),
                                    reach: Vec::new(),
                                    callers: Vec::new(),
                                });
                                let s = entries[e2].state.clone();
                                add_node(&mut nodes, &mut entries, &mut work, e2, s, How::Start)?;
                                e2
                            }
                        };
                        entries[e2].callers.push((n, a.clone(), g.clone()));
                        for &inner in &entries[e2].reach {
                            returns.push((n, a.clone(), g.clone(), inner));
                        }
                    }
                }
                LetterKind::Return => {}
            }
        }
        for (c, call, g) in entries[e].callers.clone() {
            returns.push((c, call, g, n));
        }
        for (c, call, g, inner) in returns {
            let q_in = nodes[inner].1.clone();
            let e_c = nodes[c].0;
            for b in v.enabled(&q_in, Some(&g)).unwrap_or_default() {
                if b.kind() != LetterKind::Return {
                    continue;
                }
                for r in v.ret(&q_in, &b, &g) {
                    let how = How::Summary {
                        prev: c,
                        call: call.clone(),
                        inner,
                        ret: b.clone(),
                    };
                    add_node(&mut nodes, &mut entries, &mut work, e_c, r, how)?;
                }
            }
        }
    }
    Ok(Emptiness {
        witness: None,
        explored: nodes.len(),
    })
}

/// The feasibility automaton for executions with calls over the program
/// variables of `sig`.
#[derive(Debug, Clone)]
pub struct RFeas {
    pub sig: Signature,
}

impl RFeas {
    pub fn new(sig: &Signature) -> Self {
        RFeas { sig: sig.clone() }
    }

    fn r(&self) -> usize {
        self.sig.var_count()
    }

    /// Initial values, with `V'` equal to `V`.
    pub fn initial_state(&self) -> VarClasses {
        let r = self.r();
        VarClasses::initial(r, |_| true).relabel(2 * r, |i| Some(i % r))
    }

    /// An internal letter; `None` if the execution becomes infeasible.
    pub fn internal_step(&self, q: &VarClasses, a: &Letter) -> Result<Option<VarClasses>, AnalysisError> {
        let mut q = q.clone();
        Ok(step_classes(&self.sig, &mut q, a)?.then_some(q))
    }

    /// A call of `m`: the callee starts with the caller's values in both
    /// `V` and `V'`; the caller's state is pushed.
    pub fn call_step(&self, q: &VarClasses, m: MethodId) -> (VarClasses, (VarClasses, MethodId)) {
        let r = self.r();
        (q.relabel(2 * r, |i| Some(i % r)), (q.clone(), m))
    }

    /// A return `<ws> := return` from the callee state `q` to the popped
    /// caller state `caller`.
    pub fn return_step(
        &self,
        q: &VarClasses,
        caller: &(VarClasses, MethodId),
        ws: &[Var],
        position: usize,
    ) -> Result<Option<VarClasses>, AnalysisError> {
        let r = self.r();
        let (below, m) = caller;
        let outs = self.sig.outs(*m);
        if outs.len() != ws.len() {
            return Err(ExecError::ReturnArity {
                position,
                method: self.sig.method_name(*m).to_string(),
                expected: outs.len(),
                got: ws.len(),
            }
            .into());
        }
        // Slots: callee V, callee V', caller V, caller V'.
        let mut u = q.disjoint_union(below);
        let merges: Vec<_> = (0..r)
            .map(|v| {
                let a = u.class(r + v).expect("defined");
                let b = u.class(2 * r + v).expect("defined");
                (a, b)
            })
            .collect();
        if u.merge_classes(&merges).is_none() {
            return Ok(None);
        }
        Ok(Some(u.relabel(2 * r, |i| {
            if i >= r {
                return Some(3 * r + (i - r));
            }
            match ws.iter().rposition(|w| w.index() == i) {
                Some(k) => Some(outs[k].index()),
                None => Some(r + i),
            }
        })))
    }

    /// The caller-visible part of a state.
    pub fn visible(&self, q: &VarClasses) -> VarClasses {
        q.relabel(self.r(), Some)
    }
}

impl Vpa for RFeas {
    type State = VarClasses;
    type Stack = (VarClasses, MethodId);

    fn initial(&self) -> Vec<VarClasses> {
        vec![self.initial_state()]
    }

    fn internal(&self, q: &VarClasses, a: &Letter) -> Vec<VarClasses> {
        self.internal_step(q, a).ok().flatten().into_iter().collect()
    }

    fn call(&self, q: &VarClasses, a: &Letter) -> Vec<(VarClasses, Self::Stack)> {
        match a {
            Letter::Call(m) => vec![self.call_step(q, *m)],
            _ => Vec::new(),
        }
    }

    fn ret(&self, q: &VarClasses, a: &Letter, top: &Self::Stack) -> Vec<VarClasses> {
        match a {
            Letter::Return(ws) => self.return_step(q, top, ws, 0).ok().flatten().into_iter().collect(),
            _ => Vec::new(),
        }
    }

    fn accepting(&self, _: &VarClasses) -> bool {
        true
    }

    fn accepts_pending(&self) -> bool {
        true
    }

    fn enabled(&self, _: &VarClasses, _: Option<&Self::Stack>) -> Option<Vec<Letter>> {
        None
    }
}

/// Result of running the feasibility automaton on one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RFeasRun {
    /// Final state over `V` and `V'`, or `None` if the run rejected.
    pub final_state: Option<VarClasses>,
    /// Index of the letter that made the run reject.
    pub reject_at: Option<usize>,
    pub pending_calls: usize,
}

impl RFeasRun {
    pub fn accepted(&self) -> bool {
        self.final_state.is_some()
    }
}

/// Runs the feasibility automaton over an execution with calls.
pub fn rfeas_run(trace: &Trace) -> Result<RFeasRun, AnalysisError> {
    let a = RFeas::new(&trace.sig);
    let mut q = a.initial_state();
    let mut stack: Vec<(VarClasses, MethodId)> = Vec::new();
    for (i, l) in trace.letters.iter().enumerate() {
        let next = match l {
            Letter::Call(m) => {
                let (callee, push) = a.call_step(&q, *m);
                stack.push(push);
                Some(callee)
            }
            Letter::Return(ws) => {
                let top = stack.pop().ok_or(ExecError::UnmatchedReturn { position: i })?;
                a.return_step(&q, &top, ws, i)?
            }
            _ => a.internal_step(&q, l)?,
        };
        match next {
            Some(n) => q = n,
            None => {
                return Ok(RFeasRun {
                    final_state: None,
                    reject_at: Some(i),
                    pending_calls: stack.len(),
                })
            }
        }
    }
    Ok(RFeasRun {
        final_state: Some(q),
        reject_at: None,
        pending_calls: stack.len(),
    })
}

/// Bounds of the coherence spot check run before recursive verification.
pub const COHERENCE_CHECK_LEN: usize = 12;
pub const COHERENCE_CHECK_DEPTH: usize = 2;

/// A shortest run within the spot-check bounds that the term model finds
/// not coherent.
pub fn bounded_incoherence(
    vpa: &ExecVpa,
    max_len: usize,
    max_depth: usize,
) -> Option<(Trace, crate::terms::ViolationKind)> {
    let mut best: Option<(Vec<Letter>, crate::terms::ViolationKind)> = None;
    vpa.for_each_run(max_len, max_depth, &mut |w, _| {
        let t = Trace::new(vpa.sig.clone(), w.to_vec());
        if let Ok(Some(v)) = oracle_coherent(&vpa.sig, &t) {
            let prefix = w[..=v.position].to_vec();
            if best
                .as_ref()
                .is_none_or(|(b, _)| prefix.len() < b.len() || (prefix.len() == b.len() && prefix < *b))
            {
                best = Some((prefix, v.kind));
            }
        }
    });
    best.map(|(w, k)| (Trace::new(vpa.sig.clone(), w), k))
}

/// Verifies a program with method calls against `post`, evaluated at the
/// end of the top-level run of the main method.
pub fn verify_recursive(p: &Program, post: &Formula, limits: &Limits) -> Result<Report, AnalysisError> {
    let top = Stmt::seq(vec![p.main_body().clone(), violation_check(post)]);
    let gate = ExecVpa::with_top(p, &top, Mode::Partial);
    if let Some((witness, kind)) = bounded_incoherence(&gate, COHERENCE_CHECK_LEN, COHERENCE_CHECK_DEPTH) {
        return Ok(Report {
            verdict: Verdict::NotCoherent {
                witness,
                kind,
                detail: format!(
                    "found by checking runs of up to {COHERENCE_CHECK_LEN} letters and call depth {COHERENCE_CHECK_DEPTH}"
                ),
            },
            explored: 0,
        });
    }
    let vpa = ExecVpa::with_top(p, &top, Mode::Complete);
    let product = vpa_intersect(vpa, RFeas::new(&p.sig));
    let found = vpa_empty(&product, limits)?;
    let verdict = match found.witness {
        None => Verdict::Verified,
        Some(word) => {
            let t = Trace::new(p.sig.clone(), word);
            let run = rfeas_run(&t)?;
            let final_state = match &run.final_state {
                Some(q) => SccState::Live(product.1.visible(q)),
                None => SccState::Reject,
            };
            Verdict::Violated {
                counterexample: t,
                final_state,
                ghost_witness: None,
            }
        }
    };
    Ok(Report {
        verdict,
        explored: found.explored,
    })
}
