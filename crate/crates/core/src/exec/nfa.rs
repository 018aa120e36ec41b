//! Execution automata of flat programs.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write;

use thiserror::Error;

use crate::syntax::{MethodId, Program, Signature, Stmt, Var};

use super::Letter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Accept complete executions only.
    Complete,
    /// Accept every prefix of a complete execution.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NfaError {
    #[error("program contains method calls; build a pushdown automaton instead")]
    Recursive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RawEdge {
    Eps,
    Letter(Letter),
    Call { method: MethodId, outs: Vec<Var> },
}

/// Thompson-style graph with ε edges, built statement by statement.
#[derive(Debug, Default)]
pub(crate) struct RawGraph {
    pub edges: Vec<Vec<(RawEdge, usize)>>,
}

impl RawGraph {
    pub fn node(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn add(&mut self, from: usize, e: RawEdge, to: usize) {
        self.edges[from].push((e, to));
    }

    fn step(&mut self, from: usize, l: Letter) -> usize {
        let n = self.node();
        self.add(from, RawEdge::Letter(l), n);
        n
    }

    /// Adds the executions of `s` starting at `from`; returns the end node.
    pub fn build(&mut self, s: &Stmt, from: usize, brk: Option<usize>) -> usize {
        match s {
            Stmt::Skip => from,
            Stmt::Copy { dst, src } => self.step(from, Letter::Copy { dst: *dst, src: *src }),
            Stmt::Apply { dst, fun, args } => self.step(from, Letter::apply(*dst, *fun, args)),
            Stmt::Assume(c) => self.step(from, Letter::assume(*c)),
            Stmt::Seq(v) => v.iter().fold(from, |at, s| self.build(s, at, brk)),
            Stmt::If { cond, then, els } => {
                let t0 = self.step(from, Letter::assume(*cond));
                let t1 = self.build(then, t0, brk);
                let e0 = self.step(from, Letter::assume(cond.negate()));
                let e1 = self.build(els, e0, brk);
                let join = self.node();
                self.add(t1, RawEdge::Eps, join);
                self.add(e1, RawEdge::Eps, join);
                join
            }
            Stmt::While { cond, body } => {
                let head = self.node();
                self.add(from, RawEdge::Eps, head);
                let exit = self.node();
                let b0 = self.step(head, Letter::assume(*cond));
                let b1 = self.build(body, b0, Some(exit));
                self.add(b1, RawEdge::Eps, head);
                let done = self.step(head, Letter::assume(cond.negate()));
                self.add(done, RawEdge::Eps, exit);
                exit
            }
            Stmt::Loop(body) => {
                let head = self.node();
                self.add(from, RawEdge::Eps, head);
                let exit = self.node();
                let b1 = self.build(body, head, Some(exit));
                self.add(b1, RawEdge::Eps, head);
                exit
            }
            Stmt::Break => {
                if let Some(exit) = brk {
                    self.add(from, RawEdge::Eps, exit);
                }
                self.node()
            }
            Stmt::Choice(arms) => {
                let join = self.node();
                for arm in arms {
                    let a0 = self.node();
                    self.add(from, RawEdge::Eps, a0);
                    let a1 = self.build(arm, a0, brk);
                    self.add(a1, RawEdge::Eps, join);
                }
                join
            }
            Stmt::Call { outs, method } => {
                let n = self.node();
                self.add(
                    from,
                    RawEdge::Call {
                        method: *method,
                        outs: outs.clone(),
                    },
                    n,
                );
                n
            }
        }
    }

    pub fn eps_closure(&self, n: usize) -> Vec<usize> {
        let mut seen = vec![n];
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            for (e, t) in &self.edges[m] {
                if *e == RawEdge::Eps && !seen.contains(t) {
                    seen.push(*t);
                    stack.push(*t);
                }
            }
        }
        seen
    }

    /// ε-free successor lists and finality (`finals` reachable by ε).
    pub fn eliminate(&self, finals: &[usize]) -> (Vec<Vec<(RawEdge, usize)>>, Vec<bool>) {
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut accepting = Vec::with_capacity(self.edges.len());
        for n in 0..self.edges.len() {
            let closure = self.eps_closure(n);
            let mut out: Vec<(RawEdge, usize)> = Vec::new();
            for m in &closure {
                for (e, t) in &self.edges[*m] {
                    if *e != RawEdge::Eps && !out.iter().any(|(e2, t2)| e2 == e && t2 == t) {
                        out.push((e.clone(), *t));
                    }
                }
            }
            accepting.push(closure.iter().any(|m| finals.contains(m)));
            edges.push(out);
        }
        (edges, accepting)
    }
}

/// A finite automaton over letters, without ε edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub initial: usize,
    pub accepting: Vec<bool>,
    pub edges: Vec<Vec<(Letter, usize)>>,
}

impl Nfa {
    pub fn state_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self, q: usize) -> &[(Letter, usize)] {
        &self.edges[q]
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cur: BTreeSet<usize> = BTreeSet::from([self.initial]);
        for l in word {
            cur = cur
                .iter()
                .flat_map(|q| self.edges[*q].iter().filter(|(a, _)| a == l).map(|(_, t)| *t))
                .collect();
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|q| self.accepting[*q])
    }

    /// All accepted words of length at most `max_len`.
    pub fn words_up_to(&self, max_len: usize) -> BTreeSet<Vec<Letter>> {
        let mut out = BTreeSet::new();
        let mut layer: BTreeSet<(Vec<Letter>, usize)> = BTreeSet::from([(Vec::new(), self.initial)]);
        for len in 0..=max_len {
            for (w, q) in &layer {
                if self.accepting[*q] {
                    out.insert(w.clone());
                }
            }
            if len == max_len {
                break;
            }
            layer = layer
                .iter()
                .flat_map(|(w, q)| {
                    self.edges[*q].iter().map(move |(a, t)| {
                        let mut w2 = w.clone();
                        w2.push(a.clone());
                        (w2, *t)
                    })
                })
                .collect();
        }
        out
    }

    /// Graphviz rendering.
    pub fn to_dot(&self, sig: &Signature) -> String {
        let mut out = String::from("digraph exec {\n  rankdir=LR;\n  start [shape=point];\n");
        for q in 0..self.state_count() {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  q{q} [shape={shape}];");
        }
        let _ = writeln!(out, "  start -> q{};", self.initial);
        for (q, es) in self.edges.iter().enumerate() {
            for (a, t) in es {
                let label = a.display(sig).to_string().replace('"', "\\\"");
                let _ = writeln!(out, "  q{q} -> q{t} [label=\"{label}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Renumbers the reachable, co-reachable part of an ε-free graph in BFS
/// order from `initial`.
pub(crate) fn trim<E: Clone>(
    initial: usize,
    edges: &[Vec<(E, usize)>],
    accepting: &[bool],
) -> (Vec<Vec<(E, usize)>>, Vec<bool>, Vec<Option<usize>>) {
    let n = edges.len();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (q, es) in edges.iter().enumerate() {
        for (_, t) in es {
            rev[*t].push(q);
        }
    }
    let mut live = accepting.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|q| accepting[*q]).collect();
    while let Some(q) = stack.pop() {
        for p in &rev[q] {
            if !live[*p] {
                live[*p] = true;
                stack.push(*p);
            }
        }
    }
    let mut map: Vec<Option<usize>> = vec![None; n];
    let mut order = Vec::new();
    map[initial] = Some(0);
    order.push(initial);
    let mut queue = VecDeque::from([initial]);
    while let Some(q) = queue.pop_front() {
        for (_, t) in &edges[q] {
            if live[*t] && map[*t].is_none() {
                map[*t] = Some(order.len());
                order.push(*t);
                queue.push_back(*t);
            }
        }
    }
    let new_edges = order
        .iter()
        .map(|q| {
            if !live[*q] {
                return Vec::new();
            }
            edges[*q]
                .iter()
                .filter_map(|(e, t)| map[*t].map(|t2| (e.clone(), t2)))
                .collect()
        })
        .collect();
    let new_acc = order.iter().map(|q| accepting[*q]).collect();
    (new_edges, new_acc, map)
}

/// Automaton for the complete (or partial) executions of a flat program.
pub fn exec_nfa(p: &Program, mode: Mode) -> Result<Nfa, NfaError> {
    if p.bodies.iter().any(Stmt::contains_call) {
        return Err(NfaError::Recursive);
    }
    Ok(stmt_nfa(p.main_body(), mode))
}

/// Automaton for the executions of a single call-free statement.
pub fn stmt_nfa(s: &Stmt, mode: Mode) -> Nfa {
    let mut g = RawGraph::default();
    let start = g.node();
    let end = g.build(s, start, None);
    let (edges, accepting) = g.eliminate(&[end]);
    let edges: Vec<Vec<(Letter, usize)>> = edges
        .into_iter()
        .map(|es| {
            es.into_iter()
                .filter_map(|(e, t)| match e {
                    RawEdge::Letter(l) => Some((l, t)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let (edges, accepting, _) = trim(start, &edges, &accepting);
    let live = accepting[0] || !edges[0].is_empty();
    let accepting = match mode {
        Mode::Complete => accepting,
        Mode::Partial => vec![live; edges.len()],
    };
    Nfa {
        initial: 0,
        accepting,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn lang(src: &str, mode: Mode, n: usize) -> Vec<String> {
        let p = parse_program(src).unwrap();
        let nfa = exec_nfa(&p, mode).unwrap();
        nfa.words_up_to(n)
            .into_iter()
            .map(|w| {
                w.iter()
                    .map(|l| l.display(&p.sig).to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            })
            .collect()
    }

    #[test]
    fn skip_accepts_only_the_empty_word() {
        assert_eq!(lang("vars x; program { skip }", Mode::Complete, 4), vec![""]);
    }

    #[test]
    fn while_loop_unfolds() {
        let mut words = lang("vars x, y; program { while (x != y) { skip } }", Mode::Complete, 3);
        words.sort();
        assert_eq!(
            words,
            vec![
                "assume(x != y); assume(x != y); assume(x = y)",
                "assume(x != y); assume(x = y)",
                "assume(x = y)",
            ]
        );
    }

    #[test]
    fn partial_mode_is_prefix_closed() {
        let p =
            parse_program("vars x, y; funs f/1; program { x := f(y); if (x = y) { y := x } else { skip } }").unwrap();
        let complete = exec_nfa(&p, Mode::Complete).unwrap().words_up_to(4);
        let partial = exec_nfa(&p, Mode::Partial).unwrap().words_up_to(4);
        assert!(complete.is_subset(&partial));
        for w in &partial {
            for k in 0..w.len() {
                assert!(partial.contains(&w[..k]));
            }
        }
    }

    #[test]
    fn dead_branches_are_trimmed() {
        let p = parse_program("vars x; program { choose { x := x; assume(false) } or { skip } }").unwrap();
        let nfa = exec_nfa(&p, Mode::Partial).unwrap();
        assert_eq!(nfa.words_up_to(3).len(), 1);
        assert_eq!(nfa.state_count(), 1);
    }

    #[test]
    fn recursive_programs_rejected() {
        let p = parse_program("vars x; method m(out x) { skip } method go() { <x> := m() } main go;").unwrap();
        assert_eq!(exec_nfa(&p, Mode::Complete), Err(NfaError::Recursive));
    }
}
