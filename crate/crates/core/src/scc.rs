//! Streaming congruence closure: a deterministic automaton whose states
//! summarize, over the classes of currently held values, what an execution
//! has assumed about the terms it computed.
//!
//! A state is a partition of the variable slots into classes, a set of
//! disequalities between classes, and a partial interpretation of each
//! function symbol on classes. Slots may be undefined (unassigned ghosts).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use smallvec::SmallVec;
use thiserror::Error;

use crate::exec::{Letter, Trace};
use crate::syntax::{FunId, Signature, Var};

pub type ClassId = u16;
pub type FunKey = (FunId, SmallVec<[ClassId; 2]>);
/// Old class id to new class id, for classes that survive an update.
pub type Renaming = BTreeMap<ClassId, ClassId>;

/// Applications that share forgotten argument classes. Positions marked in
/// `forgotten` hold the same forgotten class in every row; a row lists the
/// remaining argument classes and the class of the result. Two rows whose
/// remaining arguments meet force their results together.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Group {
    pub fun: FunId,
    pub forgotten: SmallVec<[bool; 2]>,
    pub rows: BTreeSet<(SmallVec<[ClassId; 2]>, ClassId)>,
}

/// Classes of variable slots with disequalities and partial functions.
///
/// In canonical form every class is named by its smallest member slot and
/// no entry mentions a class without members.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarClasses {
    class_of: Vec<Option<ClassId>>,
    diseq: BTreeSet<(ClassId, ClassId)>,
    funcs: BTreeMap<FunKey, ClassId>,
    groups: BTreeSet<Group>,
}

/// Argument of an application while classes are being forgotten: held by
/// a slot, forgotten earlier, or forgotten now (with its old id).
type Pattern = SmallVec<[Option<Option<ClassId>>; 2]>;

fn ordered(a: ClassId, b: ClassId) -> (ClassId, ClassId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

struct UnionFind(BTreeMap<ClassId, ClassId>);

impl UnionFind {
    fn find(&mut self, a: ClassId) -> ClassId {
        let mut r = a;
        while let Some(&p) = self.0.get(&r) {
            if p == r {
                break;
            }
            r = p;
        }
        let mut c = a;
        while c != r {
            let next = *self.0.get(&c).unwrap_or(&r);
            self.0.insert(c, r);
            c = next;
        }
        r
    }

    fn root(&self, a: ClassId) -> ClassId {
        let mut r = a;
        while let Some(&p) = self.0.get(&r) {
            if p == r {
                break;
            }
            r = p;
        }
        r
    }

    fn union(&mut self, a: ClassId, b: ClassId) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = ordered(ra, rb);
        self.0.insert(hi, lo);
        self.0.insert(lo, lo);
        true
    }
}

impl VarClasses {
    /// Every defined slot in its own class; nothing assumed.
    pub fn initial(slots: usize, defined: impl Fn(usize) -> bool) -> Self {
        VarClasses {
            class_of: (0..slots).map(|i| defined(i).then_some(i as ClassId)).collect(),
            diseq: BTreeSet::new(),
            funcs: BTreeMap::new(),
            groups: BTreeSet::new(),
        }
    }

    pub fn slots(&self) -> usize {
        self.class_of.len()
    }

    pub fn class(&self, slot: usize) -> Option<ClassId> {
        self.class_of[slot]
    }

    pub fn is_defined(&self, slot: usize) -> bool {
        self.class_of[slot].is_some()
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        matches!((self.class_of[a], self.class_of[b]), (Some(x), Some(y)) if x == y)
    }

    /// Members of each class, ordered by class id.
    pub fn classes(&self) -> BTreeMap<ClassId, Vec<usize>> {
        let mut out: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.class_of.iter().enumerate() {
            if let Some(c) = c {
                out.entry(*c).or_default().push(i);
            }
        }
        out
    }

    pub fn diseqs(&self) -> &BTreeSet<(ClassId, ClassId)> {
        &self.diseq
    }

    pub fn funcs(&self) -> &BTreeMap<FunKey, ClassId> {
        &self.funcs
    }

    pub fn groups(&self) -> &BTreeSet<Group> {
        &self.groups
    }

    pub fn has_diseq(&self, a: ClassId, b: ClassId) -> bool {
        self.diseq.contains(&ordered(a, b))
    }

    fn key(&self, f: FunId, args: &[usize]) -> Option<FunKey> {
        let ids: Option<SmallVec<[ClassId; 2]>> = args.iter().map(|a| self.class_of[*a]).collect();
        ids.map(|ids| (f, ids))
    }

    /// Class of `f` applied to the classes of `args`, if known.
    pub fn lookup(&self, f: FunId, args: &[usize]) -> Option<ClassId> {
        self.key(f, args).and_then(|k| self.funcs.get(&k).copied())
    }

    /// A class id no slot can carry in canonical form.
    fn fresh(&self) -> ClassId {
        self.class_of.len() as ClassId
    }

    /// Renames classes to their smallest member and drops entries about
    /// classes that lost all members.
    pub fn normalize(&mut self) -> Renaming {
        let mut ren = Renaming::new();
        for (i, c) in self.class_of.iter().enumerate() {
            if let Some(c) = c {
                ren.entry(*c).or_insert(i as ClassId);
            }
        }
        for c in self.class_of.iter_mut().flatten() {
            *c = ren[c];
        }
        self.diseq = self
            .diseq
            .iter()
            .filter_map(|(a, b)| Some(ordered(*ren.get(a)?, *ren.get(b)?)))
            .collect();
        let mut funcs = BTreeMap::new();
        let mut buckets: BTreeMap<(usize, FunId, Pattern), BTreeSet<(SmallVec<[ClassId; 2]>, ClassId)>> =
            BTreeMap::new();
        for ((f, args), t) in std::mem::take(&mut self.funcs) {
            let Some(&t) = ren.get(&t) else { continue };
            let pattern: Pattern = args
                .iter()
                .map(|a| ren.get(a).map_or(Some(Some(*a)), |_| None))
                .collect();
            if pattern.iter().all(Option::is_none) {
                funcs.insert((f, args.iter().map(|a| ren[a]).collect()), t);
                continue;
            }
            let held: SmallVec<[ClassId; 2]> = args.iter().filter_map(|a| ren.get(a).copied()).collect();
            if !held.is_empty() {
                buckets.entry((0, f, pattern)).or_default().insert((held, t));
            }
        }
        for (i, g) in std::mem::take(&mut self.groups).into_iter().enumerate() {
            for (args, t) in g.rows {
                let Some(&t) = ren.get(&t) else { continue };
                let mut rest = args.iter();
                let mut held = SmallVec::new();
                let pattern: Pattern = g
                    .forgotten
                    .iter()
                    .map(|&lost| {
                        if lost {
                            return Some(None);
                        }
                        let a = rest.next().expect("row matches its group");
                        match ren.get(a) {
                            Some(&n) => {
                                held.push(n);
                                None
                            }
                            None => Some(Some(*a)),
                        }
                    })
                    .collect();
                if !held.is_empty() {
                    buckets.entry((i + 1, g.fun, pattern)).or_default().insert((held, t));
                }
            }
        }
        self.funcs = funcs;
        self.groups = buckets
            .into_iter()
            .filter(|(_, rows)| rows.len() > 1)
            .map(|((_, fun, pattern), rows)| Group {
                fun,
                forgotten: pattern.iter().map(Option::is_some).collect(),
                rows,
            })
            .collect();
        ren
    }

    /// Renames every class id through `m`.
    fn map_ids(&mut self, m: impl Fn(ClassId) -> ClassId) {
        for c in self.class_of.iter_mut().flatten() {
            *c = m(*c);
        }
        self.diseq = self.diseq.iter().map(|(a, b)| ordered(m(*a), m(*b))).collect();
        self.funcs = std::mem::take(&mut self.funcs)
            .into_iter()
            .map(|((f, args), t)| ((f, args.iter().map(|a| m(*a)).collect()), m(t)))
            .collect();
        self.groups = std::mem::take(&mut self.groups)
            .into_iter()
            .map(|g| Group {
                rows: g
                    .rows
                    .iter()
                    .map(|(args, t)| (args.iter().map(|a| m(*a)).collect(), m(*t)))
                    .collect(),
                ..g
            })
            .collect();
    }

    /// `dst := src`.
    pub fn copy(&mut self, dst: usize, src: usize) -> Renaming {
        let c = self.class_of[src].expect("source slot is defined");
        self.class_of[dst] = Some(c);
        self.normalize()
    }

    /// `dst := f(args)`.
    pub fn apply(&mut self, dst: usize, f: FunId, args: &[usize]) -> Renaming {
        let key = self.key(f, args).expect("argument slots are defined");
        match self.funcs.get(&key) {
            Some(&c) => self.class_of[dst] = Some(c),
            None => {
                let id = self.fresh();
                self.class_of[dst] = Some(id);
                self.funcs.insert(key, id);
            }
        }
        self.normalize()
    }

    /// Identifies the given classes and closes under congruence. Returns
    /// `None` when a disequality becomes reflexive.
    pub fn merge_classes(&mut self, pairs: &[(ClassId, ClassId)]) -> Option<Renaming> {
        let mut uf = UnionFind(BTreeMap::new());
        let mut changed = false;
        for (a, b) in pairs {
            changed |= uf.union(*a, *b);
        }
        if !changed {
            return Some(self.classes().keys().map(|c| (*c, *c)).collect());
        }
        loop {
            let mut table: BTreeMap<FunKey, ClassId> = BTreeMap::new();
            let mut merged = false;
            for ((f, args), t) in &self.funcs {
                let key = (*f, args.iter().map(|a| uf.find(*a)).collect());
                match table.get(&key) {
                    Some(&t2) => merged |= uf.union(t2, *t),
                    None => {
                        table.insert(key, *t);
                    }
                }
            }
            for g in &self.groups {
                let mut rows: BTreeMap<SmallVec<[ClassId; 2]>, ClassId> = BTreeMap::new();
                for (args, t) in &g.rows {
                    let key = args.iter().map(|a| uf.find(*a)).collect();
                    match rows.get(&key) {
                        Some(&t2) => merged |= uf.union(t2, *t),
                        None => {
                            rows.insert(key, *t);
                        }
                    }
                }
            }
            if !merged {
                break;
            }
        }
        let old_ids: Vec<ClassId> = self.classes().keys().copied().collect();
        if self.diseq.iter().any(|(a, b)| uf.root(*a) == uf.root(*b)) {
            return None;
        }
        self.map_ids(|c| uf.root(c));
        let ren = self.normalize();
        Some(old_ids.into_iter().map(|c| (c, ren[&uf.find(c)])).collect())
    }

    /// `assume(a = b)`; `None` means the state rejects.
    pub fn assume_eq(&mut self, a: usize, b: usize) -> Option<Renaming> {
        let ca = self.class_of[a].expect("defined");
        let cb = self.class_of[b].expect("defined");
        self.merge_classes(&[(ca, cb)])
    }

    /// `assume(a != b)`; `false` means the state rejects.
    pub fn assume_ne(&mut self, a: usize, b: usize) -> bool {
        let ca = self.class_of[a].expect("defined");
        let cb = self.class_of[b].expect("defined");
        if ca == cb {
            return false;
        }
        self.diseq.insert(ordered(ca, cb));
        true
    }

    /// Concatenates the slots of `self` and `other`; classes stay disjoint.
    pub fn disjoint_union(&self, other: &VarClasses) -> VarClasses {
        let off = self.slots() as ClassId;
        let mut other = other.clone();
        other.map_ids(|c| c + off);
        let mut out = self.clone();
        out.class_of.extend(other.class_of);
        out.diseq.extend(other.diseq);
        out.funcs.extend(other.funcs);
        out.groups.extend(other.groups);
        out
    }

    /// A state over `slots` slots where slot `i` takes the class of
    /// `source(i)` in `self` (undefined for `None`), normalized.
    pub fn relabel(&self, slots: usize, source: impl Fn(usize) -> Option<usize>) -> VarClasses {
        // Old ids may collide with slot numbers of the new shape; shift
        // them out of the way before canonicalizing.
        let shift = slots.max(self.slots()) as ClassId;
        let mut shifted = self.clone();
        shifted.map_ids(|c| c + shift);
        let mut out = VarClasses {
            class_of: (0..slots)
                .map(|i| source(i).and_then(|s| shifted.class_of[s]))
                .collect(),
            ..shifted
        };
        out.normalize();
        out
    }

    /// Canonical text such as `{x,z} {y,w} | d: ({x,z},{y,w}) | P: f(⟨x⟩)=y`,
    /// naming slot `i` by `names[i]`.
    pub fn render(&self, names: &[String], fun_names: &[String]) -> String {
        let classes = self.classes();
        let set = |c: &ClassId| {
            let m: Vec<&str> = classes[c].iter().map(|i| names[*i].as_str()).collect();
            format!("{{{}}}", m.join(","))
        };
        let rep = |c: &ClassId| names[*c as usize].as_str();
        let mut out: Vec<String> = classes.keys().map(set).collect();
        let mut s = out.join(" ");
        let d: Vec<String> = self
            .diseq
            .iter()
            .map(|(a, b)| format!("({},{})", set(a), set(b)))
            .collect();
        let _ = write!(s, " | d: {}", d.join(" "));
        out.clear();
        for ((f, args), t) in &self.funcs {
            let args: Vec<&str> = args.iter().map(rep).collect();
            out.push(format!("{}(⟨{}⟩)={}", fun_names[f.index()], args.join(","), rep(t)));
        }
        let _ = write!(s, " | P: {}", out.join(" "));
        for g in &self.groups {
            let rows: Vec<String> = g
                .rows
                .iter()
                .map(|(args, t)| {
                    let mut held = args.iter();
                    let args: Vec<&str> = g
                        .forgotten
                        .iter()
                        .map(|&lost| {
                            if lost {
                                "_"
                            } else {
                                rep(held.next().expect("row matches its group"))
                            }
                        })
                        .collect();
                    format!("{}(⟨{}⟩)={}", fun_names[g.fun.index()], args.join(","), rep(t))
                })
                .collect();
            let _ = write!(s, " [{}]", rows.join(" "));
        }
        s
    }
}

/// A state of the feasibility automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SccState {
    Reject,
    Live(VarClasses),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SccError {
    #[error("variable `{0}` is read before it is assigned")]
    Undefined(String),
    #[error("call and return letters are handled by the pushdown automaton")]
    NotInternal,
}

pub fn initial_state(sig: &Signature) -> SccState {
    SccState::Live(VarClasses::initial(sig.var_count(), |i| !sig.is_ghost(Var(i as u16))))
}

/// Applies an internal letter in place; returns `false` if the state must
/// reject. Reads of undefined slots are reported as errors.
pub fn step_classes(sig: &Signature, q: &mut VarClasses, a: &Letter) -> Result<bool, SccError> {
    for v in a.reads() {
        if !q.is_defined(v.index()) {
            return Err(SccError::Undefined(sig.var_name(v).to_string()));
        }
    }
    Ok(match a {
        Letter::Copy { dst, src } | Letter::Ghost { ghost: dst, src } => {
            q.copy(dst.index(), src.index());
            true
        }
        Letter::Apply { dst, fun, args } => {
            let args: SmallVec<[usize; 2]> = args.iter().map(|v| v.index()).collect();
            q.apply(dst.index(), *fun, &args);
            true
        }
        Letter::AssumeEq(x, y) => q.assume_eq(x.index(), y.index()).is_some(),
        Letter::AssumeNe(x, y) => q.assume_ne(x.index(), y.index()),
        Letter::Call(_) | Letter::Return(_) => return Err(SccError::NotInternal),
    })
}

/// One transition. `Reject` is absorbing.
pub fn step(sig: &Signature, q: &SccState, a: &Letter) -> Result<SccState, SccError> {
    match q {
        SccState::Reject => Ok(SccState::Reject),
        SccState::Live(c) => {
            let mut c = c.clone();
            Ok(if step_classes(sig, &mut c, a)? {
                SccState::Live(c)
            } else {
                SccState::Reject
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccRunReport {
    pub final_state: SccState,
    /// States after each prefix, when requested.
    pub states: Option<Vec<SccState>>,
    /// Index of the letter that moved the run to `Reject`.
    pub reject_at: Option<usize>,
}

impl SccRunReport {
    pub fn accepted(&self) -> bool {
        self.final_state != SccState::Reject
    }
}

/// Runs the automaton from the initial state over `trace`.
pub fn run(trace: &Trace, keep_states: bool) -> Result<SccRunReport, SccError> {
    let sig = &trace.sig;
    let mut q = initial_state(sig);
    let mut states = keep_states.then(|| vec![q.clone()]);
    let mut reject_at = None;
    for (i, a) in trace.letters.iter().enumerate() {
        if reject_at.is_none() {
            q = step(sig, &q, a)?;
            if q == SccState::Reject {
                reject_at = Some(i);
            }
        }
        if let Some(s) = states.as_mut() {
            s.push(q.clone());
        }
    }
    Ok(SccRunReport {
        final_state: q,
        states,
        reject_at,
    })
}

/// Canonical text of a state with the signature's names.
pub fn render_state(sig: &Signature, q: &SccState) -> String {
    match q {
        SccState::Reject => "reject".into(),
        SccState::Live(c) => {
            let funs: Vec<String> = sig.funs.iter().map(|f| f.name.clone()).collect();
            c.render(&sig.vars, &funs)
        }
    }
}
