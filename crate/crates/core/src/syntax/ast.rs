//! Core-form program representation shared by every analysis.

use std::fmt;

/// Index of a variable slot. Program variables come first, ghosts after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodId(pub u16);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl FunId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl MethodId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    /// Output tuple; entries are distinct.
    pub outs: Vec<Var>,
}

/// Names and arities for everything a program or trace may mention.
///
/// `vars[..program_vars]` is the program variable set; any further entries
/// are write-only ghost variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub vars: Vec<String>,
    pub program_vars: usize,
    pub funs: Vec<FunDecl>,
    pub methods: Vec<MethodDecl>,
}

pub const GHOST_PREFIX: &str = "$g";

impl Signature {
    pub fn new(vars: Vec<String>, funs: Vec<FunDecl>) -> Self {
        let program_vars = vars.len();
        Signature {
            vars,
            program_vars,
            funs,
            methods: Vec::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn ghost_count(&self) -> usize {
        self.vars.len() - self.program_vars
    }

    pub fn is_ghost(&self, v: Var) -> bool {
        v.index() >= self.program_vars
    }

    pub fn program_var_ids(&self) -> impl Iterator<Item = Var> {
        (0..self.program_vars as u16).map(Var)
    }

    pub fn ghost_ids(&self) -> impl Iterator<Item = Var> {
        (self.program_vars as u16..self.vars.len() as u16).map(Var)
    }

    pub fn all_var_ids(&self) -> impl Iterator<Item = Var> {
        (0..self.vars.len() as u16).map(Var)
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.vars[v.index()]
    }

    pub fn fun_name(&self, f: FunId) -> &str {
        &self.funs[f.index()].name
    }

    pub fn arity(&self, f: FunId) -> usize {
        self.funs[f.index()].arity
    }

    pub fn method_name(&self, m: MethodId) -> &str {
        &self.methods[m.index()].name
    }

    pub fn outs(&self, m: MethodId) -> &[Var] {
        &self.methods[m.index()].outs
    }

    pub fn lookup_var(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|v| v == name).map(|i| Var(i as u16))
    }

    pub fn lookup_fun(&self, name: &str) -> Option<FunId> {
        self.funs.iter().position(|f| f.name == name).map(|i| FunId(i as u16))
    }

    pub fn lookup_method(&self, name: &str) -> Option<MethodId> {
        self.methods
            .iter()
            .position(|m| m.name == name)
            .map(|i| MethodId(i as u16))
    }

    /// Same signature with `k` ghost variables (replacing any existing ghosts).
    pub fn with_ghosts(&self, k: usize) -> Signature {
        let mut sig = self.clone();
        sig.vars.truncate(sig.program_vars);
        for i in 1..=k {
            sig.vars.push(format!("{GHOST_PREFIX}{i}"));
        }
        sig
    }

    /// Drops ghost variables.
    pub fn without_ghosts(&self) -> Signature {
        self.with_ghosts(0)
    }
}

/// Atomic conditional of the core language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cond {
    Eq(Var, Var),
    Ne(Var, Var),
}

impl Cond {
    pub fn negate(self) -> Cond {
        match self {
            Cond::Eq(x, y) => Cond::Ne(x, y),
            Cond::Ne(x, y) => Cond::Eq(x, y),
        }
    }
}

/// Core-form statement. Conditions are atomic.
///
/// `Loop`/`Break` and `Choice` are produced by normalization (compound loop
/// guards) and postcondition lowering (branching over clauses).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Copy {
        dst: Var,
        src: Var,
    },
    Apply {
        dst: Var,
        fun: FunId,
        args: Vec<Var>,
    },
    Assume(Cond),
    Seq(Vec<Stmt>),
    If {
        cond: Cond,
        then: Box<Stmt>,
        els: Box<Stmt>,
    },
    While {
        cond: Cond,
        body: Box<Stmt>,
    },
    Loop(Box<Stmt>),
    Break,
    /// Nondeterministic choice; an empty choice has no executions.
    Choice(Vec<Stmt>),
    Call {
        outs: Vec<Var>,
        method: MethodId,
    },
}

impl Stmt {
    pub fn seq(stmts: Vec<Stmt>) -> Stmt {
        let mut flat = Vec::with_capacity(stmts.len());
        for s in stmts {
            match s {
                Stmt::Skip => {}
                Stmt::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Stmt::Skip,
            1 => flat.pop().unwrap(),
            _ => Stmt::Seq(flat),
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.visit(&mut |s| found |= matches!(s, Stmt::Call { .. }));
        found
    }

    pub fn visit(&self, f: &mut impl FnMut(&Stmt)) {
        f(self);
        match self {
            Stmt::Seq(v) | Stmt::Choice(v) => v.iter().for_each(|s| s.visit(f)),
            Stmt::If { then, els, .. } => {
                then.visit(f);
                els.visit(f);
            }
            Stmt::While { body, .. } | Stmt::Loop(body) => body.visit(f),
            _ => {}
        }
    }

    /// Number of syntax nodes, used as the size measure for automata bounds.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

/// Postcondition over variable equalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Eq(Var, Var),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn ne(x: Var, y: Var) -> Formula {
        Formula::not(Formula::Eq(x, y))
    }

    /// Evaluates under an equality oracle on variables.
    pub fn eval(&self, eq: &impl Fn(Var, Var) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(x, y) => eq(*x, *y),
            Formula::Not(f) => !f.eval(eq),
            Formula::Or(a, b) => a.eval(eq) || b.eval(eq),
            Formula::And(a, b) => a.eval(eq) && b.eval(eq),
        }
    }

    pub fn vars(&self, out: &mut Vec<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(x, y) => {
                out.push(*x);
                out.push(*y);
            }
            Formula::Not(f) => f.vars(out),
            Formula::Or(a, b) | Formula::And(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramKind {
    /// A single `program { .. }` body.
    Flat,
    /// Method definitions with a designated main method.
    Recursive,
}

/// A core-form program. For flat programs there is exactly one method body
/// (the implicit main with no outputs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub sig: Signature,
    pub kind: ProgramKind,
    /// Method bodies indexed by `MethodId`.
    pub bodies: Vec<Stmt>,
    pub main: MethodId,
    pub post: Option<Formula>,
}

impl Program {
    pub fn flat(sig: Signature, body: Stmt, post: Option<Formula>) -> Program {
        let mut sig = sig;
        if sig.methods.is_empty() {
            sig.methods.push(MethodDecl {
                name: "main".into(),
                outs: Vec::new(),
            });
        }
        Program {
            sig,
            kind: ProgramKind::Flat,
            bodies: vec![body],
            main: MethodId(0),
            post,
        }
    }

    pub fn is_recursive(&self) -> bool {
        self.kind == ProgramKind::Recursive
    }

    pub fn main_body(&self) -> &Stmt {
        &self.bodies[self.main.index()]
    }

    pub fn body(&self, m: MethodId) -> &Stmt {
        &self.bodies[m.index()]
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}
