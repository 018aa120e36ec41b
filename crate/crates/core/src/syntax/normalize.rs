//! Name resolution and compilation of the surface language to core form.
//!
//! * a relation `R/m` becomes a function `$f_R/m`; each occurrence
//!   `R(z)` inside a condition is evaluated into `$b_R_i := $f_R(z)` and
//!   replaced by the atom `$b_R_i = $top`, where `$top` is never assigned;
//! * a constant `c` becomes a never-assigned variable `$c_c`;
//! * compound conditions are compiled into cascades of `if` over atoms.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::Pos;
use super::surface::*;
use super::ParseError;

const TOP_VAR: &str = "$top";

#[derive(Clone, Copy)]
enum Entity {
    Var(Var),
    Const(Var),
    Fun(FunId),
    Rel(FunId),
    Method(MethodId),
}

struct Resolver {
    sig: Signature,
    names: HashMap<String, Entity>,
    /// Number of user-declared variables (call argument lists list exactly these).
    user_vars: usize,
    /// Evaluation variables per (relation function, occurrence index).
    rel_slots: HashMap<(FunId, usize), Var>,
    top: Option<Var>,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::new(pos, msg))
}

impl Resolver {
    fn declare(&mut self, name: &Name, e: Entity) -> Result<(), ParseError> {
        if self.names.insert(name.text.clone(), e).is_some() {
            return err(name.pos, format!("`{}` is declared more than once", name.text));
        }
        Ok(())
    }

    fn fresh_var(&mut self, name: String) -> Var {
        let v = Var(self.sig.vars.len() as u16);
        self.sig.vars.push(name);
        self.sig.program_vars = self.sig.vars.len();
        v
    }

    fn top(&mut self) -> Var {
        match self.top {
            Some(v) => v,
            None => {
                let v = self.fresh_var(TOP_VAR.into());
                self.top = Some(v);
                v
            }
        }
    }

    fn rel_slot(&mut self, rel: FunId, occurrence: usize) -> Var {
        if let Some(v) = self.rel_slots.get(&(rel, occurrence)) {
            return *v;
        }
        let base = self.sig.fun_name(rel).trim_start_matches("$f_").to_string();
        let v = self.fresh_var(format!("$b_{base}_{occurrence}"));
        self.rel_slots.insert((rel, occurrence), v);
        v
    }

    /// A name readable as a value: variable or constant.
    fn value(&self, n: &Name) -> Result<Var, ParseError> {
        match self.names.get(&n.text) {
            Some(Entity::Var(v)) | Some(Entity::Const(v)) => Ok(*v),
            Some(_) => err(n.pos, format!("`{}` is not a variable", n.text)),
            None => err(n.pos, format!("undeclared variable `{}`", n.text)),
        }
    }

    fn target(&self, n: &Name) -> Result<Var, ParseError> {
        match self.names.get(&n.text) {
            Some(Entity::Var(v)) => Ok(*v),
            Some(Entity::Const(_)) => err(n.pos, format!("cannot assign to constant `{}`", n.text)),
            Some(_) => err(n.pos, format!("`{}` is not a variable", n.text)),
            None => err(n.pos, format!("undeclared variable `{}`", n.text)),
        }
    }

    fn check_arity(&self, n: &Name, f: FunId, got: usize) -> Result<(), ParseError> {
        let want = self.sig.arity(f);
        if want != got {
            return err(n.pos, format!("`{}` expects {want} argument(s), got {got}", n.text));
        }
        Ok(())
    }

    fn stmts(&mut self, ss: &[SStmt], in_loop: bool) -> Result<Stmt, ParseError> {
        let mut out = Vec::with_capacity(ss.len());
        for s in ss {
            out.push(self.stmt(s, in_loop)?);
        }
        Ok(Stmt::seq(out))
    }

    fn stmt(&mut self, s: &SStmt, in_loop: bool) -> Result<Stmt, ParseError> {
        Ok(match s {
            SStmt::Skip => Stmt::Skip,
            SStmt::Assign(dst, SExpr::Name(src)) => {
                if let Some(Entity::Method(_)) = self.names.get(&src.text) {
                    return err(src.pos, format!("method call `{}` needs `()`", src.text));
                }
                Stmt::Copy {
                    dst: self.target(dst)?,
                    src: self.value(src)?,
                }
            }
            SStmt::Assign(dst, SExpr::App(head, args)) => match self.names.get(&head.text) {
                Some(Entity::Fun(f)) => {
                    let f = *f;
                    self.check_arity(head, f, args.len())?;
                    let args = args.iter().map(|a| self.value(a)).collect::<Result<_, _>>()?;
                    Stmt::Apply {
                        dst: self.target(dst)?,
                        fun: f,
                        args,
                    }
                }
                Some(Entity::Method(_)) => {
                    let args = if args.is_empty() { None } else { Some(args.clone()) };
                    return self.call(std::slice::from_ref(dst), head, args.as_deref());
                }
                Some(Entity::Rel(_)) => return err(head.pos, format!("relation `{}` used as a function", head.text)),
                _ => return err(head.pos, format!("undeclared function `{}`", head.text)),
            },
            SStmt::Call { outs, method, args } => return self.call(outs, method, args.as_deref()),
            SStmt::Assume(c) => {
                let (pre, guard) = self.guard(c)?;
                let body = match guard.as_atom() {
                    Some(cond) => Stmt::Assume(cond),
                    None => compile(&guard, Stmt::Skip, Stmt::Choice(Vec::new())),
                };
                Stmt::seq(vec![pre, body])
            }
            SStmt::If(c, t, e) => {
                let (pre, guard) = self.guard(c)?;
                let t = self.stmts(t, in_loop)?;
                let e = self.stmts(e, in_loop)?;
                Stmt::seq(vec![pre, compile(&guard, t, e)])
            }
            SStmt::While(c, body) => {
                let (pre, guard) = self.guard(c)?;
                match (&pre, guard.as_atom()) {
                    (Stmt::Skip, Some(cond)) => Stmt::While {
                        cond,
                        body: Box::new(self.stmts(body, true)?),
                    },
                    _ => {
                        let body = self.stmts(body, true)?;
                        Stmt::Loop(Box::new(Stmt::seq(vec![pre, compile(&guard, body, Stmt::Break)])))
                    }
                }
            }
            SStmt::Loop(body) => Stmt::Loop(Box::new(self.stmts(body, true)?)),
            SStmt::Break(pos) => {
                if !in_loop {
                    return err(*pos, "`break` outside of a loop");
                }
                Stmt::Break
            }
            SStmt::Choose(arms) => Stmt::Choice(arms.iter().map(|a| self.stmts(a, in_loop)).collect::<Result<_, _>>()?),
        })
    }

    fn call(&mut self, outs: &[Name], method: &Name, args: Option<&[Name]>) -> Result<Stmt, ParseError> {
        let m = match self.names.get(&method.text) {
            Some(Entity::Method(m)) => *m,
            Some(_) => return err(method.pos, format!("`{}` is not a method", method.text)),
            None => return err(method.pos, format!("undefined method `{}`", method.text)),
        };
        if let Some(args) = args {
            let expected = &self.sig.vars[..self.user_vars];
            let ok = args.len() == expected.len() && args.iter().zip(expected).all(|(a, e)| a.text == *e);
            if !ok {
                return err(
                    method.pos,
                    format!(
                        "call arguments must be `()` or all variables in declaration order ({})",
                        expected.join(", ")
                    ),
                );
            }
        }
        let want = self.sig.outs(m).len();
        if outs.len() != want {
            return err(
                method.pos,
                format!(
                    "`{}` returns {want} value(s), but {} target(s) given",
                    method.text,
                    outs.len()
                ),
            );
        }
        let mut seen = HashSet::new();
        let mut targets = Vec::with_capacity(outs.len());
        for o in outs {
            let v = self.target(o)?;
            if !seen.insert(v) {
                return err(o.pos, format!("`{}` appears twice among call targets", o.text));
            }
            targets.push(v);
        }
        Ok(Stmt::Call {
            outs: targets,
            method: m,
        })
    }

    /// Resolves a condition into pre-assignments for relation atoms and a guard.
    fn guard(&mut self, c: &SCond) -> Result<(Stmt, Guard), ParseError> {
        let mut pre = Vec::new();
        let mut counts: HashMap<FunId, usize> = HashMap::new();
        let g = self.guard_rec(c, &mut pre, &mut counts)?;
        Ok((Stmt::seq(pre), g))
    }

    fn guard_rec(
        &mut self,
        c: &SCond,
        pre: &mut Vec<Stmt>,
        counts: &mut HashMap<FunId, usize>,
    ) -> Result<Guard, ParseError> {
        Ok(match c {
            SCond::True => Guard::True,
            SCond::False => Guard::False,
            SCond::Eq(a, b) => Guard::Atom(Cond::Eq(self.value(a)?, self.value(b)?)),
            SCond::Rel(r, args) => {
                let f = match self.names.get(&r.text) {
                    Some(Entity::Rel(f)) => *f,
                    Some(_) => return err(r.pos, format!("`{}` is not a relation", r.text)),
                    None => return err(r.pos, format!("undeclared relation `{}`", r.text)),
                };
                self.check_arity(r, f, args.len())?;
                let args = args.iter().map(|a| self.value(a)).collect::<Result<_, _>>()?;
                let n = counts.entry(f).or_insert(0);
                let occurrence = *n;
                *n += 1;
                let slot = self.rel_slot(f, occurrence);
                let top = self.top();
                pre.push(Stmt::Apply {
                    dst: slot,
                    fun: f,
                    args,
                });
                Guard::Atom(Cond::Eq(slot, top))
            }
            SCond::Not(c) => Guard::Not(Box::new(self.guard_rec(c, pre, counts)?)),
            SCond::Or(a, b) => Guard::Or(
                Box::new(self.guard_rec(a, pre, counts)?),
                Box::new(self.guard_rec(b, pre, counts)?),
            ),
            SCond::And(a, b) => Guard::And(
                Box::new(self.guard_rec(a, pre, counts)?),
                Box::new(self.guard_rec(b, pre, counts)?),
            ),
        })
    }

    fn formula(&self, c: &SCond) -> Result<Formula, ParseError> {
        Ok(match c {
            SCond::True => Formula::True,
            SCond::False => Formula::False,
            SCond::Eq(a, b) => Formula::Eq(self.value(a)?, self.value(b)?),
            SCond::Rel(r, _) => return err(r.pos, "relations are not allowed in postconditions"),
            SCond::Not(c) => Formula::not(self.formula(c)?),
            SCond::Or(a, b) => Formula::or(self.formula(a)?, self.formula(b)?),
            SCond::And(a, b) => Formula::and(self.formula(a)?, self.formula(b)?),
        })
    }
}

/// Boolean guard over atomic conditions, before compilation.
#[derive(Debug, Clone)]
enum Guard {
    True,
    False,
    Atom(Cond),
    Not(Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    And(Box<Guard>, Box<Guard>),
}

impl Guard {
    /// The guard as a single atomic conditional, if it is one.
    fn as_atom(&self) -> Option<Cond> {
        match self {
            Guard::Atom(c) => Some(*c),
            Guard::Not(g) => g.as_atom().map(Cond::negate),
            _ => None,
        }
    }
}

/// Compiles `if (g) then t else e` into nested atomic conditionals.
fn compile(g: &Guard, t: Stmt, e: Stmt) -> Stmt {
    match g {
        Guard::True => t,
        Guard::False => e,
        Guard::Atom(c) => Stmt::If {
            cond: *c,
            then: Box::new(t),
            els: Box::new(e),
        },
        Guard::Not(g) => compile(g, e, t),
        Guard::Or(a, b) => {
            let rest = compile(b, t.clone(), e);
            compile(a, t, rest)
        }
        Guard::And(a, b) => {
            let rest = compile(b, t, e.clone());
            compile(a, rest, e)
        }
    }
}

/// Resolves names and compiles a surface program into core form.
pub fn normalize(p: &SurfaceProgram) -> Result<Program, ParseError> {
    let mut r = Resolver {
        sig: Signature::default(),
        names: HashMap::new(),
        user_vars: p.vars.len(),
        rel_slots: HashMap::new(),
        top: None,
    };
    for v in &p.vars {
        let id = r.fresh_var(v.text.clone());
        r.declare(v, Entity::Var(id))?;
    }
    for (f, arity) in &p.funs {
        let id = FunId(r.sig.funs.len() as u16);
        r.sig.funs.push(FunDecl {
            name: f.text.clone(),
            arity: *arity,
        });
        r.declare(f, Entity::Fun(id))?;
    }
    for (rel, arity) in &p.rels {
        let id = FunId(r.sig.funs.len() as u16);
        r.sig.funs.push(FunDecl {
            name: format!("$f_{}", rel.text),
            arity: *arity,
        });
        r.declare(rel, Entity::Rel(id))?;
    }
    for c in &p.consts {
        let id = r.fresh_var(format!("$c_{}", c.text));
        r.declare(c, Entity::Const(id))?;
    }

    let kind = match (&p.body, p.methods.is_empty()) {
        (Some(_), true) => ProgramKind::Flat,
        (None, false) => ProgramKind::Recursive,
        (Some(_), false) => {
            return err(
                p.methods[0].name.pos,
                "a file has either a `program` block or methods, not both",
            )
        }
        (None, true) => {
            return err(
                super::lexer::Pos { line: 1, col: 1 },
                "missing `program` block or method definitions",
            )
        }
    };
    if r.sig.vars.is_empty() {
        return err(super::lexer::Pos { line: 1, col: 1 }, "no variables declared");
    }
    if kind == ProgramKind::Flat {
        if let Some(m) = &p.main {
            return err(m.pos, "`main` is only meaningful for method definitions");
        }
    }

    let mut bodies = Vec::new();
    let main = match kind {
        ProgramKind::Flat => {
            r.sig.methods.push(MethodDecl {
                name: "main".into(),
                outs: Vec::new(),
            });
            let body = r.stmts(p.body.as_ref().unwrap(), false)?;
            bodies.push(body);
            MethodId(0)
        }
        ProgramKind::Recursive => {
            for m in &p.methods {
                let id = MethodId(r.sig.methods.len() as u16);
                let mut outs = Vec::new();
                for o in &m.outs {
                    let v = r.target(o)?;
                    if outs.contains(&v) {
                        return err(o.pos, format!("output `{}` listed twice", o.text));
                    }
                    outs.push(v);
                }
                r.sig.methods.push(MethodDecl {
                    name: m.name.text.clone(),
                    outs,
                });
                if let Some(Entity::Method(_)) = r.names.get(&m.name.text) {
                    return err(m.name.pos, format!("duplicate method `{}`", m.name.text));
                }
                r.declare(&m.name, Entity::Method(id))?;
            }
            for m in &p.methods {
                let body = r.stmts(&m.body, false)?;
                bodies.push(body);
            }
            match &p.main {
                Some(n) => match r.names.get(&n.text) {
                    Some(Entity::Method(m)) => *m,
                    _ => return err(n.pos, format!("undefined method `{}`", n.text)),
                },
                None => match r.sig.lookup_method("main") {
                    Some(m) => m,
                    None if p.methods.len() == 1 => MethodId(0),
                    None => return err(p.methods[0].name.pos, "several methods but no `main` declaration"),
                },
            }
        }
    };
    let post = match &p.post {
        Some(c) => Some(r.formula(c)?),
        None => None,
    };
    Ok(Program {
        sig: r.sig,
        kind,
        bodies,
        main,
        post,
    })
}
