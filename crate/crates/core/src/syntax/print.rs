//! Prints core-form programs back to source text that parses to the same
//! program (via [`super::parse_core_program`]).

use std::fmt::Write;

use super::ast::*;

pub fn print_formula(sig: &Signature, f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Eq(x, y) => format!("{} = {}", sig.var_name(*x), sig.var_name(*y)),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Eq(x, y) => format!("{} != {}", sig.var_name(*x), sig.var_name(*y)),
            other => format!("!({})", print_formula(sig, other)),
        },
        Formula::Or(a, b) => format!("({} || {})", print_formula(sig, a), print_formula(sig, b)),
        Formula::And(a, b) => format!("({} && {})", print_formula(sig, a), print_formula(sig, b)),
    }
}

pub fn print_cond(sig: &Signature, c: Cond) -> String {
    match c {
        Cond::Eq(x, y) => format!("{} = {}", sig.var_name(x), sig.var_name(y)),
        Cond::Ne(x, y) => format!("{} != {}", sig.var_name(x), sig.var_name(y)),
    }
}

struct Printer<'a> {
    sig: &'a Signature,
    out: String,
}

impl Printer<'_> {
    fn line(&mut self, depth: usize, s: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn block(&mut self, depth: usize, s: &Stmt) {
        match s {
            Stmt::Seq(v) => v.iter().for_each(|s| self.stmt(depth, s)),
            Stmt::Skip => {}
            other => self.stmt(depth, other),
        }
    }

    fn stmt(&mut self, d: usize, s: &Stmt) {
        let sig = self.sig;
        match s {
            Stmt::Skip => self.line(d, "skip;"),
            Stmt::Copy { dst, src } => self.line(d, &format!("{} := {};", sig.var_name(*dst), sig.var_name(*src))),
            Stmt::Apply { dst, fun, args } => {
                let args: Vec<_> = args.iter().map(|a| sig.var_name(*a)).collect();
                self.line(
                    d,
                    &format!("{} := {}({});", sig.var_name(*dst), sig.fun_name(*fun), args.join(", ")),
                )
            }
            Stmt::Assume(c) => self.line(d, &format!("assume({});", print_cond(sig, *c))),
            Stmt::Seq(v) => v.iter().for_each(|s| self.stmt(d, s)),
            Stmt::If { cond, then, els } => {
                self.line(d, &format!("if ({}) {{", print_cond(sig, *cond)));
                self.block(d + 1, then);
                self.line(d, "} else {");
                self.block(d + 1, els);
                self.line(d, "}");
            }
            Stmt::While { cond, body } => {
                self.line(d, &format!("while ({}) {{", print_cond(sig, *cond)));
                self.block(d + 1, body);
                self.line(d, "}");
            }
            Stmt::Loop(body) => {
                self.line(d, "loop {");
                self.block(d + 1, body);
                self.line(d, "}");
            }
            Stmt::Break => self.line(d, "break;"),
            Stmt::Choice(arms) if arms.is_empty() => self.line(d, "assume(false);"),
            Stmt::Choice(arms) => {
                self.line(d, "choose {");
                for (i, arm) in arms.iter().enumerate() {
                    if i > 0 {
                        self.line(d, "} or {");
                    }
                    self.block(d + 1, arm);
                }
                self.line(d, "}");
            }
            Stmt::Call { outs, method } => {
                let outs: Vec<_> = outs.iter().map(|v| sig.var_name(*v)).collect();
                self.line(d, &format!("<{}> := {}();", outs.join(", "), sig.method_name(*method)))
            }
        }
    }
}

/// Source text for a core-form program.
pub fn print_program(p: &Program) -> String {
    let sig = &p.sig;
    let mut pr = Printer {
        sig,
        out: String::new(),
    };
    let _ = writeln!(pr.out, "vars {};", sig.vars[..sig.program_vars].join(", "));
    if !sig.funs.is_empty() {
        let funs: Vec<_> = sig.funs.iter().map(|f| format!("{}/{}", f.name, f.arity)).collect();
        let _ = writeln!(pr.out, "funs {};", funs.join(", "));
    }
    match p.kind {
        ProgramKind::Flat => {
            pr.line(0, "program {");
            pr.block(1, p.main_body());
            pr.line(0, "}");
        }
        ProgramKind::Recursive => {
            let _ = writeln!(pr.out, "main {};", sig.method_name(p.main));
            for (i, body) in p.bodies.iter().enumerate() {
                let m = MethodId(i as u16);
                let outs: Vec<_> = sig.outs(m).iter().map(|v| sig.var_name(*v)).collect();
                let header = if outs.is_empty() {
                    format!("method {}() {{", sig.method_name(m))
                } else {
                    format!("method {}(out {}) {{", sig.method_name(m), outs.join(", "))
                };
                pr.line(0, &header);
                pr.block(1, body);
                pr.line(0, "}");
            }
        }
    }
    if let Some(post) = &p.post {
        let _ = writeln!(pr.out, "post: {};", print_formula(sig, post));
    }
    pr.out
}
