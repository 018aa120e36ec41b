//! Trace files: a header declaring the vocabulary, then one letter per line.
//!
//! ```text
//! vars x, y;
//! funs n/1;
//! ghosts g;
//! methods m(out y);
//! y := n(x)
//! g := y
//! assume(x != y)
//! call m
//! <y> := return
//! ```

use std::collections::HashSet;
use std::fmt::Write;

use crate::syntax::lexer::Tok;
use crate::syntax::surface::Name;
use crate::syntax::{FunDecl, MethodDecl, ParseError, Parser, Signature, Var};

use super::Letter;

/// An execution together with the vocabulary it is written over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub sig: Signature,
    pub letters: Vec<Letter>,
}

impl Trace {
    pub fn new(sig: Signature, letters: Vec<Letter>) -> Self {
        Trace { sig, letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Trace {
        Trace::new(self.sig.clone(), self.letters[..n].to_vec())
    }

    /// The same execution with ghost letters removed.
    pub fn project(&self) -> Trace {
        Trace::new(
            self.sig.clone(),
            self.letters.iter().filter(|l| !l.is_ghost()).cloned().collect(),
        )
    }
}

/// Renders a trace file. `parse_trace(&print_trace(t))` reproduces `t`'s
/// letters and names.
pub fn print_trace(t: &Trace) -> String {
    let sig = &t.sig;
    let mut out = String::new();
    let _ = writeln!(out, "vars {};", sig.vars[..sig.program_vars].join(", "));
    if !sig.funs.is_empty() {
        let funs: Vec<String> = sig.funs.iter().map(|f| format!("{}/{}", f.name, f.arity)).collect();
        let _ = writeln!(out, "funs {};", funs.join(", "));
    }
    if sig.ghost_count() > 0 {
        let _ = writeln!(out, "ghosts {};", sig.vars[sig.program_vars..].join(", "));
    }
    let uses_methods = t
        .letters
        .iter()
        .any(|l| matches!(l, Letter::Call(_) | Letter::Return(_)));
    if uses_methods && !sig.methods.is_empty() {
        let methods: Vec<String> = sig
            .methods
            .iter()
            .map(|m| {
                let outs: Vec<&str> = m.outs.iter().map(|v| sig.var_name(*v)).collect();
                if outs.is_empty() {
                    format!("{}()", m.name)
                } else {
                    format!("{}(out {})", m.name, outs.join(", "))
                }
            })
            .collect();
        let _ = writeln!(out, "methods {};", methods.join(", "));
    }
    for l in &t.letters {
        let _ = writeln!(out, "{}", l.display(sig));
    }
    out
}

fn header_word(p: &Parser, word: &str) -> bool {
    p.is_keyword(word) && *p.peek_next() != Tok::Assign
}

/// Parses a trace file.
pub fn parse_trace(src: &str) -> Result<Trace, ParseError> {
    let mut p = Parser::new(src)?;
    let mut vars: Vec<String> = Vec::new();
    let mut ghosts: Vec<String> = Vec::new();
    let mut funs: Vec<FunDecl> = Vec::new();
    let mut methods: Vec<(String, Vec<Name>)> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut declare = |name: &Name| -> Result<(), ParseError> {
        if !seen.insert(name.text.clone()) {
            return Err(ParseError::new(name.pos, format!("`{}` declared twice", name.text)));
        }
        Ok(())
    };

    loop {
        if p.eat_keyword("vars") {
            for n in p.name_list(Parser::raw_name)? {
                declare(&n)?;
                vars.push(n.text);
            }
        } else if p.eat_keyword("funs") {
            loop {
                let n = p.raw_name()?;
                declare(&n)?;
                p.expect(Tok::Slash)?;
                let pos = p.pos();
                let arity = match p.bump().tok {
                    Tok::Int(0) => return Err(ParseError::new(pos, "arity must be positive")),
                    Tok::Int(k) => k,
                    other => {
                        return Err(ParseError::new(
                            pos,
                            format!("expected arity, found {}", other.describe()),
                        ))
                    }
                };
                funs.push(FunDecl { name: n.text, arity });
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
        } else if header_word(&p, "ghosts") {
            p.bump();
            for n in p.name_list(Parser::raw_name)? {
                declare(&n)?;
                ghosts.push(n.text);
            }
        } else if header_word(&p, "methods") {
            p.bump();
            loop {
                let n = p.raw_name()?;
                declare(&n)?;
                p.expect(Tok::LParen)?;
                let mut outs = Vec::new();
                if p.eat_keyword("out") {
                    outs = p.name_list(Parser::raw_name)?;
                }
                p.expect(Tok::RParen)?;
                methods.push((n.text, outs));
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
        } else {
            break;
        }
        p.expect(Tok::Semi)?;
    }
    if vars.is_empty() {
        return p.error("trace must start with a `vars` declaration");
    }

    let mut sig = Signature::new(vars, funs);
    sig.vars.extend(ghosts);
    for (name, outs) in methods {
        let mut resolved = Vec::new();
        for o in outs {
            let v = program_var(&sig, &o)?;
            if resolved.contains(&v) {
                return Err(ParseError::new(o.pos, format!("`{}` repeated in out tuple", o.text)));
            }
            resolved.push(v);
        }
        sig.methods.push(MethodDecl { name, outs: resolved });
    }

    let mut letters = Vec::new();
    while *p.peek() != Tok::Eof {
        letters.push(letter(&mut p, &sig)?);
        p.eat(&Tok::Semi);
    }
    Ok(Trace::new(sig, letters))
}

fn any_var(sig: &Signature, n: &Name) -> Result<Var, ParseError> {
    sig.lookup_var(&n.text)
        .ok_or_else(|| ParseError::new(n.pos, format!("undeclared variable `{}`", n.text)))
}

fn program_var(sig: &Signature, n: &Name) -> Result<Var, ParseError> {
    let v = any_var(sig, n)?;
    if sig.is_ghost(v) {
        return Err(ParseError::new(
            n.pos,
            format!("ghost variable `{}` is write-only", n.text),
        ));
    }
    Ok(v)
}

fn letter(p: &mut Parser, sig: &Signature) -> Result<Letter, ParseError> {
    if p.is_keyword("call") && *p.peek_next() != Tok::Assign {
        p.bump();
        let m = p.raw_name()?;
        let id = sig
            .lookup_method(&m.text)
            .ok_or_else(|| ParseError::new(m.pos, format!("undeclared method `{}`", m.text)))?;
        return Ok(Letter::Call(id));
    }
    if p.eat(&Tok::Lt) {
        let mut ws = Vec::new();
        if *p.peek() != Tok::Gt {
            for n in p.name_list(Parser::raw_name)? {
                let v = program_var(sig, &n)?;
                if ws.contains(&v) {
                    return Err(ParseError::new(n.pos, format!("`{}` repeated in return", n.text)));
                }
                ws.push(v);
            }
        }
        p.expect(Tok::Gt)?;
        p.expect(Tok::Assign)?;
        p.expect_keyword("return")?;
        return Ok(Letter::Return(ws));
    }
    if p.eat_keyword("assume") {
        p.expect(Tok::LParen)?;
        let x = program_var(sig, &p.raw_name()?)?;
        let eq = match p.bump().tok {
            Tok::Eq => true,
            Tok::Ne => false,
            other => return p.error(format!("expected `=` or `!=`, found {}", other.describe())),
        };
        let y = program_var(sig, &p.raw_name()?)?;
        p.expect(Tok::RParen)?;
        return Ok(if eq {
            Letter::AssumeEq(x, y)
        } else {
            Letter::AssumeNe(x, y)
        });
    }
    let dst_name = p.raw_name()?;
    let dst = any_var(sig, &dst_name)?;
    p.expect(Tok::Assign)?;
    let rhs = p.raw_name()?;
    if p.eat(&Tok::LParen) {
        let fun = sig
            .lookup_fun(&rhs.text)
            .ok_or_else(|| ParseError::new(rhs.pos, format!("undeclared function `{}`", rhs.text)))?;
        let mut args = Vec::new();
        if *p.peek() != Tok::RParen {
            for n in p.name_list(Parser::raw_name)? {
                args.push(program_var(sig, &n)?);
            }
        }
        p.expect(Tok::RParen)?;
        if args.len() != sig.arity(fun) {
            return Err(ParseError::new(
                rhs.pos,
                format!(
                    "`{}` expects {} argument(s), got {}",
                    rhs.text,
                    sig.arity(fun),
                    args.len()
                ),
            ));
        }
        if sig.is_ghost(dst) {
            return Err(ParseError::new(
                dst_name.pos,
                "ghost variables may only be assigned program variables",
            ));
        }
        return Ok(Letter::apply(dst, fun, &args));
    }
    let src = program_var(sig, &rhs)?;
    Ok(if sig.is_ghost(dst) {
        Letter::Ghost { ghost: dst, src }
    } else {
        Letter::Copy { dst, src }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "vars x, y;
funs n/1, f/2;
ghosts g;
methods m(out y);
y := n(x)
g := y
y := f(x, y)
assume(x = y)
assume(x != y)
call m
x := y
<y> := return
";

    #[test]
    fn round_trip_is_exact() {
        let t = parse_trace(SAMPLE).unwrap();
        assert_eq!(t.letters.len(), 8);
        assert!(t.letters[1].is_ghost());
        assert_eq!(print_trace(&t), SAMPLE);
    }

    #[test]
    fn ghost_reads_rejected() {
        let err = parse_trace("vars x; ghosts g;\nx := g\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 6));
    }

    #[test]
    fn arity_checked() {
        assert!(parse_trace("vars x; funs n/1;\nx := n(x, x)\n").is_err());
    }

    #[test]
    fn semicolons_optional() {
        let a = parse_trace("vars x, y; assume(x = y); assume(x != y)").unwrap();
        let b = parse_trace("vars x, y;\nassume(x = y)\nassume(x != y)\n").unwrap();
        assert_eq!(a, b);
    }
}
