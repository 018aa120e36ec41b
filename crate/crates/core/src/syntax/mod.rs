//! Surface language, normalization to core form, and postcondition lowering.

pub mod ast;
pub mod lexer;
mod lower;
mod normalize;
mod parser;
mod print;
pub mod surface;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use lower::{dnf, lower, lower_postcondition, violation_check};
pub use normalize::normalize;
pub(crate) use parser::Parser;
pub use parser::{parse_surface, parse_surface_reserved};
pub use print::{print_cond, print_formula, print_program};

/// A syntax or resolution error at a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: lexer::Pos, message: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    /// `file:line:col: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}", self.line, self.col, self.message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

/// Parses a user program and normalizes it to core form.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    normalize(&parse_surface(src)?)
}

/// Parses a standalone postcondition such as `z = t || x != y` over the
/// variables and constants of `sig`. A trailing `;` is allowed.
pub fn parse_postcondition(sig: &Signature, src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.cond()?;
    p.eat(&lexer::Tok::Semi);
    if *p.peek() != lexer::Tok::Eof {
        return p.error(format!("expected end of postcondition, found {}", p.peek().describe()));
    }
    resolve_formula(sig, &c)
}

fn resolve_formula(sig: &Signature, c: &surface::SCond) -> Result<Formula, ParseError> {
    use surface::SCond;
    let value = |n: &surface::Name| {
        sig.lookup_var(&n.text)
            .filter(|v| !sig.is_ghost(*v))
            .or_else(|| sig.lookup_var(&format!("$c_{}", n.text)))
            .ok_or_else(|| ParseError::new(n.pos, format!("undeclared variable `{}`", n.text)))
    };
    Ok(match c {
        SCond::True => Formula::True,
        SCond::False => Formula::False,
        SCond::Eq(a, b) => Formula::Eq(value(a)?, value(b)?),
        SCond::Rel(r, _) => return Err(ParseError::new(r.pos, "relations are not allowed in postconditions")),
        SCond::Not(c) => Formula::not(resolve_formula(sig, c)?),
        SCond::Or(a, b) => Formula::or(resolve_formula(sig, a)?, resolve_formula(sig, b)?),
        SCond::And(a, b) => Formula::and(resolve_formula(sig, a)?, resolve_formula(sig, b)?),
    })
}

/// Parses printed core-form programs, which may use reserved `$` names.
pub fn parse_core_program(src: &str) -> Result<Program, ParseError> {
    normalize(&parse_surface_reserved(src)?)
}
