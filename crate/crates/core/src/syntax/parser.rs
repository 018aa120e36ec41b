//! Recursive-descent parser for `.up` program files.
//!
//! ```text
//! vars x, y, z;
//! funs n/1;
//! program {
//!   assume(x != z);
//!   y := n(x);
//!   while (y != z) { x := n(x); y := n(y); }
//! }
//! post: x = y;
//! ```

use super::lexer::{tokenize, Pos, Tok, Token};
use super::surface::*;
use super::ParseError;

pub(crate) struct Parser {
    toks: Vec<Token>,
    at: usize,
    /// Accept `$`-prefixed names (printed core programs, trace files).
    allow_reserved: bool,
}

const KEYWORDS: &[&str] = &[
    "vars", "funs", "rels", "consts", "program", "method", "out", "main", "post", "skip", "assume", "if", "then",
    "else", "while", "loop", "break", "choose", "or", "true", "false",
];

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            at: 0,
            allow_reserved: false,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub(crate) fn peek_next(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.pos(), msg))
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            self.error(format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek().describe()))
        }
    }

    /// Any identifier, including reserved `$` names (used by trace files).
    pub(crate) fn raw_name(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(text) if !KEYWORDS.contains(&text.as_str()) => {
                let pos = self.bump().pos;
                Ok(Name { text, pos })
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        let n = self.raw_name()?;
        if n.text.starts_with('$') && !self.allow_reserved {
            return Err(ParseError::new(
                n.pos,
                format!("identifier `{}` uses the reserved `$` prefix", n.text),
            ));
        }
        Ok(n)
    }

    pub(crate) fn name_list(
        &mut self,
        item: fn(&mut Self) -> Result<Name, ParseError>,
    ) -> Result<Vec<Name>, ParseError> {
        let mut out = vec![item(self)?];
        while self.eat(&Tok::Comma) {
            out.push(item(self)?);
        }
        Ok(out)
    }

    fn arity_decl(&mut self) -> Result<(Name, usize), ParseError> {
        let n = self.name()?;
        self.expect(Tok::Slash)?;
        let pos = self.pos();
        match self.bump().tok {
            Tok::Int(0) => Err(ParseError::new(pos, "arity must be positive")),
            Tok::Int(k) => Ok((n, k)),
            other => Err(ParseError::new(
                pos,
                format!("expected arity, found {}", other.describe()),
            )),
        }
    }

    pub(crate) fn program(&mut self) -> Result<SurfaceProgram, ParseError> {
        let mut p = SurfaceProgram::default();
        loop {
            if self.eat_keyword("vars") {
                p.vars.extend(self.name_list(Self::name)?);
                self.expect(Tok::Semi)?;
            } else if self.eat_keyword("funs") {
                p.funs.push(self.arity_decl()?);
                while self.eat(&Tok::Comma) {
                    p.funs.push(self.arity_decl()?);
                }
                self.expect(Tok::Semi)?;
            } else if self.eat_keyword("rels") {
                p.rels.push(self.arity_decl()?);
                while self.eat(&Tok::Comma) {
                    p.rels.push(self.arity_decl()?);
                }
                self.expect(Tok::Semi)?;
            } else if self.eat_keyword("consts") {
                p.consts.extend(self.name_list(Self::name)?);
                self.expect(Tok::Semi)?;
            } else if self.eat_keyword("main") {
                let n = self.name()?;
                if p.main.is_some() {
                    return Err(ParseError::new(n.pos, "duplicate `main` declaration"));
                }
                p.main = Some(n);
                self.expect(Tok::Semi)?;
            } else if self.is_keyword("program") {
                let pos = self.bump().pos;
                if p.body.is_some() {
                    return Err(ParseError::new(pos, "duplicate `program` block"));
                }
                p.body = Some(self.block()?);
            } else if self.eat_keyword("method") {
                p.methods.push(self.method()?);
            } else if self.is_keyword("post") {
                let pos = self.bump().pos;
                if p.post.is_some() {
                    return Err(ParseError::new(pos, "duplicate postcondition"));
                }
                self.expect(Tok::Colon)?;
                p.post = Some(self.cond()?);
                p.post_pos = Some(pos);
                self.eat(&Tok::Semi);
            } else if *self.peek() == Tok::Eof {
                break;
            } else {
                return self.error(format!(
                    "expected a declaration, `program`, `method` or `post`, found {}",
                    self.peek().describe()
                ));
            }
        }
        Ok(p)
    }

    fn method(&mut self) -> Result<SMethod, ParseError> {
        let name = self.name()?;
        self.expect(Tok::LParen)?;
        let mut outs = Vec::new();
        if self.eat_keyword("out") {
            outs = self.name_list(Self::name)?;
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(SMethod { name, outs, body })
    }

    fn block(&mut self) -> Result<Vec<SStmt>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            let (stmt, braced) = self.stmt()?;
            out.push(stmt);
            if !braced && *self.peek() != Tok::RBrace {
                self.expect(Tok::Semi)?;
            }
        }
    }

    /// Returns the statement and whether it ended with a closing brace.
    fn stmt(&mut self) -> Result<(SStmt, bool), ParseError> {
        if self.eat_keyword("skip") {
            return Ok((SStmt::Skip, false));
        }
        if self.is_keyword("break") {
            let pos = self.bump().pos;
            return Ok((SStmt::Break(pos), false));
        }
        if self.eat_keyword("assume") {
            self.expect(Tok::LParen)?;
            let c = self.cond()?;
            self.expect(Tok::RParen)?;
            return Ok((SStmt::Assume(c), false));
        }
        if self.eat_keyword("if") {
            return Ok((self.if_rest()?, true));
        }
        if self.eat_keyword("while") {
            self.expect(Tok::LParen)?;
            let c = self.cond()?;
            self.expect(Tok::RParen)?;
            let body = self.block()?;
            return Ok((SStmt::While(c, body), true));
        }
        if self.eat_keyword("loop") {
            return Ok((SStmt::Loop(self.block()?), true));
        }
        if self.eat_keyword("choose") {
            let mut arms = vec![self.block()?];
            while self.eat_keyword("or") {
                arms.push(self.block()?);
            }
            return Ok((SStmt::Choose(arms), true));
        }
        if *self.peek() == Tok::Lt {
            self.bump();
            let outs = if *self.peek() == Tok::Gt {
                Vec::new()
            } else {
                self.name_list(Self::name)?
            };
            self.expect(Tok::Gt)?;
            self.expect(Tok::Assign)?;
            let method = self.name()?;
            let args = self.call_args()?;
            return Ok((SStmt::Call { outs, method, args }, false));
        }
        let target = self.name()?;
        if *self.peek() == Tok::LParen {
            let args = self.call_args()?;
            return Ok((
                SStmt::Call {
                    outs: Vec::new(),
                    method: target,
                    args,
                },
                false,
            ));
        }
        self.expect(Tok::Assign)?;
        let head = self.name()?;
        if *self.peek() == Tok::LParen {
            self.bump();
            let args = if *self.peek() == Tok::RParen {
                Vec::new()
            } else {
                self.name_list(Self::name)?
            };
            self.expect(Tok::RParen)?;
            Ok((SStmt::Assign(target, SExpr::App(head, args)), false))
        } else {
            Ok((SStmt::Assign(target, SExpr::Name(head)), false))
        }
    }

    fn call_args(&mut self) -> Result<Option<Vec<Name>>, ParseError> {
        self.expect(Tok::LParen)?;
        if self.eat(&Tok::RParen) {
            return Ok(None);
        }
        let args = self.name_list(Self::name)?;
        self.expect(Tok::RParen)?;
        Ok(Some(args))
    }

    fn if_rest(&mut self) -> Result<SStmt, ParseError> {
        self.expect(Tok::LParen)?;
        let c = self.cond()?;
        self.expect(Tok::RParen)?;
        self.eat_keyword("then");
        let then = self.block()?;
        let els = if self.eat_keyword("else") {
            if self.eat_keyword("if") {
                vec![self.if_rest()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(SStmt::If(c, then, els))
    }

    /// `cond := or ('=>' cond)?` with `||` binding looser than `&&`.
    pub(crate) fn cond(&mut self) -> Result<SCond, ParseError> {
        let lhs = self.cond_or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.cond()?;
            return Ok(SCond::Or(Box::new(SCond::Not(Box::new(lhs))), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn cond_or(&mut self) -> Result<SCond, ParseError> {
        let mut lhs = self.cond_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.cond_and()?;
            lhs = SCond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> Result<SCond, ParseError> {
        let mut lhs = self.cond_unary()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.cond_unary()?;
            lhs = SCond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_unary(&mut self) -> Result<SCond, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(SCond::Not(Box::new(self.cond_unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let c = self.cond()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        if self.eat_keyword("true") {
            return Ok(SCond::True);
        }
        if self.eat_keyword("false") {
            return Ok(SCond::False);
        }
        let lhs = self.name()?;
        if *self.peek() == Tok::LParen {
            self.bump();
            let args = self.name_list(Self::name)?;
            self.expect(Tok::RParen)?;
            return Ok(SCond::Rel(lhs, args));
        }
        match self.peek() {
            Tok::Eq => {
                self.bump();
                Ok(SCond::Eq(lhs, self.name()?))
            }
            Tok::Ne => {
                self.bump();
                Ok(SCond::Not(Box::new(SCond::Eq(lhs, self.name()?))))
            }
            other => self.error(format!("expected `=` or `!=`, found {}", other.describe())),
        }
    }
}

pub fn parse_surface(src: &str) -> Result<SurfaceProgram, ParseError> {
    Parser::new(src)?.program()
}

/// Like [`parse_surface`] but also accepts the reserved `$` names that
/// normalization introduces, so printed core programs parse back.
pub fn parse_surface_reserved(src: &str) -> Result<SurfaceProgram, ParseError> {
    let mut p = Parser::new(src)?;
    p.allow_reserved = true;
    p.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn error_at(src: &str) -> (usize, usize) {
        let e = parse_surface(src).unwrap_err();
        (e.line, e.col)
    }

    #[test]
    fn declarations_and_post_are_collected() {
        let p = parse_surface("vars x, y; funs n/1, f/2; rels R/1; consts c; program { skip } post: x = y;").unwrap();
        assert_eq!(p.vars.len(), 2);
        assert_eq!(
            p.funs.iter().map(|(n, a)| (n.text.as_str(), *a)).collect::<Vec<_>>(),
            [("n", 1), ("f", 2)]
        );
        assert_eq!(p.rels.len(), 1);
        assert_eq!(p.consts.len(), 1);
        assert!(matches!(p.post, Some(SCond::Eq(..))));
    }

    #[test]
    fn implication_is_a_disjunction() {
        let p = parse_surface("vars b, T, u, k; program { skip } post: b = T => u = k;").unwrap();
        let Some(SCond::Or(lhs, rhs)) = p.post else { panic!() };
        assert!(matches!(*lhs, SCond::Not(_)));
        assert!(matches!(*rhs, SCond::Eq(..)));
    }

    #[test]
    fn errors_point_at_the_offending_token() {
        assert_eq!(error_at("vars x;\nprogram {\n  x = x;\n}"), (3, 5));
        assert_eq!(
            error_at("vars x;\nprogram { skip }\npost: x = x;\npost: x = x;"),
            (4, 1)
        );
        assert_eq!(error_at("vars x;\nprogram { assume(x < x); }"), (2, 20));
        assert_eq!(error_at("vars x; program { skip } junk"), (1, 26));
    }

    #[test]
    fn reserved_names_need_the_reserved_parser() {
        let src = "vars $c_a; program { skip }";
        assert!(parse_surface(src).is_err());
        assert!(parse_surface_reserved(src).is_ok());
    }
}
