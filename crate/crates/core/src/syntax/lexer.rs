use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(usize),
    Semi,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Slash,
    Assign,
    Eq,
    Ne,
    Bang,
    OrOr,
    AndAnd,
    Implies,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Bang => "`!`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$' || c == '\''
}

/// Splits source text into tokens. `//` starts a line comment.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            } else {
                out.push(Token { tok: Tok::Slash, pos });
            }
            continue;
        }
        if is_ident_start(c) {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(s),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut n: usize = 0;
            while let Some(&c) = chars.peek() {
                let Some(d) = c.to_digit(10) else { break };
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(d as usize))
                    .ok_or_else(|| ParseError::new(pos, "integer literal too large"))?;
                bump!();
            }
            out.push(Token { tok: Tok::Int(n), pos });
            continue;
        }
        bump!();
        let tok = match c {
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '≠' => Tok::Ne,
            '¬' => Tok::Bang,
            '∨' => Tok::OrOr,
            '∧' => Tok::AndAnd,
            ':' => {
                if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            '=' => {
                if chars.peek() == Some(&'>') {
                    bump!();
                    Tok::Implies
                } else {
                    if chars.peek() == Some(&'=') {
                        bump!();
                    }
                    Tok::Eq
                }
            }
            '!' => {
                if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::Ne
                } else {
                    Tok::Bang
                }
            }
            '|' if chars.peek() == Some(&'|') => {
                bump!();
                Tok::OrOr
            }
            '&' if chars.peek() == Some(&'&') => {
                bump!();
                Tok::AndAnd
            }
            other => return Err(ParseError::new(pos, format!("unexpected character `{other}`"))),
        };
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("x := n(x);\n  assume(x != y)").unwrap();
        let assume = toks.iter().find(|t| t.tok == Tok::Ident("assume".into())).unwrap();
        assert_eq!(assume.pos, Pos { line: 2, col: 3 });
        assert!(toks.iter().any(|t| t.tok == Tok::Ne));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("// nothing here\nskip").unwrap();
        assert_eq!(toks.len(), 2);
    }

    #[test]
    fn stray_character_is_an_error() {
        let err = tokenize("x := @").unwrap_err();
        assert_eq!((err.line, err.col), (1, 6));
    }
}
