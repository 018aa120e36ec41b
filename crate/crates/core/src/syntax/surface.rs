//! Surface syntax tree, as written by the user: names are unresolved and the
//! extended conditionals (relations, constants, `||`, `&&`, `!`) are allowed.

use super::lexer::Pos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Name(Name),
    App(Name, Vec<Name>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SCond {
    True,
    False,
    Eq(Name, Name),
    Rel(Name, Vec<Name>),
    Not(Box<SCond>),
    Or(Box<SCond>, Box<SCond>),
    And(Box<SCond>, Box<SCond>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SStmt {
    Skip,
    Assign(Name, SExpr),
    /// `<w1,..> := m(..)` or `m(..)`. `args` is `None` for `m()`.
    Call {
        outs: Vec<Name>,
        method: Name,
        args: Option<Vec<Name>>,
    },
    Assume(SCond),
    If(SCond, Vec<SStmt>, Vec<SStmt>),
    While(SCond, Vec<SStmt>),
    Loop(Vec<SStmt>),
    Break(Pos),
    Choose(Vec<Vec<SStmt>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SMethod {
    pub name: Name,
    pub outs: Vec<Name>,
    pub body: Vec<SStmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SurfaceProgram {
    pub vars: Vec<Name>,
    pub funs: Vec<(Name, usize)>,
    pub rels: Vec<(Name, usize)>,
    pub consts: Vec<Name>,
    pub body: Option<Vec<SStmt>>,
    pub methods: Vec<SMethod>,
    pub main: Option<Name>,
    pub post: Option<SCond>,
    /// Position of the `post` keyword, for error reporting.
    pub post_pos: Option<Pos>,
}
