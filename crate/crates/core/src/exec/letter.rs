use std::fmt;

use smallvec::SmallVec;

use crate::syntax::{Cond, FunId, MethodId, Signature, Var};

/// One step of an execution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Copy {
        dst: Var,
        src: Var,
    },
    Apply {
        dst: Var,
        fun: FunId,
        args: SmallVec<[Var; 2]>,
    },
    AssumeEq(Var, Var),
    AssumeNe(Var, Var),
    /// Write-only ghost assignment `g := x`.
    Ghost {
        ghost: Var,
        src: Var,
    },
    Call(MethodId),
    Return(Vec<Var>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LetterKind {
    Internal,
    Call,
    Return,
}

impl Letter {
    pub fn apply(dst: Var, fun: FunId, args: &[Var]) -> Letter {
        Letter::Apply {
            dst,
            fun,
            args: args.iter().copied().collect(),
        }
    }

    pub fn assume(c: Cond) -> Letter {
        match c {
            Cond::Eq(x, y) => Letter::AssumeEq(x, y),
            Cond::Ne(x, y) => Letter::AssumeNe(x, y),
        }
    }

    pub fn kind(&self) -> LetterKind {
        match self {
            Letter::Call(_) => LetterKind::Call,
            Letter::Return(_) => LetterKind::Return,
            _ => LetterKind::Internal,
        }
    }

    pub fn is_ghost(&self) -> bool {
        matches!(self, Letter::Ghost { .. })
    }

    /// Variables read by the letter.
    pub fn reads(&self) -> SmallVec<[Var; 2]> {
        match self {
            Letter::Copy { src, .. } | Letter::Ghost { src, .. } => smallvec::smallvec![*src],
            Letter::Apply { args, .. } => args.clone(),
            Letter::AssumeEq(x, y) | Letter::AssumeNe(x, y) => smallvec::smallvec![*x, *y],
            Letter::Call(_) | Letter::Return(_) => SmallVec::new(),
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> LetterDisplay<'a> {
        LetterDisplay { letter: self, sig }
    }
}

/// Trace-file rendering of a letter, e.g. `x := n(x)` or `<x,y> := return`.
pub struct LetterDisplay<'a> {
    letter: &'a Letter,
    sig: &'a Signature,
}

impl fmt::Display for LetterDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: &Var| self.sig.var_name(*x);
        match self.letter {
            Letter::Copy { dst, src } => write!(f, "{} := {}", v(dst), v(src)),
            Letter::Ghost { ghost, src } => write!(f, "{} := {}", v(ghost), v(src)),
            Letter::Apply { dst, fun, args } => {
                let args: Vec<&str> = args.iter().map(v).collect();
                write!(f, "{} := {}({})", v(dst), self.sig.fun_name(*fun), args.join(", "))
            }
            Letter::AssumeEq(x, y) => write!(f, "assume({} = {})", v(x), v(y)),
            Letter::AssumeNe(x, y) => write!(f, "assume({} != {})", v(x), v(y)),
            Letter::Call(m) => write!(f, "call {}", self.sig.method_name(*m)),
            Letter::Return(ws) => {
                let ws: Vec<&str> = ws.iter().map(v).collect();
                write!(f, "<{}> := return", ws.join(","))
            }
        }
    }
}
