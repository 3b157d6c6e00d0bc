//! Hand-rolled lexer and recursive-descent parser for `.mvl` sources.

use num_bigint::BigInt;

use super::ast::{AExpr, BExpr, Cmp, Stmt};
use super::{LangError, Program};

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Punct(&'static str),
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.peek2() == Some(b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Result<Spanned, LangError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let spanned = |tok| Spanned { tok, line, col };
        let Some(c) = self.peek() else {
            return Ok(spanned(Tok::Eof));
        };
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok(spanned(Tok::Ident(text.to_string())));
        }
        if c.is_ascii_digit() {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok(spanned(Tok::Int(text.parse().unwrap())));
        }
        self.bump();
        let two = |l: &mut Lexer, s| {
            l.bump();
            Ok(spanned(Tok::Punct(s)))
        };
        match c {
            b'(' => Ok(spanned(Tok::Punct("("))),
            b')' => Ok(spanned(Tok::Punct(")"))),
            b'{' => Ok(spanned(Tok::Punct("{"))),
            b'}' => Ok(spanned(Tok::Punct("}"))),
            b',' => Ok(spanned(Tok::Punct(","))),
            b';' => Ok(spanned(Tok::Punct(";"))),
            b':' => Ok(spanned(Tok::Punct(":"))),
            b'@' => Ok(spanned(Tok::Punct("@"))),
            b'+' => Ok(spanned(Tok::Punct("+"))),
            b'-' => Ok(spanned(Tok::Punct("-"))),
            b'*' => Ok(spanned(Tok::Punct("*"))),
            b'=' if self.peek() == Some(b'=') => two(self, "=="),
            b'=' => Ok(spanned(Tok::Punct("="))),
            b'!' if self.peek() == Some(b'=') => two(self, "!="),
            b'!' => Ok(spanned(Tok::Punct("!"))),
            b'<' if self.peek() == Some(b'=') => two(self, "<="),
            b'<' => Ok(spanned(Tok::Punct("<"))),
            b'>' if self.peek() == Some(b'=') => two(self, ">="),
            b'>' => Ok(spanned(Tok::Punct(">"))),
            b'&' if self.peek() == Some(b'&') => two(self, "&&"),
            b'|' if self.peek() == Some(b'|') => two(self, "||"),
            _ => Err(LangError::Syntax {
                line,
                col,
                message: format!("unexpected character {:?}", c as char),
            }),
        }
    }
}

pub struct Parser {
    toks: Vec<Spanned>,
    idx: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, LangError> {
        let mut lexer = Lexer::new(src);
        let mut toks = Vec::new();
        loop {
            let t = lexer.next()?;
            let eof = t.tok == Tok::Eof;
            toks.push(t);
            if eof {
                break;
            }
        }
        Ok(Parser { toks, idx: 0 })
    }

    fn cur(&self) -> &Spanned {
        &self.toks[self.idx]
    }

    fn err(&self, message: impl Into<String>) -> LangError {
        LangError::Syntax {
            line: self.cur().line,
            col: self.cur().col,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.idx].tok.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> Result<(), LangError> {
        match &self.cur().tok {
            Tok::Punct(q) if *q == p => {
                self.advance();
                Ok(())
            }
            other => Err(self.err(format!("expected `{}`, found {:?}", p, other))),
        }
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(&self.cur().tok, Tok::Punct(q) if *q == p)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.cur().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> Result<(), LangError> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.err(format!("expected keyword `{}`", kw)))
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match &self.cur().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {:?}", other))),
        }
    }

    pub fn program(&mut self) -> Result<Program, LangError> {
        self.eat_keyword("fn")?;
        let name = self.ident()?;
        self.eat_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                let p = self.ident()?;
                self.eat_punct(":")?;
                self.eat_keyword("int")?;
                params.push(p);
                if self.at_punct(",") {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.eat_punct(")")?;
        let body = self.block()?;
        if self.cur().tok != Tok::Eof {
            return Err(self.err("trailing input after program body"));
        }
        Program::new(name, params, body)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.eat_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            stmts.push(self.stmt()?);
        }
        self.eat_punct("}")?;
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        if self.at_keyword("assume") {
            self.advance();
            self.eat_punct("(")?;
            let b = self.bexpr()?;
            self.eat_punct(")")?;
            self.eat_punct(";")?;
            return Ok(Stmt::Assume(b));
        }
        if self.at_keyword("int") {
            self.advance();
            let mut decls = Vec::new();
            loop {
                let v = self.ident()?;
                let init = if self.at_punct("=") {
                    self.advance();
                    Some(self.aexpr()?)
                } else {
                    None
                };
                decls.push((v, init));
                if self.at_punct(",") {
                    self.advance();
                } else {
                    break;
                }
            }
            self.eat_punct(";")?;
            return Ok(Stmt::Decl(decls));
        }
        if self.at_keyword("while") {
            self.advance();
            self.eat_punct("(")?;
            let b = self.bexpr()?;
            self.eat_punct(")")?;
            let body = self.block()?;
            return Ok(Stmt::While(b, body));
        }
        if self.at_keyword("if") {
            self.advance();
            self.eat_punct("(")?;
            let b = self.bexpr()?;
            self.eat_punct(")")?;
            let then = self.block()?;
            let els = if self.at_keyword("else") {
                self.advance();
                self.block()?
            } else {
                Vec::new()
            };
            return Ok(Stmt::If(b, then, els));
        }
        if self.at_punct("@") {
            self.advance();
            let l = self.ident()?;
            self.eat_punct(";")?;
            return Ok(Stmt::LocMark(l));
        }
        // assignment
        let v = self.ident()?;
        self.eat_punct("=")?;
        let e = self.aexpr()?;
        self.eat_punct(";")?;
        Ok(Stmt::Assign(v, e))
    }

    pub fn bexpr(&mut self) -> Result<BExpr, LangError> {
        self.bexpr_or()
    }

    fn bexpr_or(&mut self) -> Result<BExpr, LangError> {
        let mut l = self.bexpr_and()?;
        while self.at_punct("||") {
            self.advance();
            let r = self.bexpr_and()?;
            l = BExpr::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn bexpr_and(&mut self) -> Result<BExpr, LangError> {
        let mut l = self.bexpr_not()?;
        while self.at_punct("&&") {
            self.advance();
            let r = self.bexpr_not()?;
            l = BExpr::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn bexpr_not(&mut self) -> Result<BExpr, LangError> {
        if self.at_punct("!") {
            self.advance();
            let b = self.bexpr_not()?;
            return Ok(BExpr::Not(Box::new(b)));
        }
        self.bexpr_atom()
    }

    fn bexpr_atom(&mut self) -> Result<BExpr, LangError> {
        if self.at_keyword("true") {
            self.advance();
            return Ok(BExpr::Lit(true));
        }
        if self.at_keyword("false") {
            self.advance();
            return Ok(BExpr::Lit(false));
        }
        // A parenthesis may open either a nested bexpr or an aexpr operand;
        // try the boolean reading first and fall back on failure.
        if self.at_punct("(") {
            let save = self.idx;
            self.advance();
            if let Ok(b) = self.bexpr() {
                if self.at_punct(")") {
                    self.advance();
                    // Only accept if not followed by an arithmetic operator:
                    // `(x) + 1 < y` must parse as a comparison.
                    if !self.at_punct("+") && !self.at_punct("-") && !self.at_punct("*") {
                        return Ok(b);
                    }
                }
            }
            self.idx = save;
        }
        let l = self.aexpr()?;
        let op = match &self.cur().tok {
            Tok::Punct("==") => Cmp::Eq,
            Tok::Punct("!=") => Cmp::Ne,
            Tok::Punct("<") => Cmp::Lt,
            Tok::Punct("<=") => Cmp::Le,
            Tok::Punct(">") => Cmp::Gt,
            Tok::Punct(">=") => Cmp::Ge,
            other => return Err(self.err(format!("expected comparison operator, found {:?}", other))),
        };
        self.advance();
        let r = self.aexpr()?;
        Ok(BExpr::Cmp(op, l, r))
    }

    pub fn aexpr(&mut self) -> Result<AExpr, LangError> {
        let mut l = self.aterm()?;
        loop {
            if self.at_punct("+") {
                self.advance();
                let r = self.aterm()?;
                l = AExpr::Add(Box::new(l), Box::new(r));
            } else if self.at_punct("-") {
                self.advance();
                let r = self.aterm()?;
                l = AExpr::Sub(Box::new(l), Box::new(r));
            } else {
                return Ok(l);
            }
        }
    }

    fn aterm(&mut self) -> Result<AExpr, LangError> {
        let mut l = self.afactor()?;
        while self.at_punct("*") {
            self.advance();
            let r = self.afactor()?;
            l = AExpr::Mul(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn afactor(&mut self) -> Result<AExpr, LangError> {
        if self.at_punct("-") {
            self.advance();
            let e = self.afactor()?;
            // Fold `-5` into a signed constant so signed literals round-trip
            // structurally through the printer.
            if let AExpr::Const(n) = e {
                return Ok(AExpr::Const(-n));
            }
            return Ok(AExpr::Neg(Box::new(e)));
        }
        if self.at_punct("(") {
            self.advance();
            let e = self.aexpr()?;
            self.eat_punct(")")?;
            return Ok(e);
        }
        match self.advance() {
            Tok::Ident(s) => Ok(AExpr::Var(s)),
            Tok::Int(n) => Ok(AExpr::Const(n)),
            other => Err(self.err(format!("expected arithmetic operand, found {:?}", other))),
        }
    }
}
