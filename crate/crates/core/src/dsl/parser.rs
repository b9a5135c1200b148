//! Recursive-descent parser for meaning programs.
//!
//! ```text
//! expr    := 'lambda' IDENT ':' expr | or
//! or      := and ('or' and)*
//! and     := not ('and' not)*
//! not     := 'not' not | compare
//! compare := postfix (CMP postfix)?
//! postfix := primary ('.' IDENT '(' args? ')')*
//! primary := INT | 'True' | 'False' | NAMESPACE '.' MEMBER
//!          | IDENT '(' args? ')' | IDENT | '(' expr ')'
//! ```
//!
//! Names are resolved while parsing: lambda parameters become `Var`, builtins
//! become `Call` (or `BuiltinRef` when a builtin with parameters is used bare).

use super::ast::{CmpOp, EnumLit, Expr};
use super::builtins::BuiltinCatalogue;
use super::DslError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, DslError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b':' => Tok::Colon,
            b'=' | b'!' | b'<' | b'>' => {
                let next = bytes.get(i + 1).copied();
                let (op, len) = match (c, next) {
                    (b'=', Some(b'=')) => (CmpOp::Eq, 2),
                    (b'!', Some(b'=')) => (CmpOp::Ne, 2),
                    (b'<', Some(b'=')) => (CmpOp::Le, 2),
                    (b'>', Some(b'=')) => (CmpOp::Ge, 2),
                    (b'<', _) => (CmpOp::Lt, 1),
                    (b'>', _) => (CmpOp::Gt, 1),
                    _ => {
                        return Err(DslError::Syntax {
                            position: start,
                            expected: "comparison operator".into(),
                            found: format!("`{}`", c as char),
                        })
                    }
                };
                i += len;
                toks.push((Tok::Cmp(op), start));
                continue;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                let v = text.parse::<i64>().map_err(|_| DslError::Syntax {
                    position: start,
                    expected: "integer literal".into(),
                    found: text.to_string(),
                })?;
                toks.push((Tok::Int(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(DslError::Syntax {
                    position: start,
                    expected: "token".into(),
                    found: format!("`{ch}`"),
                });
            }
        };
        toks.push((tok, start));
        i += 1;
    }
    toks.push((Tok::Eof, src.len()));
    Ok(toks)
}

const KEYWORDS: [&str; 5] = ["lambda", "and", "or", "not", "None"];

struct Parser<'c> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    scope: Vec<String>,
    catalogue: &'c BuiltinCatalogue,
}

impl<'c> Parser<'c> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn position(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> DslError {
        DslError::Syntax {
            position: self.position(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), DslError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, expected: &str) -> Result<String, DslError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        if self.is_keyword("lambda") {
            self.bump();
            let param = self.ident("lambda parameter name")?;
            self.expect(Tok::Colon, "`:` after lambda parameter")?;
            self.scope.push(param.clone());
            let body = self.expr();
            self.scope.pop();
            return Ok(Expr::Lambda {
                param,
                body: Box::new(body?),
            });
        }
        self.or()
    }

    fn or(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.and()?;
        while self.is_keyword("or") {
            self.bump();
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.not()?;
        while self.is_keyword("and") {
            self.bump();
            let rhs = self.not()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, DslError> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.compare()
    }

    fn compare(&mut self) -> Result<Expr, DslError> {
        let lhs = self.postfix()?;
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let rhs = self.postfix()?;
            if let Tok::Cmp(_) = self.peek() {
                return Err(self.error("end of comparison (chained comparisons are not supported)"));
            }
            return Ok(Expr::Compare {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            });
        }
        Ok(lhs)
    }

    fn args(&mut self) -> Result<Vec<Expr>, DslError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.error("`,` or `)`")),
            }
        }
    }

    fn check_arity(&self, name: &str, got: usize, position: usize) -> Result<(), DslError> {
        let builtin = self
            .catalogue
            .get(name)
            .ok_or_else(|| DslError::UnknownBuiltin {
                name: name.to_string(),
                position: Some(position),
            })?;
        if builtin.arity() != got {
            return Err(DslError::ArityMismatch {
                name: name.to_string(),
                expected: builtin.arity(),
                got,
                position: Some(position),
            });
        }
        Ok(())
    }

    fn postfix(&mut self) -> Result<Expr, DslError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            let at = self.position();
            let name = self.ident("method name")?;
            let args = self.args()?;
            self.check_arity(&name, args.len() + 1, at)?;
            e = Expr::MethodCall {
                receiver: Box::new(e),
                name,
                args,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let at = self.position();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "True" || name == "False" => {
                self.bump();
                Ok(Expr::Bool(name == "True"))
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                let bound = self.scope.contains(&name);
                if bound {
                    return Ok(Expr::Var(name));
                }
                if EnumLit::is_namespace(&name) && *self.peek() == Tok::Dot {
                    if let Tok::Ident(member) = self.peek_at(1).clone() {
                        if let Some(lit) = EnumLit::lookup(&name, &member) {
                            self.bump();
                            self.bump();
                            return Ok(Expr::Enum(lit));
                        }
                    }
                    self.bump();
                    return Err(self.error(&format!("member of {name}")));
                }
                if *self.peek() == Tok::LParen {
                    let args = self.args()?;
                    self.check_arity(&name, args.len(), at)?;
                    return Ok(Expr::Call { name, args });
                }
                match self.catalogue.get(&name) {
                    Some(b) if b.arity() == 0 => Ok(Expr::Call { name, args: vec![] }),
                    Some(_) => Ok(Expr::BuiltinRef(name)),
                    None => Err(DslError::UnboundVariable {
                        name,
                        position: Some(at),
                    }),
                }
            }
            _ => Err(self.error("expression")),
        }
    }
}

/// Parses program text against a builtin catalogue.
pub fn parse_with(src: &str, catalogue: &BuiltinCatalogue) -> Result<Expr, DslError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        scope: Vec::new(),
        catalogue,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("end of input"));
    }
    Ok(e)
}
