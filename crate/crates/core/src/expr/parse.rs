//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? INT)?
//! atom   := INT | IDENT args? | '(' expr ')' | 'exp' '(' expr ')'
//! args   := '(' IDENT (',' IDENT)* ')'
//! ```
//!
//! Identifiers resolve against the context: `t`, `x`, the jet variables
//! `u`/`v`/`w` with `_t.._x..` suffixes, declared function symbols with
//! argument-letter suffixes (`alpha_xx`, `sigma_v`), the antiderivative
//! symbols `Dint`/`Kint`, and declared parameters.  Explicit argument lists
//! after a function symbol are checked against its declaration and dropped.

use num::BigInt;

use super::atom::{AntiKind, ArgVar, Dep, Indeterminate};
use super::context::Context;
use super::{Expr, ExprError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = text[start..i].parse().expect("digit run");
                toks.push((Tok::Int(n), start));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            other => {
                return Err(ExprError::Parse {
                    pos: i,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a Context,
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::Parse { pos: self.here(), msg: format!("expected {what}") })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = acc / self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let pos = self.here();
        match self.bump() {
            Some(Tok::Int(n)) => {
                let e: i64 = n.try_into().map_err(|_| ExprError::Parse {
                    pos,
                    msg: "exponent too large".to_string(),
                })?;
                Ok(Expr::pow(base, if neg { -e } else { e }))
            }
            _ => Err(ExprError::Parse { pos, msg: "expected integer exponent".to_string() }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Rational(num::BigRational::from_integer(n))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "exp" => {
                self.expect(Tok::LParen, "`(` after exp")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::exp(e))
            }
            Some(Tok::Ident(name)) => self.ident(name, pos),
            _ => Err(ExprError::Parse { pos, msg: "expected an operand".to_string() }),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr, ExprError> {
        let (base, suffix) = match name.split_once('_') {
            Some((b, s)) => (b, Some(s)),
            None => (name.as_str(), None),
        };
        let atom = match base {
            "t" | "x" if suffix.is_none() => {
                if base == "t" {
                    Indeterminate::t()
                } else {
                    Indeterminate::x()
                }
            }
            "t" | "x" => {
                return Err(ExprError::MalformedSuffix { name: name.clone(), pos });
            }
            "u" | "v" | "w" => {
                let dep = match base {
                    "u" => Dep::U,
                    "v" => Dep::V,
                    _ => Dep::W,
                };
                let (mut dt, mut dx) = (0, 0);
                for c in suffix.unwrap_or("").chars() {
                    match c {
                        't' => dt += 1,
                        'x' => dx += 1,
                        _ => return Err(ExprError::MalformedSuffix { name: name.clone(), pos }),
                    }
                }
                Indeterminate::jet(dep, dt, dx)
            }
            "Dint" | "Kint" if suffix.is_none() => Indeterminate::Anti(if base == "Dint" {
                AntiKind::DInt
            } else {
                AntiKind::KInt
            }),
            _ => {
                if let Some(f) = self.ctx.func(base) {
                    let mut index = vec![0u32; f.args.len()];
                    for c in suffix.unwrap_or("").chars() {
                        let av = ArgVar::from_letter(c).ok_or_else(|| {
                            ExprError::MalformedSuffix { name: name.clone(), pos }
                        })?;
                        let slot = f.args.iter().position(|a| *a == av).ok_or_else(|| {
                            ExprError::MalformedSuffix { name: name.clone(), pos }
                        })?;
                        index[slot] += 1;
                    }
                    let atom = Indeterminate::func(base, &f.args, &index);
                    self.maybe_args(base, &f.args.clone())?;
                    return Ok(Expr::Atom(atom));
                } else if suffix.is_none() && self.ctx.is_param(base) {
                    Indeterminate::param(base)
                } else {
                    return Err(ExprError::UnknownSymbol { name: name.clone(), pos });
                }
            }
        };
        Ok(Expr::Atom(atom))
    }

    /// Optional explicit argument list after a function symbol; must match
    /// the declaration exactly.
    fn maybe_args(&mut self, name: &str, args: &[ArgVar]) -> Result<(), ExprError> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(());
        }
        self.pos += 1;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.expect(Tok::Comma, "`,`")?;
            }
            match self.bump() {
                Some(Tok::Ident(got)) if got.len() == 1 && got.starts_with(a.letter()) => {}
                _ => return Err(ExprError::ArgMismatch { name: name.to_string() }),
            }
        }
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::ArgMismatch { name: name.to_string() })
        }
    }
}

pub fn parse(text: &str, ctx: &Context) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, ctx, len: text.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ExprError::Parse { pos: p.here(), msg: "trailing input".to_string() });
    }
    Ok(e)
}
