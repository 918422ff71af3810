//! Text syntax for open formulas.
//!
//! ```text
//! formula  := implies ( "<->" implies )*
//! implies  := or ( "->" implies )?
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "!" unary | primary
//! primary  := "(" formula ")" | "true" | "false"
//!           | NAME "(" var ( "," var )* ")"
//!           | var "=" var | var "!=" var
//! var      := "x" DIGITS            (1-based)
//! ```
//!
//! `a -> b` is read as `!a | b` and `a <-> b` as `(a & b) | (!a & !b)`; neither
//! survives in the tree. Quantifiers are rejected.

use crate::error::{Error, Result};
use crate::logic::formula::{Formula, Node};
use crate::relational::Signature;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Neq,
    Bang,
    Amp,
    Bar,
    Arrow,
    DArrow,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Neq
            }
            '!' => Tok::Bang,
            '-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            '<' if text[i..].starts_with("<->") => {
                i += 2;
                Tok::DArrow
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    sig: &'a Signature,
    vars: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Node> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::DArrow) {
            let rhs = self.implies()?;
            lhs = Node::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Node> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implies()?;
            return Ok(Node::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Node> {
        let mut parts = vec![self.and()?];
        while self.eat(&Tok::Bar) {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Node::Or(parts)
        })
    }

    fn and(&mut self) -> Result<Node> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Node::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(&Tok::Bang) {
            return Ok(Node::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn var(&mut self) -> Result<usize> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => match parse_var(&name) {
                Some(0) | None => {
                    self.err(format!("expected a variable x1, x2, ..., found `{name}`"))
                }
                Some(i) if i > self.vars => Err(Error::Syntax {
                    pos: at,
                    msg: format!("variable x{i} exceeds the declared {} variables", self.vars),
                }),
                Some(i) => {
                    self.pos += 1;
                    Ok(i - 1)
                }
            },
            _ => self.err("expected a variable"),
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if name == "true" {
                    self.pos += 1;
                    return Ok(Node::True);
                }
                if name == "false" {
                    self.pos += 1;
                    return Ok(Node::False);
                }
                if matches!(name.as_str(), "forall" | "exists" | "all" | "ex") {
                    return self.err("quantifiers are not supported in open formulas");
                }
                if self.toks.get(self.pos + 1).map(|(_, t)| t) == Some(&Tok::LParen) {
                    return self.atom(name);
                }
                let a = self.var()?;
                if self.eat(&Tok::Eq) {
                    let b = self.var()?;
                    Ok(Node::Eq(a, b))
                } else if self.eat(&Tok::Neq) {
                    let b = self.var()?;
                    Ok(Node::Eq(a, b).not())
                } else {
                    self.err("expected `=` or `!=` after variable")
                }
            }
            Some(_) => self.err("expected an atom, equality, `!` or `(`"),
            None => self.err("unexpected end of input"),
        }
    }

    fn atom(&mut self, name: String) -> Result<Node> {
        let pred = self.sig.lookup(&name)?;
        self.pos += 2;
        let mut args = vec![self.var()?];
        while self.eat(&Tok::Comma) {
            args.push(self.var()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let arity = self.sig.arity(pred);
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                name,
                expected: arity,
                got: args.len(),
            });
        }
        Ok(Node::Atom { pred, args })
    }
}

fn parse_var(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

pub fn parse_formula(text: &str, sig: &Signature, vars: usize) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        sig,
        vars,
    };
    let node = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Formula::new(node, vars, sig)
}
