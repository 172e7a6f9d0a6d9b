//! Recursive-descent parser.
//!
//! ```text
//! f     := "true" | "false" | atom | "~" f | f "&" f | f "|" f | f "->" f
//!        | ("E"|"A") var [ "@<=" int "(" terms ")" ] "." f | "(" f ")"
//! atom  := name "(" terms ")" | var "=" var | var "~" var
//! ```
//!
//! Precedence from tightest: `~`, `&`, `|`, `->` (right associative). A
//! quantifier body extends as far right as possible.

use super::{Formula, Node, Quantifier, Relativization, Term};
use crate::error::{Error, Result};
use crate::structure::Signature;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(usize),
    LParen,
    RParen,
    Comma,
    Dot,
    Tilde,
    Amp,
    Bar,
    Arrow,
    Equals,
    Within,
    End,
}

fn syntax(column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '~' => Some(Tok::Tilde),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, col));
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, col));
            i += 2;
        } else if c == '@' && chars.get(i + 1) == Some(&'<') && chars.get(i + 2) == Some(&'=') {
            out.push((Tok::Within, col));
            i += 3;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| syntax(col, "integer too large"))?;
            out.push((Tok::Int(v), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            return Err(syntax(col, format!("unexpected character `{c}`")));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    bound: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.col(), format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(syntax(self.col(), format!("expected {what}"))),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let name = self.ident("a variable or constant")?;
        if !self.bound.contains(&name) {
            if let Some(c) = self.sig.constant_index(&name) {
                return Ok(Term::Const(c));
            }
        }
        Ok(Term::Var(name))
    }

    fn terms(&mut self) -> Result<Vec<Term>> {
        let mut out = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.term()?);
        }
        Ok(out)
    }

    fn implication(&mut self) -> Result<Node> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Node> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            acc = acc.or(self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Node> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = acc.and(self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Ident(q) if (q == "E" || q == "A") && matches!(self.peek_at(1), Tok::Ident(_)) => {
                self.quantifier()
            }
            _ => self.primary(),
        }
    }

    fn quantifier(&mut self) -> Result<Node> {
        let quantifier = match self.bump() {
            Tok::Ident(q) if q == "E" => Quantifier::Exists,
            _ => Quantifier::Forall,
        };
        let col = self.col();
        let var = self.ident("a variable")?;
        if self.sig.constant_index(&var).is_some() {
            return Err(Error::ShadowsConstant(var));
        }
        let within = if *self.peek() == Tok::Within {
            self.bump();
            let radius = match self.bump() {
                Tok::Int(r) => r,
                _ => return Err(syntax(self.col(), "expected a radius after `@<=`")),
            };
            self.expect(Tok::LParen, "`(`")?;
            let anchors = self.terms()?;
            self.expect(Tok::RParen, "`)`")?;
            Some(Relativization { radius, anchors })
        } else {
            None
        };
        if *self.peek() != Tok::Dot {
            return Err(syntax(self.col(), format!("expected `.` after quantified `{var}` (column {col})")));
        }
        self.bump();
        self.bound.push(var.clone());
        let body = self.implication();
        self.bound.pop();
        Ok(Node::Quant {
            quantifier,
            var,
            within,
            body: Box::new(body?),
        })
    }

    fn primary(&mut self) -> Result<Node> {
        let col = self.col();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let rel = self
                    .sig
                    .relation_index(&name)
                    .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
                let args = self.terms()?;
                self.expect(Tok::RParen, "`)` closing the argument list")?;
                let arity = self.sig.relations()[rel].arity;
                if args.len() != arity {
                    return Err(Error::ArityMismatch {
                        name,
                        expected: arity,
                        got: args.len(),
                    });
                }
                Ok(Node::Rel { rel, args })
            }
            Tok::Ident(name) if (name == "true" || name == "false") => {
                self.bump();
                Ok(if name == "true" { Node::True } else { Node::False })
            }
            Tok::Ident(_) => {
                let lhs = self.term()?;
                match self.bump() {
                    Tok::Equals => Ok(Node::Eq(lhs, self.term()?)),
                    Tok::Tilde => {
                        let rel = self.sig.adjacency().ok_or(Error::NoAdjacency)?;
                        let rhs = self.term()?;
                        Ok(Node::Rel {
                            rel,
                            args: vec![lhs, rhs],
                        })
                    }
                    _ => Err(syntax(col, "expected an atom: `R(..)`, `x = y` or `x ~ y`")),
                }
            }
            Tok::End => Err(syntax(col, "unexpected end of formula")),
            _ => Err(syntax(col, "expected a formula")),
        }
    }
}

/// Parses `text` against `sig`.
pub fn parse(text: &str, sig: &Signature) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig,
        bound: Vec::new(),
    };
    let node = p.implication()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.col(), "unexpected trailing input"));
    }
    Formula::new(sig.clone(), node)
}
