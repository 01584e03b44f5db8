//! Line-oriented TBox reader.
//!
//! ```text
//! axiom := cexpr "<=" cexpr | role "<=" role
//! cexpr := conj ;  conj := prim ("&" prim)*
//! prim  := "top" | NAME | "exists" role "." prim | "not" prim | "(" cexpr ")"
//! role  := NAME | "inv(" NAME ")"
//! ```
//!
//! `exists` binds tighter than `&`. A bare `x <= y` between two names is a
//! role inclusion when either name is used as a role elsewhere in the file,
//! a concept inclusion when either is used as a concept, and otherwise is
//! decided by case: lowercase initials denote roles.

use std::collections::HashSet;

use thiserror::Error;

use super::normalize::FRESH_PREFIX;
use super::{Axiom, ConceptExpr, Role, TBox, TOP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Le,
    Amp,
    Dot,
    LParen,
    RParen,
    Not,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    column: usize,
}

fn lex(line_no: usize, line: &str) -> Result<Vec<Spanned>, ParseError> {
    let err = |column: usize, message: String| ParseError {
        line: line_no,
        column,
        message,
    };
    let chars: Vec<(usize, char)> = line.chars().enumerate().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (col, c) = chars[i];
        let column = col + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '#' => break,
            '&' | '⊓' => {
                out.push(Spanned { tok: Tok::Amp, column });
                i += 1;
            }
            '.' => {
                out.push(Spanned { tok: Tok::Dot, column });
                i += 1;
            }
            '(' => {
                out.push(Spanned {
                    tok: Tok::LParen,
                    column,
                });
                i += 1;
            }
            ')' => {
                out.push(Spanned {
                    tok: Tok::RParen,
                    column,
                });
                i += 1;
            }
            '~' | '¬' => {
                out.push(Spanned { tok: Tok::Not, column });
                i += 1;
            }
            '⊑' => {
                out.push(Spanned { tok: Tok::Le, column });
                i += 1;
            }
            '<' => {
                if chars.get(i + 1).map(|p| p.1) == Some('=') {
                    out.push(Spanned { tok: Tok::Le, column });
                    i += 2;
                } else {
                    return Err(err(column, "expected `<=`".into()));
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().map(|p| p.1).collect();
                if ident.starts_with(FRESH_PREFIX) {
                    return Err(err(
                        column,
                        format!("identifier `{ident}` uses the reserved prefix `{FRESH_PREFIX}`"),
                    ));
                }
                if !ident.chars().next().unwrap().is_ascii_alphabetic() {
                    return Err(err(column, format!("identifier `{ident}` must start with a letter")));
                }
                if ident == "not" {
                    out.push(Spanned { tok: Tok::Not, column });
                } else {
                    out.push(Spanned {
                        tok: Tok::Ident(ident),
                        column,
                    });
                }
            }
            other => return Err(err(column, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// One side of an axiom before we know whether it denotes a concept or a role.
#[derive(Debug, Clone)]
enum Side {
    Concept(ConceptExpr),
    Role(Role),
    /// A lone name, concept or role depending on context.
    Name(String),
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    line_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|s| s.column).unwrap_or(self.line_len + 1)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    fn role(&mut self) -> Result<Role, ParseError> {
        let name = self.ident()?;
        if name == "inv" && self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.ident()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(Role::inverse_of(inner))
        } else if is_keyword(&name) {
            Err(ParseError {
                line: self.line,
                column: self.toks[self.pos - 1].column,
                message: format!("`{name}` cannot be used as a role name"),
            })
        } else {
            Ok(Role::new(name))
        }
    }

    fn side(&mut self) -> Result<Side, ParseError> {
        // `inv(r)` alone is a role; a single name is ambiguous.
        if let (Some(Tok::Ident(name)), next) = (self.peek(), self.toks.get(self.pos + 1)) {
            let ends = |t: Option<&Spanned>| t.is_none() || matches!(t.map(|s| &s.tok), Some(Tok::Le));
            if name == "inv" && matches!(next.map(|s| &s.tok), Some(Tok::LParen)) {
                let save = self.pos;
                let role = self.role()?;
                if ends(self.toks.get(self.pos)) {
                    return Ok(Side::Role(role));
                }
                self.pos = save;
            } else if !is_keyword(name) && ends(next) {
                let name = name.clone();
                self.pos += 1;
                return Ok(Side::Name(name));
            }
        }
        Ok(Side::Concept(self.conj()?))
    }

    fn conj(&mut self) -> Result<ConceptExpr, ParseError> {
        let mut parts = vec![self.prim()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.prim()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            ConceptExpr::and(parts)
        })
    }

    fn prim(&mut self) -> Result<ConceptExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let c = self.conj()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(c)
            }
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(ConceptExpr::Not(Box::new(self.prim()?)))
            }
            Some(Tok::Ident(name)) if name == "exists" => {
                self.pos += 1;
                let role = self.role()?;
                self.expect(Tok::Dot, "`.` after the role of `exists`")?;
                let filler = self.prim()?;
                Ok(ConceptExpr::exists(role, filler))
            }
            Some(Tok::Ident(name)) if name == "inv" => Err(self.error("`inv(..)` denotes a role, expected a concept")),
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(ConceptExpr::atom(&name))
            }
            _ => Err(self.error("expected a concept expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "exists" | "inv" | TOP)
}

fn collect_usage(c: &ConceptExpr, concepts: &mut HashSet<String>, roles: &mut HashSet<String>) {
    match c {
        ConceptExpr::Top => {}
        ConceptExpr::Atom(a) => {
            concepts.insert(a.as_str().to_string());
        }
        ConceptExpr::Exists(r, f) => {
            roles.insert(r.name.clone());
            collect_usage(f, concepts, roles);
        }
        ConceptExpr::And(cs) => cs.iter().for_each(|c| collect_usage(c, concepts, roles)),
        ConceptExpr::Not(c) => collect_usage(c, concepts, roles),
    }
}

/// Parses a TBox document. Axioms keep their source order.
pub fn parse_tbox(text: &str) -> Result<TBox, ParseError> {
    let mut raw: Vec<(usize, Side, Side)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(line_no, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            line: line_no,
            line_len: line.chars().count(),
        };
        let lhs = p.side()?;
        p.expect(Tok::Le, "`<=`")?;
        let rhs = p.side()?;
        if p.pos != toks.len() {
            return Err(p.error("unexpected trailing input"));
        }
        raw.push((line_no, lhs, rhs));
    }

    let mut concepts = HashSet::new();
    let mut roles = HashSet::new();
    for (_, l, r) in &raw {
        for side in [l, r] {
            match side {
                Side::Concept(c) => collect_usage(c, &mut concepts, &mut roles),
                Side::Role(role) => {
                    roles.insert(role.name.clone());
                }
                Side::Name(_) => {}
            }
        }
    }

    let lower = |n: &str| n.chars().next().is_some_and(|c| c.is_ascii_lowercase());

    let mut axioms = Vec::with_capacity(raw.len());
    for (line, lhs, rhs) in raw {
        let mismatch = || ParseError {
            line,
            column: 1,
            message: "an axiom must relate two concepts or two roles".into(),
        };
        let axiom = match (lhs, rhs) {
            (Side::Role(sub), Side::Role(sup)) => Axiom::RoleInclusion { sub, sup },
            (Side::Role(sub), Side::Name(n)) => Axiom::RoleInclusion { sub, sup: Role::new(n) },
            (Side::Name(n), Side::Role(sup)) => Axiom::RoleInclusion { sub: Role::new(n), sup },
            (Side::Name(a), Side::Name(b)) => {
                let is_role = roles.contains(&a)
                    || roles.contains(&b)
                    || (!concepts.contains(&a) && !concepts.contains(&b) && lower(&a) && lower(&b));
                if is_role {
                    Axiom::RoleInclusion {
                        sub: Role::new(a),
                        sup: Role::new(b),
                    }
                } else {
                    Axiom::ConceptInclusion {
                        lhs: ConceptExpr::atom(&a),
                        rhs: ConceptExpr::atom(&b),
                    }
                }
            }
            (Side::Name(a), Side::Concept(rhs)) => Axiom::ConceptInclusion {
                lhs: ConceptExpr::atom(&a),
                rhs,
            },
            (Side::Concept(lhs), Side::Name(b)) => Axiom::ConceptInclusion {
                lhs,
                rhs: ConceptExpr::atom(&b),
            },
            (Side::Concept(lhs), Side::Concept(rhs)) => Axiom::ConceptInclusion { lhs, rhs },
            (Side::Role(_), Side::Concept(_)) | (Side::Concept(_), Side::Role(_)) => return Err(mismatch()),
        };
        axioms.push(axiom);
    }
    Ok(TBox::new(axioms))
}
