//! Rule syntax for queries.
//!
//! ```text
//! rule  := NAME "(" vars ")" ":-" atom ("," atom)* "."?
//! atom  := path "(" vars ")" | KEY op literal "(" vars ")" | "[" test "]" "(" vars ")"
//! path  := seq ("|" seq)* ;  seq := post ("." post)* ;  post := prim "*"*
//! prim  := NAME | "inv(" NAME ")" | "<" NAME ("|" NAME)* ">" | "[" test "]" | "(" path ")"
//! test  := conj ("||" conj)* ;  conj := unary ("&&" unary)*
//! unary := "!" unary | "(" test ")" | KEY op literal | NAME
//! ```
//!
//! A path applied to one variable must denote a set of labels (`A(x)`,
//! `(A|B)(x)`, `<A|B>(x)`).

use ordered_float::OrderedFloat;
use thiserror::Error;

use super::{Atom, C2rpq, CompareOp, DataTest, Literal, PathExpr, QueryError, TestExpr, Uc2rpq, Variable};
use crate::dl::{ConceptName, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Path atoms must be single edges.
    #[default]
    Ncq,
    /// Arbitrary path expressions, as produced by rewriting.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] QueryError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Dec(f64),
    Str(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Pipe,
    Star,
    Neck,
    Op(CompareOp),
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> QueryParseError {
    QueryParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, QueryParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let take = |n: usize, tok: Tok, out: &mut Vec<Token>| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            n
        };
        let n = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => take(1, Tok::LParen, &mut out),
            ')' => take(1, Tok::RParen, &mut out),
            '[' => take(1, Tok::LBrack, &mut out),
            ']' => take(1, Tok::RBrack, &mut out),
            ',' => take(1, Tok::Comma, &mut out),
            '.' => take(1, Tok::Dot, &mut out),
            '*' => take(1, Tok::Star, &mut out),
            '|' if chars.get(i + 1) == Some(&'|') => take(2, Tok::OrOr, &mut out),
            '|' => take(1, Tok::Pipe, &mut out),
            '&' if chars.get(i + 1) == Some(&'&') => take(2, Tok::AndAnd, &mut out),
            ':' if chars.get(i + 1) == Some(&'-') => take(2, Tok::Neck, &mut out),
            '!' if chars.get(i + 1) == Some(&'=') => take(2, Tok::Op(CompareOp::Ne), &mut out),
            '!' => take(1, Tok::Bang, &mut out),
            '=' => take(1, Tok::Op(CompareOp::Eq), &mut out),
            '<' if chars.get(i + 1) == Some(&'=') => take(2, Tok::Op(CompareOp::Le), &mut out),
            '<' => take(1, Tok::Op(CompareOp::Lt), &mut out),
            '>' if chars.get(i + 1) == Some(&'=') => take(2, Tok::Op(CompareOp::Ge), &mut out),
            '>' => take(1, Tok::Op(CompareOp::Gt), &mut out),
            '"' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '"' {
                    if chars[j] == '\\' {
                        j += 1;
                    }
                    if chars.get(j) == Some(&'\n') {
                        break;
                    }
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return Err(syntax(tl, tc, "unterminated string literal"));
                }
                let raw: String = chars[i..=j].iter().collect();
                let s: String =
                    serde_json::from_str(&raw).map_err(|e| syntax(tl, tc, format!("bad string literal: {e}")))?;
                take(j + 1 - i, Tok::Str(s), &mut out)
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let decimal = chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit());
                if decimal {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let raw: String = chars[i..j].iter().collect();
                let tok = if decimal {
                    Tok::Dec(raw.parse().map_err(|_| syntax(tl, tc, "bad number"))?)
                } else {
                    Tok::Int(raw.parse().map_err(|_| syntax(tl, tc, "integer out of range"))?)
                };
                take(j - i, tok, &mut out)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                take(j - i, Tok::Ident(chars[i..j].iter().collect()), &mut out)
            }
            other => return Err(syntax(tl, tc, format!("unexpected character `{other}`"))),
        };
        i += n;
        col += n;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> QueryParseError {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), QueryParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn var(&mut self) -> Result<Variable, QueryParseError> {
        let name = self.ident("variable")?;
        if name.starts_with("__") {
            self.pos -= 1;
            return Err(self.err(format!("variable `{name}` uses the reserved prefix `__`")));
        }
        Ok(Variable::new(name))
    }

    fn vars(&mut self) -> Result<Vec<Variable>, QueryParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            out.push(self.var()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                out.push(self.var()?);
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn literal(&mut self) -> Result<Literal, QueryParseError> {
        match self.bump() {
            Tok::Int(i) => Ok(Literal::Int(i)),
            Tok::Dec(d) => Ok(Literal::Decimal(OrderedFloat(d))),
            Tok::Str(s) => Ok(Literal::Str(s)),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a literal"))
            }
        }
    }

    fn is_data_test_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Op(_))
    }

    fn data_test(&mut self) -> Result<DataTest, QueryParseError> {
        let key = self.ident("property key")?;
        let op = match self.bump() {
            Tok::Op(op) => op,
            _ => unreachable!("checked by is_data_test_start"),
        };
        let at = self.pos;
        let value = self.literal()?;
        if op.is_ordered() && !value.is_numeric() {
            self.pos = at;
            return Err(self.err(format!("`{}` needs a numeric literal", op.symbol())));
        }
        Ok(DataTest { key, op, value })
    }

    fn test_or(&mut self) -> Result<TestExpr, QueryParseError> {
        let mut lhs = self.test_and()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            lhs = TestExpr::Or(Box::new(lhs), Box::new(self.test_and()?));
        }
        Ok(lhs)
    }

    fn test_and(&mut self) -> Result<TestExpr, QueryParseError> {
        let mut lhs = self.test_unary()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            lhs = TestExpr::And(Box::new(lhs), Box::new(self.test_unary()?));
        }
        Ok(lhs)
    }

    fn test_unary(&mut self) -> Result<TestExpr, QueryParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(TestExpr::Not(Box::new(self.test_unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let t = self.test_or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ if self.is_data_test_start() => Ok(TestExpr::Data(self.data_test()?)),
            Tok::Ident(_) => Ok(TestExpr::Label(ConceptName::new(self.ident("label")?))),
            _ => Err(self.err("expected a test")),
        }
    }

    fn path(&mut self) -> Result<PathExpr, QueryParseError> {
        let mut parts = vec![self.seq()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            parts.push(self.seq()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PathExpr::Union(parts)
        })
    }

    fn seq(&mut self) -> Result<PathExpr, QueryParseError> {
        let mut parts = vec![self.post()?];
        // A `.` after a complete atom ends the rule; inside a path it is
        // always followed by another primary.
        while *self.peek() == Tok::Dot
            && matches!(
                self.peek_at(1),
                Tok::Ident(_) | Tok::LParen | Tok::LBrack | Tok::Op(CompareOp::Lt)
            )
        {
            self.bump();
            parts.push(self.post()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PathExpr::Concat(parts)
        })
    }

    fn post(&mut self) -> Result<PathExpr, QueryParseError> {
        let mut p = self.prim()?;
        while *self.peek() == Tok::Star {
            self.bump();
            p = PathExpr::Star(Box::new(p));
        }
        Ok(p)
    }

    fn prim(&mut self) -> Result<PathExpr, QueryParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if name == "inv" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let r = self.ident("role name")?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(PathExpr::Edge(Role::inverse_of(r)))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(PathExpr::Edge(Role::new(name)))
            }
            Tok::Op(CompareOp::Lt) => {
                self.bump();
                let mut labels = vec![ConceptName::new(self.ident("label")?)];
                while *self.peek() == Tok::Pipe {
                    self.bump();
                    labels.push(ConceptName::new(self.ident("label")?));
                }
                self.expect(Tok::Op(CompareOp::Gt), "`>`")?;
                Ok(PathExpr::Node(labels.into_iter().collect()))
            }
            Tok::LBrack => {
                self.bump();
                let t = self.test_or()?;
                self.expect(Tok::RBrack, "`]`")?;
                Ok(PathExpr::Test(t))
            }
            Tok::LParen => {
                self.bump();
                let p = self.path()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            _ => Err(self.err("expected a path expression")),
        }
    }

    fn atom(&mut self) -> Result<Atom, QueryParseError> {
        let start = self.pos;
        if *self.peek() == Tok::LBrack {
            self.bump();
            let test = self.test_or()?;
            self.expect(Tok::RBrack, "`]`")?;
            return self.test_atom(test, start);
        }
        if self.is_data_test_start() {
            let test = TestExpr::Data(self.data_test()?);
            return self.test_atom(test, start);
        }
        let path = self.path()?;
        let vars = self.vars()?;
        match vars.len() {
            1 => match labels_of(&path) {
                Some(labels) => Ok(Atom::concept(labels, vars.into_iter().next().unwrap())),
                None => {
                    self.pos = start;
                    Err(self.err(format!("`{path}` applied to one variable is not a concept")))
                }
            },
            2 => {
                if !path_roles_ok(&path) {
                    self.pos = start;
                    return Err(self.err("`top` is not a role"));
                }
                let mut it = vars.into_iter();
                Ok(Atom::Path {
                    path,
                    src: it.next().unwrap(),
                    dst: it.next().unwrap(),
                })
            }
            n => {
                self.pos = start;
                Err(self.err(format!("atoms take one or two variables, found {n}")))
            }
        }
    }

    fn test_atom(&mut self, test: TestExpr, start: usize) -> Result<Atom, QueryParseError> {
        let vars = self.vars()?;
        if vars.is_empty() || vars.len() > 2 {
            self.pos = start;
            return Err(self.err("tests take one or two variables"));
        }
        Ok(Atom::Test { test, vars })
    }

    fn rule(&mut self) -> Result<C2rpq, QueryParseError> {
        let head = self.ident("query name")?;
        let answer_vars = self.vars()?;
        self.expect(Tok::Neck, "`:-`")?;
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            atoms.push(self.atom()?);
        }
        if *self.peek() == Tok::Dot {
            self.bump();
        }
        Ok(C2rpq::new(head, answer_vars, atoms))
    }
}

fn labels_of(p: &PathExpr) -> Option<Vec<ConceptName>> {
    match p {
        PathExpr::Edge(r) if !r.inverted => Some(vec![ConceptName::new(r.name.clone())]),
        PathExpr::Node(l) => Some(l.iter().cloned().collect()),
        PathExpr::Union(ps) => {
            let mut out = Vec::new();
            for p in ps {
                out.extend(labels_of(p)?);
            }
            Some(out)
        }
        _ => None,
    }
}

fn path_roles_ok(p: &PathExpr) -> bool {
    let mut roles = Default::default();
    p.roles(&mut roles);
    roles.iter().all(|r: &Role| r.name != crate::dl::TOP)
}

fn rules(text: &str, mode: ParseMode) -> Result<Vec<C2rpq>, QueryParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        let q = p.rule()?;
        match mode {
            ParseMode::Ncq => q.validate_ncq()?,
            ParseMode::Extended => q.validate()?,
        }
        out.push(q);
    }
    if out.is_empty() {
        return Err(p.err("expected a query"));
    }
    Ok(out)
}

/// Parses exactly one NCQ.
pub fn parse_query(text: &str) -> Result<C2rpq, QueryParseError> {
    parse_query_with(text, ParseMode::Ncq)
}

pub fn parse_query_with(text: &str, mode: ParseMode) -> Result<C2rpq, QueryParseError> {
    let mut qs = rules(text, mode)?;
    if qs.len() > 1 {
        return Err(syntax(1, 1, format!("expected one query, found {}", qs.len())));
    }
    Ok(qs.pop().unwrap())
}

/// Parses one or more rules as a union. All rules must have the same arity.
pub fn parse_union(text: &str, mode: ParseMode) -> Result<Uc2rpq, QueryParseError> {
    Ok(Uc2rpq::new(rules(text, mode)?)?)
}
