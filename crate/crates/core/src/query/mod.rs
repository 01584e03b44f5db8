//! Query algebra: navigational conjunctive queries (the input language),
//! C2RPQs and their unions (the output language).

mod containment;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ordered_float::OrderedFloat;
use serde::Serialize;
use thiserror::Error;

use crate::dl::{ConceptName, Role};

pub use containment::{contains_structurally, RewritingSet};
pub use parse::{parse_query, parse_query_with, parse_union, ParseMode, QueryParseError};

/// Prefix of the fresh existential variables introduced during rewriting.
pub const FRESH_VAR_PREFIX: &str = "__w";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_fresh(&self) -> bool {
        self.0.starts_with(FRESH_VAR_PREFIX)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Variable {
    fn from(s: &str) -> Self {
        Variable::new(s)
    }
}

/// Property values: integers, decimals or strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Decimal(OrderedFloat<f64>),
    Str(String),
}

impl Literal {
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Literal::Str(_))
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Decimal(d) => Some(d.0),
            Literal::Str(_) => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Decimal(d) => {
                if d.0.fract() == 0.0 && d.0.is_finite() {
                    write!(f, "{:.1}", d.0)
                } else {
                    write!(f, "{}", d.0)
                }
            }
            Literal::Str(s) => write!(f, "{}", serde_json::to_string(s).map_err(|_| fmt::Error)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn is_ordered(self) -> bool {
        !matches!(self, CompareOp::Eq | CompareOp::Ne)
    }

    /// `prop ⊙ value`. Ordered comparisons across a string and a number do
    /// not hold; `=`/`!=` compare numbers numerically and otherwise by type.
    pub fn holds(self, prop: &Literal, value: &Literal) -> bool {
        let ord = match (prop, value) {
            (Literal::Str(a), Literal::Str(b)) => Some(a.cmp(b)),
            _ => match (prop.as_f64(), value.as_f64()) {
                (Some(a), Some(b)) => a.partial_cmp(&b),
                _ => None,
            },
        };
        match (self, ord) {
            (CompareOp::Eq, o) => o == Some(std::cmp::Ordering::Equal),
            (CompareOp::Ne, o) => o != Some(std::cmp::Ordering::Equal),
            (_, None) => false,
            (CompareOp::Lt, Some(o)) => o.is_lt(),
            (CompareOp::Le, Some(o)) => o.is_le(),
            (CompareOp::Gt, Some(o)) => o.is_gt(),
            (CompareOp::Ge, Some(o)) => o.is_ge(),
        }
    }
}

/// `key ⊙ value`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DataTest {
    pub key: String,
    pub op: CompareOp,
    pub value: Literal,
}

impl fmt::Display for DataTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.key, self.op.symbol(), self.value)
    }
}

/// Boolean combination of data tests and label tests.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TestExpr {
    Data(DataTest),
    Label(ConceptName),
    And(Box<TestExpr>, Box<TestExpr>),
    Or(Box<TestExpr>, Box<TestExpr>),
    Not(Box<TestExpr>),
}

impl TestExpr {
    pub fn has_label(&self) -> bool {
        match self {
            TestExpr::Label(_) => true,
            TestExpr::Data(_) => false,
            TestExpr::And(a, b) | TestExpr::Or(a, b) => a.has_label() || b.has_label(),
            TestExpr::Not(a) => a.has_label(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: or, 1: and, 2: unary, 3: atomic
        let mine = match self {
            TestExpr::Or(..) => 0,
            TestExpr::And(..) => 1,
            TestExpr::Not(_) => 2,
            TestExpr::Data(_) | TestExpr::Label(_) => 3,
        };
        if mine < prec {
            f.write_str("(")?;
        }
        match self {
            TestExpr::Data(d) => write!(f, "{d}")?,
            TestExpr::Label(l) => write!(f, "{l}")?,
            TestExpr::Or(a, b) => {
                a.fmt_prec(f, 0)?;
                f.write_str(" || ")?;
                b.fmt_prec(f, 1)?;
            }
            TestExpr::And(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" && ")?;
                b.fmt_prec(f, 2)?;
            }
            TestExpr::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, 2)?;
            }
        }
        if mine < prec {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for TestExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Regular path expressions over roles, node tests and data tests.
///
/// Build values through [`PathExpr::concat`], [`PathExpr::union`] and
/// [`PathExpr::star`]: they keep the expression canonical (flattened,
/// unions sorted by printed form, node tests merged). The node test `<top>`
/// matches every node and is the identity of concatenation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PathExpr {
    Node(BTreeSet<ConceptName>),
    Edge(Role),
    Concat(Vec<PathExpr>),
    Union(Vec<PathExpr>),
    Star(Box<PathExpr>),
    Test(TestExpr),
}

impl PathExpr {
    pub fn edge(role: Role) -> Self {
        PathExpr::Edge(role)
    }

    pub fn node<I: IntoIterator<Item = ConceptName>>(labels: I) -> Self {
        let labels: BTreeSet<ConceptName> = labels.into_iter().collect();
        if labels.iter().any(ConceptName::is_top) || labels.is_empty() {
            PathExpr::Node(BTreeSet::from([ConceptName::top()]))
        } else {
            PathExpr::Node(labels)
        }
    }

    /// The empty walk, `<top>`.
    pub fn epsilon() -> Self {
        PathExpr::node([ConceptName::top()])
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self, PathExpr::Node(l) if l.len() == 1 && l.iter().next().unwrap().is_top())
    }

    pub fn concat<I: IntoIterator<Item = PathExpr>>(parts: I) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                PathExpr::Concat(inner) => flat.extend(inner),
                p if p.is_epsilon() => {}
                p => flat.push(p),
            }
        }
        match flat.len() {
            0 => PathExpr::epsilon(),
            1 => flat.pop().unwrap(),
            _ => PathExpr::Concat(flat),
        }
    }

    pub fn union<I: IntoIterator<Item = PathExpr>>(parts: I) -> Self {
        let mut labels: Option<BTreeSet<ConceptName>> = None;
        let mut rest: Vec<PathExpr> = Vec::new();
        let mut push = |p: PathExpr, labels: &mut Option<BTreeSet<ConceptName>>| match p {
            PathExpr::Node(l) => labels.get_or_insert_with(BTreeSet::new).extend(l),
            p => rest.push(p),
        };
        for p in parts {
            match p {
                PathExpr::Union(inner) => inner.into_iter().for_each(|q| push(q, &mut labels)),
                p => push(p, &mut labels),
            }
        }
        if let Some(l) = labels {
            rest.push(PathExpr::node(l));
        }
        let mut keyed: Vec<(String, PathExpr)> = rest.into_iter().map(|p| (p.to_string(), p)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        let mut flat: Vec<PathExpr> = keyed.into_iter().map(|(_, p)| p).collect();
        match flat.len() {
            0 => PathExpr::epsilon(),
            1 => flat.pop().unwrap(),
            _ => PathExpr::Union(flat),
        }
    }

    pub fn star(inner: PathExpr) -> Self {
        match inner {
            s @ PathExpr::Star(_) => s,
            PathExpr::Node(_) | PathExpr::Test(_) => PathExpr::epsilon(),
            // Branches that never move stay inside the identity.
            PathExpr::Union(ps) if ps.iter().any(|p| matches!(p, PathExpr::Node(_) | PathExpr::Test(_))) => {
                PathExpr::star(PathExpr::union(
                    ps.into_iter()
                        .filter(|p| !matches!(p, PathExpr::Node(_) | PathExpr::Test(_))),
                ))
            }
            other => PathExpr::Star(Box::new(other)),
        }
    }

    /// Rebuilds the expression bottom-up through the canonicalizing
    /// constructors.
    pub fn canonical(&self) -> Self {
        match self {
            PathExpr::Node(l) => PathExpr::node(l.iter().cloned()),
            PathExpr::Edge(_) | PathExpr::Test(_) => self.clone(),
            PathExpr::Concat(ps) => PathExpr::concat(ps.iter().map(PathExpr::canonical)),
            PathExpr::Union(ps) => PathExpr::union(ps.iter().map(PathExpr::canonical)),
            PathExpr::Star(p) => PathExpr::star(p.canonical()),
        }
    }

    /// The converse expression: concatenations reversed, edges inverted.
    pub fn inverse(&self) -> Self {
        match self {
            PathExpr::Node(_) | PathExpr::Test(_) => self.clone(),
            PathExpr::Edge(r) => PathExpr::Edge(r.inv()),
            PathExpr::Concat(ps) => PathExpr::concat(ps.iter().rev().map(PathExpr::inverse)),
            PathExpr::Union(ps) => PathExpr::union(ps.iter().map(PathExpr::inverse)),
            PathExpr::Star(p) => PathExpr::star(p.inverse()),
        }
    }

    /// Replaces every `Edge(role)` by `with` and every `Edge(role⁻)` by the
    /// inverse of `with`.
    pub fn substitute(&self, role: &Role, with: &PathExpr) -> Self {
        self.substitute_all(&|r: &Role| {
            if r == role {
                Some(with.clone())
            } else if r.inv() == *role {
                Some(with.inverse())
            } else {
                None
            }
        })
    }

    /// Simultaneous substitution of edges.
    pub fn substitute_all(&self, f: &dyn Fn(&Role) -> Option<PathExpr>) -> Self {
        match self {
            PathExpr::Edge(r) => f(r).unwrap_or_else(|| self.clone()),
            PathExpr::Node(_) | PathExpr::Test(_) => self.clone(),
            PathExpr::Concat(ps) => PathExpr::concat(ps.iter().map(|p| p.substitute_all(f))),
            PathExpr::Union(ps) => PathExpr::union(ps.iter().map(|p| p.substitute_all(f))),
            PathExpr::Star(p) => PathExpr::star(p.substitute_all(f)),
        }
    }

    pub fn roles(&self, out: &mut BTreeSet<Role>) {
        match self {
            PathExpr::Edge(r) => {
                out.insert(r.clone());
            }
            PathExpr::Node(_) | PathExpr::Test(_) => {}
            PathExpr::Concat(ps) | PathExpr::Union(ps) => ps.iter().for_each(|p| p.roles(out)),
            PathExpr::Star(p) => p.roles(out),
        }
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        match self {
            PathExpr::Node(_) | PathExpr::Edge(_) | PathExpr::Test(_) => 1,
            PathExpr::Concat(ps) | PathExpr::Union(ps) => ps.iter().map(PathExpr::size).sum::<usize>() + ps.len() - 1,
            PathExpr::Star(p) => 1 + p.size(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: union, 1: concat, 2: postfix
        let wrap = |f: &mut fmt::Formatter<'_>, mine: u8, body: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result| {
            if mine < prec {
                f.write_str("(")?;
                body(f)?;
                f.write_str(")")
            } else {
                body(f)
            }
        };
        match self {
            PathExpr::Node(labels) => {
                f.write_str("<")?;
                for (i, l) in labels.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_str(">")
            }
            PathExpr::Edge(r) => write!(f, "{r}"),
            PathExpr::Test(t) => write!(f, "[{t}]"),
            PathExpr::Concat(ps) => wrap(f, 1, &|f| {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    p.fmt_prec(f, 2)?;
                }
                Ok(())
            }),
            PathExpr::Union(ps) => wrap(f, 0, &|f| {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    p.fmt_prec(f, 1)?;
                }
                Ok(())
            }),
            PathExpr::Star(p) => {
                p.fmt_prec(f, 3)?;
                f.write_str("*")
            }
        }
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Atom {
    /// `(A1|…|Ak)(var)`
    Concept {
        labels: BTreeSet<ConceptName>,
        var: Variable,
    },
    /// `path(src, dst)`
    Path {
        path: PathExpr,
        src: Variable,
        dst: Variable,
    },
    /// A test over one variable (node test) or two (edge test).
    Test { test: TestExpr, vars: Vec<Variable> },
}

impl Atom {
    pub fn concept<I: IntoIterator<Item = ConceptName>>(labels: I, var: Variable) -> Self {
        let labels: BTreeSet<ConceptName> = labels.into_iter().collect();
        let labels = if labels.iter().any(ConceptName::is_top) {
            BTreeSet::from([ConceptName::top()])
        } else {
            labels
        };
        Atom::Concept { labels, var }
    }

    pub fn role(role: Role, src: Variable, dst: Variable) -> Self {
        Atom::Path {
            path: PathExpr::Edge(role),
            src,
            dst,
        }
    }

    pub fn vars(&self) -> Vec<&Variable> {
        match self {
            Atom::Concept { var, .. } => vec![var],
            Atom::Path { src, dst, .. } => vec![src, dst],
            Atom::Test { vars, .. } => vars.iter().collect(),
        }
    }

    fn rename(&self, f: &dyn Fn(&Variable) -> Variable) -> Atom {
        match self {
            Atom::Concept { labels, var } => Atom::Concept {
                labels: labels.clone(),
                var: f(var),
            },
            Atom::Path { path, src, dst } => Atom::Path {
                path: path.clone(),
                src: f(src),
                dst: f(dst),
            },
            Atom::Test { test, vars } => Atom::Test {
                test: test.clone(),
                vars: vars.iter().map(f).collect(),
            },
        }
    }

    fn canonical(&self) -> Atom {
        match self {
            Atom::Concept { labels, var } => Atom::concept(labels.iter().cloned(), var.clone()),
            Atom::Path { path, src, dst } => match path.canonical() {
                PathExpr::Node(labels) if src == dst => Atom::concept(labels, src.clone()),
                path => Atom::Path {
                    path,
                    src: src.clone(),
                    dst: dst.clone(),
                },
            },
            Atom::Test { .. } => self.clone(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Concept { labels, var } => {
                if labels.len() == 1 {
                    write!(f, "{}({var})", labels.iter().next().unwrap())
                } else {
                    f.write_str("(")?;
                    for (i, l) in labels.iter().enumerate() {
                        if i > 0 {
                            f.write_str("|")?;
                        }
                        write!(f, "{l}")?;
                    }
                    write!(f, ")({var})")
                }
            }
            Atom::Path { path, src, dst } => match path {
                PathExpr::Edge(r) => write!(f, "{r}({src},{dst})"),
                p => write!(f, "({p})({src},{dst})"),
            },
            Atom::Test { test, vars } => {
                match test {
                    TestExpr::Data(d) => write!(f, "{d}")?,
                    t => write!(f, "[{t}]")?,
                }
                f.write_str("(")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A conjunctive two-way regular path query. An NCQ is a C2RPQ whose path
/// atoms are single edges; see [`C2rpq::validate_ncq`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct C2rpq {
    pub head: String,
    pub answer_vars: Vec<Variable>,
    pub atoms: Vec<Atom>,
}

/// Input queries share the representation.
pub type Ncq = C2rpq;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("answer variable `{0}` does not occur in the body")]
    AnswerVarMissing(Variable),
    #[error("answer variable `{0}` is repeated in the head")]
    DuplicateAnswerVar(Variable),
    #[error("the query has no answer variables")]
    NoAnswerVars,
    #[error("the query body is not connected")]
    Disconnected,
    #[error("navigational path `{0}` is not allowed in input queries")]
    Navigational(String),
    #[error("label test inside an edge test `{0}`")]
    LabelInEdgeTest(String),
    #[error("ordered comparison `{0}` requires a numeric literal")]
    NonNumericComparison(String),
    #[error("expected {expected} answer variables, found {found}")]
    ArityMismatch { expected: usize, found: usize },
}

impl C2rpq {
    pub fn new(head: impl Into<String>, answer_vars: Vec<Variable>, atoms: Vec<Atom>) -> Self {
        C2rpq {
            head: head.into(),
            answer_vars,
            atoms,
        }
        .canonical()
    }

    pub fn arity(&self) -> usize {
        self.answer_vars.len()
    }

    pub fn vars(&self) -> BTreeSet<&Variable> {
        self.answer_vars
            .iter()
            .chain(self.atoms.iter().flat_map(|a| a.vars()))
            .collect()
    }

    pub fn is_answer_var(&self, v: &Variable) -> bool {
        self.answer_vars.contains(v)
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            if let Atom::Path { path, .. } = a {
                path.roles(&mut out);
            }
        }
        out
    }

    /// Canonical form: paths canonical, fresh existential variables renamed
    /// `w0, w1, …` in order of first occurrence, atoms sorted and
    /// deduplicated. Variables from the input keep their names.
    pub fn canonical(&self) -> C2rpq {
        let atoms: Vec<Atom> = self.atoms.iter().map(Atom::canonical).collect();
        let mut masked: Vec<(Atom, &Atom)> = atoms
            .iter()
            .map(|a| {
                let m = a.rename(&|v| {
                    if v.is_fresh() {
                        Variable::new("")
                    } else {
                        v.clone()
                    }
                });
                (m, a)
            })
            .collect();
        masked.sort();
        let taken: BTreeSet<&str> = atoms
            .iter()
            .flat_map(|a| a.vars())
            .chain(self.answer_vars.iter())
            .filter(|v| !v.is_fresh())
            .map(|v| v.as_str())
            .collect();
        let mut names: BTreeMap<Variable, Variable> = BTreeMap::new();
        let mut counter = 0usize;
        for (_, a) in &masked {
            for v in a.vars() {
                if v.is_fresh() && !names.contains_key(v) {
                    let name = loop {
                        let candidate = format!("w{counter}");
                        counter += 1;
                        if !taken.contains(candidate.as_str()) {
                            break candidate;
                        }
                    };
                    names.insert(v.clone(), Variable::new(name));
                }
            }
        }
        let mut atoms: Vec<Atom> = atoms
            .iter()
            .map(|a| a.rename(&|v| names.get(v).cloned().unwrap_or_else(|| v.clone())))
            .collect();
        atoms.sort();
        atoms.dedup();
        C2rpq {
            head: self.head.clone(),
            answer_vars: self.answer_vars.clone(),
            atoms,
        }
    }

    /// Applies a variable renaming to head and body.
    pub fn rename(&self, f: &dyn Fn(&Variable) -> Variable) -> C2rpq {
        C2rpq {
            head: self.head.clone(),
            answer_vars: self.answer_vars.iter().map(f).collect(),
            atoms: self.atoms.iter().map(|a| a.rename(f)).collect(),
        }
        .canonical()
    }

    /// Replaces `Edge(role)` by `with` (and `Edge(role⁻)` by its inverse) in
    /// every path atom.
    pub fn substitute_role(&self, role: &Role, with: &PathExpr) -> C2rpq {
        self.map_paths(|p| p.substitute(role, with))
    }

    pub fn map_paths(&self, f: impl Fn(&PathExpr) -> PathExpr) -> C2rpq {
        let atoms = self
            .atoms
            .iter()
            .map(|a| match a {
                Atom::Path { path, src, dst } => Atom::Path {
                    path: f(path),
                    src: src.clone(),
                    dst: dst.clone(),
                },
                other => other.clone(),
            })
            .collect();
        C2rpq {
            head: self.head.clone(),
            answer_vars: self.answer_vars.clone(),
            atoms,
        }
        .canonical()
    }

    /// Structural checks shared by every query: non-empty distinct head
    /// occurring in the body, well-typed tests, connected body.
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.answer_vars.is_empty() {
            return Err(QueryError::NoAnswerVars);
        }
        let mut seen = BTreeSet::new();
        for v in &self.answer_vars {
            if !seen.insert(v) {
                return Err(QueryError::DuplicateAnswerVar(v.clone()));
            }
        }
        let body_vars: BTreeSet<&Variable> = self.atoms.iter().flat_map(|a| a.vars()).collect();
        for v in &self.answer_vars {
            if !body_vars.contains(v) {
                return Err(QueryError::AnswerVarMissing(v.clone()));
            }
        }
        for a in &self.atoms {
            if let Atom::Test { test, vars } = a {
                if vars.len() == 2 && test.has_label() {
                    return Err(QueryError::LabelInEdgeTest(a.to_string()));
                }
                check_numeric(test).map_err(|_| QueryError::NonNumericComparison(a.to_string()))?;
            }
            if let Atom::Path { path, .. } = a {
                check_path_tests(path).map_err(|_| QueryError::NonNumericComparison(a.to_string()))?;
            }
        }
        if !self.is_connected() {
            return Err(QueryError::Disconnected);
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the input restriction: path atoms
    /// are single (possibly inverse) edges.
    pub fn validate_ncq(&self) -> Result<(), QueryError> {
        self.validate()?;
        for a in &self.atoms {
            if let Atom::Path { path, .. } = a {
                if !matches!(path, PathExpr::Edge(_)) {
                    return Err(QueryError::Navigational(path.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Connectivity of the variables of non-test atoms, linked by path atoms.
    pub fn is_connected(&self) -> bool {
        let mut parent: BTreeMap<&Variable, &Variable> = BTreeMap::new();
        fn find<'a>(p: &BTreeMap<&'a Variable, &'a Variable>, v: &'a Variable) -> &'a Variable {
            let mut v = v;
            while let Some(&u) = p.get(v) {
                if u == v {
                    break;
                }
                v = u;
            }
            v
        }
        let mut test_only: BTreeSet<&Variable> = BTreeSet::new();
        for a in &self.atoms {
            match a {
                Atom::Concept { var, .. } => {
                    parent.entry(var).or_insert(var);
                }
                Atom::Path { src, dst, .. } => {
                    parent.entry(src).or_insert(src);
                    parent.entry(dst).or_insert(dst);
                    let (a, b) = (find(&parent, src), find(&parent, dst));
                    if a != b {
                        parent.insert(a, b);
                    }
                }
                Atom::Test { vars, .. } => test_only.extend(vars.iter()),
            }
        }
        let roots: BTreeSet<&Variable> = parent.keys().map(|v| find(&parent, v)).collect();
        let dangling = test_only.iter().any(|v| !parent.contains_key(v)) && !parent.is_empty();
        roots.len() <= 1 && !dangling
    }
}

fn check_numeric(t: &TestExpr) -> Result<(), ()> {
    match t {
        TestExpr::Data(d) if d.op.is_ordered() && !d.value.is_numeric() => Err(()),
        TestExpr::Data(_) | TestExpr::Label(_) => Ok(()),
        TestExpr::And(a, b) | TestExpr::Or(a, b) => check_numeric(a).and(check_numeric(b)),
        TestExpr::Not(a) => check_numeric(a),
    }
}

fn check_path_tests(p: &PathExpr) -> Result<(), ()> {
    match p {
        PathExpr::Test(t) => check_numeric(t),
        PathExpr::Node(_) | PathExpr::Edge(_) => Ok(()),
        PathExpr::Concat(ps) | PathExpr::Union(ps) => ps.iter().try_for_each(check_path_tests),
        PathExpr::Star(p) => check_path_tests(p),
    }
}

impl fmt::Display for C2rpq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.head)?;
        for (i, v) in self.answer_vars.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(") :- ")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A finite union of C2RPQs with a common answer tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Uc2rpq {
    pub answer_vars: Vec<Variable>,
    pub branches: Vec<C2rpq>,
}

impl Uc2rpq {
    /// Branches are renamed onto the first branch's answer variables and
    /// sorted by printed form.
    pub fn new(branches: Vec<C2rpq>) -> Result<Self, QueryError> {
        let Some(first) = branches.first() else {
            return Ok(Uc2rpq {
                answer_vars: Vec::new(),
                branches,
            });
        };
        let answer_vars = first.answer_vars.clone();
        let mut out = Vec::with_capacity(branches.len());
        for b in branches {
            if b.arity() != answer_vars.len() {
                return Err(QueryError::ArityMismatch {
                    expected: answer_vars.len(),
                    found: b.arity(),
                });
            }
            let mut map: BTreeMap<Variable, Variable> =
                b.answer_vars.iter().cloned().zip(answer_vars.iter().cloned()).collect();
            // Existentials that clash with the new answer names are moved aside.
            for (i, v) in b.vars().into_iter().enumerate() {
                if !b.is_answer_var(v) && answer_vars.contains(v) {
                    map.insert(v.clone(), Variable::new(format!("{FRESH_VAR_PREFIX}{i}")));
                }
            }
            out.push(if map.iter().all(|(a, b)| a == b) {
                b
            } else {
                b.rename(&|v| map.get(v).cloned().unwrap_or_else(|| v.clone()))
            });
        }
        let mut keyed: Vec<(String, C2rpq)> = out.into_iter().map(|q| (q.to_string(), q)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        Ok(Uc2rpq {
            answer_vars,
            branches: keyed.into_iter().map(|(_, q)| q).collect(),
        })
    }

    pub fn arity(&self) -> usize {
        self.answer_vars.len()
    }
}

impl fmt::Display for Uc2rpq {
    /// One branch per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.branches {
            writeln!(f, "{b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(r: &str) -> PathExpr {
        PathExpr::edge(Role::new(r))
    }

    #[test]
    fn union_is_sorted_and_flat() {
        let u = PathExpr::union([e("teaches"), PathExpr::union([e("mentors"), e("teaches")])]);
        assert_eq!(u.to_string(), "mentors|teaches");
    }

    #[test]
    fn node_tests_merge_in_unions() {
        let u = PathExpr::union([
            PathExpr::node([ConceptName::new("B")]),
            PathExpr::concat([e("r"), PathExpr::node([ConceptName::new("C")])]),
            PathExpr::node([ConceptName::new("A")]),
        ]);
        assert_eq!(u.to_string(), "<A|B>|r.<C>");
    }

    #[test]
    fn epsilon_is_concat_identity() {
        let c = PathExpr::concat([PathExpr::epsilon(), e("r"), PathExpr::epsilon()]);
        assert_eq!(c, e("r"));
        assert!(PathExpr::concat(Vec::new()).is_epsilon());
    }

    #[test]
    fn star_printing_and_collapse() {
        let s = PathExpr::star(PathExpr::star(PathExpr::union([e("r"), e("s")])));
        assert_eq!(s.to_string(), "(r|s)*");
        let c = PathExpr::concat([
            PathExpr::star(e("partOf")),
            PathExpr::node([ConceptName::new("Region")]),
        ]);
        assert_eq!(c.to_string(), "partOf*.<Region>");
    }

    #[test]
    fn inverse_distributes() {
        let p = PathExpr::concat([e("r"), PathExpr::union([e("s"), PathExpr::edge(Role::inverse_of("t"))])]);
        assert_eq!(p.inverse().to_string(), "(inv(s)|t).inv(r)");
        assert_eq!(p.inverse().inverse(), p);
    }

    #[test]
    fn substitute_role_cases() {
        let with = PathExpr::union([e("r"), e("s")]);
        let q = C2rpq::new(
            "q",
            vec!["x".into()],
            vec![Atom::role(Role::new("r"), "x".into(), "y".into())],
        );
        assert_eq!(
            q.substitute_role(&Role::new("r"), &with).to_string(),
            "q(x) :- (r|s)(x,y)"
        );
        let q = C2rpq::new(
            "q",
            vec!["x".into()],
            vec![Atom::role(Role::inverse_of("r"), "x".into(), "y".into())],
        );
        assert_eq!(
            q.substitute_role(&Role::new("r"), &with).to_string(),
            "q(x) :- (inv(r)|inv(s))(x,y)"
        );
        let q = C2rpq::new(
            "q",
            vec!["x".into()],
            vec![Atom::role(Role::new("t"), "x".into(), "y".into())],
        );
        assert_eq!(q.substitute_role(&Role::new("r"), &with), q);
    }

    #[test]
    fn fresh_variables_are_canonicalized() {
        let a = C2rpq::new(
            "q",
            vec!["x".into()],
            vec![
                Atom::Path {
                    path: PathExpr::concat([e("r"), PathExpr::node([ConceptName::new("A")])]),
                    src: "x".into(),
                    dst: "__w7".into(),
                },
                Atom::concept([ConceptName::new("B")], "x".into()),
            ],
        );
        assert_eq!(a.to_string(), "q(x) :- B(x), (r.<A>)(x,w0)");
    }

    #[test]
    fn node_test_loop_becomes_concept_atom() {
        let q = C2rpq::new(
            "q",
            vec!["x".into()],
            vec![Atom::Path {
                path: PathExpr::node([ConceptName::new("A"), ConceptName::new("B")]),
                src: "x".into(),
                dst: "x".into(),
            }],
        );
        assert_eq!(q.to_string(), "q(x) :- (A|B)(x)");
    }

    #[test]
    fn compare_semantics() {
        use CompareOp::*;
        let i = |v| Literal::Int(v);
        let s = |v: &str| Literal::Str(v.into());
        assert!(Gt.holds(&i(42), &i(30)));
        assert!(Eq.holds(&i(30), &Literal::Decimal(30.0.into())));
        assert!(!Lt.holds(&s("a"), &i(3)));
        assert!(!Eq.holds(&s("30"), &i(30)));
        assert!(Ne.holds(&s("30"), &i(30)));
        assert!(Le.holds(&s("abc"), &s("abd")));
    }

    #[test]
    fn connectivity() {
        let q = C2rpq::new(
            "q",
            vec!["x".into(), "y".into()],
            vec![
                Atom::concept([ConceptName::new("A")], "x".into()),
                Atom::concept([ConceptName::new("B")], "y".into()),
            ],
        );
        assert_eq!(q.validate(), Err(QueryError::Disconnected));
    }
}
