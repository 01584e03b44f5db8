//! Translation of UC2RPQs into Cypher text.
//!
//! Each branch is printed on one line. Every atom gets its own `MATCH` clause so that Cypher's relationship
//! uniqueness never applies across atoms; all conditions go into the
//! `WHERE` of the last clause.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::dl::ConceptName;
use crate::graph::PropertyGraph;
use crate::query::{Atom, C2rpq, CompareOp, Literal, PathExpr, TestExpr, Uc2rpq, Variable};

/// Upper bound on the number of branches produced by distributing unions.
pub const MAX_DISTRIBUTED_BRANCHES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CypherError {
    #[error("path `{0}` has no Cypher pattern")]
    UnsupportedPath(String),
    #[error("distributing unions yields more than {0} branches")]
    TooManyBranches(usize),
    #[error("the union has no branches")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CypherQuery {
    pub text: String,
    pub diagnostics: Vec<String>,
}

fn is_plain(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn ident(name: &str) -> String {
    if is_plain(name) {
        name.to_owned()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn literal(v: &Literal) -> String {
    match v {
        Literal::Int(i) => i.to_string(),
        Literal::Decimal(_) => v.to_string(),
        Literal::Str(s) => format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
    }
}

fn op(o: CompareOp) -> &'static str {
    match o {
        CompareOp::Ne => "<>",
        other => other.symbol(),
    }
}

fn label_cond(var: &str, labels: &BTreeSet<ConceptName>) -> Option<String> {
    if labels.iter().any(ConceptName::is_top) {
        return None;
    }
    let parts: Vec<String> = labels.iter().map(|l| format!("{var}:{}", ident(l.as_str()))).collect();
    Some(if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        format!("({})", parts.join(" OR "))
    })
}

fn node_test(t: &TestExpr, var: &str) -> String {
    match t {
        TestExpr::Data(d) => format!(
            "coalesce({var}.{} {} {}, false)",
            ident(&d.key),
            op(d.op),
            literal(&d.value)
        ),
        TestExpr::Label(l) if l.is_top() => "true".into(),
        TestExpr::Label(l) => format!("{var}:{}", ident(l.as_str())),
        TestExpr::And(a, b) => format!("({} AND {})", node_test(a, var), node_test(b, var)),
        TestExpr::Or(a, b) => format!("({} OR {})", node_test(a, var), node_test(b, var)),
        TestExpr::Not(a) => format!("NOT {}", node_test(a, var)),
    }
}

fn edge_test(t: &TestExpr, x: &str, y: &str, rel: &str) -> String {
    match t {
        TestExpr::Data(d) => format!(
            "any({rel} IN [({x})-[{rel}]->({y}) | {rel}] WHERE coalesce({rel}.{} {} {}, false))",
            ident(&d.key),
            op(d.op),
            literal(&d.value)
        ),
        TestExpr::Label(_) => "false".into(),
        TestExpr::And(a, b) => format!("({} AND {})", edge_test(a, x, y, rel), edge_test(b, x, y, rel)),
        TestExpr::Or(a, b) => format!("({} OR {})", edge_test(a, x, y, rel), edge_test(b, x, y, rel)),
        TestExpr::Not(a) => format!("NOT {}", edge_test(a, x, y, rel)),
    }
}

/// `(types, inverted)` when `p` is an edge or a union of edges in one
/// direction.
fn edge_set(p: &PathExpr) -> Option<(Vec<&str>, bool)> {
    match p {
        PathExpr::Edge(r) => Some((vec![r.name.as_str()], r.inverted)),
        PathExpr::Union(ps) => {
            let mut names = Vec::new();
            let mut dir = None;
            for q in ps {
                let PathExpr::Edge(r) = q else { return None };
                if *dir.get_or_insert(r.inverted) != r.inverted {
                    return None;
                }
                names.push(r.name.as_str());
            }
            Some((names, dir?))
        }
        _ => None,
    }
}

fn rel_pattern(from: &str, to: &str, names: &[&str], inverted: bool, star: bool) -> String {
    let types: Vec<String> = names.iter().map(|n| ident(n)).collect();
    let range = if star { "*0.." } else { "" };
    let body = format!("[:{}{range}]", types.join("|"));
    if inverted {
        format!("({from})<-{body}-({to})")
    } else {
        format!("({from})-{body}->({to})")
    }
}

struct Emitter {
    clauses: Vec<String>,
    conds: Vec<String>,
    taken: BTreeSet<String>,
    fresh: usize,
}

impl Emitter {
    fn fresh_var(&mut self) -> String {
        loop {
            let v = format!("m{}", self.fresh);
            self.fresh += 1;
            if !self.taken.contains(&v) {
                self.taken.insert(v.clone());
                return v;
            }
        }
    }

    fn path(&mut self, p: &PathExpr, from: &str, to: &str) -> Result<(), CypherError> {
        let parts: Vec<&PathExpr> = match p {
            PathExpr::Concat(ps) => ps.iter().collect(),
            other => vec![other],
        };
        let moves = parts
            .iter()
            .filter(|q| !matches!(q, PathExpr::Node(_) | PathExpr::Test(_)))
            .count();
        let mut cur = from.to_owned();
        let mut done = 0;
        for part in parts {
            match part {
                PathExpr::Node(labels) => self.conds.extend(label_cond(&cur, labels)),
                PathExpr::Test(t) => self.conds.push(node_test(t, &cur)),
                PathExpr::Star(inner) => {
                    let (names, inv) = edge_set(inner).ok_or_else(|| CypherError::UnsupportedPath(part.to_string()))?;
                    done += 1;
                    let next = if done == moves { to.to_owned() } else { self.fresh_var() };
                    self.clauses
                        .push(format!("MATCH {}", rel_pattern(&cur, &next, &names, inv, true)));
                    cur = next;
                }
                other => {
                    let (names, inv) =
                        edge_set(other).ok_or_else(|| CypherError::UnsupportedPath(other.to_string()))?;
                    done += 1;
                    let next = if done == moves { to.to_owned() } else { self.fresh_var() };
                    self.clauses
                        .push(format!("MATCH {}", rel_pattern(&cur, &next, &names, inv, false)));
                    cur = next;
                }
            }
        }
        if moves == 0 && from != to {
            self.conds.push(format!("{from} = {to}"));
        }
        Ok(())
    }
}

fn stationary(p: &PathExpr) -> bool {
    match p {
        PathExpr::Node(_) | PathExpr::Test(_) => true,
        PathExpr::Concat(ps) => ps.iter().all(stationary),
        _ => false,
    }
}

/// Endpoints of paths that only test nodes denote the same node; maps each
/// variable to one representative, preferring answer variables.
fn merge_stationary(q: &C2rpq) -> BTreeMap<&Variable, &Variable> {
    let mut rep: BTreeMap<&Variable, &Variable> = q.vars().into_iter().map(|v| (v, v)).collect();
    fn find<'a>(rep: &BTreeMap<&'a Variable, &'a Variable>, mut v: &'a Variable) -> &'a Variable {
        while rep[v] != v {
            v = rep[v];
        }
        v
    }
    for a in &q.atoms {
        if let Atom::Path { path, src, dst } = a {
            if !stationary(path) {
                continue;
            }
            let (a, b) = (find(&rep, src), find(&rep, dst));
            if a == b {
                continue;
            }
            let keep = match (q.is_answer_var(a), q.is_answer_var(b)) {
                (true, false) => a,
                (false, true) => b,
                _ => a.min(b),
            };
            let drop = if keep == a { b } else { a };
            rep.insert(drop, keep);
        }
    }
    let vars: Vec<&Variable> = rep.keys().copied().collect();
    vars.into_iter().map(|v| (v, find(&rep, v))).collect()
}

fn emit_branch(q: &C2rpq) -> Result<String, CypherError> {
    let rep = merge_stationary(q);
    let name = |v: &Variable| ident(rep[v].as_str());
    let mut e = Emitter {
        clauses: Vec::new(),
        conds: Vec::new(),
        taken: q.vars().into_iter().map(|v| ident(v.as_str())).collect(),
        fresh: 0,
    };
    let mut bound: BTreeSet<&Variable> = BTreeSet::new();
    for a in &q.atoms {
        if let Atom::Path { path, src, dst } = a {
            if !stationary(path) {
                bound.insert(rep[src]);
                bound.insert(rep[dst]);
            }
        }
    }
    let unbound: BTreeSet<&Variable> = rep.values().copied().filter(|v| !bound.contains(v)).collect();
    for v in unbound {
        e.clauses.push(format!("MATCH ({})", ident(v.as_str())));
    }
    for a in &q.atoms {
        match a {
            Atom::Concept { labels, var } => e.conds.extend(label_cond(&name(var), labels)),
            Atom::Path { path, src, dst } => e.path(path, &name(src), &name(dst))?,
            Atom::Test { test, vars } => match vars.as_slice() {
                [x] => e.conds.push(node_test(test, &name(x))),
                [x, y] => {
                    let rel = e.fresh_var();
                    e.conds.push(edge_test(test, &name(x), &name(y), &rel));
                }
                _ => {}
            },
        }
    }
    let mut out = e.clauses.join(" ");
    if !e.conds.is_empty() {
        write!(out, " WHERE {}", e.conds.join(" AND ")).unwrap();
    }
    let ret: Vec<String> = q
        .answer_vars
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{} AS c{i}", name(v)))
        .collect();
    write!(out, " RETURN DISTINCT {}", ret.join(", ")).unwrap();
    Ok(out)
}

fn alternatives(p: &PathExpr, cap: usize) -> Result<Vec<PathExpr>, CypherError> {
    let out = match p {
        PathExpr::Union(ps) if edge_set(p).is_none() => {
            let mut out = Vec::new();
            for q in ps {
                out.extend(alternatives(q, cap)?);
            }
            out
        }
        PathExpr::Concat(ps) => {
            let mut acc: Vec<Vec<PathExpr>> = vec![Vec::new()];
            for q in ps {
                let alts = alternatives(q, cap)?;
                if acc.len() * alts.len() > cap {
                    return Err(CypherError::TooManyBranches(cap));
                }
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        alts.iter().map(move |a| {
                            let mut v = prefix.clone();
                            v.push(a.clone());
                            v
                        })
                    })
                    .collect();
            }
            acc.into_iter().map(PathExpr::concat).collect()
        }
        other => vec![other.clone()],
    };
    Ok(out)
}

/// Splits path atoms at unions that no single relationship pattern can
/// express, one query per combination of alternatives.
pub fn distribute_unions(q: &C2rpq) -> Result<Vec<C2rpq>, CypherError> {
    let mut acc: Vec<Vec<Atom>> = vec![Vec::new()];
    for a in &q.atoms {
        let alts: Vec<Atom> = match a {
            Atom::Path { path, src, dst } => alternatives(path, MAX_DISTRIBUTED_BRANCHES)?
                .into_iter()
                .map(|p| Atom::Path {
                    path: p,
                    src: src.clone(),
                    dst: dst.clone(),
                })
                .collect(),
            other => vec![other.clone()],
        };
        if acc.len() * alts.len() > MAX_DISTRIBUTED_BRANCHES {
            return Err(CypherError::TooManyBranches(MAX_DISTRIBUTED_BRANCHES));
        }
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                alts.iter().map(move |a| {
                    let mut v = prefix.clone();
                    v.push(a.clone());
                    v
                })
            })
            .collect();
    }
    Ok(acc
        .into_iter()
        .map(|atoms| C2rpq::new(q.head.clone(), q.answer_vars.clone(), atoms))
        .collect())
}

/// Emits one `MATCH … RETURN DISTINCT` block per branch, joined by `UNION`.
/// Unions mixing edge directions are split into separate branches first.
pub fn emit_cypher(u: &Uc2rpq) -> Result<CypherQuery, CypherError> {
    if u.branches.is_empty() {
        return Err(CypherError::Empty);
    }
    let mut diagnostics = Vec::new();
    let mut texts: Vec<String> = Vec::new();
    for b in &u.branches {
        let parts = distribute_unions(b)?;
        if parts.len() > 1 {
            diagnostics.push(format!("branch `{b}` split into {} Cypher branches", parts.len()));
        }
        for p in parts {
            texts.push(emit_branch(&p)?);
        }
    }
    texts.sort();
    texts.dedup();
    Ok(CypherQuery {
        text: texts.join("\nUNION\n"),
        diagnostics,
    })
}

/// `CREATE` statements that load `g` into a store; node ids go into the
/// `__id` property.
pub fn graph_to_cypher(g: &PropertyGraph) -> Vec<String> {
    let props = |id: Option<&str>, p: &crate::graph::Props| {
        let mut parts: Vec<String> = Vec::new();
        if let Some(id) = id {
            parts.push(format!("__id: {}", literal(&Literal::Str(id.to_owned()))));
        }
        parts.extend(p.iter().map(|(k, v)| format!("{}: {}", ident(k), literal(v))));
        format!("{{{}}}", parts.join(", "))
    };
    let mut out = Vec::new();
    for n in g.nodes() {
        let labels: String = g.labels(n).iter().map(|l| format!(":{}", ident(l.as_str()))).collect();
        out.push(format!("CREATE (n{labels} {})", props(Some(g.id(n)), g.props(n))));
    }
    for (s, l, d) in g.edges() {
        let empty = crate::graph::Props::new();
        let p = g.edge_props(s, d).unwrap_or(&empty);
        out.push(format!(
            "MATCH (a {{__id: {}}}), (b {{__id: {}}}) CREATE (a)-[:{} {}]->(b)",
            literal(&Literal::Str(g.id(s).to_owned())),
            literal(&Literal::Str(g.id(d).to_owned())),
            ident(l),
            props(None, p)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_jsonl;
    use crate::query::{parse_union, ParseMode};

    fn emit(text: &str) -> String {
        emit_cypher(&parse_union(text, ParseMode::Extended).unwrap())
            .unwrap()
            .text
    }

    #[test]
    fn single_label() {
        assert_eq!(
            emit("q(x) :- Teacher(x)"),
            "MATCH (x) WHERE x:Teacher RETURN DISTINCT x AS c0"
        );
    }

    #[test]
    fn same_direction_union() {
        assert_eq!(
            emit("q(x,y) :- (teaches|mentors)(x,y)"),
            "MATCH (x)-[:mentors|teaches]->(y) RETURN DISTINCT x AS c0, y AS c1"
        );
    }

    #[test]
    fn star_then_node_test() {
        assert_eq!(
            emit("q(x,y) :- (partOf*.<Region>)(x,y)"),
            "MATCH (x)-[:partOf*0..]->(y) WHERE y:Region RETURN DISTINCT x AS c0, y AS c1"
        );
    }

    #[test]
    fn concat_uses_fresh_variables() {
        assert_eq!(
            emit("q(x) :- (r.<A>.inv(s))(x,y)"),
            "MATCH (x)-[:r]->(m0) MATCH (m0)<-[:s]-(y) WHERE m0:A RETURN DISTINCT x AS c0"
        );
    }

    #[test]
    fn mixed_direction_union_is_split() {
        let u = parse_union("q(x,y) :- (inv(employs)|worksFor)(x,y)", ParseMode::Extended).unwrap();
        let c = emit_cypher(&u).unwrap();
        assert_eq!(
            c.text,
            "MATCH (x)-[:worksFor]->(y) RETURN DISTINCT x AS c0, y AS c1\nUNION\nMATCH (x)<-[:employs]-(y) RETURN DISTINCT x AS c0, y AS c1"
        );
        assert_eq!(c.diagnostics.len(), 1);
    }

    #[test]
    fn star_over_concat_is_unsupported() {
        let u = parse_union("q(x,y) :- ((r.s)*)(x,y)", ParseMode::Extended).unwrap();
        assert!(matches!(emit_cypher(&u), Err(CypherError::UnsupportedPath(p)) if p == "(r.s)*"));
    }

    #[test]
    fn tests_and_negation() {
        assert_eq!(
            emit("q(x) :- [!age>30](x), r(x,y), since=2001(x,y)"),
            "MATCH (x)-[:r]->(y) WHERE any(m0 IN [(x)-[m0]->(y) | m0] WHERE coalesce(m0.since = 2001, false)) AND NOT coalesce(x.age > 30, false) RETURN DISTINCT x AS c0"
        );
    }

    #[test]
    fn node_only_path_merges_endpoints() {
        assert_eq!(
            emit("q(x,y) :- r(x,z), <A>(z,y), s(y,w)"),
            "MATCH (x)-[:r]->(y) MATCH (y)-[:s]->(w) WHERE y:A RETURN DISTINCT x AS c0, y AS c1"
        );
        assert_eq!(
            emit("q(x) :- (<A>|r.<B>)(x,w)"),
            "MATCH (x) WHERE x:A RETURN DISTINCT x AS c0\nUNION\nMATCH (x)-[:r]->(w) WHERE w:B RETURN DISTINCT x AS c0"
        );
    }

    #[test]
    fn create_statements() {
        let g = parse_jsonl(
            r#"{"type":"node","id":"a","labels":["Teacher"],"props":{"name":"O'Neil"}}
{"type":"node","id":"b"}
{"type":"edge","src":"a","label":"teaches","dst":"b","props":{"since":2001}}"#,
        )
        .unwrap();
        assert_eq!(
            graph_to_cypher(&g),
            vec![
                "CREATE (n:Teacher {__id: 'a', name: 'O\\'Neil'})",
                "CREATE (n {__id: 'b'})",
                "MATCH (a {__id: 'a'}), (b {__id: 'b'}) CREATE (a)-[:teaches {since: 2001}]->(b)",
            ]
        );
    }
}
