use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use super::{NodeId, PropertyGraph};
use crate::exec::Execution;
use crate::query::{Atom, C2rpq, PathExpr, TestExpr, Uc2rpq, Variable};

/// Answer tuples, as node ids.
pub type Answers = BTreeSet<Vec<String>>;

/// A binary relation over the nodes of one graph, one bit row per source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    rows: Vec<FixedBitSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            rows: vec![FixedBitSet::with_capacity(n); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(n, |_| true)
    }

    pub fn diagonal(n: usize, keep: impl Fn(NodeId) -> bool) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            if keep(i) {
                r.rows[i].insert(i);
            }
        }
        r
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn insert(&mut self, a: NodeId, b: NodeId) {
        self.rows[a].insert(b);
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        self.rows[a].contains(b)
    }

    pub fn row(&self, a: NodeId) -> &FixedBitSet {
        &self.rows[a]
    }

    pub fn pairs(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.ones().map(move |b| (a, b)))
            .collect()
    }

    pub fn union_with(&mut self, other: &Relation) {
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            a.union_with(b);
        }
    }

    pub fn compose(&self, other: &Relation) -> Relation {
        let n = self.size();
        let mut out = Self::empty(n);
        for (a, row) in self.rows.iter().enumerate() {
            for m in row.ones() {
                out.rows[a].union_with(&other.rows[m]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Relation {
        let mut out = Self::empty(self.size());
        for (a, row) in self.rows.iter().enumerate() {
            for b in row.ones() {
                out.rows[b].insert(a);
            }
        }
        out
    }

    /// Reflexive-transitive closure.
    pub fn star(&self) -> Relation {
        let n = self.size();
        let mut out = Self::empty(n);
        for s in 0..n {
            let seen = &mut out.rows[s];
            seen.insert(s);
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for v in self.rows[u].ones() {
                    if !seen.put(v) {
                        stack.push(v);
                    }
                }
            }
        }
        out
    }
}

fn node_test(t: &TestExpr, g: &PropertyGraph, n: NodeId) -> bool {
    match t {
        TestExpr::Data(d) => g.prop(n, &d.key).is_some_and(|v| d.op.holds(v, &d.value)),
        TestExpr::Label(c) => g.has_label(n, c),
        TestExpr::And(a, b) => node_test(a, g, n) && node_test(b, g, n),
        TestExpr::Or(a, b) => node_test(a, g, n) || node_test(b, g, n),
        TestExpr::Not(a) => !node_test(a, g, n),
    }
}

fn edge_test(t: &TestExpr, g: &PropertyGraph, s: NodeId, d: NodeId) -> bool {
    match t {
        TestExpr::Data(dt) => g.edge_prop(s, d, &dt.key).is_some_and(|v| dt.op.holds(v, &dt.value)),
        TestExpr::Label(_) => false,
        TestExpr::And(a, b) => edge_test(a, g, s, d) && edge_test(b, g, s, d),
        TestExpr::Or(a, b) => edge_test(a, g, s, d) || edge_test(b, g, s, d),
        TestExpr::Not(a) => !edge_test(a, g, s, d),
    }
}

/// The pairs of nodes connected by a walk matching `path`.
pub fn eval_path(path: &PathExpr, g: &PropertyGraph) -> Relation {
    let n = g.node_count();
    match path {
        PathExpr::Node(labels) => Relation::diagonal(n, |v| labels.iter().any(|c| g.has_label(v, c))),
        PathExpr::Test(t) => Relation::diagonal(n, |v| node_test(t, g, v)),
        PathExpr::Edge(role) => {
            let mut r = Relation::empty(n);
            for (s, l, d) in g.edges() {
                if l == role.name {
                    if role.inverted {
                        r.insert(d, s);
                    } else {
                        r.insert(s, d);
                    }
                }
            }
            r
        }
        PathExpr::Concat(ps) => {
            let mut it = ps.iter();
            let first = it.next().map_or_else(|| Relation::identity(n), |p| eval_path(p, g));
            it.fold(first, |acc, p| acc.compose(&eval_path(p, g)))
        }
        PathExpr::Union(ps) => {
            let mut acc = Relation::empty(n);
            for p in ps {
                acc.union_with(&eval_path(p, g));
            }
            acc
        }
        PathExpr::Star(p) => eval_path(p, g).star(),
    }
}

struct Constraint {
    a: usize,
    b: usize,
    rel: Relation,
    inv: Relation,
}

type PathCache<'a> = BTreeMap<&'a PathExpr, Relation>;

/// Answers of a single C2RPQ.
pub fn eval_query(q: &C2rpq, g: &PropertyGraph) -> Answers {
    eval_cached(q, g, &path_relations([q], g, Execution::Sequential))
}

/// Evaluates every distinct path atom of `queries` once.
fn path_relations<'a>(
    queries: impl IntoIterator<Item = &'a C2rpq>,
    g: &PropertyGraph,
    exec: Execution,
) -> PathCache<'a> {
    let paths: BTreeSet<&PathExpr> = queries
        .into_iter()
        .flat_map(|q| &q.atoms)
        .filter_map(|a| match a {
            Atom::Path { path, .. } => Some(path),
            _ => None,
        })
        .collect();
    let paths: Vec<&PathExpr> = paths.into_iter().collect();
    let rels = exec.map(&paths, |p| eval_path(p, g));
    paths.into_iter().zip(rels).collect()
}

fn eval_cached(q: &C2rpq, g: &PropertyGraph, cache: &PathCache<'_>) -> Answers {
    let n = g.node_count();
    let mut vars: BTreeMap<&Variable, usize> = BTreeMap::new();
    for v in &q.answer_vars {
        let k = vars.len();
        vars.entry(v).or_insert(k);
    }
    for a in &q.atoms {
        for v in a.vars() {
            let k = vars.len();
            vars.entry(v).or_insert(k);
        }
    }
    let nv = vars.len();
    let mut full = FixedBitSet::with_capacity(n);
    full.insert_range(..);
    let mut dom = vec![full; nv];
    let mut cons: Vec<Constraint> = Vec::new();
    let mut binary = |a: usize, b: usize, rel: Relation, dom: &mut Vec<FixedBitSet>| {
        if a == b {
            let mut d = FixedBitSet::with_capacity(n);
            for v in 0..n {
                if rel.contains(v, v) {
                    d.insert(v);
                }
            }
            dom[a].intersect_with(&d);
        } else {
            let inv = rel.transpose();
            cons.push(Constraint { a, b, rel, inv });
        }
    };
    for atom in &q.atoms {
        match atom {
            Atom::Concept { labels, var } => {
                let mut d = FixedBitSet::with_capacity(n);
                for v in 0..n {
                    if labels.iter().any(|c| g.has_label(v, c)) {
                        d.insert(v);
                    }
                }
                dom[vars[var]].intersect_with(&d);
            }
            Atom::Path { path, src, dst } => binary(vars[src], vars[dst], cache[path].clone(), &mut dom),
            Atom::Test { test, vars: tv } => match tv.as_slice() {
                [x] => {
                    let mut d = FixedBitSet::with_capacity(n);
                    for v in 0..n {
                        if node_test(test, g, v) {
                            d.insert(v);
                        }
                    }
                    dom[vars[x]].intersect_with(&d);
                }
                [x, y] => {
                    let mut rel = Relation::empty(n);
                    for s in 0..n {
                        for d in 0..n {
                            if edge_test(test, g, s, d) {
                                rel.insert(s, d);
                            }
                        }
                    }
                    binary(vars[x], vars[y], rel, &mut dom);
                }
                _ => {}
            },
        }
    }
    prune_domains(&mut dom, &cons);
    if dom.iter().any(|d| d.is_clear()) {
        return Answers::new();
    }

    let order = var_order(nv, q.answer_vars.len(), &cons);
    let mut assignment: Vec<Option<NodeId>> = vec![None; nv];
    let mut out = Answers::new();
    let answer_idx: Vec<usize> = q.answer_vars.iter().map(|v| vars[v]).collect();
    let n_answer = answer_idx.iter().collect::<BTreeSet<_>>().len();
    search(&order, 0, n_answer, &dom, &cons, &mut assignment, &mut |asg| {
        out.insert(answer_idx.iter().map(|&i| g.id(asg[i].unwrap()).to_owned()).collect());
    });
    out
}

/// Arc consistency over the binary constraints.
fn prune_domains(dom: &mut [FixedBitSet], cons: &[Constraint]) {
    let mut changed = true;
    while changed {
        changed = false;
        for c in cons {
            for (x, y, rel) in [(c.a, c.b, &c.rel), (c.b, c.a, &c.inv)] {
                let keep: Vec<usize> = dom[x].ones().filter(|&u| !rel.row(u).is_disjoint(&dom[y])).collect();
                if keep.len() != dom[x].count_ones(..) {
                    let mut d = FixedBitSet::with_capacity(dom[x].len());
                    d.extend(keep);
                    dom[x] = d;
                    changed = true;
                }
            }
        }
    }
}

/// Answer variables first, then greedily the variable most connected to
/// those already placed.
fn var_order(nv: usize, n_answer: usize, cons: &[Constraint]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(nv);
    let mut placed = vec![false; nv];
    let n_answer = n_answer.min(nv);
    for stage in [0..n_answer, n_answer..nv] {
        loop {
            let best = stage.clone().filter(|&v| !placed[v]).max_by_key(|&v| {
                let links = cons
                    .iter()
                    .filter(|c| (c.a == v && placed[c.b]) || (c.b == v && placed[c.a]))
                    .count();
                (links, std::cmp::Reverse(v))
            });
            let Some(v) = best else { break };
            placed[v] = true;
            order.push(v);
        }
    }
    order
}

fn candidates(v: usize, dom: &[FixedBitSet], cons: &[Constraint], asg: &[Option<NodeId>]) -> FixedBitSet {
    let mut cand = dom[v].clone();
    for c in cons {
        if c.b == v {
            if let Some(u) = asg[c.a] {
                cand.intersect_with(c.rel.row(u));
            }
        } else if c.a == v {
            if let Some(u) = asg[c.b] {
                cand.intersect_with(c.inv.row(u));
            }
        }
    }
    cand
}

/// Enumerates assignments of the first `n_answer` variables in `order`
/// that extend to a full assignment.
fn search(
    order: &[usize],
    depth: usize,
    n_answer: usize,
    dom: &[FixedBitSet],
    cons: &[Constraint],
    asg: &mut Vec<Option<NodeId>>,
    emit: &mut dyn FnMut(&[Option<NodeId>]),
) {
    if depth == n_answer {
        if exists(order, depth, dom, cons, asg) {
            emit(asg);
        }
        return;
    }
    let v = order[depth];
    for u in candidates(v, dom, cons, asg).ones() {
        asg[v] = Some(u);
        search(order, depth + 1, n_answer, dom, cons, asg, emit);
    }
    asg[v] = None;
}

fn exists(
    order: &[usize],
    depth: usize,
    dom: &[FixedBitSet],
    cons: &[Constraint],
    asg: &mut Vec<Option<NodeId>>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    let mut found = false;
    for u in candidates(v, dom, cons, asg).ones() {
        asg[v] = Some(u);
        if exists(order, depth + 1, dom, cons, asg) {
            found = true;
            break;
        }
    }
    asg[v] = None;
    found
}

/// Union of the branch answers, branches evaluated with the default
/// [`Execution`].
pub fn eval_union(u: &Uc2rpq, g: &PropertyGraph) -> Answers {
    eval_union_with(u, g, Execution::default())
}

pub fn eval_union_with(u: &Uc2rpq, g: &PropertyGraph, exec: Execution) -> Answers {
    let cache = path_relations(&u.branches, g, exec);
    exec.map(&u.branches, |q| eval_cached(q, g, &cache))
        .into_iter()
        .flatten()
        .collect()
}
