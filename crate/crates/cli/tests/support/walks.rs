//! Path semantics by walk search: the expression is compiled to an automaton
//! with silent, node-check and step transitions, and pairs are read off the
//! reachable (node, state) configurations.

use std::collections::BTreeSet;

use navrewrite::dl::Role;
use navrewrite::graph::PropertyGraph;
use navrewrite::query::PathExpr;

enum Move {
    Silent,
    Check(PathExpr),
    Step(Role),
}

#[derive(Default)]
struct Nfa {
    edges: Vec<Vec<(Move, usize)>>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn build(&mut self, e: &PathExpr, from: usize, to: usize) {
        match e {
            PathExpr::Node(_) | PathExpr::Test(_) => self.edges[from].push((Move::Check(e.clone()), to)),
            PathExpr::Edge(r) => self.edges[from].push((Move::Step(r.clone()), to)),
            PathExpr::Concat(ps) => {
                let mut cur = from;
                for (i, p) in ps.iter().enumerate() {
                    let next = if i + 1 == ps.len() { to } else { self.state() };
                    self.build(p, cur, next);
                    cur = next;
                }
                if ps.is_empty() {
                    self.edges[from].push((Move::Silent, to));
                }
            }
            PathExpr::Union(ps) => {
                for p in ps {
                    self.build(p, from, to);
                }
            }
            PathExpr::Star(p) => {
                let (a, b) = (self.state(), self.state());
                self.edges[from].push((Move::Silent, to));
                self.edges[from].push((Move::Silent, a));
                self.build(p, a, b);
                self.edges[b].push((Move::Silent, a));
                self.edges[b].push((Move::Silent, to));
            }
        }
    }
}

fn check(e: &PathExpr, g: &PropertyGraph, v: usize) -> bool {
    match e {
        PathExpr::Node(labels) => labels.iter().any(|c| g.has_label(v, c)),
        _ => panic!("only label checks are generated"),
    }
}

/// Pairs `(u, v)` joined by some walk whose trace matches `e`.
pub fn walk_pairs(e: &PathExpr, g: &PropertyGraph) -> BTreeSet<(usize, usize)> {
    let mut nfa = Nfa::default();
    let (start, end) = (nfa.state(), nfa.state());
    nfa.build(e, start, end);
    let mut out = BTreeSet::new();
    for u in g.nodes() {
        let mut seen = vec![vec![false; nfa.edges.len()]; g.node_count()];
        let mut stack = vec![(u, start)];
        seen[u][start] = true;
        while let Some((v, s)) = stack.pop() {
            if s == end {
                out.insert((u, v));
            }
            for (m, t) in &nfa.edges[s] {
                let nexts: Vec<usize> = match m {
                    Move::Silent => vec![v],
                    Move::Check(c) => {
                        if check(c, g, v) {
                            vec![v]
                        } else {
                            vec![]
                        }
                    }
                    Move::Step(r) => g.successors(v, r).collect(),
                };
                for w in nexts {
                    if !seen[w][*t] {
                        seen[w][*t] = true;
                        stack.push((w, *t));
                    }
                }
            }
        }
    }
    out
}
