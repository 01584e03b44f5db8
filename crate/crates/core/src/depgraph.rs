//! The dependency graph of a normalized TBox and the three lookups the
//! rewriter runs against it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::dl::saturate::RoleHierarchy;
use crate::dl::{ConceptName, NormalizedAxiom, Role, TBox};
use crate::query::PathExpr;

/// Default cap on the number of candidate sets explored by [`DependencyGraph::witness`].
pub const DEFAULT_WITNESS_CAP: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleEdge {
    pub target: ConceptName,
    pub role: Role,
    pub filler: ConceptName,
}

/// Edges point from the entailed concept back to what entails it.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    pub nodes: Vec<ConceptName>,
    /// `(A, B)` for `B ⊑ A`
    pub eps_edges: Vec<(ConceptName, ConceptName)>,
    /// for `∃p.B ⊑ A`
    pub role_edges: Vec<RoleEdge>,
    /// `(A, [B1, …, Bk])` for `B1 ⊓ … ⊓ Bk ⊑ A`
    pub conj_edges: Vec<(ConceptName, Vec<ConceptName>)>,
    roles: RoleHierarchy,
}

/// Result of [`DependencyGraph::witness`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witnesses {
    /// ⊆-minimal sets, ordered by size then lexicographically.
    pub sets: Vec<BTreeSet<ConceptName>>,
    /// Whether exploration stopped at the cap.
    pub truncated: bool,
}

pub fn build_dependency_graph(tbox: &TBox) -> DependencyGraph {
    let mut nodes = vec![ConceptName::top()];
    nodes.extend(tbox.concept_names());
    let mut g = DependencyGraph {
        nodes,
        roles: RoleHierarchy::new(tbox),
        ..Default::default()
    };
    for ax in &tbox.normalized {
        match ax {
            NormalizedAxiom::Atomic { sub, sup } => g.eps_edges.push((sup.clone(), sub.clone())),
            NormalizedAxiom::ExistsLeft { role, filler, sup } => g.role_edges.push(RoleEdge {
                target: sup.clone(),
                role: role.clone(),
                filler: filler.clone(),
            }),
            NormalizedAxiom::Conj { conjuncts, sup } => g.conj_edges.push((sup.clone(), conjuncts.clone())),
            NormalizedAxiom::ExistsRight { .. } | NormalizedAxiom::Role { .. } => {}
        }
    }
    g
}

fn normalize_set(mut s: BTreeSet<ConceptName>) -> BTreeSet<ConceptName> {
    s.retain(|c| !c.is_top());
    if s.is_empty() {
        s.insert(ConceptName::top());
    }
    s
}

fn covers(small: &BTreeSet<ConceptName>, big: &BTreeSet<ConceptName>) -> bool {
    small.iter().all(|c| c.is_top()) || small.is_subset(big)
}

impl DependencyGraph {
    /// Sets of concepts whose conjunction entails `a`, found by backward
    /// chaining over atomic and conjunctive inclusions.
    pub fn witness(&self, a: &ConceptName, cap: usize) -> Witnesses {
        let start = BTreeSet::from([a.clone()]);
        let mut seen: BTreeSet<BTreeSet<ConceptName>> = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        let mut truncated = false;
        'outer: while let Some(set) = queue.pop_front() {
            for m in &set {
                let replacements = self
                    .eps_edges
                    .iter()
                    .filter(|(t, _)| t == m)
                    .map(|(_, b)| vec![b.clone()])
                    .chain(self.conj_edges.iter().filter(|(t, _)| t == m).map(|(_, bs)| bs.clone()));
                for rep in replacements {
                    let mut next = set.clone();
                    next.remove(m);
                    next.extend(rep);
                    let next = normalize_set(next);
                    if seen.contains(&next) {
                        continue;
                    }
                    if seen.len() >= cap {
                        truncated = true;
                        break 'outer;
                    }
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }
        let mut sets: Vec<BTreeSet<ConceptName>> = seen.into_iter().collect();
        sets.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        let mut minimal: Vec<BTreeSet<ConceptName>> = Vec::new();
        for s in sets {
            if !minimal.iter().any(|m| covers(m, &s)) {
                minimal.push(s);
            }
        }
        Witnesses {
            sets: minimal,
            truncated,
        }
    }

    /// Path expression from a node to some node whose labels derive `b`
    /// through atomic and existential-left inclusions.
    pub fn rewr_concept(&self, b: &ConceptName) -> PathExpr {
        // X_A = <A> ∪ ⋃ X_B (eps) ∪ ⋃ p·X_B (role); X_top = ε
        let mut succ: BTreeMap<&ConceptName, Vec<(PathExpr, &ConceptName)>> = BTreeMap::new();
        for (a, bb) in &self.eps_edges {
            succ.entry(a).or_default().push((PathExpr::epsilon(), bb));
        }
        for e in &self.role_edges {
            succ.entry(&e.target)
                .or_default()
                .push((PathExpr::edge(e.role.clone()), &e.filler));
        }

        let mut order: Vec<&ConceptName> = Vec::new();
        let mut visited: BTreeSet<&ConceptName> = BTreeSet::new();
        post_order(b, &succ, &mut visited, &mut order);

        struct Eq<'a> {
            coef: BTreeMap<&'a ConceptName, PathExpr>,
            constant: Option<PathExpr>,
        }
        let mut eqs: BTreeMap<&ConceptName, Eq> = BTreeMap::new();
        for &s in &order {
            let mut coef: BTreeMap<&ConceptName, PathExpr> = BTreeMap::new();
            if !s.is_top() {
                for (label, t) in succ.get(s).into_iter().flatten() {
                    add_coef(&mut coef, t, label.clone());
                }
            }
            eqs.insert(
                s,
                Eq {
                    coef,
                    constant: Some(PathExpr::node([s.clone()])),
                },
            );
        }

        for &s in &order {
            let Some(mut eq) = eqs.remove(s) else { continue };
            if let Some(l) = eq.coef.remove(s) {
                let loop_ = PathExpr::star(l);
                eq.coef = eq
                    .coef
                    .into_iter()
                    .map(|(t, c)| (t, PathExpr::concat([loop_.clone(), c])))
                    .collect();
                eq.constant = eq.constant.map(|c| PathExpr::concat([loop_.clone(), c]));
            }
            if s == b {
                return eq.constant.unwrap_or_else(|| PathExpr::node([b.clone()]));
            }
            for other in eqs.values_mut() {
                let Some(m) = other.coef.remove(s) else { continue };
                for (t, c) in &eq.coef {
                    add_coef(&mut other.coef, t, PathExpr::concat([m.clone(), c.clone()]));
                }
                if let Some(c) = &eq.constant {
                    let term = PathExpr::concat([m.clone(), c.clone()]);
                    other.constant = Some(match other.constant.take() {
                        Some(k) => PathExpr::union([k, term]),
                        None => term,
                    });
                }
            }
        }
        PathExpr::node([b.clone()])
    }

    /// Union of the edges of every subrole of `r`.
    pub fn rewrite_role(&self, r: &Role) -> PathExpr {
        rewrite_role(r, &self.roles)
    }

    pub fn roles(&self) -> &RoleHierarchy {
        &self.roles
    }
}

pub fn rewrite_role(r: &Role, roles: &RoleHierarchy) -> PathExpr {
    PathExpr::union(roles.subroles(r).into_iter().map(PathExpr::edge))
}

fn add_coef<'a>(coef: &mut BTreeMap<&'a ConceptName, PathExpr>, t: &'a ConceptName, e: PathExpr) {
    let merged = match coef.remove(t) {
        Some(prev) => PathExpr::union([prev, e]),
        None => e,
    };
    coef.insert(t, merged);
}

fn post_order<'a>(
    s: &'a ConceptName,
    succ: &BTreeMap<&'a ConceptName, Vec<(PathExpr, &'a ConceptName)>>,
    visited: &mut BTreeSet<&'a ConceptName>,
    order: &mut Vec<&'a ConceptName>,
) {
    if !visited.insert(s) {
        return;
    }
    if !s.is_top() {
        let mut next: Vec<&ConceptName> = succ.get(s).into_iter().flatten().map(|(_, t)| *t).collect();
        next.sort();
        next.dedup();
        for t in next {
            post_order(t, succ, visited, order);
        }
    }
    order.push(s);
}

impl fmt::Display for DependencyGraph {
    /// Line-based dump in axiom order per edge kind.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in &self.eps_edges {
            writeln!(f, "eps {a} <- {b}")?;
        }
        for e in &self.role_edges {
            writeln!(f, "role {} <-[{}] {}", e.target, e.role, e.filler)?;
        }
        for (a, bs) in &self.conj_edges {
            let names: Vec<&str> = bs.iter().map(ConceptName::as_str).collect();
            writeln!(f, "conj {a} <- {{{}}}", names.join(","))?;
        }
        Ok(())
    }
}
