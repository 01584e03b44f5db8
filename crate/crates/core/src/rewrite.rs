//! Query rewriting: clipping saturation, concept-atom expansion through
//! witness sets and role substitution.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::depgraph::{build_dependency_graph, DependencyGraph, DEFAULT_WITNESS_CAP};
use crate::dl::{check_profile, saturate, ConceptName, NormalizedAxiom, Role, Saturation, TBox};
use crate::exec::Execution;
use crate::query::{Atom, C2rpq, PathExpr, QueryError, RewritingSet, Uc2rpq, Variable, FRESH_VAR_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewriteConfig {
    pub max_queries: usize,
    pub max_clip_attempts: usize,
    pub witness_cap: usize,
    /// Drop branches structurally contained in other branches.
    pub prune: bool,
    pub exec: Execution,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        RewriteConfig {
            max_queries: 10_000,
            max_clip_attempts: 100_000,
            witness_cap: DEFAULT_WITNESS_CAP,
            prune: true,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("rewriting exceeded the {resource} budget of {limit}")]
    Budget { resource: &'static str, limit: usize },
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteStats {
    /// Queries reached by clipping, the input included.
    pub saturated: usize,
    pub clip_attempts: usize,
    /// Candidate branches offered to the rewriting set.
    pub emitted: usize,
}

#[derive(Debug, Clone)]
pub struct Rewriting {
    pub union: Uc2rpq,
    /// Diagnostics: shapes outside the completeness profile, truncated
    /// witness exploration.
    pub warnings: Vec<String>,
    pub stats: RewriteStats,
}

/// Everything derived from the TBox once and shared by all queries.
#[derive(Debug, Clone)]
pub struct Rewriter {
    tbox: TBox,
    sat: Saturation,
    graph: DependencyGraph,
    config: RewriteConfig,
    profile: Vec<String>,
}

/// Role of a clipped atom relative to the anonymous witness.
enum Touch {
    Outside,
    Attach(Variable),
    Inside,
    Blocked,
}

impl Rewriter {
    /// `tbox` must be normalized.
    pub fn new(tbox: &TBox, config: RewriteConfig) -> Self {
        let sat = saturate(tbox);
        let graph = build_dependency_graph(&sat.tbox(tbox));
        let profile = check_profile(tbox, &sat).iter().map(ToString::to_string).collect();
        Rewriter {
            tbox: tbox.clone(),
            sat,
            graph,
            config,
            profile,
        }
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn saturation(&self) -> &Saturation {
        &self.sat
    }

    /// Clips the variables `y` of `q` into the anonymous witness of the
    /// `A ⊑ ∃p.B` axiom at `axiom` in the normalized TBox. `None` when the
    /// atoms touching `y` cannot all be mapped into that witness.
    pub fn clipping(&self, q: &C2rpq, axiom: usize, y: &BTreeSet<Variable>) -> Option<C2rpq> {
        let Some(NormalizedAxiom::ExistsRight { sub, role, .. }) = self.tbox.normalized.get(axiom) else {
            return None;
        };
        if y.is_empty() || q.answer_vars.iter().any(|v| y.contains(v)) {
            return None;
        }
        let wit = self.sat.witness_types.get(&axiom)?;
        let roles = &self.sat.roles;
        let mut attach: BTreeSet<Variable> = BTreeSet::new();
        let mut kept: Vec<Atom> = Vec::new();
        for atom in &q.atoms {
            let touch = match atom {
                Atom::Concept { labels, var } => {
                    if !y.contains(var) {
                        Touch::Outside
                    } else if labels.iter().any(|l| l.is_top() || wit.contains(l)) {
                        Touch::Inside
                    } else {
                        Touch::Blocked
                    }
                }
                Atom::Path { path, src, dst } => match (y.contains(src), y.contains(dst), path) {
                    (false, false, _) => Touch::Outside,
                    (true, true, _) => Touch::Blocked,
                    (false, true, PathExpr::Edge(r)) if roles.is_sub(role, r) => Touch::Attach(src.clone()),
                    (true, false, PathExpr::Edge(r)) if roles.is_sub(role, &r.inv()) => Touch::Attach(dst.clone()),
                    _ => Touch::Blocked,
                },
                Atom::Test { vars, .. } => {
                    if vars.iter().any(|v| y.contains(v)) {
                        Touch::Blocked
                    } else {
                        Touch::Outside
                    }
                }
            };
            match touch {
                Touch::Outside => kept.push(atom.clone()),
                Touch::Attach(z) => {
                    attach.insert(z);
                }
                Touch::Inside => {}
                Touch::Blocked => return None,
            }
        }
        // Every clipped variable hangs off the witness parent.
        let attached_y: BTreeSet<&Variable> = q
            .atoms
            .iter()
            .filter_map(|a| match a {
                Atom::Path { src, dst, .. } if y.contains(src) => Some(src),
                Atom::Path { src, dst, .. } if y.contains(dst) => Some(dst),
                _ => None,
            })
            .collect();
        if attach.is_empty() || attached_y.len() != y.len() {
            return None;
        }
        let answers: Vec<&Variable> = attach.iter().filter(|v| q.is_answer_var(v)).collect();
        let target = match answers.as_slice() {
            [] => attach.iter().next().unwrap().clone(),
            [a] => (*a).clone(),
            _ => return None,
        };
        kept.push(Atom::concept([sub.clone()], target.clone()));
        let clipped = C2rpq {
            head: q.head.clone(),
            answer_vars: q.answer_vars.clone(),
            atoms: kept,
        };
        Some(clipped.rename(&|v| if attach.contains(v) { target.clone() } else { v.clone() }))
    }

    /// All queries reachable from `q` by clipping, `q` first, in discovery
    /// order.
    fn saturate_query(&self, q: &C2rpq, stats: &mut RewriteStats) -> Result<Vec<C2rpq>, RewriteError> {
        let axioms: Vec<usize> = self.tbox.exists_right().map(|(i, _)| i).collect();
        let mut seen: HashSet<String> = HashSet::from([q.to_string()]);
        let mut out = vec![q.clone()];
        let mut next = 0;
        while next < out.len() {
            let cur = out[next].clone();
            next += 1;
            let candidates: Vec<Variable> = cur
                .vars()
                .into_iter()
                .filter(|v| !cur.is_answer_var(v))
                .cloned()
                .collect();
            for y in subsets_by_size(&candidates) {
                for &ax in &axioms {
                    stats.clip_attempts += 1;
                    if stats.clip_attempts > self.config.max_clip_attempts {
                        return Err(RewriteError::Budget {
                            resource: "clip attempt",
                            limit: self.config.max_clip_attempts,
                        });
                    }
                    if let Some(c) = self.clipping(&cur, ax, &y) {
                        if seen.insert(c.to_string()) {
                            out.push(c);
                            if out.len() > self.config.max_queries {
                                return Err(RewriteError::Budget {
                                    resource: "query",
                                    limit: self.config.max_queries,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Replacement atoms for one concept atom, one entry per choice of label
    /// and witness set.
    fn concept_options(
        &self,
        labels: &BTreeSet<ConceptName>,
        x: &Variable,
        warnings: &mut Vec<String>,
    ) -> Vec<Vec<Atom>> {
        if labels.iter().any(ConceptName::is_top) {
            return vec![vec![Atom::concept([ConceptName::top()], x.clone())]];
        }
        let mut out = Vec::new();
        for a in labels {
            let w = self.graph.witness(a, self.config.witness_cap);
            if w.truncated {
                warnings.push(format!(
                    "witness exploration for {a} stopped at {} sets",
                    self.config.witness_cap
                ));
            }
            for set in w.sets {
                // Single-name sets other than {a} are reached through rewr_concept(a).
                if set.len() == 1 && !set.contains(a) && !set.iter().any(ConceptName::is_top) {
                    continue;
                }
                out.push(set.into_iter().collect::<Vec<_>>());
            }
        }
        out.into_iter()
            .map(|names| {
                names
                    .iter()
                    .map(|b| match self.graph.rewr_concept(b) {
                        PathExpr::Node(l) => Atom::concept(l, x.clone()),
                        e => Atom::Path {
                            path: e,
                            src: x.clone(),
                            dst: Variable::new(FRESH_VAR_PREFIX),
                        },
                    })
                    .collect()
            })
            .collect()
    }

    /// Every branch obtained from one saturated query.
    fn expand(&self, q: &C2rpq) -> Result<(Vec<C2rpq>, Vec<String>), RewriteError> {
        let mut warnings = Vec::new();
        let mut fixed: Vec<Atom> = Vec::new();
        let mut choices: Vec<Vec<Vec<Atom>>> = Vec::new();
        for atom in &q.atoms {
            match atom {
                Atom::Concept { labels, var } => choices.push(self.concept_options(labels, var, &mut warnings)),
                other => fixed.push(other.clone()),
            }
        }
        let total = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
        match total {
            Some(t) if t <= self.config.max_queries => {}
            _ => {
                return Err(RewriteError::Budget {
                    resource: "query",
                    limit: self.config.max_queries,
                })
            }
        }
        let roles: BTreeMap<Role, PathExpr> = self.sat_roles(q, &choices);
        let mut out = Vec::new();
        let mut pick = vec![0usize; choices.len()];
        loop {
            let mut atoms = fixed.clone();
            let mut fresh = 0usize;
            for (c, &i) in choices.iter().zip(&pick) {
                for a in &c[i] {
                    atoms.push(match a {
                        Atom::Path { path, src, .. } => {
                            let v = Variable::new(format!("{FRESH_VAR_PREFIX}{fresh}"));
                            fresh += 1;
                            Atom::Path {
                                path: path.clone(),
                                src: src.clone(),
                                dst: v,
                            }
                        }
                        other => other.clone(),
                    });
                }
            }
            let branch = C2rpq::new(q.head.clone(), q.answer_vars.clone(), atoms);
            out.push(branch.map_paths(|p| p.substitute_all(&|r| roles.get(r).cloned())));
            // odometer
            let mut k = 0;
            loop {
                if k == pick.len() {
                    return Ok((out, warnings));
                }
                pick[k] += 1;
                if pick[k] < choices[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
        }
    }

    fn sat_roles(&self, q: &C2rpq, choices: &[Vec<Vec<Atom>>]) -> BTreeMap<Role, PathExpr> {
        let mut used: BTreeSet<Role> = q.roles();
        for c in choices.iter().flatten().flatten() {
            if let Atom::Path { path, .. } = c {
                path.roles(&mut used);
            }
        }
        used.into_iter()
            .map(|r| {
                let e = self.graph.rewrite_role(&r);
                (r, e)
            })
            .collect()
    }

    pub fn rewrite_ncq(&self, q: &C2rpq) -> Result<Rewriting, RewriteError> {
        let mut stats = RewriteStats::default();
        let saturated = self.saturate_query(&q.canonical(), &mut stats)?;
        stats.saturated = saturated.len();
        let expanded = self.config.exec.map(&saturated, |s| self.expand(s));
        let mut set = RewritingSet::new(self.config.prune);
        let mut warnings = self.profile.clone();
        for r in expanded {
            let (branches, w) = r?;
            for wn in w {
                if !warnings.contains(&wn) {
                    warnings.push(wn);
                }
            }
            for b in branches {
                stats.emitted += 1;
                set.add_subseteq(b);
                if set.len() > self.config.max_queries {
                    return Err(RewriteError::Budget {
                        resource: "query",
                        limit: self.config.max_queries,
                    });
                }
            }
        }
        Ok(Rewriting {
            union: set.into_union()?,
            warnings,
            stats,
        })
    }

    pub fn rewrite_atomic(&self, a: &ConceptName) -> Result<Rewriting, RewriteError> {
        let q = C2rpq::new(
            "q",
            vec![Variable::new("x")],
            vec![Atom::concept([a.clone()], Variable::new("x"))],
        );
        self.rewrite_ncq(&q)
    }
}

/// Nonempty subsets in order of size, then lexicographically.
fn subsets_by_size(items: &[Variable]) -> Vec<BTreeSet<Variable>> {
    let n = items.len();
    let mut out: Vec<BTreeSet<Variable>> = (1..(1u64 << n))
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| items[i].clone()).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Rewrites `q` against a normalized TBox.
pub fn rewrite_ncq(q: &C2rpq, tbox: &TBox, config: RewriteConfig) -> Result<Rewriting, RewriteError> {
    Rewriter::new(tbox, config).rewrite_ncq(q)
}

pub fn rewrite_atomic(a: &ConceptName, tbox: &TBox, config: RewriteConfig) -> Result<Rewriting, RewriteError> {
    Rewriter::new(tbox, config).rewrite_atomic(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::load_tbox;
    use crate::query::parse_query;

    fn rewrite(t: &str, q: &str) -> Vec<String> {
        let tbox = load_tbox(t).unwrap();
        let r = rewrite_ncq(&parse_query(q).unwrap(), &tbox, RewriteConfig::default()).unwrap();
        r.union.branches.iter().map(ToString::to_string).collect()
    }

    fn vs(names: &[&str]) -> BTreeSet<Variable> {
        names.iter().map(|n| Variable::new(*n)).collect()
    }

    #[test]
    fn empty_tbox_is_identity() {
        assert_eq!(rewrite("", "q(x) :- A(x)"), vec!["q(x) :- A(x)"]);
        assert_eq!(
            rewrite("", "q(x) :- teaches(x,y), Student(y)"),
            vec!["q(x) :- Student(y), teaches(x,y)"]
        );
    }

    #[test]
    fn clipping_the_teacher_example() {
        let tbox = load_tbox("Teacher <= exists teaches . Student").unwrap();
        let rw = Rewriter::new(&tbox, RewriteConfig::default());
        let q = parse_query("q(x) :- teaches(x,y), Student(y)").unwrap();
        assert_eq!(
            rw.clipping(&q, 0, &vs(&["y"])).unwrap().to_string(),
            "q(x) :- Teacher(x)"
        );
        let q = parse_query("q(x) :- teaches(x,y), Professor(y)").unwrap();
        assert!(rw.clipping(&q, 0, &vs(&["y"])).is_none());
        assert!(rw.clipping(&q, 0, &vs(&["x"])).is_none());
    }

    #[test]
    fn clipping_respects_direction_and_hierarchy() {
        let tbox = load_tbox("A <= exists r . B\nr <= s").unwrap();
        let rw = Rewriter::new(&tbox, RewriteConfig::default());
        let ax = tbox.exists_right().next().unwrap().0;
        let up = parse_query("q(x) :- s(x,y)").unwrap();
        assert_eq!(rw.clipping(&up, ax, &vs(&["y"])).unwrap().to_string(), "q(x) :- A(x)");
        let wrong_way = parse_query("q(x) :- r(y,x)").unwrap();
        assert!(rw.clipping(&wrong_way, ax, &vs(&["y"])).is_none());
        let inverse = parse_query("q(x) :- inv(r)(y,x)").unwrap();
        assert!(rw.clipping(&inverse, ax, &vs(&["y"])).is_some());
        let tbox = load_tbox("A <= exists s . B\nr <= s").unwrap();
        let rw = Rewriter::new(&tbox, RewriteConfig::default());
        let sub = parse_query("q(x) :- r(x,y)").unwrap();
        assert!(rw.clipping(&sub, 0, &vs(&["y"])).is_none());
    }

    #[test]
    fn clipping_merges_attachment_points() {
        let tbox = load_tbox("A <= exists r . B").unwrap();
        let rw = Rewriter::new(&tbox, RewriteConfig::default());
        let q = parse_query("q(x) :- r(x,y), r(z,y), C(z)").unwrap();
        assert_eq!(
            rw.clipping(&q, 0, &vs(&["y"])).unwrap().to_string(),
            "q(x) :- A(x), C(x)"
        );
        let q = parse_query("q(x,z) :- r(x,y), r(z,y)").unwrap();
        assert!(rw.clipping(&q, 0, &vs(&["y"])).is_none());
    }

    #[test]
    fn tests_block_clipping() {
        let tbox = load_tbox("A <= exists r . B").unwrap();
        let rw = Rewriter::new(&tbox, RewriteConfig::default());
        let q = parse_query("q(x) :- r(x,y), age>3(y)").unwrap();
        assert!(rw.clipping(&q, 0, &vs(&["y"])).is_none());
    }

    #[test]
    fn teacher_rewriting_has_two_branches() {
        assert_eq!(
            rewrite(
                "Teacher <= exists teaches . Student",
                "q(x) :- teaches(x,y), Student(y)"
            ),
            vec!["q(x) :- Student(y), teaches(x,y)", "q(x) :- Teacher(x)"]
        );
    }

    #[test]
    fn role_hierarchy_substitution() {
        assert_eq!(
            rewrite("mentors <= teaches", "q(x,y) :- teaches(x,y)"),
            vec!["q(x,y) :- (mentors|teaches)(x,y)"]
        );
    }

    #[test]
    fn atomic_rewritings() {
        let t = load_tbox("B <= A").unwrap();
        let r = rewrite_atomic(&ConceptName::new("A"), &t, RewriteConfig::default()).unwrap();
        assert_eq!(r.union.to_string(), "q(x) :- (A|B)(x)\n");
        let t = load_tbox("exists partOf . Region <= Region").unwrap();
        let r = rewrite_atomic(&ConceptName::new("Region"), &t, RewriteConfig::default()).unwrap();
        assert_eq!(r.union.to_string(), "q(x) :- (partOf*.<Region>)(x,w0)\n");
    }

    #[test]
    fn conjunction_witnesses() {
        assert_eq!(
            rewrite("Student & Employee <= TA", "q(x) :- TA(x)"),
            vec!["q(x) :- Employee(x), Student(x)", "q(x) :- TA(x)"]
        );
    }

    #[test]
    fn budget_is_an_error() {
        let tbox = load_tbox("A <= exists r . B").unwrap();
        let config = RewriteConfig {
            max_clip_attempts: 1,
            ..Default::default()
        };
        let q = parse_query("q(x) :- r(x,y), r(y,z)").unwrap();
        assert!(matches!(
            rewrite_ncq(&q, &tbox, config),
            Err(RewriteError::Budget {
                resource: "clip attempt",
                ..
            })
        ));
    }

    #[test]
    fn subsets_in_size_order() {
        let items: Vec<Variable> = ["a", "b", "c"].iter().map(|s| Variable::new(*s)).collect();
        let s: Vec<Vec<String>> = subsets_by_size(&items)
            .into_iter()
            .map(|s| s.into_iter().map(|v| v.as_str().to_owned()).collect())
            .collect();
        assert_eq!(s[0], vec!["a"]);
        assert_eq!(s[3], vec!["a", "b"]);
        assert_eq!(s[6], vec!["a", "b", "c"]);
    }
}
