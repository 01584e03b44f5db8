use std::collections::{BTreeMap, HashSet};

use super::{Atom, C2rpq, QueryError, Uc2rpq, Variable};

/// Whether `⟦q⟧ ⊆ ⟦q2⟧` follows from a homomorphism that maps every atom of
/// `q2` onto an atom of `q` carrying at least the same information, fixing
/// answer variables position by position.
///
/// Concept atoms may map onto atoms with fewer alternatives, path atoms onto
/// syntactically equal paths (or the inverse path with swapped endpoints),
/// test atoms onto equal tests. This is sound but not complete for C2RPQ
/// containment.
pub fn contains_structurally(q: &C2rpq, q2: &C2rpq) -> bool {
    let (general, specific) = (q2, q);
    if general.arity() != specific.arity() {
        return false;
    }
    let mut map: BTreeMap<&Variable, &Variable> = BTreeMap::new();
    for (a, b) in general.answer_vars.iter().zip(&specific.answer_vars) {
        if let Some(prev) = map.insert(a, b) {
            if prev != b {
                return false;
            }
        }
    }
    let mut atoms: Vec<&Atom> = general
        .atoms
        .iter()
        .filter(|a| !matches!(a, Atom::Concept { labels, .. } if labels.iter().any(|l| l.is_top())))
        .collect();
    // Path atoms first: they bind two variables and prune early.
    atoms.sort_by_key(|a| match a {
        Atom::Path { .. } => 0,
        Atom::Test { .. } => 1,
        Atom::Concept { .. } => 2,
    });
    extend(&atoms, specific, &mut map)
}

fn bind<'a>(
    map: &mut BTreeMap<&'a Variable, &'a Variable>,
    pairs: &[(&'a Variable, &'a Variable)],
) -> Option<Vec<&'a Variable>> {
    let mut added = Vec::new();
    for &(from, to) in pairs {
        match map.get(from) {
            Some(&cur) if cur != to => {
                for v in added {
                    map.remove(v);
                }
                return None;
            }
            Some(_) => {}
            None => {
                map.insert(from, to);
                added.push(from);
            }
        }
    }
    Some(added)
}

fn extend<'a>(atoms: &[&'a Atom], specific: &'a C2rpq, map: &mut BTreeMap<&'a Variable, &'a Variable>) -> bool {
    let Some((first, rest)) = atoms.split_first() else {
        return true;
    };
    for target in &specific.atoms {
        let pairs: Vec<Vec<(&Variable, &Variable)>> = match (*first, target) {
            (Atom::Concept { labels, var }, Atom::Concept { labels: l2, var: v2 }) if l2.is_subset(labels) => {
                vec![vec![(var, v2)]]
            }
            (
                Atom::Path { path, src, dst },
                Atom::Path {
                    path: p2,
                    src: s2,
                    dst: d2,
                },
            ) => {
                let mut out = Vec::new();
                if path == p2 {
                    out.push(vec![(src, s2), (dst, d2)]);
                }
                if path.inverse() == *p2 {
                    out.push(vec![(src, d2), (dst, s2)]);
                }
                out
            }
            (Atom::Test { test, vars }, Atom::Test { test: t2, vars: v2 }) if test == t2 && vars.len() == v2.len() => {
                vec![vars.iter().zip(v2).collect()]
            }
            _ => Vec::new(),
        };
        for p in pairs {
            if let Some(added) = bind(map, &p) {
                if extend(rest, specific, map) {
                    return true;
                }
                for v in added {
                    map.remove(v);
                }
            }
        }
    }
    false
}

/// A set of C2RPQs kept free of structurally redundant members.
///
/// With pruning on, inserting a query that is contained in a member is a
/// no-op and inserting one that contains members evicts them. With pruning
/// off only exact duplicates are dropped.
#[derive(Debug, Clone)]
pub struct RewritingSet {
    queries: Vec<C2rpq>,
    seen: HashSet<String>,
    prune: bool,
}

impl Default for RewritingSet {
    fn default() -> Self {
        RewritingSet::new(true)
    }
}

impl RewritingSet {
    pub fn new(prune: bool) -> Self {
        RewritingSet {
            queries: Vec::new(),
            seen: HashSet::new(),
            prune,
        }
    }

    /// Inserts `q`; returns whether the set changed.
    pub fn add_subseteq(&mut self, q: C2rpq) -> bool {
        let key = q.to_string();
        if self.seen.contains(&key) {
            return false;
        }
        if self.prune {
            if self.queries.iter().any(|m| contains_structurally(&q, m)) {
                return false;
            }
            let before = self.queries.len();
            self.queries.retain(|m| !contains_structurally(m, &q));
            if self.queries.len() != before {
                self.seen = self.queries.iter().map(C2rpq::to_string).collect();
            }
        }
        self.seen.insert(key);
        self.queries.push(q);
        true
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &C2rpq> {
        self.queries.iter()
    }

    pub fn into_union(self) -> Result<Uc2rpq, QueryError> {
        Uc2rpq::new(self.queries)
    }
}

impl Extend<C2rpq> for RewritingSet {
    fn extend<T: IntoIterator<Item = C2rpq>>(&mut self, iter: T) {
        for q in iter {
            self.add_subseteq(q);
        }
    }
}
