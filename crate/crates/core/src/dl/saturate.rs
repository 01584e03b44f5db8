//! TBox-level consequences needed before building the dependency graph.
//!
//! An existential axiom `A ⊑ ∃p.B` together with `∃q.C ⊑ D` (where `p ⊑* q`
//! and the anonymous `p`-successor is a `C`) entails `A ⊑ D`, an inclusion
//! that neither the dependency graph nor clipping would see on their own.
//! [`saturate`] computes, for every concept, the set of concept names an
//! element of that concept is entailed to have, and for every existential
//! axiom the type of its anonymous witness. Missing atomic inclusions are
//! appended to the normalized axioms.
//!
//! [`check_profile`] reports TBox shapes for which the rewriting is not
//! guaranteed to be complete.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::{ConceptName, NormalizedAxiom, Role, TBox};

/// Reflexive-transitive closure of the role inclusions, closed under
/// inversion.
#[derive(Debug, Clone, Default)]
pub struct RoleHierarchy {
    /// role -> every role it is included in (itself excluded)
    supers: BTreeMap<Role, BTreeSet<Role>>,
}

impl RoleHierarchy {
    pub fn new(tbox: &TBox) -> Self {
        let mut direct: BTreeMap<Role, BTreeSet<Role>> = BTreeMap::new();
        for ax in &tbox.normalized {
            if let NormalizedAxiom::Role { sub, sup } = ax {
                direct.entry(sub.clone()).or_default().insert(sup.clone());
                direct.entry(sub.inv()).or_default().insert(sup.inv());
            }
        }
        let mut supers = BTreeMap::new();
        for start in direct.keys() {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<&Role> = VecDeque::from([start]);
            while let Some(r) = queue.pop_front() {
                for s in direct.get(r).into_iter().flatten() {
                    if s != start && seen.insert(s.clone()) {
                        queue.push_back(s);
                    }
                }
            }
            supers.insert(start.clone(), seen);
        }
        RoleHierarchy { supers }
    }

    /// `sub ⊑* sup`
    pub fn is_sub(&self, sub: &Role, sup: &Role) -> bool {
        sub == sup || self.supers.get(sub).is_some_and(|s| s.contains(sup))
    }

    /// Every `p` with `p ⊑* role`, including `role` itself, sorted.
    pub fn subroles(&self, role: &Role) -> BTreeSet<Role> {
        let mut out: BTreeSet<Role> = self
            .supers
            .iter()
            .filter(|(_, sups)| sups.contains(role))
            .map(|(r, _)| r.clone())
            .collect();
        out.insert(role.clone());
        out
    }
}

/// Result of [`saturate`].
#[derive(Debug, Clone)]
pub struct Saturation {
    pub roles: RoleHierarchy,
    /// Concept names entailed for an element known to be in the key concept.
    pub types: BTreeMap<ConceptName, BTreeSet<ConceptName>>,
    /// Type of the anonymous witness, keyed by the index of the
    /// `A ⊑ ∃p.B` axiom in the normalized sequence.
    pub witness_types: BTreeMap<usize, BTreeSet<ConceptName>>,
    /// Entailed atomic inclusions not already reachable through the
    /// source atomic inclusions.
    pub derived: Vec<NormalizedAxiom>,
}

impl Saturation {
    /// The normalized TBox extended with the derived inclusions.
    pub fn tbox(&self, base: &TBox) -> TBox {
        let mut t = base.clone();
        t.normalized.extend(self.derived.iter().cloned());
        t
    }

    pub fn type_of(&self, c: &ConceptName) -> BTreeSet<ConceptName> {
        self.types.get(c).cloned().unwrap_or_else(|| {
            let mut s = self.types.get(&ConceptName::top()).cloned().unwrap_or_default();
            s.insert(c.clone());
            s
        })
    }
}

struct Indexed<'a> {
    atomic: Vec<(&'a ConceptName, &'a ConceptName)>,
    conj: Vec<(&'a [ConceptName], &'a ConceptName)>,
    ex_left: Vec<(&'a Role, &'a ConceptName, &'a ConceptName)>,
    ex_right: Vec<(usize, &'a ConceptName, &'a Role, &'a ConceptName)>,
}

impl<'a> Indexed<'a> {
    fn new(tbox: &'a TBox) -> Self {
        let mut ix = Indexed {
            atomic: vec![],
            conj: vec![],
            ex_left: vec![],
            ex_right: vec![],
        };
        for (i, ax) in tbox.normalized.iter().enumerate() {
            match ax {
                NormalizedAxiom::Atomic { sub, sup } => ix.atomic.push((sub, sup)),
                NormalizedAxiom::Conj { conjuncts, sup } => ix.conj.push((conjuncts, sup)),
                NormalizedAxiom::ExistsLeft { role, filler, sup } => ix.ex_left.push((role, filler, sup)),
                NormalizedAxiom::ExistsRight { sub, role, filler } => ix.ex_right.push((i, sub, role, filler)),
                NormalizedAxiom::Role { .. } => {}
            }
        }
        ix
    }
}

/// Computes concept types and witness types by a joint fixpoint.
pub fn saturate(tbox: &TBox) -> Saturation {
    let roles = RoleHierarchy::new(tbox);
    let ix = Indexed::new(tbox);
    let top = ConceptName::top();

    let mut concepts: BTreeSet<ConceptName> = tbox.concept_names().into_iter().collect();
    concepts.insert(top.clone());

    let seed = |c: &ConceptName| BTreeSet::from([c.clone(), top.clone()]);
    let mut types: BTreeMap<ConceptName, BTreeSet<ConceptName>> =
        concepts.iter().map(|c| (c.clone(), seed(c))).collect();
    let mut wits: BTreeMap<usize, BTreeSet<ConceptName>> =
        ix.ex_right.iter().map(|&(i, _, _, filler)| (i, seed(filler))).collect();

    // One round of local rules on `set`; true when something was added.
    let close = |set: &mut BTreeSet<ConceptName>, wits: &BTreeMap<usize, BTreeSet<ConceptName>>| {
        let mut grew = false;
        loop {
            let mut add = Vec::new();
            for &(sub, sup) in &ix.atomic {
                if set.contains(sub) && !set.contains(sup) {
                    add.push(sup.clone());
                }
            }
            for &(conjuncts, sup) in &ix.conj {
                if !set.contains(sup) && conjuncts.iter().all(|c| set.contains(c)) {
                    add.push(sup.clone());
                }
            }
            for &(i, sub, p, _) in &ix.ex_right {
                if !set.contains(sub) {
                    continue;
                }
                let child = &wits[&i];
                for &(q, filler, sup) in &ix.ex_left {
                    if !set.contains(sup) && roles.is_sub(p, q) && child.contains(filler) {
                        add.push(sup.clone());
                    }
                }
            }
            if add.is_empty() {
                return grew;
            }
            grew = true;
            set.extend(add);
        }
    };

    loop {
        let mut changed = false;
        for c in &concepts {
            let mut set = types[c].clone();
            if close(&mut set, &wits) {
                types.insert(c.clone(), set);
                changed = true;
            }
        }
        for &(i, parent, p, _) in &ix.ex_right {
            let mut set = wits[&i].clone();
            let parent_type = &types[parent];
            let mut grew = false;
            for &(q, filler, sup) in &ix.ex_left {
                if !set.contains(sup) && roles.is_sub(&p.inv(), q) && parent_type.contains(filler) {
                    set.insert(sup.clone());
                    grew = true;
                }
            }
            grew |= close(&mut set, &wits);
            if grew {
                wits.insert(i, set);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Atomic inclusions already reachable through source atomic axioms.
    let mut eps_reach: BTreeMap<&ConceptName, BTreeSet<&ConceptName>> = BTreeMap::new();
    for c in &concepts {
        let mut seen = BTreeSet::from([c, &top]);
        let mut queue = VecDeque::from([c, &top]);
        while let Some(x) = queue.pop_front() {
            for &(sub, sup) in &ix.atomic {
                if sub == x && seen.insert(sup) {
                    queue.push_back(sup);
                }
            }
        }
        eps_reach.insert(c, seen);
    }
    let mut derived = Vec::new();
    for (c, ty) in &types {
        for d in ty {
            if !eps_reach[c].contains(d) {
                derived.push(NormalizedAxiom::Atomic {
                    sub: c.clone(),
                    sup: d.clone(),
                });
            }
        }
    }

    Saturation {
        roles,
        types,
        witness_types: wits,
        derived,
    }
}

/// A TBox shape outside the profile on which rewriting is complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProfileWarning {
    /// The anonymous witness of an existential axiom can acquire a concept
    /// through an inverse role from a concept its parent is not entailed
    /// to have.
    ParentDependentWitness { axiom: usize, via: usize },
    /// A conjunction axiom feeds the filler of a left existential, so its
    /// head may be derived at a neighbour through a conjunction.
    ConjunctionUnderRole { conjunction: usize, existential: usize },
}

impl fmt::Display for ProfileWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileWarning::ParentDependentWitness { axiom, via } => write!(
                f,
                "witness of axiom {axiom} depends on its parent's concepts through axiom {via}"
            ),
            ProfileWarning::ConjunctionUnderRole {
                conjunction,
                existential,
            } => write!(
                f,
                "conjunction axiom {conjunction} feeds the filler of existential axiom {existential}"
            ),
        }
    }
}

/// Lists the interactions for which the rewriter may miss answers. An empty
/// result means the TBox is in the completeness profile.
pub fn check_profile(tbox: &TBox, sat: &Saturation) -> Vec<ProfileWarning> {
    let mut warnings = Vec::new();
    let normalized = &tbox.normalized;
    let top = ConceptName::top();

    for (i, ax) in normalized.iter().enumerate() {
        let NormalizedAxiom::ExistsRight { sub, role, .. } = ax else {
            continue;
        };
        let parent_type = sat.type_of(sub);
        for (j, other) in normalized.iter().enumerate() {
            if let NormalizedAxiom::ExistsLeft { role: q, filler, .. } = other {
                if sat.roles.is_sub(&role.inv(), q) && *filler != top && !parent_type.contains(filler) {
                    warnings.push(ProfileWarning::ParentDependentWitness { axiom: i, via: j });
                }
            }
        }
    }

    // Backward closure from each left-existential filler over atomic
    // (source and derived) and left-existential edges.
    let mut atomic: Vec<(&ConceptName, &ConceptName)> = Vec::new();
    let mut left: Vec<(&ConceptName, &ConceptName)> = Vec::new();
    for ax in normalized.iter().chain(sat.derived.iter()) {
        match ax {
            NormalizedAxiom::Atomic { sub, sup } => atomic.push((sub, sup)),
            NormalizedAxiom::ExistsLeft { filler, sup, .. } => left.push((filler, sup)),
            _ => {}
        }
    }
    for (j, ax) in normalized.iter().enumerate() {
        let NormalizedAxiom::ExistsLeft { filler, .. } = ax else {
            continue;
        };
        let mut seen = BTreeSet::from([filler]);
        let mut queue = VecDeque::from([filler]);
        while let Some(x) = queue.pop_front() {
            for &(from, to) in atomic.iter().chain(left.iter()) {
                if to == x && seen.insert(from) {
                    queue.push_back(from);
                }
            }
        }
        for (k, other) in normalized.iter().enumerate() {
            if let NormalizedAxiom::Conj { sup, .. } = other {
                if seen.contains(sup) {
                    warnings.push(ProfileWarning::ConjunctionUnderRole {
                        conjunction: k,
                        existential: j,
                    });
                }
            }
        }
    }
    warnings
}
