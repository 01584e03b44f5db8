//! Description-logic TBoxes for the tailored ELHI fragment.
//!
//! Concepts are built from `top`, concept names, existential restrictions
//! over (possibly inverted) roles and conjunction. Role inclusions provide
//! the hierarchy. Everything the rewriter consumes goes through
//! [`normalize`] first, which brings the axioms into five normal forms.

mod normalize;
mod parse;
pub mod saturate;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use normalize::{normalize, FRESH_PREFIX};
pub use parse::{parse_tbox, ParseError};
pub use saturate::{check_profile, saturate, ProfileWarning, Saturation};

/// Name of the universal concept.
pub const TOP: &str = "top";

/// A concept name. `top` is the universal concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ConceptName(String);

impl ConceptName {
    pub fn new(name: impl Into<String>) -> Self {
        ConceptName(name.into())
    }

    pub fn top() -> Self {
        ConceptName(TOP.to_string())
    }

    pub fn is_top(&self) -> bool {
        self.0 == TOP
    }

    pub fn is_fresh(&self) -> bool {
        self.0.starts_with(FRESH_PREFIX)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConceptName {
    fn from(s: &str) -> Self {
        ConceptName::new(s)
    }
}

/// A role name, optionally inverted. Inverting twice yields the original
/// role, so a `Role` never wraps another `Role`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Role {
    pub name: String,
    pub inverted: bool,
}

impl Role {
    pub fn new(name: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            inverted: false,
        }
    }

    pub fn inverse_of(name: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            inverted: true,
        }
    }

    pub fn inv(&self) -> Self {
        Role {
            name: self.name.clone(),
            inverted: !self.inverted,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "inv({})", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

impl From<&str> for Role {
    fn from(s: &str) -> Self {
        Role::new(s)
    }
}

/// Concept expressions as they appear in source axioms.
///
/// `Not` exists only so that the parser can represent negated concepts and
/// [`validate_fragment`] can reject them with a precise diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConceptExpr {
    Top,
    Atom(ConceptName),
    Exists(Role, Box<ConceptExpr>),
    And(Vec<ConceptExpr>),
    Not(Box<ConceptExpr>),
}

impl ConceptExpr {
    pub fn atom(name: &str) -> Self {
        if name == TOP {
            ConceptExpr::Top
        } else {
            ConceptExpr::Atom(ConceptName::new(name))
        }
    }

    pub fn exists(role: Role, filler: ConceptExpr) -> Self {
        ConceptExpr::Exists(role, Box::new(filler))
    }

    /// Conjunction with flattened, sorted and deduplicated conjuncts, so that
    /// equality is insensitive to associativity and commutativity.
    pub fn and(conjuncts: impl IntoIterator<Item = ConceptExpr>) -> Self {
        let mut flat = Vec::new();
        for c in conjuncts {
            match c {
                ConceptExpr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            ConceptExpr::And(flat)
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            ConceptExpr::Top => f.write_str(TOP),
            ConceptExpr::Atom(a) => write!(f, "{a}"),
            ConceptExpr::Exists(r, c) => {
                if nested {
                    f.write_str("(")?;
                }
                write!(f, "exists {r} . ")?;
                c.fmt_prec(f, true)?;
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            }
            ConceptExpr::And(cs) => {
                if nested {
                    f.write_str("(")?;
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    c.fmt_prec(f, true)?;
                }
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            }
            ConceptExpr::Not(c) => {
                f.write_str("not ")?;
                c.fmt_prec(f, true)
            }
        }
    }
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Axiom {
    ConceptInclusion { lhs: ConceptExpr, rhs: ConceptExpr },
    RoleInclusion { sub: Role, sup: Role },
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::ConceptInclusion { lhs, rhs } => write!(f, "{lhs} <= {rhs}"),
            Axiom::RoleInclusion { sub, sup } => write!(f, "{sub} <= {sup}"),
        }
    }
}

/// Axioms in one of the five normal forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind")]
pub enum NormalizedAxiom {
    /// `sub ⊑ sup`
    Atomic { sub: ConceptName, sup: ConceptName },
    /// `B1 ⊓ … ⊓ Bk ⊑ sup`, k ≥ 2
    Conj {
        conjuncts: Vec<ConceptName>,
        sup: ConceptName,
    },
    /// `∃role.filler ⊑ sup`
    ExistsLeft {
        role: Role,
        filler: ConceptName,
        sup: ConceptName,
    },
    /// `sub ⊑ ∃role.filler`
    ExistsRight {
        sub: ConceptName,
        role: Role,
        filler: ConceptName,
    },
    /// `sub ⊑ sup` over roles
    Role { sub: Role, sup: Role },
}

impl NormalizedAxiom {
    pub fn to_axiom(&self) -> Axiom {
        let c = |n: &ConceptName| ConceptExpr::atom(n.as_str());
        match self {
            NormalizedAxiom::Atomic { sub, sup } => Axiom::ConceptInclusion {
                lhs: c(sub),
                rhs: c(sup),
            },
            NormalizedAxiom::Conj { conjuncts, sup } => Axiom::ConceptInclusion {
                lhs: ConceptExpr::and(conjuncts.iter().map(c)),
                rhs: c(sup),
            },
            NormalizedAxiom::ExistsLeft { role, filler, sup } => Axiom::ConceptInclusion {
                lhs: ConceptExpr::exists(role.clone(), c(filler)),
                rhs: c(sup),
            },
            NormalizedAxiom::ExistsRight { sub, role, filler } => Axiom::ConceptInclusion {
                lhs: c(sub),
                rhs: ConceptExpr::exists(role.clone(), c(filler)),
            },
            NormalizedAxiom::Role { sub, sup } => Axiom::RoleInclusion {
                sub: sub.clone(),
                sup: sup.clone(),
            },
        }
    }

    pub fn concept_names(&self) -> Vec<&ConceptName> {
        match self {
            NormalizedAxiom::Atomic { sub, sup } => vec![sub, sup],
            NormalizedAxiom::Conj { conjuncts, sup } => conjuncts.iter().chain(std::iter::once(sup)).collect(),
            NormalizedAxiom::ExistsLeft { filler, sup, .. } => vec![filler, sup],
            NormalizedAxiom::ExistsRight { sub, filler, .. } => vec![sub, filler],
            NormalizedAxiom::Role { .. } => vec![],
        }
    }

    pub fn roles(&self) -> Vec<&Role> {
        match self {
            NormalizedAxiom::ExistsLeft { role, .. } | NormalizedAxiom::ExistsRight { role, .. } => {
                vec![role]
            }
            NormalizedAxiom::Role { sub, sup } => vec![sub, sup],
            _ => vec![],
        }
    }
}

impl fmt::Display for NormalizedAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_axiom())
    }
}

/// A TBox: source axioms in file order plus, once [`normalize`] has run,
/// their normal forms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TBox {
    pub axioms: Vec<Axiom>,
    pub normalized: Vec<NormalizedAxiom>,
}

impl TBox {
    pub fn new(axioms: Vec<Axiom>) -> Self {
        TBox {
            axioms,
            normalized: Vec::new(),
        }
    }

    /// A TBox whose source axioms are already in normal form.
    pub fn from_normalized(normalized: Vec<NormalizedAxiom>) -> Self {
        TBox {
            axioms: normalized.iter().map(NormalizedAxiom::to_axiom).collect(),
            normalized,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.axioms.is_empty() || !self.normalized.is_empty()
    }

    /// Concept names of the normalized axioms, sorted, without `top`.
    pub fn concept_names(&self) -> Vec<ConceptName> {
        let mut names: Vec<ConceptName> = self
            .normalized
            .iter()
            .flat_map(|ax| ax.concept_names())
            .filter(|c| !c.is_top())
            .cloned()
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Role names (uninverted) of the normalized axioms, sorted.
    pub fn role_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .normalized
            .iter()
            .flat_map(|ax| ax.roles())
            .map(|r| r.name.clone())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn exists_right(&self) -> impl Iterator<Item = (usize, &NormalizedAxiom)> {
        self.normalized
            .iter()
            .enumerate()
            .filter(|(_, ax)| matches!(ax, NormalizedAxiom::ExistsRight { .. }))
    }
}

impl fmt::Display for TBox {
    /// Prints the source axioms in the TBox grammar, one per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ax in &self.axioms {
            writeln!(f, "{ax}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("axiom {index} (`{axiom}`) is outside the supported fragment: {construct}")]
pub struct FragmentViolation {
    pub index: usize,
    pub axiom: String,
    pub construct: String,
}

/// Checks that every source axiom lies in the input fragment. Conjunction is
/// accepted anywhere because normalization recovers it; negation is not.
pub fn validate_fragment(tbox: &TBox) -> Result<(), Vec<FragmentViolation>> {
    fn find_negation(c: &ConceptExpr) -> Option<&ConceptExpr> {
        match c {
            ConceptExpr::Not(_) => Some(c),
            ConceptExpr::Exists(_, inner) => find_negation(inner),
            ConceptExpr::And(cs) => cs.iter().find_map(find_negation),
            ConceptExpr::Top | ConceptExpr::Atom(_) => None,
        }
    }

    let violations: Vec<FragmentViolation> = tbox
        .axioms
        .iter()
        .enumerate()
        .filter_map(|(index, ax)| match ax {
            Axiom::ConceptInclusion { lhs, rhs } => {
                find_negation(lhs)
                    .or_else(|| find_negation(rhs))
                    .map(|neg| FragmentViolation {
                        index,
                        axiom: ax.to_string(),
                        construct: format!("negation `{neg}`"),
                    })
            }
            Axiom::RoleInclusion { .. } => None,
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Parse, validate and normalize in one step.
pub fn load_tbox(text: &str) -> Result<TBox, TBoxError> {
    let tbox = parse_tbox(text)?;
    validate_fragment(&tbox).map_err(TBoxError::Fragment)?;
    Ok(normalize(&tbox))
}

#[derive(Debug, Error)]
pub enum TBoxError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Fragment(Vec<FragmentViolation>),
}
