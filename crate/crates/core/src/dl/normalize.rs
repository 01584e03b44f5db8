use super::{Axiom, ConceptExpr, ConceptName, NormalizedAxiom, TBox};

/// Prefix reserved for concept names introduced by normalization.
pub const FRESH_PREFIX: &str = "__nf";

struct Fresh {
    next: usize,
}

impl Fresh {
    fn name(&mut self) -> ConceptName {
        let n = ConceptName::new(format!("{FRESH_PREFIX}{}", self.next));
        self.next += 1;
        n
    }
}

fn basic(c: &ConceptExpr) -> Option<ConceptName> {
    match c {
        ConceptExpr::Top => Some(ConceptName::top()),
        ConceptExpr::Atom(a) => Some(a.clone()),
        _ => None,
    }
}

fn push(out: &mut Vec<NormalizedAxiom>, ax: NormalizedAxiom) {
    if !out.contains(&ax) {
        out.push(ax);
    }
}

fn inclusion(lhs: &ConceptExpr, rhs: &ConceptExpr, out: &mut Vec<NormalizedAxiom>, fresh: &mut Fresh) {
    match rhs {
        ConceptExpr::Top => {}
        ConceptExpr::And(parts) => {
            for part in parts {
                inclusion(lhs, part, out, fresh);
            }
        }
        ConceptExpr::Exists(role, filler) => {
            let Some(sub) = basic(lhs) else {
                let n = fresh.name();
                inclusion(lhs, &ConceptExpr::Atom(n.clone()), out, fresh);
                inclusion(&ConceptExpr::Atom(n), rhs, out, fresh);
                return;
            };
            match basic(filler) {
                Some(f) => push(
                    out,
                    NormalizedAxiom::ExistsRight {
                        sub,
                        role: role.clone(),
                        filler: f,
                    },
                ),
                None => {
                    let n = fresh.name();
                    push(
                        out,
                        NormalizedAxiom::ExistsRight {
                            sub,
                            role: role.clone(),
                            filler: n.clone(),
                        },
                    );
                    inclusion(&ConceptExpr::Atom(n), filler, out, fresh);
                }
            }
        }
        ConceptExpr::Atom(sup) => left(lhs, sup, out, fresh),
        // Rejected by validate_fragment.
        ConceptExpr::Not(_) => {}
    }
}

fn left(lhs: &ConceptExpr, sup: &ConceptName, out: &mut Vec<NormalizedAxiom>, fresh: &mut Fresh) {
    match lhs {
        ConceptExpr::Top | ConceptExpr::Atom(_) => {
            let sub = basic(lhs).unwrap();
            if &sub != sup {
                push(out, NormalizedAxiom::Atomic { sub, sup: sup.clone() });
            }
        }
        ConceptExpr::Exists(role, filler) => {
            let filler = match basic(filler) {
                Some(f) => f,
                None => {
                    let n = fresh.name();
                    inclusion(filler, &ConceptExpr::Atom(n.clone()), out, fresh);
                    n
                }
            };
            push(
                out,
                NormalizedAxiom::ExistsLeft {
                    role: role.clone(),
                    filler,
                    sup: sup.clone(),
                },
            );
        }
        ConceptExpr::And(parts) => {
            let mut names = Vec::new();
            for part in parts {
                match basic(part) {
                    Some(n) if n.is_top() => {}
                    Some(n) => names.push(n),
                    None => {
                        let n = fresh.name();
                        inclusion(part, &ConceptExpr::Atom(n.clone()), out, fresh);
                        names.push(n);
                    }
                }
            }
            names.sort();
            names.dedup();
            match names.len() {
                0 => left(&ConceptExpr::Top, sup, out, fresh),
                1 => left(&ConceptExpr::Atom(names.pop().unwrap()), sup, out, fresh),
                _ => {
                    if !names.contains(sup) {
                        push(
                            out,
                            NormalizedAxiom::Conj {
                                conjuncts: names,
                                sup: sup.clone(),
                            },
                        );
                    }
                }
            }
        }
        ConceptExpr::Not(_) => {}
    }
}

/// Brings every source axiom into normal form. Fresh names `__nf0, __nf1, …`
/// are allocated in source order, so the result is reproducible.
///
/// The caller is expected to have run
/// [`validate_fragment`](super::validate_fragment); negated concepts are
/// dropped silently here.
pub fn normalize(tbox: &TBox) -> TBox {
    let start = tbox
        .axioms
        .iter()
        .flat_map(|ax| match ax {
            Axiom::ConceptInclusion { lhs, rhs } => {
                let mut names = Vec::new();
                collect_fresh(lhs, &mut names);
                collect_fresh(rhs, &mut names);
                names
            }
            Axiom::RoleInclusion { .. } => Vec::new(),
        })
        .max()
        .map_or(0, |m| m + 1);
    let mut fresh = Fresh { next: start };
    let mut out = Vec::new();
    for ax in &tbox.axioms {
        match ax {
            Axiom::ConceptInclusion { lhs, rhs } => inclusion(lhs, rhs, &mut out, &mut fresh),
            Axiom::RoleInclusion { sub, sup } => push(
                &mut out,
                NormalizedAxiom::Role {
                    sub: sub.clone(),
                    sup: sup.clone(),
                },
            ),
        }
    }
    TBox {
        axioms: tbox.axioms.clone(),
        normalized: out,
    }
}

fn collect_fresh(c: &ConceptExpr, out: &mut Vec<usize>) {
    match c {
        ConceptExpr::Atom(a) => {
            if let Some(n) = a.as_str().strip_prefix(FRESH_PREFIX).and_then(|s| s.parse().ok()) {
                out.push(n);
            }
        }
        ConceptExpr::Exists(_, f) | ConceptExpr::Not(f) => collect_fresh(f, out),
        ConceptExpr::And(cs) => cs.iter().for_each(|c| collect_fresh(c, out)),
        ConceptExpr::Top => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::{parse_tbox, Role};

    fn norm(text: &str) -> Vec<NormalizedAxiom> {
        normalize(&parse_tbox(text).unwrap()).normalized
    }

    fn c(s: &str) -> ConceptName {
        ConceptName::new(s)
    }

    #[test]
    fn nested_filler_on_the_right() {
        assert_eq!(
            norm("A <= exists r . (B & C)"),
            vec![
                NormalizedAxiom::ExistsRight {
                    sub: c("A"),
                    role: Role::new("r"),
                    filler: c("__nf0")
                },
                NormalizedAxiom::Atomic {
                    sub: c("__nf0"),
                    sup: c("B")
                },
                NormalizedAxiom::Atomic {
                    sub: c("__nf0"),
                    sup: c("C")
                },
            ]
        );
    }

    #[test]
    fn atomic_is_a_fixpoint() {
        assert_eq!(
            norm("A <= B"),
            vec![NormalizedAxiom::Atomic {
                sub: c("A"),
                sup: c("B")
            }]
        );
    }

    #[test]
    fn nested_existential_on_the_left() {
        assert_eq!(
            norm("exists r . exists s . B <= A"),
            vec![
                NormalizedAxiom::ExistsLeft {
                    role: Role::new("s"),
                    filler: c("B"),
                    sup: c("__nf0")
                },
                NormalizedAxiom::ExistsLeft {
                    role: Role::new("r"),
                    filler: c("__nf0"),
                    sup: c("A")
                },
            ]
        );
    }

    #[test]
    fn complex_both_sides() {
        let n = norm("exists r . A <= exists s . B");
        assert_eq!(
            n,
            vec![
                NormalizedAxiom::ExistsLeft {
                    role: Role::new("r"),
                    filler: c("A"),
                    sup: c("__nf0")
                },
                NormalizedAxiom::ExistsRight {
                    sub: c("__nf0"),
                    role: Role::new("s"),
                    filler: c("B")
                },
            ]
        );
    }

    #[test]
    fn conjunction_with_complex_conjunct() {
        let n = norm("A & exists r . B & top <= C");
        assert_eq!(
            n,
            vec![
                NormalizedAxiom::ExistsLeft {
                    role: Role::new("r"),
                    filler: c("B"),
                    sup: c("__nf0")
                },
                NormalizedAxiom::Conj {
                    conjuncts: vec![c("A"), c("__nf0")],
                    sup: c("C")
                },
            ]
        );
    }

    #[test]
    fn top_on_either_side() {
        assert_eq!(
            norm("top <= A\nB <= top\nexists r . top <= C"),
            vec![
                NormalizedAxiom::Atomic {
                    sub: ConceptName::top(),
                    sup: c("A")
                },
                NormalizedAxiom::ExistsLeft {
                    role: Role::new("r"),
                    filler: ConceptName::top(),
                    sup: c("C")
                },
            ]
        );
    }

    #[test]
    fn idempotent_on_normalized_sequence() {
        let once = normalize(
            &parse_tbox(
                "A <= exists r . (B & exists s . C)\nexists inv(r) . (D & E) <= F\nG & H <= exists t . top\np <= q",
            )
            .unwrap(),
        );
        let twice = normalize(&TBox::from_normalized(once.normalized.clone()));
        assert_eq!(once.normalized, twice.normalized);
    }

    #[test]
    fn fresh_names_do_not_collide_with_existing_ones() {
        let base = normalize(&parse_tbox("A <= exists r . (B & C)").unwrap());
        let mut axioms = base.normalized.iter().map(|a| a.to_axiom()).collect::<Vec<_>>();
        axioms.extend(parse_tbox("D <= exists s . (E & F)").unwrap().axioms);
        let n = normalize(&TBox::new(axioms));
        assert!(n.normalized.iter().any(|a| matches!(a,
            NormalizedAxiom::ExistsRight { filler, .. } if filler.as_str() == "__nf1")));
    }
}
