//! Bounded restricted chase, used as a certain-answer oracle.

use crate::dl::{ConceptName, NormalizedAxiom, Role, TBox};
use crate::graph::{eval_query, Answers, NodeId, PropertyGraph, Props, ANON_PREFIX};
use crate::query::C2rpq;

/// A property graph closed under the TBox, with anonymous nodes up to the
/// given generation depth.
#[derive(Debug, Clone)]
pub struct ChasedGraph {
    pub graph: PropertyGraph,
    pub depth: usize,
}

fn anon_id(parent: &str, axiom: usize) -> String {
    let stem = parent.strip_prefix(ANON_PREFIX).unwrap_or(parent);
    format!("{ANON_PREFIX}{stem}/{axiom}")
}

fn has_successor(g: &PropertyGraph, v: NodeId, role: &Role, filler: &ConceptName) -> bool {
    g.successors(v, role).any(|w| g.has_label(w, filler))
}

/// Applies every non-generating rule until nothing changes.
fn close(g: &mut PropertyGraph, axioms: &[NormalizedAxiom]) {
    let mut changed = true;
    while changed {
        changed = false;
        for ax in axioms {
            match ax {
                NormalizedAxiom::Atomic { sub, sup } => {
                    for v in g.nodes() {
                        if g.has_label(v, sub) {
                            changed |= g.add_label(v, sup.clone());
                        }
                    }
                }
                NormalizedAxiom::Conj { conjuncts, sup } => {
                    for v in g.nodes() {
                        if conjuncts.iter().all(|c| g.has_label(v, c)) {
                            changed |= g.add_label(v, sup.clone());
                        }
                    }
                }
                NormalizedAxiom::ExistsLeft { role, filler, sup } => {
                    for v in g.nodes() {
                        if !g.has_label(v, sup) && has_successor(g, v, role, filler) {
                            changed |= g.add_label(v, sup.clone());
                        }
                    }
                }
                NormalizedAxiom::Role { sub, sup } => {
                    let pairs: Vec<(NodeId, NodeId)> = g
                        .nodes()
                        .flat_map(|v| g.successors(v, sub).map(move |w| (v, w)).collect::<Vec<_>>())
                        .collect();
                    for (v, w) in pairs {
                        changed |= g.add_edge(v, sup, w);
                    }
                }
                NormalizedAxiom::ExistsRight { .. } => {}
            }
        }
    }
}

/// Chases `g` with the normalized axioms of `tbox`.
///
/// Each round closes the graph under the non-generating rules and then lets
/// every `A ⊑ ∃p.B` whose subject lacks a `p`-successor in `B` create one
/// anonymous node `_:<parent>/<axiom-index>`. Nodes more than `depth`
/// generations away from the input graph are never created.
pub fn chase(g: &PropertyGraph, tbox: &TBox, depth: usize) -> ChasedGraph {
    let mut g = g.clone();
    let mut gen: Vec<usize> = vec![0; g.node_count()];
    loop {
        close(&mut g, &tbox.normalized);
        let mut created = false;
        for v in 0..g.node_count() {
            if gen[v] >= depth {
                continue;
            }
            for (i, ax) in tbox.normalized.iter().enumerate() {
                let NormalizedAxiom::ExistsRight { sub, role, filler } = ax else {
                    continue;
                };
                if !g.has_label(v, sub) || has_successor(&g, v, role, filler) {
                    continue;
                }
                let id = anon_id(g.id(v), i);
                let w = match g.node(&id) {
                    Some(w) => w,
                    None => {
                        let w = g
                            .add_node(id, [filler.clone()], Props::new())
                            .expect("anonymous ids are unique per (node, axiom)");
                        gen.push(gen[v] + 1);
                        w
                    }
                };
                g.add_label(w, filler.clone());
                g.add_edge(v, role, w);
                created = true;
            }
        }
        if !created {
            break;
        }
    }
    ChasedGraph { graph: g, depth }
}

/// Answers of `q` over the chased graph that mention only input nodes.
pub fn certain_answers(q: &C2rpq, g: &PropertyGraph, tbox: &TBox, depth: usize) -> Answers {
    let chased = chase(g, tbox, depth);
    eval_query(q, &chased.graph)
        .into_iter()
        .filter(|t| t.iter().all(|id| !id.starts_with(ANON_PREFIX)))
        .collect()
}
