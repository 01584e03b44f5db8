//! Seeded random instances: normalized TBoxes, small property graphs and
//! connected NCQs over a shared vocabulary.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dl::{ConceptName, NormalizedAxiom, Role, TBox};
use crate::graph::{PropertyGraph, Props};
use crate::query::{Atom, C2rpq, CompareOp, DataTest, Literal, TestExpr, Variable};

#[derive(Debug, Clone)]
pub struct GenParams {
    pub concepts: usize,
    pub roles: usize,
    pub max_axioms: usize,
    pub max_nodes: usize,
    pub max_atoms: usize,
    pub label_prob: f64,
    pub edge_prob: f64,
    /// Probability that a query atom is a data test.
    pub test_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            concepts: 8,
            roles: 4,
            max_axioms: 12,
            max_nodes: 6,
            max_atoms: 4,
            label_prob: 0.25,
            edge_prob: 0.12,
            test_prob: 0.1,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn concept_names(p: &GenParams) -> Vec<ConceptName> {
    (0..p.concepts)
        .map(|i| ConceptName::new(format!("{}", (b'A' + i as u8) as char)))
        .collect()
}

fn role_names(p: &GenParams) -> Vec<String> {
    ["r", "s", "t", "u", "v", "w"]
        .iter()
        .take(p.roles.clamp(1, 6))
        .map(|s| s.to_string())
        .collect()
}

fn role<R: Rng>(rng: &mut R, p: &GenParams) -> Role {
    let name = role_names(p).choose(rng).unwrap().clone();
    if rng.random_bool(0.25) {
        Role::inverse_of(name)
    } else {
        Role::new(name)
    }
}

fn concept<R: Rng>(rng: &mut R, p: &GenParams) -> ConceptName {
    concept_names(p).choose(rng).unwrap().clone()
}

/// A normalized TBox with between one and `max_axioms` axioms.
pub fn random_tbox<R: Rng>(rng: &mut R, p: &GenParams) -> TBox {
    let n = rng.random_range(1..=p.max_axioms.max(1));
    let mut axioms = Vec::with_capacity(n);
    while axioms.len() < n {
        let ax = match rng.random_range(0..10) {
            0..=2 => {
                let (sub, sup) = (concept(rng, p), concept(rng, p));
                if sub == sup {
                    continue;
                }
                NormalizedAxiom::Atomic { sub, sup }
            }
            3 => {
                let (a, b) = (concept(rng, p), concept(rng, p));
                if a == b {
                    continue;
                }
                let mut conjuncts = vec![a, b];
                conjuncts.sort();
                NormalizedAxiom::Conj {
                    conjuncts,
                    sup: concept(rng, p),
                }
            }
            4..=5 => NormalizedAxiom::ExistsLeft {
                role: role(rng, p),
                filler: if rng.random_bool(0.15) {
                    ConceptName::top()
                } else {
                    concept(rng, p)
                },
                sup: concept(rng, p),
            },
            6..=8 => NormalizedAxiom::ExistsRight {
                sub: concept(rng, p),
                role: role(rng, p),
                filler: concept(rng, p),
            },
            _ => {
                let (sub, sup) = (role(rng, p), role(rng, p));
                if sub.name == sup.name {
                    continue;
                }
                NormalizedAxiom::Role { sub, sup }
            }
        };
        if !axioms.contains(&ax) {
            axioms.push(ax);
        }
    }
    TBox::from_normalized(axioms)
}

/// A graph with one to `max_nodes` nodes `n0, n1, …`; some nodes carry an
/// integer `age` property.
pub fn random_graph<R: Rng>(rng: &mut R, p: &GenParams) -> PropertyGraph {
    let n = rng.random_range(1..=p.max_nodes.max(1));
    let names = concept_names(p);
    let mut g = PropertyGraph::new();
    for i in 0..n {
        let labels: Vec<ConceptName> = names
            .iter()
            .filter(|_| rng.random_bool(p.label_prob))
            .cloned()
            .collect();
        let mut props = Props::new();
        if rng.random_bool(0.5) {
            props.insert("age".into(), Literal::Int(rng.random_range(0..60)));
        }
        g.add_node(format!("n{i}"), labels, props).expect("fresh ids");
    }
    let roles = role_names(p);
    for s in 0..n {
        for d in 0..n {
            for r in &roles {
                if rng.random_bool(p.edge_prob) {
                    g.add_edge(s, &Role::new(r.clone()), d);
                }
            }
        }
    }
    g
}

/// A connected NCQ with answer variable `x` and one to `max_atoms` atoms.
pub fn random_ncq<R: Rng>(rng: &mut R, p: &GenParams) -> C2rpq {
    let n = rng.random_range(1..=p.max_atoms.max(1));
    let x = Variable::new("x");
    let mut vars = vec![x.clone()];
    let mut atoms = Vec::with_capacity(n);
    for _ in 0..n {
        let at = vars.choose(rng).unwrap().clone();
        let kind = rng.random_range(0.0..1.0);
        if kind < p.test_prob {
            atoms.push(Atom::Test {
                test: TestExpr::Data(DataTest {
                    key: "age".into(),
                    op: [CompareOp::Gt, CompareOp::Le][rng.random_range(0..2)],
                    value: Literal::Int(rng.random_range(0..60)),
                }),
                vars: vec![at],
            });
        } else if kind < 0.55 {
            let labels = if rng.random_bool(0.15) {
                vec![concept(rng, p), concept(rng, p)]
            } else {
                vec![concept(rng, p)]
            };
            atoms.push(Atom::concept(labels, at));
        } else {
            let other = if rng.random_bool(0.2) {
                vars.choose(rng).unwrap().clone()
            } else {
                let v = Variable::new(format!("y{}", vars.len()));
                vars.push(v.clone());
                v
            };
            let (src, dst) = if rng.random_bool(0.5) { (at, other) } else { (other, at) };
            atoms.push(Atom::role(
                Role::new(role_names(p).choose(rng).unwrap().clone()),
                src,
                dst,
            ));
        }
    }
    C2rpq::new("q", vec![x], atoms)
}

/// One (TBox, graph, query) triple per seed.
pub fn instance(seed: u64, p: &GenParams) -> (TBox, PropertyGraph, C2rpq) {
    let mut r = rng(seed);
    let t = random_tbox(&mut r, p);
    let g = random_graph(&mut r, p);
    let q = random_ncq(&mut r, p);
    (t, g, q)
}

/// Concept-name frequencies, handy when reporting a corpus.
pub fn label_histogram(g: &PropertyGraph) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for n in g.nodes() {
        for l in g.labels(n) {
            *out.entry(l.as_str().to_owned()).or_insert(0) += 1;
        }
    }
    out
}
