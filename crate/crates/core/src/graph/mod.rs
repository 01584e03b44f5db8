//! In-memory property graphs and walk-based query evaluation.

mod eval;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Read, Write};
use std::path::Path;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dl::{ConceptName, Role};
use crate::query::Literal;

pub use eval::{eval_path, eval_query, eval_union, eval_union_with, Answers, Relation};

/// Node ids starting with this prefix are reserved for anonymous nodes.
pub const ANON_PREFIX: &str = "_:";

pub type NodeId = usize;
pub type Props = BTreeMap<String, Literal>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("line {line}: edge endpoint `{id}` is not a node")]
    DanglingEdge { line: usize, id: String },
    #[error("node id `{0}` uses the reserved prefix `_:`")]
    ReservedId(String),
    #[error("parallel edges {src} -> {dst} carry conflicting properties")]
    ConflictingEdgeProps { src: String, dst: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropertyGraph {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    labels: Vec<BTreeSet<ConceptName>>,
    props: Vec<Props>,
    out: Vec<BTreeSet<(String, NodeId)>>,
    inc: Vec<BTreeSet<(String, NodeId)>>,
    edge_props: BTreeMap<(NodeId, NodeId), Props>,
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(BTreeSet::len).sum()
    }

    pub fn id(&self, n: NodeId) -> &str {
        &self.ids[n]
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn is_anonymous(&self, n: NodeId) -> bool {
        self.ids[n].starts_with(ANON_PREFIX)
    }

    pub fn labels(&self, n: NodeId) -> &BTreeSet<ConceptName> {
        &self.labels[n]
    }

    /// Every node carries `top` implicitly.
    pub fn has_label(&self, n: NodeId, c: &ConceptName) -> bool {
        c.is_top() || self.labels[n].contains(c)
    }

    pub fn prop(&self, n: NodeId, key: &str) -> Option<&Literal> {
        self.props[n].get(key)
    }

    pub fn props(&self, n: NodeId) -> &Props {
        &self.props[n]
    }

    pub fn edge_prop(&self, src: NodeId, dst: NodeId, key: &str) -> Option<&Literal> {
        self.edge_props.get(&(src, dst)).and_then(|p| p.get(key))
    }

    /// Properties shared by all edges from `src` to `dst`.
    pub fn edge_props(&self, src: NodeId, dst: NodeId) -> Option<&Props> {
        self.edge_props.get(&(src, dst))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.ids.len()
    }

    /// `(src, label, dst)` in node order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, &str, NodeId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, es)| es.iter().map(move |(l, d)| (s, l.as_str(), *d)))
    }

    /// Nodes reachable from `n` by one step along `role`.
    pub fn successors<'a>(&'a self, n: NodeId, role: &'a Role) -> impl Iterator<Item = NodeId> + 'a {
        let adj = if role.inverted { &self.inc[n] } else { &self.out[n] };
        adj.iter().filter(move |(l, _)| *l == role.name).map(|(_, d)| *d)
    }

    pub fn has_edge(&self, src: NodeId, role: &Role, dst: NodeId) -> bool {
        let (s, d) = if role.inverted { (dst, src) } else { (src, dst) };
        self.out[s].contains(&(role.name.clone(), d))
    }

    /// Adds a node; `_:` ids are accepted here so that the chase can name
    /// its anonymous nodes.
    pub fn add_node(
        &mut self,
        id: impl Into<String>,
        labels: impl IntoIterator<Item = ConceptName>,
        props: Props,
    ) -> Result<NodeId, GraphError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        let n = self.ids.len();
        self.index.insert(id.clone(), n);
        self.ids.push(id);
        self.labels.push(labels.into_iter().filter(|c| !c.is_top()).collect());
        self.props.push(props);
        self.out.push(BTreeSet::new());
        self.inc.push(BTreeSet::new());
        Ok(n)
    }

    /// Returns whether the label was new.
    pub fn add_label(&mut self, n: NodeId, c: ConceptName) -> bool {
        !c.is_top() && self.labels[n].insert(c)
    }

    /// Adds `src -role-> dst`, storing inverse roles in the forward
    /// direction. Returns whether the edge was new.
    pub fn add_edge(&mut self, src: NodeId, role: &Role, dst: NodeId) -> bool {
        let (s, d) = if role.inverted { (dst, src) } else { (src, dst) };
        self.inc[d].insert((role.name.clone(), s));
        self.out[s].insert((role.name.clone(), d))
    }

    /// Attaches properties to the `(src, dst)` pair. Keys already present
    /// with another value are rejected.
    pub fn add_edge_props(&mut self, src: NodeId, dst: NodeId, props: Props) -> Result<(), GraphError> {
        if props.is_empty() {
            return Ok(());
        }
        let slot = self.edge_props.entry((src, dst)).or_default();
        for (k, v) in props {
            match slot.get(&k) {
                Some(prev) if *prev != v => {
                    return Err(GraphError::ConflictingEdgeProps {
                        src: self.ids[src].clone(),
                        dst: self.ids[dst].clone(),
                    })
                }
                _ => {
                    slot.insert(k, v);
                }
            }
        }
        Ok(())
    }

    /// JSON-lines form: nodes in insertion order, then edges.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for n in self.nodes() {
            let rec = Record::Node {
                id: self.ids[n].clone(),
                labels: self.labels[n].iter().map(|c| c.as_str().to_owned()).collect(),
                props: self.props[n].iter().map(|(k, v)| (k.clone(), to_json(v))).collect(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?)?;
        }
        for (s, l, d) in self.edges() {
            let props = self
                .edge_props
                .get(&(s, d))
                .map(|p| p.iter().map(|(k, v)| (k.clone(), to_json(v))).collect())
                .unwrap_or_default();
            let rec = Record::Edge {
                src: self.ids[s].clone(),
                label: l.to_owned(),
                dst: self.ids[d].clone(),
                props,
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON output is UTF-8")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Node {
        id: String,
        #[serde(default)]
        labels: Vec<String>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        props: BTreeMap<String, serde_json::Value>,
    },
    Edge {
        src: String,
        label: String,
        dst: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        props: BTreeMap<String, serde_json::Value>,
    },
}

fn to_json(v: &Literal) -> serde_json::Value {
    match v {
        Literal::Int(i) => (*i).into(),
        Literal::Decimal(d) => d.0.into(),
        Literal::Str(s) => s.clone().into(),
    }
}

fn from_json(props: BTreeMap<String, serde_json::Value>, line: usize) -> Result<Props, GraphError> {
    props
        .into_iter()
        .map(|(k, v)| {
            let lit = match &v {
                serde_json::Value::String(s) => Literal::Str(s.clone()),
                serde_json::Value::Number(n) => match n.as_i64() {
                    Some(i) => Literal::Int(i),
                    None => Literal::Decimal(OrderedFloat(n.as_f64().unwrap_or(f64::NAN))),
                },
                other => {
                    return Err(GraphError::Malformed {
                        line,
                        message: format!("property `{k}` has unsupported value {other}"),
                    })
                }
            };
            Ok((k, lit))
        })
        .collect()
}

struct PendingEdge {
    line: usize,
    src: String,
    label: String,
    dst: String,
    props: Props,
}

fn check_label(label: &str, line: usize) -> Result<(), GraphError> {
    let ok =
        label.chars().next().is_some_and(char::is_alphabetic) && label.chars().all(|c| c.is_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(GraphError::Malformed {
            line,
            message: format!("`{label}` is not a valid label"),
        })
    }
}

fn finish(mut g: PropertyGraph, edges: Vec<PendingEdge>) -> Result<PropertyGraph, GraphError> {
    for e in edges {
        let endpoint = |id: &str, g: &PropertyGraph| {
            g.node(id).ok_or_else(|| GraphError::DanglingEdge {
                line: e.line,
                id: id.to_owned(),
            })
        };
        let s = endpoint(&e.src, &g)?;
        let d = endpoint(&e.dst, &g)?;
        check_label(&e.label, e.line)?;
        g.add_edge(s, &Role::new(e.label), d);
        g.add_edge_props(s, d, e.props)?;
    }
    Ok(g)
}

fn add_loaded_node(
    g: &mut PropertyGraph,
    id: String,
    labels: Vec<String>,
    props: Props,
    line: usize,
) -> Result<(), GraphError> {
    if id.starts_with(ANON_PREFIX) {
        return Err(GraphError::ReservedId(id));
    }
    for l in &labels {
        check_label(l, line)?;
    }
    g.add_node(id, labels.into_iter().map(ConceptName::new), props)?;
    Ok(())
}

/// Reads the JSON-lines format. Edges may refer to nodes declared later.
pub fn load_jsonl<R: BufRead>(reader: R) -> Result<PropertyGraph, GraphError> {
    let mut g = PropertyGraph::new();
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| GraphError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        match rec {
            Record::Node { id, labels, props } => {
                let props = from_json(props, line_no)?;
                add_loaded_node(&mut g, id, labels, props, line_no)?;
            }
            Record::Edge { src, label, dst, props } => edges.push(PendingEdge {
                line: line_no,
                src,
                label,
                dst,
                props: from_json(props, line_no)?,
            }),
        }
    }
    finish(g, edges)
}

pub fn parse_jsonl(text: &str) -> Result<PropertyGraph, GraphError> {
    load_jsonl(text.as_bytes())
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    id: String,
    #[serde(default)]
    labels: String,
    #[serde(default)]
    props: String,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    src: String,
    label: String,
    dst: String,
    #[serde(default)]
    props: String,
}

fn csv_props(raw: &str, line: usize) -> Result<Props, GraphError> {
    if raw.trim().is_empty() {
        return Ok(Props::new());
    }
    let map: BTreeMap<String, serde_json::Value> = serde_json::from_str(raw).map_err(|e| GraphError::Malformed {
        line,
        message: format!("props: {e}"),
    })?;
    from_json(map, line)
}

/// Reads the CSV pair: `nodes` has columns `id,labels,props` (labels
/// separated by `;`, props as a JSON object), `edges` has
/// `src,label,dst,props`. Both files carry a header row.
pub fn load_csv<N: Read, E: Read>(nodes: N, edges: E) -> Result<PropertyGraph, GraphError> {
    let mut g = PropertyGraph::new();
    for (i, row) in csv::Reader::from_reader(nodes).deserialize::<NodeRow>().enumerate() {
        let line = i + 2;
        let row = row?;
        let labels = row
            .labels
            .split(';')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect();
        let props = csv_props(&row.props, line)?;
        add_loaded_node(&mut g, row.id, labels, props, line)?;
    }
    let mut pending = Vec::new();
    for (i, row) in csv::Reader::from_reader(edges).deserialize::<EdgeRow>().enumerate() {
        let line = i + 2;
        let row = row?;
        pending.push(PendingEdge {
            line,
            props: csv_props(&row.props, line)?,
            src: row.src,
            label: row.label,
            dst: row.dst,
        });
    }
    finish(g, pending)
}

/// Loads a graph from a `.jsonl` file or from a directory holding
/// `nodes.csv` and `edges.csv`.
pub fn load_graph(path: &Path) -> Result<PropertyGraph, GraphError> {
    if path.is_dir() {
        let nodes = std::fs::File::open(path.join("nodes.csv"))?;
        let edges = std::fs::File::open(path.join("edges.csv"))?;
        load_csv(nodes, edges)
    } else {
        load_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
