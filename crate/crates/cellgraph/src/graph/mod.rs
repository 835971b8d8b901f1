//! Weighted simple graphs plus the filters that produce them from a
//! correlation matrix, planarity certification, and export formats.

mod export;
mod planarity;
mod pmfg;

pub use export::{export, import_json, ExportFormat};
pub use planarity::{
    classify_witness, is_planar, verify_certificate, KuratowskiKind, PlanarCertificate,
};
pub use pmfg::{pmfg, Ranking};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::error::{Error, Result};

/// What a node stands for. Determines which attributes are meaningful
/// (base stations carry coordinates, apps carry a size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Bs,
    App,
    User,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Bs => "bs",
            NodeKind::App => "app",
            NodeKind::User => "user",
        }
    }
}

impl std::str::FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bs" => Ok(NodeKind::Bs),
            "app" => Ok(NodeKind::App),
            "user" => Ok(NodeKind::User),
            other => Err(Error::InvalidArgument(format!(
                "unknown node kind '{other}' (expected bs, app, or user)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub community: Option<usize>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            kind,
            lat: None,
            lon: None,
            size: None,
            community: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub w: f64,
}

/// Undirected weighted simple graph. Nodes keep insertion order; edges
/// keep insertion order. No self-loops, no parallel edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    by_id: HashMap<String, usize>,
    edge_set: HashSet<(usize, usize)>,
}

impl WeightedGraph {
    pub fn new() -> Self {
        WeightedGraph::default()
    }

    pub fn add_node(&mut self, node: Node) -> Result<()> {
        if self.by_id.contains_key(&node.id) {
            return Err(Error::InvalidArgument(format!(
                "duplicate node id {:?}",
                node.id
            )));
        }
        self.by_id.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(&mut self, u: &str, v: &str, w: f64) -> Result<()> {
        let iu = self
            .index_of(u)
            .ok_or_else(|| Error::InvalidArgument(format!("edge endpoint {u:?} not a node")))?;
        let iv = self
            .index_of(v)
            .ok_or_else(|| Error::InvalidArgument(format!("edge endpoint {v:?} not a node")))?;
        if iu == iv {
            return Err(Error::InvalidArgument(format!("self-loop on {u:?}")));
        }
        let key = (iu.min(iv), iu.max(iv));
        if !self.edge_set.insert(key) {
            return Err(Error::InvalidArgument(format!(
                "duplicate edge ({u:?}, {v:?})"
            )));
        }
        self.edges.push(Edge {
            u: u.to_string(),
            v: v.to_string(),
            w,
        });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        let i = self.index_of(id)?;
        Some(&mut self.nodes[i])
    }

    pub fn has_edge(&self, u: &str, v: &str) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(iu), Some(iv)) => self.edge_set.contains(&(iu.min(iv), iu.max(iv))),
            _ => false,
        }
    }

    /// Edges as (node index, node index, weight) triples, insertion order.
    pub fn indexed_edges(&self) -> Vec<(usize, usize, f64)> {
        self.edges
            .iter()
            .map(|e| (self.by_id[&e.u], self.by_id[&e.v], e.w))
            .collect()
    }

    /// Degree of each node, indexed like `nodes()`.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for (u, v, _) in self.indexed_edges() {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }
}

/// Baseline filter: keep every pair correlated at least `theta`. Unlike
/// the PMFG this can be non-planar and disconnected.
pub fn threshold_filter(m: &CorrelationMatrix, theta: f64, kind: NodeKind) -> Result<WeightedGraph> {
    if !(-1.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [-1, 1], got {theta}"
        )));
    }
    let mut g = WeightedGraph::new();
    for id in m.entities() {
        g.add_node(Node::new(id.clone(), kind))?;
    }
    for i in 0..m.n() {
        for j in i + 1..m.n() {
            if m.get(i, j) >= theta {
                g.add_edge(&m.entities()[i], &m.entities()[j], m.get(i, j))?;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix_4x4() -> CorrelationMatrix {
        // pairwise entries: ab=0.9, ac=0.6, ad=0.4, bc=0.2, bd=0.1, cd=0.05
        let e: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        #[rustfmt::skip]
        let v = vec![
            1.0, 0.9, 0.6, 0.4,
            0.9, 1.0, 0.2, 0.1,
            0.6, 0.2, 1.0, 0.05,
            0.4, 0.1, 0.05, 1.0,
        ];
        CorrelationMatrix::from_parts(e, v).unwrap()
    }

    #[test]
    fn graph_rejects_loops_duplicates_and_unknown_endpoints() {
        let mut g = WeightedGraph::new();
        g.add_node(Node::new("a", NodeKind::Bs)).unwrap();
        g.add_node(Node::new("b", NodeKind::Bs)).unwrap();
        assert!(g.add_node(Node::new("a", NodeKind::Bs)).is_err());
        assert!(g.add_edge("a", "a", 1.0).is_err());
        assert!(g.add_edge("a", "z", 1.0).is_err());
        g.add_edge("a", "b", 0.5).unwrap();
        assert!(g.add_edge("b", "a", 0.5).is_err());
        assert!(g.has_edge("b", "a"));
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn threshold_above_max_gives_edgeless_graph() {
        let g = threshold_filter(&matrix_4x4(), 1.0, NodeKind::Bs).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.m(), 0);
    }

    #[test]
    fn threshold_at_minus_one_gives_complete_graph() {
        let g = threshold_filter(&matrix_4x4(), -1.0, NodeKind::Bs).unwrap();
        assert_eq!(g.m(), 6);
    }

    #[test]
    fn threshold_keeps_exactly_the_qualifying_pairs() {
        let g = threshold_filter(&matrix_4x4(), 0.5, NodeKind::Bs).unwrap();
        assert_eq!(g.m(), 2);
        assert!(g.has_edge("a", "b"));
        assert!(g.has_edge("a", "c"));
        assert!(!g.has_edge("a", "d"));
    }

    #[test]
    fn threshold_rejects_out_of_range_theta() {
        assert!(threshold_filter(&matrix_4x4(), 1.5, NodeKind::Bs).is_err());
    }
}
