//! Planar maximally filtered graph: keep the strongest correlations
//! that fit in a planar graph, giving a sparse backbone with at most
//! 3n-6 edges instead of n(n-1)/2.

use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::graph::planarity::{is_planar, planar_verdict, PlanarCertificate};
use crate::graph::{Node, NodeKind, WeightedGraph};

/// How candidate edges are ranked before greedy insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Descending signed correlation (default: strong positive co-traffic).
    #[default]
    Value,
    /// Descending absolute correlation.
    AbsValue,
}

impl Ranking {
    fn key(&self, r: f64) -> f64 {
        match self {
            Ranking::Value => r,
            Ranking::AbsValue => r.abs(),
        }
    }
}

impl std::str::FromStr for Ranking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value" => Ok(Ranking::Value),
            "abs_value" => Ok(Ranking::AbsValue),
            other => Err(Error::InvalidArgument(format!(
                "unknown ranking '{other}' (expected value or abs_value)"
            ))),
        }
    }
}

/// Greedy rank-and-insert PMFG construction: sort all pairs by rank,
/// admit each edge iff the graph stays planar, stop at 3n-6 edges.
/// Ties rank by the lexicographic entity pair, so the result is a pure
/// function of the matrix.
pub fn pmfg(
    m: &CorrelationMatrix,
    ranking: Ranking,
    kind: NodeKind,
) -> Result<(WeightedGraph, PlanarCertificate)> {
    let n = m.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "pmfg needs at least 2 entities, got {n}"
        )));
    }
    // Matrix entities are lexicographically sorted, so index order is id
    // order and (i, j) comparison implements the documented tie-break.
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    candidates.sort_by(|&(i1, j1), &(i2, j2)| {
        let k1 = ranking.key(m.get(i1, j1));
        let k2 = ranking.key(m.get(i2, j2));
        k2.partial_cmp(&k1)
            .expect("correlation entries are finite")
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });
    let target = if n >= 3 { 3 * n - 6 } else { 1 };
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (i, j) in candidates {
        kept.push((i, j));
        if !planar_verdict(n, &kept) {
            kept.pop();
            continue;
        }
        if kept.len() == target {
            break;
        }
    }
    let mut g = WeightedGraph::new();
    for id in m.entities() {
        g.add_node(Node::new(id.clone(), kind))?;
    }
    for (i, j) in kept {
        g.add_edge(&m.entities()[i], &m.entities()[j], m.get(i, j))?;
    }
    let cert = is_planar(&g);
    debug_assert!(cert.is_planar(), "greedy construction preserves planarity");
    Ok((g, cert))
}
