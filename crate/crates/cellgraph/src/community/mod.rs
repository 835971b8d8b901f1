//! Community structure: partitions, Newman-Girvan modularity, partition
//! comparison, Louvain detection, and scenario labeling.

mod louvain;
mod scenario;

pub use louvain::louvain;
pub use scenario::{
    builtin_profiles, label_scenarios, load_profiles, parse_profiles, ScenarioAssignment,
    ScenarioProfile, DEFAULT_CONFIDENCE_THRESHOLD,
};

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Assignment of every node to exactly one community, with the
/// partition's modularity score (resolution 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition {
    assignment: BTreeMap<String, usize>,
    modularity: f64,
    k: usize,
}

impl CommunityPartition {
    /// Community ids must be dense `0..k-1` and modularity within
    /// `[-1, 1]`.
    pub fn new(assignment: BTreeMap<String, usize>, modularity: f64) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InvalidArgument("empty partition".into()));
        }
        let k = assignment.values().max().unwrap() + 1;
        let mut present = vec![false; k];
        for &c in assignment.values() {
            present[c] = true;
        }
        if let Some(gap) = present.iter().position(|p| !p) {
            return Err(Error::InvalidArgument(format!(
                "community ids must be dense: id {gap} is unused but {} communities are implied",
                k
            )));
        }
        if !(-1.0..=1.0).contains(&modularity) {
            return Err(Error::InvalidArgument(format!(
                "modularity {modularity} outside [-1, 1]"
            )));
        }
        Ok(CommunityPartition {
            assignment,
            modularity,
            k,
        })
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    pub fn community_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    /// Members of each community, ids sorted, indexed by community.
    pub fn communities(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.k];
        for (id, &c) in &self.assignment {
            out[c].push(id.as_str());
        }
        out
    }
}

/// Edges usable for modularity arithmetic: negative weights are excluded
/// (with a warning), and at least one positive weight must remain.
fn usable_edges(g: &WeightedGraph) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges = Vec::new();
    for (u, v, w) in g.indexed_edges() {
        if w < 0.0 {
            log::warn!(
                "excluding negative-weight edge ({}, {}) from modularity",
                g.nodes()[u].id,
                g.nodes()[v].id
            );
            continue;
        }
        edges.push((u, v, w));
    }
    if !edges.iter().any(|&(_, _, w)| w > 0.0) {
        return Err(Error::InsufficientData(
            "modularity needs at least one positive-weight edge".into(),
        ));
    }
    Ok(edges)
}

/// Index-level Newman-Girvan modularity at a given resolution:
/// `Q = sum_c [ w_c/W - gamma * (s_c/2W)^2 ]`.
pub(crate) fn modularity_indexed(
    n_comms: usize,
    edges: &[(usize, usize, f64)],
    comm: &[usize],
    gamma: f64,
) -> f64 {
    let mut total = 0.0;
    let mut intra = vec![0.0; n_comms];
    let mut strength = vec![0.0; n_comms];
    for &(u, v, w) in edges {
        total += w;
        strength[comm[u]] += w;
        strength[comm[v]] += w;
        if comm[u] == comm[v] {
            intra[comm[u]] += w;
        }
    }
    (0..n_comms)
        .map(|c| intra[c] / total - gamma * (strength[c] / (2.0 * total)).powi(2))
        .sum()
}

/// Weighted modularity of a partition over a graph (resolution 1).
pub fn modularity(g: &WeightedGraph, p: &CommunityPartition) -> Result<f64> {
    if p.assignment.len() != g.n() || g.nodes().iter().any(|nd| !p.assignment.contains_key(&nd.id))
    {
        return Err(Error::InvalidArgument(
            "partition does not cover exactly the graph's nodes".into(),
        ));
    }
    let edges = usable_edges(g)?;
    let comm: Vec<usize> = g.nodes().iter().map(|nd| p.assignment[&nd.id]).collect();
    Ok(modularity_indexed(p.k, &edges, &comm, 1.0))
}

fn choose2(x: u64) -> i128 {
    (x as i128) * (x as i128 - 1) / 2
}

/// Adjusted Rand index between two partitions of the same node set:
/// 1 for identical partitions up to relabeling, about 0 for independent
/// ones. Computed from the contingency table in integer arithmetic.
pub fn adjusted_rand_index(p1: &CommunityPartition, p2: &CommunityPartition) -> Result<f64> {
    if p1.assignment.len() != p2.assignment.len()
        || !p1.assignment.keys().eq(p2.assignment.keys())
    {
        return Err(Error::InvalidArgument(
            "partitions cover different node sets".into(),
        ));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows = vec![0u64; p1.k];
    let mut cols = vec![0u64; p2.k];
    for (id, &c1) in &p1.assignment {
        let c2 = p2.assignment[id];
        *table.entry((c1, c2)).or_insert(0) += 1;
        rows[c1] += 1;
        cols[c2] += 1;
    }
    let n = p1.assignment.len() as u64;
    let sum_cells: i128 = table.values().map(|&x| choose2(x)).sum();
    let sum_rows: i128 = rows.iter().map(|&x| choose2(x)).sum();
    let sum_cols: i128 = cols.iter().map(|&x| choose2(x)).sum();
    let pairs = choose2(n);
    // ARI = (sum_cells - sum_rows*sum_cols/pairs)
    //     / ((sum_rows+sum_cols)/2 - sum_rows*sum_cols/pairs),
    // cleared of denominators to stay in integers.
    let num = 2 * (pairs * sum_cells - sum_rows * sum_cols);
    let den = pairs * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols;
    if den == 0 {
        // both partitions are all-singletons or single-community: identical
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Partition export: `node_id,community_id,scenario_label`, node ids in
/// lexicographic order. Communities without a label get an empty field.
pub fn write_partition_csv<W: Write>(
    p: &CommunityPartition,
    labels: Option<&BTreeMap<usize, ScenarioAssignment>>,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "node_id,community_id,scenario_label")?;
    for (id, &c) in p.assignment() {
        let label = labels
            .and_then(|m| m.get(&c))
            .map(|a| a.label.as_str())
            .unwrap_or("");
        writeln!(out, "{id},{c},{label}")?;
    }
    Ok(())
}
