//! The three end-to-end pipelines:
//!
//! * base-station graphs (series → correlation → planar filter →
//!   communities → scenario labels),
//! * app graphs (same pipeline keyed by app, nodes sized by degree),
//! * user graphs (direct call-count edges, then communities).
//!
//! Builders are pure functions of (inputs, config); identical inputs
//! give identical outputs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::community::{
    builtin_profiles, label_scenarios, louvain, CommunityPartition, ScenarioAssignment,
    DEFAULT_CONFIDENCE_THRESHOLD,
};
use crate::corr::correlation_matrix;
use crate::error::{Error, Result};
use crate::graph::{pmfg, Node, NodeKind, Ranking, WeightedGraph};
use crate::records::{CallRecord, CellInfo, FlowRecord};
use crate::series::{aggregate, AggregateKey, Metric, TimeSeries};

/// Knobs shared by the three builders. Field defaults aggregate hourly
/// total bytes over one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub metric: Metric,
    /// Aggregation bin width in seconds.
    pub bin_width: i64,
    /// Half-open analysis window `[begin, end)` in epoch seconds.
    pub span: (i64, i64),
    pub ranking: Ranking,
    /// Louvain resolution; communities are finer for larger values.
    pub resolution: f64,
    pub seed: u64,
    /// Entities whose total aggregate volume is below this are dropped
    /// before correlation (filters phantom cells and one-off apps).
    pub min_activity: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            metric: Metric::BytesTotal,
            bin_width: 3_600,
            span: (0, 7 * 86_400),
            ranking: Ranking::Value,
            resolution: 1.0,
            seed: 0,
            min_activity: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_width <= 0 {
            return Err(Error::InvalidArgument(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        if self.span.0 >= self.span.1 {
            return Err(Error::InvalidArgument(format!(
                "span [{}, {}) is empty",
                self.span.0, self.span.1
            )));
        }
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if !(self.min_activity >= 0.0) || !self.min_activity.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "min_activity must be non-negative, got {}",
                self.min_activity
            )));
        }
        Ok(())
    }
}

/// Aggregate, drop entities below `min_activity`, and require at least
/// `min_entities` survivors.
fn active_series(
    records: &[FlowRecord],
    key: AggregateKey,
    cfg: &PipelineConfig,
    min_entities: usize,
    what: &str,
) -> Result<BTreeMap<String, TimeSeries>> {
    let mut series = aggregate(records, key, cfg.metric, cfg.bin_width, cfg.span)?;
    series.retain(|id, ts| {
        let total: f64 = ts.values.iter().sum();
        if total < cfg.min_activity {
            log::warn!("dropping {what} '{id}': total activity {total} below {}", cfg.min_activity);
            false
        } else {
            true
        }
    });
    if series.len() < min_entities {
        return Err(Error::InsufficientData(format!(
            "only {} active {what}s, need at least {min_entities}",
            series.len()
        )));
    }
    Ok(series)
}

fn annotate_communities(g: &mut WeightedGraph, partition: &CommunityPartition) {
    let ids: Vec<String> = g.nodes().iter().map(|n| n.id.clone()).collect();
    for id in ids {
        let community = partition.community_of(&id);
        g.node_mut(&id).expect("node exists").community = community;
    }
}

/// Base-station graph: per-cell series → Pearson matrix → planar filter
/// → Louvain → scenario labels. Nodes carry coordinates from the cell
/// table and their community id. Records for cells missing from the
/// table are excluded with a warning.
pub fn build_bssn(
    records: &[FlowRecord],
    cells: &[CellInfo],
    cfg: &PipelineConfig,
) -> Result<(
    WeightedGraph,
    CommunityPartition,
    BTreeMap<usize, ScenarioAssignment>,
)> {
    cfg.validate()?;
    let known: BTreeMap<&str, &CellInfo> =
        cells.iter().map(|c| (c.cell_id.as_str(), c)).collect();
    let mut series = active_series(records, AggregateKey::Cell, cfg, 3, "cell")?;
    series.retain(|id, _| {
        if known.contains_key(id.as_str()) {
            true
        } else {
            log::warn!("excluding records for cell '{id}': not in the cell table");
            false
        }
    });
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} known active cells, need at least 3",
            series.len()
        )));
    }
    let matrix = correlation_matrix(&series)?;
    if matrix.n() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} cells with usable series, need at least 3",
            matrix.n()
        )));
    }
    let (mut graph, _certificate) = pmfg(&matrix, cfg.ranking, NodeKind::Bs)?;
    let partition = louvain(&graph, cfg.resolution, cfg.seed)?;
    let labels = label_scenarios(
        &partition,
        &series,
        &builtin_profiles(),
        DEFAULT_CONFIDENCE_THRESHOLD,
    )?;
    let ids: Vec<String> = graph.nodes().iter().map(|n| n.id.clone()).collect();
    for id in ids {
        let info = known[id.as_str()];
        let (lat, lon) = (info.lat, info.lon);
        let community = partition.community_of(&id);
        let node = graph.node_mut(&id).expect("node exists");
        node.lat = Some(lat);
        node.lon = Some(lon);
        node.community = community;
    }
    Ok((graph, partition, labels))
}

/// App graph: the same correlation pipeline keyed by app. Node size is
/// the node's degree in the filtered graph.
pub fn build_asn(
    records: &[FlowRecord],
    cfg: &PipelineConfig,
) -> Result<(WeightedGraph, CommunityPartition)> {
    cfg.validate()?;
    let series = active_series(records, AggregateKey::App, cfg, 3, "app")?;
    let matrix = correlation_matrix(&series)?;
    if matrix.n() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} apps with usable series, need at least 3",
            matrix.n()
        )));
    }
    let (mut graph, _certificate) = pmfg(&matrix, cfg.ranking, NodeKind::App)?;
    let partition = louvain(&graph, cfg.resolution, cfg.seed)?;
    let degrees = graph.degrees();
    let ids: Vec<String> = graph.nodes().iter().map(|n| n.id.clone()).collect();
    for (i, id) in ids.into_iter().enumerate() {
        let community = partition.community_of(&id);
        let node = graph.node_mut(&id).expect("node exists");
        node.size = Some(degrees[i] as f64);
        node.community = community;
    }
    Ok((graph, partition))
}

/// User graph: an undirected edge per calling pair, weighted by the
/// number of calls between them inside the span (direction ignored),
/// then Louvain. Total edge weight equals the number of counted calls.
pub fn build_usn(
    calls: &[CallRecord],
    cfg: &PipelineConfig,
) -> Result<(WeightedGraph, CommunityPartition)> {
    cfg.validate()?;
    let mut weights: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut users: BTreeSet<String> = BTreeSet::new();
    for call in calls {
        if call.t_start < cfg.span.0 || call.t_start >= cfg.span.1 {
            continue;
        }
        if call.caller_id == call.callee_id {
            log::warn!("skipping self-call for user '{}'", call.caller_id);
            continue;
        }
        let (a, b) = if call.caller_id <= call.callee_id {
            (call.caller_id.clone(), call.callee_id.clone())
        } else {
            (call.callee_id.clone(), call.caller_id.clone())
        };
        users.insert(a.clone());
        users.insert(b.clone());
        *weights.entry((a, b)).or_insert(0.0) += 1.0;
    }
    if weights.is_empty() {
        return Err(Error::InsufficientData("no calls within the span".into()));
    }
    let mut graph = WeightedGraph::new();
    for user in &users {
        graph.add_node(Node::new(user.clone(), NodeKind::User))?;
    }
    for ((a, b), w) in &weights {
        graph.add_edge(a, b, *w)?;
    }
    let partition = louvain(&graph, cfg.resolution, cfg.seed)?;
    annotate_communities(&mut graph, &partition);
    Ok((graph, partition))
}
