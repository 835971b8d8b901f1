//! Two-phase Louvain community detection: greedy local moving to
//! modularity gain, then graph coagulation, repeated until stable.
//! Fully deterministic for a fixed (graph, resolution, seed).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::community::{modularity_indexed, usable_edges, CommunityPartition};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

const GAIN_THRESHOLD: f64 = 1e-9;

/// One coarsening level: nodes with weighted neighbor lists, self-loop
/// weights accumulated from collapsed communities.
struct LevelGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
    strength: Vec<f64>, // sum of incident weights, self-loops counted twice
    total: f64,         // sum of all edge weights, self-loops once
}

impl LevelGraph {
    fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut self_w = vec![0.0; n];
        let mut total = 0.0;
        for &(u, v, w) in edges {
            total += w;
            if u == v {
                self_w[u] += w;
            } else {
                adj[u].push((v, w));
                adj[v].push((u, w));
            }
        }
        let strength = (0..n)
            .map(|i| adj[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self_w[i])
            .collect();
        LevelGraph {
            n,
            adj,
            self_w,
            strength,
            total,
        }
    }
}

/// Local-moving phase: repeatedly offer each node (in seeded random
/// order) its best neighboring community until no move gains more than
/// the threshold. Gains are compared community-by-community in
/// ascending id order, so exact ties go to the smallest community id.
/// Returns the dense assignment (relabeled by first appearance) and
/// whether any node moved at all.
fn one_level(lg: &LevelGraph, rng: &mut ChaCha8Rng, gamma: f64) -> (Vec<usize>, bool) {
    let mut comm: Vec<usize> = (0..lg.n).collect();
    let mut s_tot = lg.strength.clone();
    let mut order: Vec<usize> = (0..lg.n).collect();
    order.shuffle(rng);
    let mut any_move = false;
    loop {
        let mut improved = false;
        for &i in &order {
            let a = comm[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for &(j, w) in &lg.adj[i] {
                *links.entry(comm[j]).or_insert(0.0) += w;
            }
            // gain of placing i into community c (relative scale):
            // k_{i,c}/W - gamma * k_i * s_c / (2 W^2), with i detached
            s_tot[a] -= lg.strength[i];
            let k_i = lg.strength[i];
            let gain = |l: f64, s: f64| l / lg.total - gamma * k_i * s / (2.0 * lg.total * lg.total);
            let mut best = a;
            let mut best_gain = gain(links.get(&a).copied().unwrap_or(0.0), s_tot[a]);
            for (&c, &l) in &links {
                if c == a {
                    continue;
                }
                let g = gain(l, s_tot[c]);
                if g > best_gain + GAIN_THRESHOLD {
                    best = c;
                    best_gain = g;
                }
            }
            comm[i] = best;
            s_tot[best] += k_i;
            if best != a {
                improved = true;
                any_move = true;
            }
        }
        if !improved {
            break;
        }
    }
    (relabel_dense(&comm), any_move)
}

/// Renumber communities to 0..k-1 in order of first appearance.
fn relabel_dense(comm: &[usize]) -> Vec<usize> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next = 0;
    comm.iter()
        .map(|&c| {
            *map.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Coagulation phase: one node per community, edge weights summed,
/// intra-community weight kept as self-loops.
fn aggregate(lg: &LevelGraph, comm: &[usize], n_comms: usize) -> LevelGraph {
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut self_w = vec![0.0; n_comms];
    for i in 0..lg.n {
        self_w[comm[i]] += lg.self_w[i];
        for &(j, w) in &lg.adj[i] {
            if j <= i {
                continue; // visit each edge once
            }
            let (a, b) = (comm[i].min(comm[j]), comm[i].max(comm[j]));
            if a == b {
                self_w[a] += w;
            } else {
                *edges.entry((a, b)).or_insert(0.0) += w;
            }
        }
    }
    let mut flat: Vec<(usize, usize, f64)> =
        edges.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    flat.extend((0..n_comms).filter(|&c| self_w[c] > 0.0).map(|c| (c, c, self_w[c])));
    LevelGraph::from_edges(n_comms, &flat)
}

/// Louvain detection. The resolution tunes community granularity during
/// detection; the stored modularity of the result is always recomputed
/// at resolution 1 on the input graph.
pub fn louvain(g: &WeightedGraph, resolution: f64, seed: u64) -> Result<CommunityPartition> {
    if resolution <= 0.0 || !resolution.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let edges = usable_edges(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = LevelGraph::from_edges(g.n(), &edges);
    let mut mapping: Vec<usize> = (0..g.n()).collect();
    loop {
        let (comm, moved) = one_level(&level, &mut rng, resolution);
        if !moved {
            break;
        }
        for m in &mut mapping {
            *m = comm[*m];
        }
        let n_comms = comm.iter().max().map_or(0, |&c| c + 1);
        if n_comms == level.n {
            break;
        }
        level = aggregate(&level, &comm, n_comms);
    }
    let mapping = relabel_dense(&mapping);
    let n_comms = mapping.iter().max().map_or(0, |&c| c + 1);
    let q = modularity_indexed(n_comms, &edges, &mapping, 1.0);
    let assignment: BTreeMap<String, usize> = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, nd)| (nd.id.clone(), mapping[i]))
        .collect();
    CommunityPartition::new(assignment, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::tests::graph_from;
    use crate::community::{adjusted_rand_index, modularity};
    use rand::Rng;

    fn two_triangles() -> WeightedGraph {
        graph_from(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
            ],
        )
    }

    /// All set partitions of 0..n, for brute-force modularity maxima.
    fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = vec![0usize; n];
        fn rec(i: usize, n: usize, blocks: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if i == n {
                out.push(current.clone());
                return;
            }
            for b in 0..=blocks {
                current[i] = b;
                rec(i + 1, n, blocks.max(b + 1), current, out);
            }
        }
        rec(0, n, 0, &mut current, &mut out);
        out
    }

    fn brute_force_best_q(g: &WeightedGraph) -> f64 {
        let edges = usable_edges(g).unwrap();
        all_partitions(g.n())
            .into_iter()
            .map(|p| {
                let k = p.iter().max().unwrap() + 1;
                modularity_indexed(k, &edges, &p, 1.0)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn two_triangles_split_into_their_components() {
        let g = two_triangles();
        let p = louvain(&g, 1.0, 7).unwrap();
        assert_eq!(p.k(), 2);
        assert!((p.modularity() - 0.5).abs() < 1e-12);
        // exhaustive search over all 203 partitions confirms 0.5 is optimal
        assert!((brute_force_best_q(&g) - 0.5).abs() < 1e-12);
        // the two communities are exactly the components
        for (u, v) in [("n0", "n1"), ("n1", "n2"), ("n3", "n4"), ("n4", "n5")] {
            assert_eq!(p.community_of(u), p.community_of(v));
        }
        assert_ne!(p.community_of("n0"), p.community_of("n3"));
    }

    #[test]
    fn complete_graph_stays_one_community() {
        let edges: Vec<(usize, usize, f64)> = (0..5)
            .flat_map(|i| (i + 1..5).map(move |j| (i, j, 1.0)))
            .collect();
        let g = graph_from(5, &edges);
        let p = louvain(&g, 1.0, 3).unwrap();
        assert_eq!(p.k(), 1);
        assert_eq!(p.modularity(), 0.0);
    }

    #[test]
    fn stored_modularity_matches_independent_recomputation() {
        for seed in 0..5 {
            let g = planted_blocks(4, 10, 0.9, 0.05, seed);
            let p = louvain(&g, 1.0, seed).unwrap();
            let q = modularity(&g, &p).unwrap();
            assert!(
                (p.modularity() - q).abs() < 1e-9,
                "seed {seed}: {} vs {q}",
                p.modularity()
            );
            // never worse than the all-singletons baseline
            let singletons: BTreeMap<String, usize> = g
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, nd)| (nd.id.clone(), i))
                .collect();
            let q0 = modularity(&g, &CommunityPartition::new(singletons, 0.0).unwrap()).unwrap();
            assert!(p.modularity() >= q0);
        }
    }

    #[test]
    fn detection_is_deterministic() {
        let g = planted_blocks(3, 8, 0.8, 0.1, 11);
        let p1 = louvain(&g, 1.0, 42).unwrap();
        let p2 = louvain(&g, 1.0, 42).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn louvain_never_beats_the_exhaustive_optimum_on_small_graphs() {
        for seed in 0..8u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for i in 0..7usize {
                for j in i + 1..7 {
                    if rng.gen_bool(0.45) {
                        edges.push((i, j, rng.gen_range(0.1..2.0)));
                    }
                }
            }
            if !edges.iter().any(|&(_, _, w)| w > 0.0) {
                continue;
            }
            let g = graph_from(7, &edges);
            let p = louvain(&g, 1.0, seed).unwrap();
            let best = brute_force_best_q(&g);
            assert!(p.modularity() <= best + 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn edgeless_graph_is_rejected() {
        let g = graph_from(4, &[]);
        assert!(louvain(&g, 1.0, 0).is_err());
    }

    #[test]
    fn non_positive_resolution_is_rejected() {
        let g = two_triangles();
        assert!(louvain(&g, 0.0, 0).is_err());
        assert!(louvain(&g, -1.0, 0).is_err());
    }

    /// Planted-partition graph: `blocks` groups of `size` nodes, edge
    /// probability `p_in` inside a block and `p_out` across blocks.
    pub(crate) fn planted_blocks(
        blocks: usize,
        size: usize,
        p_in: f64,
        p_out: f64,
        seed: u64,
    ) -> WeightedGraph {
        let n = blocks * size;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if i / size == j / size { p_in } else { p_out };
                if rng.gen_bool(p) {
                    edges.push((i, j, 1.0));
                }
            }
        }
        graph_from(n, &edges)
    }

    #[test]
    fn planted_blocks_are_recovered() {
        let g = planted_blocks(4, 10, 0.9, 0.05, 20240601);
        let p = louvain(&g, 1.0, 1).unwrap();
        let truth: BTreeMap<String, usize> = g
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, nd)| (nd.id.clone(), i / 10))
            .collect();
        let truth = CommunityPartition::new(truth, 0.0).unwrap();
        let ari = adjusted_rand_index(&p, &truth).unwrap();
        assert!(ari >= 0.9, "ARI {ari}");
    }
}
