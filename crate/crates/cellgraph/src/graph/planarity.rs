//! Planarity testing with verifiable certificates.
//!
//! The verdict comes from the left-right planarity algorithm (Brandes'
//! formulation of de Fraysseix–Rosenstiehl). A planar result carries a
//! combinatorial embedding (clockwise neighbor order per node); a
//! non-planar result carries an edge-minimal non-planar subgraph, which
//! by Kuratowski's theorem is exactly a K5 or K3,3 subdivision. Both
//! certificate kinds are checkable by independent code paths:
//! embeddings via Euler's formula per component, witnesses by
//! suppressing degree-2 vertices down to a Kuratowski kernel.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

type HalfEdge = (usize, usize);

/// Outcome of a planarity test, carrying evidence for the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PlanarCertificate {
    /// Clockwise neighbor order per node, listed in graph node order.
    Planar { embedding: Vec<(String, Vec<String>)> },
    /// Edge list of a K5 or K3,3 subdivision contained in the graph.
    NonPlanar { witness: Vec<(String, String)> },
}

impl PlanarCertificate {
    pub fn is_planar(&self) -> bool {
        matches!(self, PlanarCertificate::Planar { .. })
    }

    pub fn embedding(&self) -> Option<&[(String, Vec<String>)]> {
        match self {
            PlanarCertificate::Planar { embedding } => Some(embedding),
            PlanarCertificate::NonPlanar { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&[(String, String)]> {
        match self {
            PlanarCertificate::Planar { .. } => None,
            PlanarCertificate::NonPlanar { witness } => Some(witness),
        }
    }
}

/// Which Kuratowski obstruction a witness reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KuratowskiKind {
    K5,
    K33,
}

/// Test a graph for planarity and produce a certificate either way.
pub fn is_planar(g: &WeightedGraph) -> PlanarCertificate {
    let edges: Vec<HalfEdge> = g.indexed_edges().iter().map(|&(u, v, _)| (u, v)).collect();
    let ids: Vec<&str> = g.nodes().iter().map(|nd| nd.id.as_str()).collect();
    match planar_rotation(g.n(), &edges) {
        Some(rotation) => PlanarCertificate::Planar {
            embedding: rotation
                .into_iter()
                .enumerate()
                .map(|(v, order)| {
                    let named = order.into_iter().map(|w| ids[w].to_string()).collect();
                    (ids[v].to_string(), named)
                })
                .collect(),
        },
        None => PlanarCertificate::NonPlanar {
            witness: minimal_nonplanar_edges(g.n(), &edges)
                .into_iter()
                .map(|(u, v)| (ids[u].to_string(), ids[v].to_string()))
                .collect(),
        },
    }
}

/// Check a certificate against the graph using only elementary facts:
/// Euler's formula for embeddings, subdivision structure for witnesses.
/// Deliberately shares no logic with the left-right test.
pub fn verify_certificate(g: &WeightedGraph, cert: &PlanarCertificate) -> Result<()> {
    match cert {
        PlanarCertificate::Planar { embedding } => {
            if embedding.len() != g.n() {
                return Err(Error::InvalidArgument(format!(
                    "embedding lists {} nodes, graph has {}",
                    embedding.len(),
                    g.n()
                )));
            }
            let mut rotation = vec![Vec::new(); g.n()];
            let mut seen = vec![false; g.n()];
            for (id, order) in embedding {
                let v = g
                    .index_of(id)
                    .ok_or_else(|| Error::InvalidArgument(format!("embedding names unknown node {id:?}")))?;
                if seen[v] {
                    return Err(Error::InvalidArgument(format!(
                        "embedding lists node {id:?} twice"
                    )));
                }
                seen[v] = true;
                rotation[v] = order
                    .iter()
                    .map(|w| {
                        g.index_of(w).ok_or_else(|| {
                            Error::InvalidArgument(format!("embedding names unknown node {w:?}"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?;
            }
            let edges: Vec<HalfEdge> = g.indexed_edges().iter().map(|&(u, v, _)| (u, v)).collect();
            verify_rotation(g.n(), &edges, &rotation)
        }
        PlanarCertificate::NonPlanar { witness } => {
            for (u, v) in witness {
                if !g.has_edge(u, v) {
                    return Err(Error::InvalidArgument(format!(
                        "witness edge ({u:?}, {v:?}) is not in the graph"
                    )));
                }
            }
            classify_witness(witness).map(|_| ())
        }
    }
}

/// Identify a claimed Kuratowski witness by suppressing its degree-2
/// vertices; errors if the edge list is not exactly a K5 or K3,3
/// subdivision.
pub fn classify_witness(witness: &[(String, String)]) -> Result<KuratowskiKind> {
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for (u, v) in witness {
        ids.insert(u);
        ids.insert(v);
    }
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let edges: Vec<HalfEdge> = witness
        .iter()
        .map(|(u, v)| (index[u.as_str()], index[v.as_str()]))
        .collect();
    classify_index_witness(&edges)
}

// ---------------------------------------------------------------------------
// Index-level primitives shared by PMFG construction and the public API.
// ---------------------------------------------------------------------------

fn build_adj(n: usize, edges: &[HalfEdge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        debug_assert!(u != v && u < n && v < n, "edges must be simple and in range");
        adj[u].push(v);
        adj[v].push(u);
    }
    for a in &mut adj {
        a.sort_unstable();
        debug_assert!(a.windows(2).all(|w| w[0] != w[1]), "parallel edge");
    }
    adj
}

/// Planarity verdict only (no certificate); the fast path used once per
/// candidate edge during PMFG construction.
pub(crate) fn planar_verdict(n: usize, edges: &[HalfEdge]) -> bool {
    if n > 2 && edges.len() > 3 * n - 6 {
        return false;
    }
    let adj = build_adj(n, edges);
    Lr::new(&adj).test()
}

/// Full test returning a clockwise rotation system when planar.
pub(crate) fn planar_rotation(n: usize, edges: &[HalfEdge]) -> Option<Vec<Vec<usize>>> {
    if n > 2 && edges.len() > 3 * n - 6 {
        return None;
    }
    let adj = build_adj(n, edges);
    let mut lr = Lr::new(&adj);
    if !lr.test() {
        return None;
    }
    Some(lr.embed())
}

/// Shrink a non-planar edge set to an edge-minimal non-planar subgraph.
/// One deterministic pass suffices: planarity is monotone under edge
/// deletion, so an edge that was not removable stays critical as later
/// edges disappear.
pub(crate) fn minimal_nonplanar_edges(n: usize, edges: &[HalfEdge]) -> Vec<HalfEdge> {
    let mut keep: Vec<HalfEdge> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    keep.sort_unstable();
    debug_assert!(!planar_verdict(n, &keep));
    let mut i = 0;
    while i < keep.len() {
        let e = keep.remove(i);
        if planar_verdict(n, &keep) {
            keep.insert(i, e); // critical edge, keep it
            i += 1;
        }
    }
    keep
}

fn classify_index_witness(edges: &[HalfEdge]) -> Result<KuratowskiKind> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(u, v) in edges {
        if u == v {
            return Err(Error::InvalidArgument("witness contains a self-loop".into()));
        }
        if !adj.entry(u).or_default().insert(v) {
            return Err(Error::InvalidArgument("witness repeats an edge".into()));
        }
        adj.entry(v).or_default().insert(u);
    }
    // Suppress subdivision vertices: replace each path u-x-v (deg x = 2)
    // by the edge u-v. A genuine subdivision never doubles an edge here.
    loop {
        let x = match adj.iter().find(|(_, nb)| nb.len() == 2) {
            Some((&x, _)) => x,
            None => break,
        };
        let nb: Vec<usize> = adj[&x].iter().copied().collect();
        let (a, b) = (nb[0], nb[1]);
        if adj[&a].contains(&b) {
            return Err(Error::InvalidArgument(
                "suppressing a degree-2 vertex doubles an edge; not a subdivision".into(),
            ));
        }
        adj.remove(&x);
        let an = adj.get_mut(&a).expect("neighbor present");
        an.remove(&x);
        an.insert(b);
        let bn = adj.get_mut(&b).expect("neighbor present");
        bn.remove(&x);
        bn.insert(a);
    }
    let n = adj.len();
    let degrees: Vec<usize> = adj.values().map(|nb| nb.len()).collect();
    if n == 5 && degrees.iter().all(|&d| d == 4) {
        // 5 vertices, each adjacent to all others: the kernel is K5.
        return Ok(KuratowskiKind::K5);
    }
    if n == 6 && degrees.iter().all(|&d| d == 3) {
        let verts: Vec<usize> = adj.keys().copied().collect();
        let v0 = verts[0];
        let side: BTreeSet<usize> = verts
            .iter()
            .copied()
            .filter(|&v| v == v0 || !adj[&v0].contains(&v))
            .collect();
        let bipartite_complete = side.len() == 3
            && verts.iter().all(|&v| {
                let in_side = side.contains(&v);
                adj[&v].iter().all(|w| side.contains(w) != in_side)
            });
        if bipartite_complete {
            return Ok(KuratowskiKind::K33);
        }
        return Err(Error::InvalidArgument(
            "kernel is 3-regular on 6 vertices but not K3,3".into(),
        ));
    }
    Err(Error::InvalidArgument(
        "witness does not reduce to a K5 or K3,3 kernel".into(),
    ))
}

// ---------------------------------------------------------------------------
// Independent embedding verifier.
// ---------------------------------------------------------------------------

fn connected_components(n: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut queue = vec![start];
        comp[start] = count;
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    queue.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Validate a clockwise rotation system: it must list each node's exact
/// neighbor set, and tracing face orbits must satisfy V - E + F = 2 on
/// every connected component (genus zero).
fn verify_rotation(n: usize, edges: &[HalfEdge], rotation: &[Vec<usize>]) -> Result<()> {
    let adj = build_adj(n, edges);
    for v in 0..n {
        let mut listed = rotation[v].clone();
        listed.sort_unstable();
        if listed != adj[v] {
            return Err(Error::InvalidArgument(format!(
                "rotation at node index {v} does not list its neighbors exactly once"
            )));
        }
    }
    let mut next_cw: HashMap<HalfEdge, usize> = HashMap::new();
    for v in 0..n {
        let k = rotation[v].len();
        for i in 0..k {
            next_cw.insert((v, rotation[v][i]), rotation[v][(i + 1) % k]);
        }
    }
    let (comp, count) = connected_components(n, &adj);
    let mut v_count = vec![0usize; count];
    let mut e_count = vec![0usize; count];
    let mut f_count = vec![0usize; count];
    for v in 0..n {
        v_count[comp[v]] += 1;
    }
    for &(u, _) in edges {
        e_count[comp[u]] += 1;
    }
    // Count face orbits: the successor of dart (u, v) within its face is
    // (v, w) where w follows u in the rotation at v.
    let mut visited: HashSet<HalfEdge> = HashSet::new();
    for &(eu, ev) in edges {
        for start in [(eu, ev), (ev, eu)] {
            if visited.contains(&start) {
                continue;
            }
            let mut dart = start;
            loop {
                visited.insert(dart);
                let (u, v) = dart;
                dart = (v, next_cw[&(v, u)]);
                if dart == start {
                    break;
                }
            }
            f_count[comp[start.0]] += 1;
        }
    }
    for c in 0..count {
        if e_count[c] == 0 {
            continue; // isolated vertex
        }
        if v_count[c] + f_count[c] != e_count[c] + 2 {
            return Err(Error::InvalidArgument(format!(
                "component fails Euler's formula: V={} E={} F={}",
                v_count[c], e_count[c], f_count[c]
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Left-right planarity test.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
struct Interval {
    low: Option<HalfEdge>,
    high: Option<HalfEdge>,
}

impl Interval {
    fn new(low: HalfEdge, high: HalfEdge) -> Self {
        Interval {
            low: Some(low),
            high: Some(high),
        }
    }

    fn empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct Lr<'a> {
    adj: &'a [Vec<usize>],
    n: usize,
    roots: Vec<usize>,
    height: Vec<Option<usize>>,
    parent_edge: Vec<Option<HalfEdge>>,
    oriented: Vec<Vec<usize>>, // DFS-oriented out-neighbors, discovery order
    ordered_adjs: Vec<Vec<usize>>,
    lowpt: HashMap<HalfEdge, usize>,
    lowpt2: HashMap<HalfEdge, usize>,
    nesting_depth: HashMap<HalfEdge, i64>,
    ref_edge: HashMap<HalfEdge, HalfEdge>, // absent entry = no reference
    side: HashMap<HalfEdge, i8>,           // absent entry = +1
    stack: Vec<ConflictPair>,
    stack_bottom: HashMap<HalfEdge, usize>, // stack height when the edge was opened
    lowpt_edge: HashMap<HalfEdge, HalfEdge>,
}

impl<'a> Lr<'a> {
    fn new(adj: &'a [Vec<usize>]) -> Self {
        let n = adj.len();
        Lr {
            adj,
            n,
            roots: Vec::new(),
            height: vec![None; n],
            parent_edge: vec![None; n],
            oriented: vec![Vec::new(); n],
            ordered_adjs: vec![Vec::new(); n],
            lowpt: HashMap::new(),
            lowpt2: HashMap::new(),
            nesting_depth: HashMap::new(),
            ref_edge: HashMap::new(),
            side: HashMap::new(),
            stack: Vec::new(),
            stack_bottom: HashMap::new(),
            lowpt_edge: HashMap::new(),
        }
    }

    fn get_side(&self, e: HalfEdge) -> i8 {
        self.side.get(&e).copied().unwrap_or(1)
    }

    fn set_side(&mut self, e: HalfEdge, s: i8) {
        self.side.insert(e, s);
    }

    fn get_ref(&self, e: HalfEdge) -> Option<HalfEdge> {
        self.ref_edge.get(&e).copied()
    }

    fn set_ref(&mut self, e: HalfEdge, r: Option<HalfEdge>) {
        match r {
            Some(x) => {
                self.ref_edge.insert(e, x);
            }
            None => {
                self.ref_edge.remove(&e);
            }
        }
    }

    /// Orientation and testing phases; true iff planar.
    fn test(&mut self) -> bool {
        let mut ind = vec![0usize; self.n];
        let mut skip_init: HashSet<HalfEdge> = HashSet::new();
        for v in 0..self.n {
            if self.height[v].is_none() {
                self.height[v] = Some(0);
                self.roots.push(v);
                self.dfs_orientation(v, &mut ind, &mut skip_init);
            }
        }
        self.sort_by_nesting_depth();
        let mut ind = vec![0usize; self.n];
        let mut skip_init: HashSet<HalfEdge> = HashSet::new();
        let roots = self.roots.clone();
        for r in roots {
            if !self.dfs_testing(r, &mut ind, &mut skip_init) {
                return false;
            }
        }
        true
    }

    fn sort_by_nesting_depth(&mut self) {
        for v in 0..self.n {
            let mut order = self.oriented[v].clone();
            order.sort_by_key(|&w| self.nesting_depth[&(v, w)]);
            self.ordered_adjs[v] = order;
        }
    }

    /// DFS traversal orienting edges, computing lowpoints and the
    /// nesting order used for adjacency sorting.
    fn dfs_orientation(&mut self, root: usize, ind: &mut [usize], skip_init: &mut HashSet<HalfEdge>) {
        let mut dfs_stack = vec![root];
        while let Some(v) = dfs_stack.pop() {
            let e = self.parent_edge[v];
            let mut descended = false;
            while ind[v] < self.adj[v].len() {
                let w = self.adj[v][ind[v]];
                let vw = (v, w);
                if !skip_init.contains(&vw) {
                    if self.lowpt.contains_key(&vw) || self.lowpt.contains_key(&(w, v)) {
                        ind[v] += 1;
                        continue; // already oriented from the other side
                    }
                    let hv = self.height[v].expect("v was visited");
                    self.oriented[v].push(w);
                    self.lowpt.insert(vw, hv);
                    self.lowpt2.insert(vw, hv);
                    if self.height[w].is_none() {
                        // tree edge
                        self.parent_edge[w] = Some(vw);
                        self.height[w] = Some(hv + 1);
                        dfs_stack.push(v); // revisit v after finishing w
                        dfs_stack.push(w);
                        skip_init.insert(vw);
                        descended = true;
                        break;
                    }
                    // back edge
                    self.lowpt.insert(vw, self.height[w].expect("w was visited"));
                }
                // nesting order
                let mut depth = 2 * self.lowpt[&vw] as i64;
                if self.lowpt2[&vw] < self.height[v].expect("v was visited") {
                    depth += 1; // chordal
                }
                self.nesting_depth.insert(vw, depth);
                // fold lowpoints into the parent edge
                if let Some(pe) = e {
                    let (lp, lp2) = (self.lowpt[&vw], self.lowpt2[&vw]);
                    let (plp, plp2) = (self.lowpt[&pe], self.lowpt2[&pe]);
                    if lp < plp {
                        self.lowpt2.insert(pe, plp.min(lp2));
                        self.lowpt.insert(pe, lp);
                    } else if lp > plp {
                        self.lowpt2.insert(pe, plp2.min(lp));
                    } else {
                        self.lowpt2.insert(pe, plp2.min(lp2));
                    }
                }
                ind[v] += 1;
            }
            let _ = descended;
        }
    }

    fn interval_conflicting(&self, i: &Interval, b: HalfEdge) -> bool {
        match i.high {
            Some(h) => self.lowpt[&h] > self.lowpt[&b],
            None => false,
        }
    }

    fn pair_lowest(&self, p: &ConflictPair) -> usize {
        match (p.left.low, p.right.low) {
            (None, Some(r)) => self.lowpt[&r],
            (Some(l), None) => self.lowpt[&l],
            (Some(l), Some(r)) => self.lowpt[&l].min(self.lowpt[&r]),
            (None, None) => unreachable!("empty conflict pairs are never pushed"),
        }
    }

    /// Check that the return edges of each DFS subtree can be split into
    /// a left and a right side; false means a constraint is unsatisfiable
    /// and the graph is non-planar.
    fn dfs_testing(&mut self, root: usize, ind: &mut [usize], skip_init: &mut HashSet<HalfEdge>) -> bool {
        let mut dfs_stack = vec![root];
        while let Some(v) = dfs_stack.pop() {
            let e = self.parent_edge[v];
            let mut skip_final = false;
            while ind[v] < self.ordered_adjs[v].len() {
                let w = self.ordered_adjs[v][ind[v]];
                let ei = (v, w);
                if !skip_init.contains(&ei) {
                    self.stack_bottom.insert(ei, self.stack.len());
                    if Some(ei) == self.parent_edge[w] {
                        // tree edge
                        dfs_stack.push(v);
                        dfs_stack.push(w);
                        skip_init.insert(ei);
                        skip_final = true;
                        break;
                    }
                    // back edge
                    self.lowpt_edge.insert(ei, ei);
                    self.stack.push(ConflictPair {
                        left: Interval::default(),
                        right: Interval::new(ei, ei),
                    });
                }
                // integrate return edges of ei
                if self.lowpt[&ei] < self.height[v].expect("v was visited") {
                    let pe = e.expect("a return edge implies v is not a root");
                    if w == self.ordered_adjs[v][0] {
                        let le = self.lowpt_edge[&ei];
                        self.lowpt_edge.insert(pe, le);
                    } else if !self.add_constraints(ei, pe) {
                        return false;
                    }
                }
                ind[v] += 1;
            }
            if !skip_final {
                if let Some(pe) = e {
                    self.remove_back_edges(pe);
                }
            }
        }
        true
    }

    fn add_constraints(&mut self, ei: HalfEdge, e: HalfEdge) -> bool {
        let mut p = ConflictPair::default();
        // merge return edges of ei into p.right
        loop {
            let mut q = self
                .stack
                .pop()
                .expect("edges with return edges leave conflict pairs above stack_bottom");
            if !q.left.empty() {
                q.swap();
            }
            if !q.left.empty() {
                return false; // not planar
            }
            let q_low = q.right.low.expect("pushed intervals carry a low edge");
            if self.lowpt[&q_low] > self.lowpt[&e] {
                // merge the interval
                if p.right.empty() {
                    p.right = q.right;
                } else {
                    let prl = p.right.low.expect("non-empty interval has a low edge");
                    self.set_ref(prl, q.right.high);
                }
                p.right.low = q.right.low;
            } else {
                // align
                let le = self.lowpt_edge[&e];
                self.set_ref(q_low, Some(le));
            }
            if self.stack.len() == self.stack_bottom[&ei] {
                break;
            }
        }
        // merge conflicting return edges of earlier siblings into p.left
        loop {
            let conflicts = match self.stack.last() {
                Some(t) => {
                    self.interval_conflicting(&t.left, ei) || self.interval_conflicting(&t.right, ei)
                }
                None => false,
            };
            if !conflicts {
                break;
            }
            let mut q = self.stack.pop().expect("checked non-empty");
            if self.interval_conflicting(&q.right, ei) {
                q.swap();
            }
            if self.interval_conflicting(&q.right, ei) {
                return false; // not planar
            }
            // merge the part below lowpt(ei) into p.right
            if let Some(prl) = p.right.low {
                self.set_ref(prl, q.right.high);
            }
            if let Some(qrl) = q.right.low {
                p.right.low = Some(qrl);
            }
            if p.left.empty() {
                p.left = q.left;
            } else {
                let pll = p.left.low.expect("non-empty interval has a low edge");
                self.set_ref(pll, q.left.high);
            }
            p.left.low = q.left.low;
        }
        if !(p.left.empty() && p.right.empty()) {
            self.stack.push(p);
        }
        true
    }

    /// Drop constraints resolved when the DFS returns over tree edge `e`
    /// to its lower endpoint.
    fn remove_back_edges(&mut self, e: HalfEdge) {
        let u = e.0;
        let hu = self.height[u].expect("u was visited");
        // drop pairs whose return edges all end at u
        loop {
            match self.stack.last() {
                Some(top) if self.pair_lowest(top) == hu => {
                    let p = self.stack.pop().expect("checked non-empty");
                    if let Some(pll) = p.left.low {
                        self.set_side(pll, -1);
                    }
                }
                _ => break,
            }
        }
        // trim the topmost remaining pair
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high {
                if h.1 != u {
                    break;
                }
                p.left.high = self.get_ref(h);
            }
            if p.left.high.is_none() {
                if let Some(pll) = p.left.low {
                    // left interval just emptied
                    self.set_ref(pll, p.right.low);
                    self.set_side(pll, -1);
                    p.left.low = None;
                }
            }
            while let Some(h) = p.right.high {
                if h.1 != u {
                    break;
                }
                p.right.high = self.get_ref(h);
            }
            if p.right.high.is_none() {
                if let Some(prl) = p.right.low {
                    // right interval just emptied
                    self.set_ref(prl, p.left.low);
                    self.set_side(prl, -1);
                    p.right.low = None;
                }
            }
            self.stack.push(p);
        }
        // the side of e is the side of its highest return edge
        if self.lowpt[&e] < hu {
            let top = self
                .stack
                .last()
                .expect("a return edge below u leaves a conflict pair");
            let chosen = match (top.left.high, top.right.high) {
                (Some(hl), Some(hr)) => Some(if self.lowpt[&hl] > self.lowpt[&hr] { hl } else { hr }),
                (Some(hl), None) => Some(hl),
                (None, other) => other,
            };
            self.set_ref(e, chosen);
        }
    }

    /// Resolve the relative side of an edge to an absolute sign by
    /// following (and consuming) its reference chain.
    fn sign_of(&mut self, e: HalfEdge) -> i8 {
        let mut stack = vec![e];
        let mut old_ref: HashMap<HalfEdge, HalfEdge> = HashMap::new();
        while let Some(x) = stack.pop() {
            if let Some(r) = self.get_ref(x) {
                stack.push(x); // revisit after resolving r
                stack.push(r);
                old_ref.insert(x, r);
                self.set_ref(x, None);
            } else if let Some(&r) = old_ref.get(&x) {
                let s = self.get_side(x) * self.get_side(r);
                self.set_side(x, s);
            }
        }
        self.get_side(e)
    }

    /// Embedding phase; call only after `test` returned true. Produces
    /// the clockwise neighbor order per node.
    fn embed(&mut self) -> Vec<Vec<usize>> {
        let all_edges: Vec<HalfEdge> = (0..self.n)
            .flat_map(|v| self.oriented[v].clone().into_iter().map(move |w| (v, w)))
            .collect();
        for e in all_edges {
            let s = self.sign_of(e) as i64;
            let depth = self.nesting_depth[&e];
            self.nesting_depth.insert(e, s * depth);
        }
        self.sort_by_nesting_depth();
        let mut emb = EmbeddingBuilder::new(self.n);
        for v in 0..self.n {
            let mut previous = None;
            for &w in &self.ordered_adjs[v] {
                emb.add_cw(v, w, previous);
                previous = Some(w);
            }
        }
        let mut ind = vec![0usize; self.n];
        let mut left_ref = vec![None; self.n];
        let mut right_ref = vec![None; self.n];
        let roots = self.roots.clone();
        for r in roots {
            self.dfs_embedding(r, &mut emb, &mut ind, &mut left_ref, &mut right_ref);
        }
        emb.rotations()
    }

    fn dfs_embedding(
        &mut self,
        root: usize,
        emb: &mut EmbeddingBuilder,
        ind: &mut [usize],
        left_ref: &mut [Option<usize>],
        right_ref: &mut [Option<usize>],
    ) {
        let mut dfs_stack = vec![root];
        while let Some(v) = dfs_stack.pop() {
            let mut descend = None;
            while ind[v] < self.ordered_adjs[v].len() {
                let w = self.ordered_adjs[v][ind[v]];
                ind[v] += 1;
                let ei = (v, w);
                if Some(ei) == self.parent_edge[w] {
                    // tree edge: v becomes the first neighbor of w
                    emb.add_first(w, v);
                    left_ref[v] = Some(w);
                    right_ref[v] = Some(w);
                    dfs_stack.push(v); // revisit v after finishing w
                    descend = Some(w);
                    break;
                }
                // back edge
                if self.get_side(ei) == 1 {
                    let r = right_ref[w].expect("ancestor has an embedded tree child");
                    emb.add_cw(w, v, Some(r));
                } else {
                    let l = left_ref[w].expect("ancestor has an embedded tree child");
                    emb.add_ccw(w, v, Some(l));
                    left_ref[w] = Some(v);
                }
            }
            if let Some(w) = descend {
                dfs_stack.push(w);
            }
        }
    }
}

/// Rotation system under construction: a doubly linked cyclic neighbor
/// list per node plus the node's designated first neighbor.
struct EmbeddingBuilder {
    first_nbr: Vec<Option<usize>>,
    cw: HashMap<HalfEdge, usize>,
    ccw: HashMap<HalfEdge, usize>,
}

impl EmbeddingBuilder {
    fn new(n: usize) -> Self {
        EmbeddingBuilder {
            first_nbr: vec![None; n],
            cw: HashMap::new(),
            ccw: HashMap::new(),
        }
    }

    /// Insert w clockwise-after `reference` in v's rotation.
    fn add_cw(&mut self, v: usize, w: usize, reference: Option<usize>) {
        match reference {
            None => {
                self.cw.insert((v, w), w);
                self.ccw.insert((v, w), w);
                self.first_nbr[v] = Some(w);
            }
            Some(r) => {
                let after = self.cw[&(v, r)];
                self.cw.insert((v, r), w);
                self.cw.insert((v, w), after);
                self.ccw.insert((v, after), w);
                self.ccw.insert((v, w), r);
            }
        }
    }

    /// Insert w counterclockwise-before `reference`; if the reference was
    /// the first neighbor, w takes its place.
    fn add_ccw(&mut self, v: usize, w: usize, reference: Option<usize>) {
        match reference {
            None => self.add_cw(v, w, None),
            Some(r) => {
                let before = self.ccw[&(v, r)];
                self.add_cw(v, w, Some(before));
                if self.first_nbr[v] == Some(r) {
                    self.first_nbr[v] = Some(w);
                }
            }
        }
    }

    fn add_first(&mut self, v: usize, w: usize) {
        let r = self.first_nbr[v];
        self.add_ccw(v, w, r);
    }

    fn rotations(&self) -> Vec<Vec<usize>> {
        (0..self.first_nbr.len())
            .map(|v| {
                let mut order = Vec::new();
                if let Some(first) = self.first_nbr[v] {
                    let mut w = first;
                    loop {
                        order.push(w);
                        w = self.cw[&(v, w)];
                        if w == first {
                            break;
                        }
                    }
                }
                order
            })
            .collect()
    }
}
