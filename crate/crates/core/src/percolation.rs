//! Site and bond configurations, cluster analysis, independent and
//! divide-and-color sampling, exact positive-association and domination
//! certificates, uniform spanning trees, and trifurcation counting.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hex::HexPatch;
use crate::measure::ExactMeasure;
use crate::rng::StreamRng;

/// Plain adjacency-list graph shared by site configurations.
#[derive(Debug, Clone)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: Vec<(u32, u32)>) -> Graph {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        Graph { n, edges, adj }
    }

    /// Same vertex and edge ids as the patch.
    pub fn from_hex_patch(patch: &HexPatch) -> Graph {
        Graph::from_edges(
            patch.vertices.len(),
            patch.edges.iter().map(|e| (e.up, e.down)).collect(),
        )
    }

    /// L x L rhombus of the triangular lattice in axial coordinates:
    /// neighbors (+-1,0), (0,+-1), (+1,-1), (-1,+1). Vertex id = i*L + j.
    pub fn triangular_rhombus(l: usize) -> Graph {
        let id = |i: usize, j: usize| (i * l + j) as u32;
        let mut edges = Vec::new();
        for i in 0..l {
            for j in 0..l {
                if i + 1 < l {
                    edges.push((id(i, j), id(i + 1, j)));
                }
                if j + 1 < l {
                    edges.push((id(i, j), id(i, j + 1)));
                }
                if i + 1 < l && j > 0 {
                    edges.push((id(i, j), id(i + 1, j - 1)));
                }
            }
        }
        Graph::from_edges(l * l, edges)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Induced subgraph on a vertex subset; returns the subgraph and the map
    /// from new ids to original ids.
    pub fn induced(&self, verts: &[u32]) -> (Graph, Vec<u32>) {
        let mut back = vec![u32::MAX; self.n];
        for (i, &v) in verts.iter().enumerate() {
            back[v as usize] = i as u32;
        }
        let mut edges = Vec::new();
        for &(u, v) in &self.edges {
            let (a, b) = (back[u as usize], back[v as usize]);
            if a != u32::MAX && b != u32::MAX {
                edges.push((a, b));
            }
        }
        (Graph::from_edges(verts.len(), edges), verts.to_vec())
    }

    /// Boundary of a vertex set: members adjacent to the complement.
    pub fn boundary_of(&self, in_set: &[bool]) -> Vec<u32> {
        (0..self.n as u32)
            .filter(|&v| {
                in_set[v as usize] && self.adj[v as usize].iter().any(|&w| !in_set[w as usize])
            })
            .collect()
    }
}

/// Union-find with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn size_of(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// One bit per vertex of a host graph.
#[derive(Debug, Clone)]
pub struct SiteConfig {
    pub graph: Arc<Graph>,
    pub open: Vec<bool>,
}

impl SiteConfig {
    pub fn new(graph: Arc<Graph>, open: Vec<bool>) -> Result<SiteConfig> {
        if open.len() != graph.n {
            return Err(Error::InvalidParameter(
                "site config length differs from vertex count".into(),
            ));
        }
        Ok(SiteConfig { graph, open })
    }

    pub fn constant(graph: Arc<Graph>, value: bool) -> SiteConfig {
        let open = vec![value; graph.n];
        SiteConfig { graph, open }
    }

    pub fn complement(&self) -> SiteConfig {
        SiteConfig {
            graph: self.graph.clone(),
            open: self.open.iter().map(|&b| !b).collect(),
        }
    }

    pub fn open_fraction(&self) -> f64 {
        self.open.iter().filter(|&&b| b).count() as f64 / self.graph.n as f64
    }
}

/// One bit per edge of a host graph.
#[derive(Debug, Clone)]
pub struct BondConfig {
    pub graph: Arc<Graph>,
    pub open: Vec<bool>,
}

impl BondConfig {
    pub fn new(graph: Arc<Graph>, open: Vec<bool>) -> Result<BondConfig> {
        if open.len() != graph.edges.len() {
            return Err(Error::InvalidParameter(
                "bond config length differs from edge count".into(),
            ));
        }
        Ok(BondConfig { graph, open })
    }

    /// Clusters of the open subgraph (isolated vertices are singletons).
    pub fn clusters(&self) -> Clustering {
        let mut uf = UnionFind::new(self.graph.n);
        for (e, &(u, v)) in self.graph.edges.iter().enumerate() {
            if self.open[e] {
                uf.union(u, v);
            }
        }
        Clustering::from_union_find(&mut uf, None)
    }
}

/// Vertex partition into equivalence classes.
#[derive(Debug, Clone)]
pub struct Partition {
    pub graph: Arc<Graph>,
    pub class: Vec<u32>,
    pub n_classes: usize,
}

impl Partition {
    pub fn new(graph: Arc<Graph>, class: Vec<u32>) -> Result<Partition> {
        if class.len() != graph.n {
            return Err(Error::InvalidParameter(
                "partition length differs from vertex count".into(),
            ));
        }
        let n_classes = class.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut seen = vec![false; n_classes];
        for &c in &class {
            seen[c as usize] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidParameter("partition has empty classes".into()));
        }
        Ok(Partition {
            graph,
            class,
            n_classes,
        })
    }

    pub fn singletons(graph: Arc<Graph>) -> Partition {
        let class = (0..graph.n as u32).collect();
        let n_classes = graph.n;
        Partition {
            graph,
            class,
            n_classes,
        }
    }
}

/// Cluster labeling plus sizes, computed in one pass.
#[derive(Debug, Clone)]
pub struct Clustering {
    /// Cluster id per vertex; `u32::MAX` for vertices excluded by state.
    pub label: Vec<u32>,
    pub sizes: Vec<u32>,
}

impl Clustering {
    fn from_union_find(uf: &mut UnionFind, include: Option<&[bool]>) -> Clustering {
        let n = uf.parent.len();
        let mut label = vec![u32::MAX; n];
        let mut sizes = Vec::new();
        let mut root_label: HashMap<u32, u32> = HashMap::new();
        for v in 0..n as u32 {
            if include.map(|m| !m[v as usize]).unwrap_or(false) {
                continue;
            }
            let r = uf.find(v);
            let lab = *root_label.entry(r).or_insert_with(|| {
                sizes.push(0);
                (sizes.len() - 1) as u32
            });
            label[v as usize] = lab;
            sizes[lab as usize] += 1;
        }
        Clustering { label, sizes }
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> u32 {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn same_cluster(&self, a: u32, b: u32) -> bool {
        self.label[a as usize] != u32::MAX && self.label[a as usize] == self.label[b as usize]
    }
}

/// Label the clusters of vertices in the given state.
pub fn clusters(cfg: &SiteConfig, state: bool) -> Clustering {
    let g = &cfg.graph;
    let include: Vec<bool> = cfg.open.iter().map(|&b| b == state).collect();
    let mut uf = UnionFind::new(g.n);
    for &(u, v) in &g.edges {
        if include[u as usize] && include[v as usize] {
            uf.union(u, v);
        }
    }
    Clustering::from_union_find(&mut uf, Some(&include))
}

/// Is there a state-cluster meeting both vertex sets?
pub fn has_crossing(cfg: &SiteConfig, from: &[u32], to: &[u32], state: bool) -> bool {
    let cl = clusters(cfg, state);
    let mut hit = vec![false; cl.sizes.len()];
    for &v in from {
        let l = cl.label[v as usize];
        if l != u32::MAX {
            hit[l as usize] = true;
        }
    }
    to.iter().any(|&v| {
        let l = cl.label[v as usize];
        l != u32::MAX && hit[l as usize]
    })
}

/// Independent Bernoulli(p) site configuration.
pub fn bernoulli_sites(graph: &Arc<Graph>, p: f64, seed: u64) -> Result<SiteConfig> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p={p} outside [0,1]")));
    }
    let mut rng = StreamRng::new(seed, 0);
    let open = (0..graph.n).map(|_| rng.coin(p)).collect();
    Ok(SiteConfig {
        graph: graph.clone(),
        open,
    })
}

/// Color every class of the partition open with probability p, independently
/// across classes.
pub fn divide_and_color(partition: &Partition, p: f64, seed: u64) -> Result<SiteConfig> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p={p} outside [0,1]")));
    }
    let mut rng = StreamRng::new(seed, 0);
    let class_open: Vec<bool> = (0..partition.n_classes).map(|_| rng.coin(p)).collect();
    let open = partition
        .class
        .iter()
        .map(|&c| class_open[c as usize])
        .collect();
    Ok(SiteConfig {
        graph: partition.graph.clone(),
        open,
    })
}

/// Exact law of the divide-and-color measure on small hosts.
pub fn divide_and_color_law(partition: &Partition, p: f64) -> Result<ExactMeasure> {
    let m = partition.graph.n;
    if m > 20 || partition.n_classes > 20 {
        return Err(Error::EnumerationGuard {
            faces: m,
            limit: 20,
        });
    }
    let mut acc: HashMap<u64, f64> = HashMap::new();
    for outcome in 0..1u64 << partition.n_classes {
        let ones = outcome.count_ones() as i32;
        let w = p.powi(ones) * (1.0 - p).powi(partition.n_classes as i32 - ones);
        let mut config = 0u64;
        for (v, &c) in partition.class.iter().enumerate() {
            if outcome >> c & 1 == 1 {
                config |= 1 << v;
            }
        }
        *acc.entry(config).or_insert(0.0) += w;
    }
    let mut configs: Vec<u64> = acc.keys().copied().collect();
    configs.sort_unstable();
    let probs = configs.iter().map(|c| acc[c]).collect();
    ExactMeasure::new(m, configs, probs)
}

/// Strassen-style monotone coupling of Bernoulli(p) and Bernoulli(1-p) from
/// shared uniforms: `sigma_v = [U_v < p]`, `tau_v = [U_v < 1-p]`.
pub fn monotone_coupling(
    graph: &Arc<Graph>,
    p: f64,
    seed: u64,
) -> Result<(SiteConfig, SiteConfig)> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "monotone coupling needs p <= 1/2, got {p}"
        )));
    }
    let mut rng = StreamRng::new(seed, 0);
    let mut sigma = Vec::with_capacity(graph.n);
    let mut tau = Vec::with_capacity(graph.n);
    for _ in 0..graph.n {
        let u = rng.uniform();
        sigma.push(u < p);
        tau.push(u < 1.0 - p);
    }
    Ok((
        SiteConfig {
            graph: graph.clone(),
            open: sigma,
        },
        SiteConfig {
            graph: graph.clone(),
            open: tau,
        },
    ))
}

/// An event over {0,1}^m encoded as a bitmask over the 2^m configurations.
pub type EventMask = u32;

/// All monotone (increasing) events on m <= 4 sites, constants included.
pub fn increasing_events(m: usize) -> Result<Vec<EventMask>> {
    if m > 4 {
        return Err(Error::InvalidParameter(format!(
            "increasing_events guard: m={m} > 4"
        )));
    }
    let n_cfg = 1u32 << m;
    let mut events = Vec::new();
    'candidates: for f in 0..1u64 << n_cfg {
        for c in 0..n_cfg {
            if f >> c & 1 == 0 {
                continue;
            }
            // Indicator must stay 1 when any site is raised.
            for i in 0..m {
                let up = c | 1 << i;
                if f >> up & 1 == 0 {
                    continue 'candidates;
                }
            }
        }
        events.push(f as EventMask);
    }
    Ok(events)
}

fn event_prob(mu: &ExactMeasure, event: EventMask) -> f64 {
    mu.configs
        .iter()
        .zip(&mu.probs)
        .filter(|(&c, _)| event >> c & 1 == 1)
        .map(|(_, &p)| p)
        .sum()
}

/// The increasing events that are neither empty nor full; the constants
/// trivially achieve every correlation bound with equality, so gap minima
/// are taken over the informative events.
fn nontrivial_increasing(m: usize) -> Result<Vec<EventMask>> {
    let full: EventMask = if m == 0 {
        1
    } else {
        ((1u64 << (1u32 << m)) - 1) as EventMask
    };
    Ok(increasing_events(m)?
        .into_iter()
        .filter(|&e| e != 0 && e != full)
        .collect())
}

/// Worst positive-association gap: min over non-constant increasing A, B of
/// P(A and B) - P(A) P(B). Nonnegative iff the measure is positively
/// associated.
pub fn check_positive_association(mu: &ExactMeasure) -> Result<f64> {
    if mu.n_bits > 4 {
        return Err(Error::InvalidParameter(
            "positive association check limited to 4 sites".into(),
        ));
    }
    let events = nontrivial_increasing(mu.n_bits)?;
    if events.is_empty() {
        return Ok(0.0);
    }
    let probs: Vec<f64> = events.iter().map(|&e| event_prob(mu, e)).collect();
    let mut worst = f64::INFINITY;
    for (i, &a) in events.iter().enumerate() {
        for (j, &b) in events.iter().enumerate() {
            let joint = event_prob(mu, a & b);
            let gap = joint - probs[i] * probs[j];
            if gap < worst {
                worst = gap;
            }
        }
    }
    Ok(worst)
}

/// Worst domination gap: min over non-constant increasing A of
/// P(1-sigma in A) - P(sigma in A). Nonnegative iff sigma is stochastically
/// dominated by its complement.
pub fn check_dominated_by_complement(mu: &ExactMeasure) -> Result<f64> {
    if mu.n_bits > 4 {
        return Err(Error::InvalidParameter(
            "domination check limited to 4 sites".into(),
        ));
    }
    let events = nontrivial_increasing(mu.n_bits)?;
    if events.is_empty() {
        return Ok(0.0);
    }
    let full = (1u64 << mu.n_bits) - 1;
    let mut worst = f64::INFINITY;
    for &a in &events {
        let direct = event_prob(mu, a);
        let complemented: f64 = mu
            .configs
            .iter()
            .zip(&mu.probs)
            .filter(|(&c, _)| a >> (full ^ c) & 1 == 1)
            .map(|(_, &p)| p)
            .sum();
        let gap = complemented - direct;
        if gap < worst {
            worst = gap;
        }
    }
    Ok(worst)
}

/// Acyclic edge subset spanning its components.
#[derive(Debug, Clone)]
pub struct SpanningForest {
    pub graph: Arc<Graph>,
    pub in_forest: Vec<bool>,
}

impl SpanningForest {
    pub fn forest_adj(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.graph.n];
        for (e, &(u, v)) in self.graph.edges.iter().enumerate() {
            if self.in_forest[e] {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        adj
    }

    pub fn edge_count(&self) -> usize {
        self.in_forest.iter().filter(|&&b| b).count()
    }

    /// Canonical identity: sorted list of forest edge ids.
    pub fn edge_ids(&self) -> Vec<u32> {
        self.in_forest
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(e, _)| e as u32)
            .collect()
    }
}

/// Uniform spanning tree by Wilson's loop-erased random walk.
pub fn wilson_ust(graph: &Arc<Graph>, seed: u64) -> Result<SpanningForest> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = graph.n;
    let mut rng = StreamRng::new(seed, 0);
    let mut in_tree = vec![false; n];
    let mut next = vec![u32::MAX; n];
    in_tree[0] = true;
    for i in 0..n {
        let mut u = i;
        while !in_tree[u] {
            let nbrs = &graph.adj[u];
            let w = nbrs[rng.index(nbrs.len())];
            next[u] = w;
            u = w as usize;
        }
        let mut u = i;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u] as usize;
        }
    }
    // Committed vertices keep their final `next` pointer, which is their
    // parent in the tree.
    let mut edge_of: HashMap<(u32, u32), usize> = HashMap::new();
    for (e, &(u, v)) in graph.edges.iter().enumerate() {
        edge_of.insert((u.min(v), u.max(v)), e);
    }
    let mut in_forest = vec![false; graph.edges.len()];
    for v in 1..n as u32 {
        let p = next[v as usize];
        let e = edge_of[&(v.min(p), v.max(p))];
        in_forest[e] = true;
    }
    Ok(SpanningForest {
        graph: graph.clone(),
        in_forest,
    })
}

/// Vertices of K whose removal splits their tree component into at least
/// three parts, each meeting B.
pub fn trifurcations(forest: &SpanningForest, k_set: &[bool], b_set: &[bool]) -> Vec<u32> {
    let adj = forest.forest_adj();
    let n = forest.graph.n;
    let mut out = Vec::new();
    for v in 0..n as u32 {
        if !k_set[v as usize] || adj[v as usize].len() < 3 {
            continue;
        }
        let mut parts_meeting_b = 0;
        for &w in &adj[v as usize] {
            // Explore the subtree hanging off w when v is removed.
            let mut stack = vec![w];
            let mut seen = vec![false; n];
            seen[v as usize] = true;
            seen[w as usize] = true;
            let mut meets = b_set[w as usize];
            while let Some(x) = stack.pop() {
                for &y in &adj[x as usize] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        meets |= b_set[y as usize];
                        stack.push(y);
                    }
                }
            }
            if meets {
                parts_meeting_b += 1;
            }
        }
        if parts_meeting_b >= 3 {
            out.push(v);
        }
    }
    out
}

/// Burton-Keane bound: the number of trifurcations of the forest inside K is
/// at most |boundary of K| in the ambient graph.
pub fn trifurcation_bound_check(
    forest: &SpanningForest,
    k_set: &[bool],
    ambient: &Graph,
) -> bool {
    let boundary = ambient.boundary_of(k_set);
    let mut b_mask = vec![false; ambient.n];
    for &v in &boundary {
        b_mask[v as usize] = true;
    }
    let t = trifurcations(forest, k_set, &b_mask);
    t.len() <= boundary.len()
}
