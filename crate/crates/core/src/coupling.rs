//! Blocking vertices, domain walls, and the resampling coupling.
//!
//! Given a loop configuration omega, blocking vertices xi freeze whole loops
//! (each with probability (n-1)/n) and isolated up-vertices (probability
//! 1-x^2). The unfrozen part omega_free is the domain-wall set of a spin
//! assignment sigma_bc on the faces; resampling the signs of the Delta(xi)
//! clusters contained in a window and taking domain walls again yields a new
//! configuration with the same law. `resample_pushforward` verifies that
//! identity exactly by enumerating every coin of the kernel.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hex::{Domain, EdgeSet, FaceCoord, HexPatch, HexVertex};
use crate::loopmodel::{decompose, enumerate_gibbs, Component, GibbsMeasure, GibbsSpec, LoopConfig};
use crate::percolation::{BondConfig, Clustering, Graph, UnionFind};
use crate::rng::{derive_seed, keyed_coin, StreamRng};

/// Blocking vertices: a site configuration on the up-vertices of the host
/// patch, together with the loop configuration that generated it. Every loop
/// is either entirely open or entirely closed.
#[derive(Debug, Clone)]
pub struct BlockingConfig {
    pub omega: LoopConfig,
    /// Open flag per patch vertex id; only UP vertices can be open.
    pub open: Vec<bool>,
}

impl BlockingConfig {
    pub fn open_up_vertices(&self) -> Vec<u32> {
        (0..self.open.len() as u32)
            .filter(|&v| self.open[v as usize])
            .collect()
    }

    /// Open vertices as a JSON index list.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.open_up_vertices()).expect("index lists serialize")
    }
}

/// Plus-minus spins on the faces of a patch, with one extra spin for the
/// outer region so that domain walls are defined on boundary edges too.
#[derive(Debug, Clone)]
pub struct SpinConfig {
    pub patch: Arc<HexPatch>,
    pub spins: Vec<i8>,
    pub outer: i8,
}

impl PartialEq for SpinConfig {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.patch, &other.patch)
            && self.spins == other.spins
            && self.outer == other.outer
    }
}

impl SpinConfig {
    pub fn constant(patch: Arc<HexPatch>, s: i8) -> SpinConfig {
        let spins = vec![s; patch.faces.len()];
        SpinConfig {
            patch,
            spins,
            outer: s,
        }
    }

    pub fn flipped(&self) -> SpinConfig {
        SpinConfig {
            patch: self.patch.clone(),
            spins: self.spins.iter().map(|&s| -s).collect(),
            outer: -self.outer,
        }
    }

    fn side(&self, face: Option<u32>) -> i8 {
        match face {
            Some(f) => self.spins[f as usize],
            None => self.outer,
        }
    }
}

/// Partition of a configuration into the blocked part (loops covered by xi)
/// and the free remainder.
#[derive(Debug, Clone)]
pub struct OmegaSplit {
    pub free: LoopConfig,
    pub block: LoopConfig,
}

impl OmegaSplit {
    /// Both parts as JSON edge-index lists.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "free": self.free.edge_indices(),
            "block": self.block.edge_indices(),
        })
        .to_string()
    }
}

fn check_blocking_probabilities(n: f64, x: f64) -> Result<(f64, f64)> {
    if n < 1.0 || x <= 0.0 || x > 1.0 {
        return Err(Error::BlockingProbability { n, x });
    }
    Ok(((n - 1.0) / n, 1.0 - x * x))
}

/// Sample blocking vertices for a configuration: whole loops with
/// probability (n-1)/n, isolated up-vertices with probability 1-x^2.
pub fn sample_xi(omega: &LoopConfig, n: f64, x: f64, seed: u64) -> Result<BlockingConfig> {
    let (beta, gamma) = check_blocking_probabilities(n, x)?;
    let patch = &omega.patch;
    let whole = Domain::whole(patch.clone());
    let dec = decompose(omega, &whole);
    let mut rng = StreamRng::new(seed, 0);
    let mut open = vec![false; patch.vertices.len()];
    for comp in &dec.loops {
        if rng.coin(beta) {
            for &v in &comp.vertices {
                if patch.vertices[v as usize].up {
                    open[v as usize] = true;
                }
            }
        }
    }
    for &v in &patch.up_vertices {
        if patch.degree_in(v, &omega.edges) == 0 && rng.coin(gamma) {
            open[v as usize] = true;
        }
    }
    Ok(BlockingConfig {
        omega: omega.clone(),
        open,
    })
}

/// Domain walls: the edges separating faces (or a face and the outer region)
/// of opposite spin. Always a valid loop configuration.
pub fn dw(sigma: &SpinConfig) -> LoopConfig {
    let patch = &sigma.patch;
    let mut edges = patch.empty_edge_set();
    for (e, pe) in patch.edges.iter().enumerate() {
        if sigma.side(pe.faces[0]) != sigma.side(pe.faces[1]) {
            edges.insert(e);
        }
    }
    debug_assert!(
        LoopConfig::validate(patch.clone(), edges.clone()).is_ok(),
        "domain walls always have even degrees"
    );
    LoopConfig {
        patch: patch.clone(),
        edges,
    }
}

/// Anchor for the inverse domain-wall map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Face(FaceCoord),
    Outer,
}

/// Default anchor: the origin face when the patch contains it, otherwise the
/// first face in the patch's canonical order.
pub fn default_anchor(patch: &HexPatch) -> Anchor {
    if patch.contains_face(FaceCoord::new(0, 0)) {
        Anchor::Face(FaceCoord::new(0, 0))
    } else {
        Anchor::Face(patch.faces[0])
    }
}

/// The spin assignment whose domain walls are the given configuration, with
/// the anchor pinned to the given sign. Spins follow crossing parity along
/// dual paths; even degrees make the result path-independent.
pub fn dw_inverse(omega: &LoopConfig, anchor: Anchor, sign: i8) -> SpinConfig {
    let patch = &omega.patch;
    let n_faces = patch.faces.len();
    let outer_node = n_faces;
    let mut spin = vec![0i8; n_faces + 1];
    let start = match anchor {
        Anchor::Face(f) => patch.face_id(f).expect("anchor face must be in the patch") as usize,
        Anchor::Outer => outer_node,
    };
    spin[start] = sign;
    let mut stack = vec![start];
    while let Some(node) = stack.pop() {
        let s = spin[node];
        let edge_ids: Vec<u32> = if node == outer_node {
            (0..patch.edges.len() as u32)
                .filter(|&e| patch.edges[e as usize].is_boundary())
                .collect()
        } else {
            patch.face_edges[node].to_vec()
        };
        for e in edge_ids {
            let pe = &patch.edges[e as usize];
            let other = match (pe.faces[0], pe.faces[1]) {
                (Some(a), Some(b)) => {
                    if a as usize == node {
                        b as usize
                    } else {
                        a as usize
                    }
                }
                (Some(a), None) => {
                    if node == outer_node {
                        a as usize
                    } else {
                        outer_node
                    }
                }
                (None, Some(b)) => {
                    if node == outer_node {
                        b as usize
                    } else {
                        outer_node
                    }
                }
                (None, None) => unreachable!("every edge borders a face"),
            };
            let flip = omega.edges.contains(e as usize);
            let target = if flip { -s } else { s };
            if spin[other] == 0 {
                spin[other] = target;
                stack.push(other);
            } else {
                debug_assert_eq!(
                    spin[other], target,
                    "crossing parity inconsistent: configuration has odd degrees"
                );
            }
        }
    }
    let outer = spin[outer_node];
    spin.truncate(n_faces);
    SpinConfig {
        patch: patch.clone(),
        spins: spin,
        outer,
    }
}

/// The triangular lattice neighborhood of a patch: all face coordinates
/// touched by the up-triangles of its up-vertices, with full triangular
/// adjacency.
#[derive(Debug, Clone)]
pub struct TriGraph {
    pub graph: Arc<Graph>,
    pub nodes: Vec<FaceCoord>,
    pub index: HashMap<FaceCoord, u32>,
    edge_index: HashMap<(u32, u32), u32>,
}

impl TriGraph {
    pub fn node_of(&self, f: FaceCoord) -> Option<u32> {
        self.index.get(&f).copied()
    }

    pub fn edge_between(&self, a: FaceCoord, b: FaceCoord) -> Option<u32> {
        let (i, j) = (self.node_of(a)?, self.node_of(b)?);
        self.edge_index.get(&(i.min(j), i.max(j))).copied()
    }
}

pub fn tri_graph_around(patch: &HexPatch) -> TriGraph {
    let mut nodes: Vec<FaceCoord> = patch
        .up_vertices
        .iter()
        .flat_map(|&v| patch.vertices[v as usize].faces())
        .collect();
    nodes.sort();
    nodes.dedup();
    let index: HashMap<FaceCoord, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i as u32))
        .collect();
    let mut edges = Vec::new();
    let mut edge_index = HashMap::new();
    for (i, &c) in nodes.iter().enumerate() {
        for nb in c.neighbors() {
            if let Some(&j) = index.get(&nb) {
                let (a, b) = (i as u32, j);
                if a < b {
                    edge_index.insert((a, b), edges.len() as u32);
                    edges.push((a, b));
                }
            }
        }
    }
    TriGraph {
        graph: Arc::new(Graph::from_edges(nodes.len(), edges)),
        nodes,
        index,
        edge_index,
    }
}

/// Delta(xi): the bond configuration on the triangular lattice spanned by
/// the upward triangles of the open blocking vertices.
#[derive(Debug, Clone)]
pub struct DeltaBonds {
    pub tri: TriGraph,
    pub bonds: BondConfig,
}

impl DeltaBonds {
    pub fn clusters(&self) -> Clustering {
        self.bonds.clusters()
    }

    pub fn open_edge_count(&self) -> usize {
        self.bonds.open.iter().filter(|&&b| b).count()
    }

    /// Open bonds as a JSON list of face-coordinate pairs.
    pub fn to_json(&self) -> String {
        let pairs: Vec<[[i32; 2]; 2]> = self
            .bonds
            .open
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(e, _)| {
                let (a, b) = self.tri.graph.edges[e];
                let (ca, cb) = (self.tri.nodes[a as usize], self.tri.nodes[b as usize]);
                [[ca.k, ca.l], [cb.k, cb.l]]
            })
            .collect();
        serde_json::to_string(&pairs).expect("index lists serialize")
    }
}

fn up_triangle(v: HexVertex) -> [FaceCoord; 3] {
    debug_assert!(v.up);
    v.faces()
}

/// Build Delta(xi) from the open flags of a blocking configuration.
pub fn delta_from_open(patch: &HexPatch, open: &[bool]) -> DeltaBonds {
    let tri = tri_graph_around(patch);
    let mut bits = vec![false; tri.graph.edges.len()];
    for &v in &patch.up_vertices {
        if !open[v as usize] {
            continue;
        }
        let tri_faces = up_triangle(patch.vertices[v as usize]);
        for (a, b) in [
            (tri_faces[0], tri_faces[1]),
            (tri_faces[0], tri_faces[2]),
            (tri_faces[1], tri_faces[2]),
        ] {
            let e = tri
                .edge_between(a, b)
                .expect("triangle edges are in the tri graph");
            bits[e as usize] = true;
        }
    }
    let bonds = BondConfig::new(tri.graph.clone(), bits).expect("sized to the tri graph");
    DeltaBonds { tri, bonds }
}

pub fn delta(xi: &BlockingConfig) -> DeltaBonds {
    delta_from_open(&xi.omega.patch, &xi.open)
}

/// Split a configuration into blocked and free parts by xi-coverage.
/// A loop partially covered by xi is an inconsistency.
pub fn split_omega(omega: &LoopConfig, xi: &BlockingConfig) -> Result<OmegaSplit> {
    let patch = &omega.patch;
    let whole = Domain::whole(patch.clone());
    let dec = decompose(omega, &whole);
    let mut block = patch.empty_edge_set();
    let mut free = patch.empty_edge_set();
    for (ci, comp) in dec.loops.iter().enumerate() {
        let ups: Vec<u32> = comp
            .vertices
            .iter()
            .copied()
            .filter(|&v| patch.vertices[v as usize].up)
            .collect();
        let open_count = ups.iter().filter(|&&v| xi.open[v as usize]).count();
        let target = if open_count == ups.len() {
            &mut block
        } else if open_count == 0 {
            &mut free
        } else {
            return Err(Error::InconsistentBlocking { component: ci });
        };
        for &e in &comp.edges {
            target.insert(e as usize);
        }
    }
    Ok(OmegaSplit {
        free: LoopConfig {
            patch: patch.clone(),
            edges: free,
        },
        block: LoopConfig {
            patch: patch.clone(),
            edges: block,
        },
    })
}

fn pack_coord(c: FaceCoord) -> u64 {
    let k = (c.k as i64 - i32::MIN as i64) as u64;
    let l = (c.l as i64 - i32::MIN as i64) as u64;
    (k << 32) | l
}

/// Delta(xi) clusters classified against a window: which are contained in it
/// entirely, keyed and ordered by their minimal face coordinate.
pub struct WindowClusters {
    pub delta: DeltaBonds,
    pub labels: Clustering,
    /// (min packed coord, cluster label) of the clusters fully inside the
    /// window, sorted by coordinate.
    pub inside: Vec<(u64, u32)>,
}

pub fn window_clusters(patch: &HexPatch, open: &[bool], window_faces: &[FaceCoord]) -> WindowClusters {
    let delta = delta_from_open(patch, open);
    let labels = delta.clusters();
    let wset: std::collections::HashSet<FaceCoord> = window_faces.iter().copied().collect();
    let n_labels = labels.sizes.len();
    let mut all_inside = vec![true; n_labels];
    let mut min_key = vec![u64::MAX; n_labels];
    for (node, &coord) in delta.tri.nodes.iter().enumerate() {
        let l = labels.label[node];
        if l == u32::MAX {
            continue;
        }
        let l = l as usize;
        if !wset.contains(&coord) {
            all_inside[l] = false;
        }
        min_key[l] = min_key[l].min(pack_coord(coord));
    }
    let mut inside: Vec<(u64, u32)> = (0..n_labels)
        .filter(|&l| all_inside[l])
        .map(|l| (min_key[l], l as u32))
        .collect();
    inside.sort_unstable();
    WindowClusters {
        delta,
        labels,
        inside,
    }
}

/// Resample the spins of the Delta(xi) clusters wholly inside the window;
/// every other face keeps sigma_bc. One coin per cluster, keyed by its
/// minimal face coordinate so the draw does not depend on discovery order.
pub fn sigma_tilde(
    sigma_bc: &SpinConfig,
    xi: &BlockingConfig,
    window_faces: &[FaceCoord],
    seed: u64,
) -> SpinConfig {
    let patch = &sigma_bc.patch;
    let wc = window_clusters(patch, &xi.open, window_faces);
    let signs: Vec<i8> = wc
        .inside
        .iter()
        .map(|&(key, _)| if keyed_coin(seed, key) < 0.5 { 1 } else { -1 })
        .collect();
    apply_cluster_signs(sigma_bc, &wc, &signs)
}

fn apply_cluster_signs(sigma_bc: &SpinConfig, wc: &WindowClusters, signs: &[i8]) -> SpinConfig {
    let patch = &sigma_bc.patch;
    let mut out = sigma_bc.clone();
    for (rank, &(_, label)) in wc.inside.iter().enumerate() {
        let s = signs[rank];
        for (node, &coord) in wc.delta.tri.nodes.iter().enumerate() {
            if wc.labels.label[node] == label {
                if let Some(f) = patch.face_id(coord) {
                    out.spins[f as usize] = s;
                }
            }
        }
    }
    out
}

/// The window must leave a connected complement (other faces plus the outer
/// region, joined by edges not in the window), so that straddling clusters
/// are pinned unambiguously.
pub fn check_window_margin(window: &Domain) -> Result<()> {
    let patch = &window.patch;
    let n_faces = patch.faces.len();
    let outer = n_faces;
    let mut uf = UnionFind::new(n_faces + 1);
    for pe in &patch.edges {
        match (pe.faces[0], pe.faces[1]) {
            (Some(a), Some(b)) => {
                if !window.face_mask[a as usize] && !window.face_mask[b as usize] {
                    uf.union(a, b);
                }
            }
            (Some(a), None) | (None, Some(a)) => {
                if !window.face_mask[a as usize] {
                    uf.union(a, outer as u32);
                }
            }
            (None, None) => unreachable!(),
        }
    }
    let root = uf.find(outer as u32);
    let mut parts = 1;
    for f in 0..n_faces as u32 {
        if !window.face_mask[f as usize] && uf.find(f) != root {
            parts += 1;
            // Count each stray component once.
            uf.union(f, outer as u32);
        }
    }
    if parts > 1 {
        return Err(Error::WindowMargin { parts });
    }
    Ok(())
}

/// One full resampling move: sample xi, split, rebuild spins, resample the
/// window clusters, and glue the new domain walls to the blocked part.
pub fn coupled_resample(
    omega: &LoopConfig,
    n: f64,
    x: f64,
    window: &Domain,
    seed: u64,
) -> Result<LoopConfig> {
    check_window_margin(window)?;
    let xi = sample_xi(omega, n, x, derive_seed(seed, 1))?;
    let split = split_omega(omega, &xi)?;
    let patch = &omega.patch;
    let sigma_bc = dw_inverse(&split.free, default_anchor(patch), 1);
    let window_coords: Vec<FaceCoord> = window
        .faces
        .iter()
        .map(|&f| patch.faces[f as usize])
        .collect();
    let tilde = sigma_tilde(&sigma_bc, &xi, &window_coords, derive_seed(seed, 2));
    let walls = dw(&tilde);
    debug_assert!(!walls.edges.intersects(&split.block.edges));
    let mut edges = walls.edges;
    edges.or_assign(&split.block.edges);
    let out = LoopConfig::validate(patch.clone(), edges)?;
    debug_assert!({
        let mut diff = out.edges.clone();
        diff.xor_assign(&omega.edges);
        let local = diff.iter_ones().all(|e| window.edge_set.contains(e));
        local
    });
    Ok(out)
}

/// The conditional weight of a (blocked part, xi) pair once the free part is
/// summed out: (n-1)^loops(block) * (1/x^2 - 1)^(open xi vertices off the
/// blocked part). Empty products resolve to one.
pub fn conditional_weight(block: &LoopConfig, xi_open: &[bool], n: f64, x: f64) -> f64 {
    let patch = &block.patch;
    let whole = Domain::whole(patch.clone());
    let ell = decompose(block, &whole).loops.len();
    let covered: std::collections::HashSet<u32> = decompose(block, &whole)
        .loops
        .iter()
        .flat_map(|c| c.vertices.iter().copied())
        .filter(|&v| patch.vertices[v as usize].up)
        .collect();
    let extra = patch
        .up_vertices
        .iter()
        .filter(|&&v| xi_open[v as usize] && !covered.contains(&v))
        .count();
    let pow0 = |b: f64, e: usize| if e == 0 { 1.0 } else { b.powi(e as i32) };
    pow0(n - 1.0, ell) * pow0(1.0 / (x * x) - 1.0, extra)
}

/// Exact push-forward of an enumerated Gibbs measure through the resampling
/// kernel: every blocking coin, vertex coin, and cluster sign is enumerated.
pub fn resample_pushforward(
    mu: &GibbsMeasure,
    patch: &Arc<HexPatch>,
    window: &Domain,
) -> Result<HashMap<EdgeSet, f64>> {
    check_window_margin(window)?;
    let (beta, gamma) = check_blocking_probabilities(mu.n, mu.x)?;
    let whole = Domain::whole(patch.clone());
    let window_coords: Vec<FaceCoord> = window
        .faces
        .iter()
        .map(|&f| patch.faces[f as usize])
        .collect();
    let mut out: HashMap<EdgeSet, f64> = HashMap::new();
    for (state, &p_state) in mu.states.iter().zip(&mu.probs) {
        let omega = LoopConfig {
            patch: patch.clone(),
            edges: state.clone(),
        };
        let dec = decompose(&omega, &whole);
        let comps: &[Component] = &dec.loops;
        let deg0: Vec<u32> = patch
            .up_vertices
            .iter()
            .copied()
            .filter(|&v| patch.degree_in(v, &omega.edges) == 0)
            .collect();
        let n_loops = comps.len();
        for bmask in 0..1u64 << n_loops {
            let blocked = bmask.count_ones() as i32;
            let pb = beta.powi(blocked) * (1.0 - beta).powi(n_loops as i32 - blocked);
            if pb == 0.0 {
                continue;
            }
            // Blocked part and its xi coverage are fixed by bmask.
            let mut block = patch.empty_edge_set();
            let mut free = patch.empty_edge_set();
            let mut xi_base = vec![false; patch.vertices.len()];
            for (ci, comp) in comps.iter().enumerate() {
                if bmask >> ci & 1 == 1 {
                    for &e in &comp.edges {
                        block.insert(e as usize);
                    }
                    for &v in &comp.vertices {
                        if patch.vertices[v as usize].up {
                            xi_base[v as usize] = true;
                        }
                    }
                } else {
                    for &e in &comp.edges {
                        free.insert(e as usize);
                    }
                }
            }
            let sigma_bc = dw_inverse(
                &LoopConfig {
                    patch: patch.clone(),
                    edges: free,
                },
                default_anchor(patch),
                1,
            );
            for vmask in 0..1u64 << deg0.len() {
                let extras = vmask.count_ones() as i32;
                let pv = gamma.powi(extras) * (1.0 - gamma).powi(deg0.len() as i32 - extras);
                if pv == 0.0 {
                    continue;
                }
                let mut xi_open = xi_base.clone();
                for (i, &v) in deg0.iter().enumerate() {
                    if vmask >> i & 1 == 1 {
                        xi_open[v as usize] = true;
                    }
                }
                let wc = window_clusters(patch, &xi_open, &window_coords);
                let c = wc.inside.len();
                let sign_weight = 0.5f64.powi(c as i32);
                for smask in 0..1u64 << c {
                    let signs: Vec<i8> = (0..c)
                        .map(|i| if smask >> i & 1 == 1 { -1 } else { 1 })
                        .collect();
                    let tilde = apply_cluster_signs(&sigma_bc, &wc, &signs);
                    let walls = dw(&tilde);
                    let mut edges = walls.edges;
                    edges.or_assign(&block);
                    *out.entry(edges).or_insert(0.0) += p_state * pb * pv * sign_weight;
                }
            }
        }
    }
    Ok(out)
}

/// Exact total-variation distance between the Gibbs measure and its one-step
/// push-forward under the resampling kernel.
pub fn exact_resample_tv(spec: &GibbsSpec, window: &Domain) -> Result<f64> {
    let mu = enumerate_gibbs(spec)?;
    let pushed = resample_pushforward(&mu, spec.patch(), window)?;
    let mut tv = 0.0;
    let mut seen: std::collections::HashSet<&EdgeSet> = std::collections::HashSet::new();
    for (edges, &q) in &pushed {
        tv += (q - mu.prob_of(edges)).abs();
        seen.insert(edges);
    }
    for (state, &p) in mu.states.iter().zip(&mu.probs) {
        if !seen.contains(state) {
            tv += p;
        }
    }
    Ok(0.5 * tv)
}

/// Machine-readable law-equality verdict.
#[derive(Debug, Clone, Serialize)]
pub struct LawEqualityReport {
    pub n: f64,
    pub x: f64,
    pub tv_exact: f64,
    pub tv_tolerance: f64,
    pub pass: bool,
}

pub fn law_equality_report(n: f64, x: f64, tolerance: f64) -> Result<LawEqualityReport> {
    let patch = Arc::new(crate::hex::build_hex_patch(1));
    let spec = GibbsSpec::free(patch.clone(), n, x)?;
    let window = Domain::ball(patch, 0)?;
    let tv = exact_resample_tv(&spec, &window)?;
    Ok(LawEqualityReport {
        n,
        x,
        tv_exact: tv,
        tv_tolerance: tolerance,
        pass: tv <= tolerance,
    })
}

/// Does xi-connectivity (triangular adjacency of open up-vertices) coincide
/// with Delta(xi)-connectivity of their triangles?
pub fn delta_connectivity_equivalent(patch: &HexPatch, open: &[bool]) -> bool {
    let open_ups: Vec<u32> = patch
        .up_vertices
        .iter()
        .copied()
        .filter(|&v| open[v as usize])
        .collect();
    // xi clusters on the up-vertex triangular lattice.
    let mut uf = UnionFind::new(patch.vertices.len());
    for &v in &open_ups {
        let hv = patch.vertices[v as usize];
        for (dk, dl) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)] {
            let nb = HexVertex::up(hv.k + dk, hv.l + dl);
            if let Some(w) = patch.vertex_id(nb) {
                if open[w as usize] {
                    uf.union(v, w);
                }
            }
        }
    }
    let wc = delta_from_open(patch, open);
    let labels = wc.clusters();
    let rep = |v: u32| -> u32 {
        let f = up_triangle(patch.vertices[v as usize])[0];
        wc.tri.node_of(f).expect("triangle faces are tri nodes")
    };
    for (i, &u) in open_ups.iter().enumerate() {
        for &v in open_ups.iter().skip(i + 1) {
            let same_xi = uf.find(u) == uf.find(v);
            let same_delta = labels.same_cluster(rep(u), rep(v));
            if same_xi != same_delta {
                return false;
            }
        }
    }
    true
}

/// Crossing statistics of the blocking percolation on an annulus.
#[derive(Debug, Clone, Serialize)]
pub struct BlockingStats {
    pub n: f64,
    pub x: f64,
    pub r: u32,
    pub crossing_freq: f64,
    pub crossing_se: f64,
    pub largest_cluster_frac: f64,
    pub samples: u64,
}

/// Frequency of a Delta(xi) cluster joining the ball B_r to the outer ring
/// of the host B_2r, sampled along a Metropolis chain.
#[allow(clippy::too_many_arguments)]
pub fn blocking_crossing_stats(
    n: f64,
    x: f64,
    r: u32,
    samples: u64,
    burnin: u64,
    gap: u64,
    seed: u64,
) -> Result<BlockingStats> {
    if r == 0 || samples == 0 {
        return Err(Error::InvalidParameter(
            "blocking statistics need r >= 1 and samples >= 1".into(),
        ));
    }
    let patch = Arc::new(crate::hex::build_hex_patch(2 * r));
    let spec = GibbsSpec::free(patch.clone(), n, x)?;
    let mut chain = crate::loopmodel::Chain::new(
        spec,
        LoopConfig::empty(patch.clone()),
        seed,
        0,
    )?;
    chain.run(burnin);
    let inner: std::collections::HashSet<FaceCoord> =
        crate::hex::ball_faces(r).into_iter().collect();
    let ring: std::collections::HashSet<FaceCoord> = crate::hex::ball_faces(2 * r - 1)
        .into_iter()
        .collect();
    let mut crossings = 0u64;
    let mut largest_sum = 0.0f64;
    for s in 0..samples {
        chain.run(gap.max(1));
        let xi = sample_xi(&chain.state, n, x, derive_seed(seed, s))?;
        let wc = delta_from_open(&patch, &xi.open);
        let labels = wc.clusters();
        let nl = labels.sizes.len();
        let mut touches_inner = vec![false; nl];
        let mut touches_ring = vec![false; nl];
        for (node, &coord) in wc.tri.nodes.iter().enumerate() {
            let l = labels.label[node];
            if l == u32::MAX {
                continue;
            }
            if inner.contains(&coord) {
                touches_inner[l as usize] = true;
            }
            if !ring.contains(&coord) {
                touches_ring[l as usize] = true;
            }
        }
        if (0..nl).any(|l| touches_inner[l] && touches_ring[l]) {
            crossings += 1;
        }
        largest_sum += labels.largest() as f64 / wc.tri.nodes.len() as f64;
    }
    let freq = crossings as f64 / samples as f64;
    Ok(BlockingStats {
        n,
        x,
        r,
        crossing_freq: freq,
        crossing_se: (freq * (1.0 - freq) / samples as f64).sqrt(),
        largest_cluster_frac: largest_sum / samples as f64,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hex::{ball_faces, build_hex_patch};

    fn random_even_config(patch: &Arc<HexPatch>, seed: u64) -> LoopConfig {
        // Any subset of hexagon flips is a valid configuration.
        let mut rng = StreamRng::new(seed, 0);
        let mut edges = patch.empty_edge_set();
        for f in 0..patch.faces.len() as u32 {
            if rng.coin(0.5) {
                edges.xor_assign(patch.hex_mask(f));
            }
        }
        LoopConfig::validate(patch.clone(), edges).unwrap()
    }

    #[test]
    fn xi_respects_the_parameter_corners() {
        let patch = Arc::new(build_hex_patch(2));
        assert!(sample_xi(&LoopConfig::empty(patch.clone()), 0.5, 0.9, 1).is_err());
        assert!(sample_xi(&LoopConfig::empty(patch.clone()), 1.5, 1.1, 1).is_err());
        for seed in 0..50 {
            let omega = random_even_config(&patch, seed);
            // n = 1: loops are never blocked.
            let xi = sample_xi(&omega, 1.0, 0.8, seed).unwrap();
            let split = split_omega(&omega, &xi).unwrap();
            assert!(split.block.edges.is_empty());
            // x = 1: no isolated vertex opens; n = 1 and x = 1 force xi = 0.
            let xi = sample_xi(&omega, 1.0, 1.0, seed).unwrap();
            assert!(xi.open.iter().all(|&b| !b));
        }
    }

    #[test]
    fn xi_blocking_frequencies_at_the_conjectured_critical_point() {
        let patch = Arc::new(build_hex_patch(1));
        let omega = {
            let mut edges = patch.empty_edge_set();
            edges.xor_assign(patch.hex_mask(patch.face_id(FaceCoord::new(0, 0)).unwrap()));
            LoopConfig::validate(patch.clone(), edges).unwrap()
        };
        let n = 2.0;
        let x = std::f64::consts::FRAC_1_SQRT_2;
        let trials = 100_000u64;
        let mut loop_open = 0u64;
        let mut vertex_open = 0u64;
        let mut vertex_draws = 0u64;
        for s in 0..trials {
            let xi = sample_xi(&omega, n, x, s).unwrap();
            let split = split_omega(&omega, &xi).unwrap();
            if !split.block.edges.is_empty() {
                loop_open += 1;
            }
            for &v in &patch.up_vertices {
                if patch.degree_in(v, &omega.edges) == 0 {
                    vertex_draws += 1;
                    if xi.open[v as usize] {
                        vertex_open += 1;
                    }
                }
            }
        }
        let loop_freq = loop_open as f64 / trials as f64;
        let vertex_freq = vertex_open as f64 / vertex_draws as f64;
        assert!((loop_freq - 0.5).abs() < 0.01, "loop frequency {loop_freq}");
        assert!(
            (vertex_freq - 0.5).abs() < 0.01,
            "vertex frequency {vertex_freq}"
        );
    }

    #[test]
    fn xi_is_always_consistent_with_its_configuration() {
        let patch = Arc::new(build_hex_patch(2));
        for seed in 0..200 {
            let omega = random_even_config(&patch, seed);
            let xi = sample_xi(&omega, 1.7, 0.8, seed).unwrap();
            assert!(split_omega(&omega, &xi).is_ok());
        }
    }

    #[test]
    fn dw_examples() {
        let patch = Arc::new(build_hex_patch(2));
        let plus = SpinConfig::constant(patch.clone(), 1);
        assert!(dw(&plus).edges.is_empty());
        let mut one_minus = plus.clone();
        let f = patch.face_id(FaceCoord::new(0, 0)).unwrap();
        one_minus.spins[f as usize] = -1;
        let walls = dw(&one_minus);
        assert_eq!(walls.edges.count(), 6);
        let mut expect = patch.empty_edge_set();
        expect.xor_assign(patch.hex_mask(f));
        assert_eq!(walls.edges, expect);
    }

    #[test]
    fn dw_is_flip_invariant_and_two_to_one() {
        let patch = Arc::new(build_hex_patch(1));
        for seed in 0..100 {
            let mut rng = StreamRng::new(seed, 3);
            let spins: Vec<i8> = (0..patch.faces.len()).map(|_| rng.sign()).collect();
            let sigma = SpinConfig {
                patch: patch.clone(),
                spins,
                outer: rng.sign(),
            };
            assert_eq!(dw(&sigma).edges, dw(&sigma.flipped()).edges);
        }
        // Exhaustive two-to-one on B_1: every even configuration has exactly
        // two spin preimages among all 2^6 assignments.
        let n_faces = patch.faces.len();
        let mut preimages: HashMap<EdgeSet, usize> = HashMap::new();
        for mask in 0..1u32 << (n_faces + 1) {
            let spins: Vec<i8> = (0..n_faces)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect();
            let sigma = SpinConfig {
                patch: patch.clone(),
                spins,
                outer: if mask >> n_faces & 1 == 1 { 1 } else { -1 },
            };
            *preimages.entry(dw(&sigma).edges).or_insert(0) += 1;
        }
        assert_eq!(preimages.len(), 32);
        assert!(preimages.values().all(|&c| c == 2));
    }

    #[test]
    fn dw_inverse_round_trips() {
        let patch = Arc::new(build_hex_patch(2));
        let empty = LoopConfig::empty(patch.clone());
        let sigma = dw_inverse(&empty, Anchor::Outer, 1);
        assert!(sigma.spins.iter().all(|&s| s == 1) && sigma.outer == 1);

        let f = FaceCoord::new(0, 0);
        let hex = {
            let mut edges = patch.empty_edge_set();
            edges.xor_assign(patch.hex_mask(patch.face_id(f).unwrap()));
            LoopConfig::validate(patch.clone(), edges).unwrap()
        };
        let sigma = dw_inverse(&hex, Anchor::Outer, 1);
        assert_eq!(sigma.spins[patch.face_id(f).unwrap() as usize], -1);
        assert_eq!(sigma.outer, 1);
        assert!(patch
            .faces
            .iter()
            .filter(|&&c| c != f)
            .all(|&c| sigma.spins[patch.face_id(c).unwrap() as usize] == 1));

        for seed in 0..200 {
            let omega = random_even_config(&patch, seed);
            let sigma = dw_inverse(&omega, default_anchor(&patch), 1);
            assert_eq!(dw(&sigma).edges, omega.edges, "round trip failed");
        }
    }

    #[test]
    fn delta_examples() {
        let patch = Arc::new(build_hex_patch(2));
        let omega = LoopConfig::empty(patch.clone());
        let none = BlockingConfig {
            omega: omega.clone(),
            open: vec![false; patch.vertices.len()],
        };
        assert_eq!(delta(&none).open_edge_count(), 0);

        // One open vertex: exactly its upward triangle.
        let v = patch.vertex_id(HexVertex::up(0, 0)).unwrap();
        let mut open = vec![false; patch.vertices.len()];
        open[v as usize] = true;
        let d = delta_from_open(&patch, &open);
        assert_eq!(
            d.bonds.open.iter().filter(|&&b| b).count(),
            3,
            "one upward triangle"
        );

        // Two adjacent open vertices: six edges, triangles sharing exactly
        // one face, for each of the six lattice directions.
        for (dk, dl) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)] {
            let w = patch.vertex_id(HexVertex::up(dk, dl)).unwrap();
            let mut open2 = open.clone();
            open2[w as usize] = true;
            let d = delta_from_open(&patch, &open2);
            assert_eq!(d.open_edge_count(), 6, "direction ({dk},{dl})");
            let t1: std::collections::HashSet<FaceCoord> =
                up_triangle(HexVertex::up(0, 0)).into_iter().collect();
            let t2: std::collections::HashSet<FaceCoord> =
                up_triangle(HexVertex::up(dk, dl)).into_iter().collect();
            assert_eq!(t1.intersection(&t2).count(), 1);
        }
    }

    #[test]
    fn split_omega_cases() {
        let patch = Arc::new(build_hex_patch(3));
        let mut edges = patch.empty_edge_set();
        edges.xor_assign(patch.hex_mask(patch.face_id(FaceCoord::new(0, 0)).unwrap()));
        edges.xor_assign(patch.hex_mask(patch.face_id(FaceCoord::new(3, 0)).unwrap()));
        let omega = LoopConfig::validate(patch.clone(), edges).unwrap();

        let empty_xi = BlockingConfig {
            omega: omega.clone(),
            open: vec![false; patch.vertices.len()],
        };
        let s = split_omega(&omega, &empty_xi).unwrap();
        assert_eq!(s.free.edges, omega.edges);
        assert!(s.block.edges.is_empty());

        // Block one of the two loops.
        let whole = Domain::whole(patch.clone());
        let dec = decompose(&omega, &whole);
        let mut open = vec![false; patch.vertices.len()];
        for &v in &dec.loops[0].vertices {
            if patch.vertices[v as usize].up {
                open[v as usize] = true;
            }
        }
        let xi = BlockingConfig {
            omega: omega.clone(),
            open: open.clone(),
        };
        let s = split_omega(&omega, &xi).unwrap();
        assert_eq!(s.block.edges.count(), 6);
        assert_eq!(s.free.edges.count(), 6);

        // Partial coverage errors.
        let first_up = dec.loops[0]
            .vertices
            .iter()
            .copied()
            .find(|&v| patch.vertices[v as usize].up)
            .unwrap();
        let mut partial = vec![false; patch.vertices.len()];
        partial[first_up as usize] = true;
        let bad = BlockingConfig {
            omega: omega.clone(),
            open: partial,
        };
        assert!(matches!(
            split_omega(&omega, &bad),
            Err(Error::InconsistentBlocking { .. })
        ));
    }

    #[test]
    fn sigma_tilde_keeps_straddling_clusters() {
        let patch = Arc::new(build_hex_patch(3));
        let omega = LoopConfig::empty(patch.clone());
        // Chain of open up-vertices from inside B_1 to outside it.
        let chain = [
            HexVertex::up(0, 0),
            HexVertex::up(1, 0),
            HexVertex::up(2, 0),
        ];
        let mut open = vec![false; patch.vertices.len()];
        for v in chain {
            open[patch.vertex_id(v).unwrap() as usize] = true;
        }
        let xi = BlockingConfig {
            omega: omega.clone(),
            open,
        };
        let sigma_bc = dw_inverse(&omega, Anchor::Outer, 1);
        let window: Vec<FaceCoord> = ball_faces(1);
        let tilde = sigma_tilde(&sigma_bc, &xi, &window, 5);
        // Faces of the straddling cluster keep their boundary-condition
        // spin.
        for v in chain {
            for f in up_triangle(v) {
                if let Some(id) = patch.face_id(f) {
                    assert_eq!(tilde.spins[id as usize], 1);
                }
            }
        }
        // Empty window: nothing changes at all.
        let same = sigma_tilde(&sigma_bc, &xi, &[], 5);
        assert_eq!(same, sigma_bc);
    }

    #[test]
    fn sigma_tilde_resamples_isolated_faces_with_empty_xi() {
        let patch = Arc::new(build_hex_patch(2));
        let omega = LoopConfig::empty(patch.clone());
        let xi = BlockingConfig {
            omega: omega.clone(),
            open: vec![false; patch.vertices.len()],
        };
        let sigma_bc = dw_inverse(&omega, Anchor::Outer, 1);
        let window: Vec<FaceCoord> = ball_faces(1);
        // Across seeds, every window face takes both signs; outside faces
        // never change.
        let mut saw_minus = vec![false; patch.faces.len()];
        for seed in 0..64 {
            let tilde = sigma_tilde(&sigma_bc, &xi, &window, seed);
            for (i, &c) in patch.faces.iter().enumerate() {
                if window.contains(&c) {
                    if tilde.spins[i] == -1 {
                        saw_minus[i] = true;
                    }
                } else {
                    assert_eq!(tilde.spins[i], 1);
                }
            }
        }
        for (i, &c) in patch.faces.iter().enumerate() {
            if window.contains(&c) {
                assert!(saw_minus[i], "face {c:?} never resampled to -1");
            }
        }
    }

    #[test]
    fn conditional_weight_examples() {
        let patch = Arc::new(build_hex_patch(1));
        let empty = LoopConfig::empty(patch.clone());
        let no_xi = vec![false; patch.vertices.len()];
        assert_eq!(conditional_weight(&empty, &no_xi, 2.0, 0.9), 1.0);
        // One blocked hexagon at n = 2: (2-1)^1 = 1, no extra xi vertices.
        let f = patch.face_id(FaceCoord::new(0, 0)).unwrap();
        let mut edges = patch.empty_edge_set();
        edges.xor_assign(patch.hex_mask(f));
        let hex = LoopConfig::validate(patch.clone(), edges).unwrap();
        let mut xi = vec![false; patch.vertices.len()];
        for v in &patch.up_vertices {
            if patch.degree_in(*v, &hex.edges) == 2 {
                xi[*v as usize] = true;
            }
        }
        let w = conditional_weight(&hex, &xi, 2.0, std::f64::consts::FRAC_1_SQRT_2);
        assert!((w - 1.0).abs() < 1e-12, "weight {w}");
    }

    #[test]
    fn joint_density_matches_the_conditional_weight_pointwise() {
        // Enumerate (omega, xi) on B_1 and check that
        // mu(omega) P(xi | omega) / conditional_weight(block, xi) is one
        // global constant.
        let patch = Arc::new(build_hex_patch(1));
        let n = 1.6;
        let x = 0.85;
        let (beta, gamma) = check_blocking_probabilities(n, x).unwrap();
        let spec = GibbsSpec::free(patch.clone(), n, x).unwrap();
        let mu = enumerate_gibbs(&spec).unwrap();
        let whole = Domain::whole(patch.clone());
        let mut reference: Option<f64> = None;
        for (state, &p_state) in mu.states.iter().zip(&mu.probs) {
            let omega = LoopConfig {
                patch: patch.clone(),
                edges: state.clone(),
            };
            let dec = decompose(&omega, &whole);
            let deg0: Vec<u32> = patch
                .up_vertices
                .iter()
                .copied()
                .filter(|&v| patch.degree_in(v, &omega.edges) == 0)
                .collect();
            for bmask in 0..1u64 << dec.loops.len() {
                let blocked = bmask.count_ones() as i32;
                let pb = beta.powi(blocked)
                    * (1.0 - beta).powi(dec.loops.len() as i32 - blocked);
                for vmask in 0..1u64 << deg0.len() {
                    let extras = vmask.count_ones() as i32;
                    let pv =
                        gamma.powi(extras) * (1.0 - gamma).powi(deg0.len() as i32 - extras);
                    let joint = p_state * pb * pv;
                    if joint == 0.0 {
                        continue;
                    }
                    let mut block = patch.empty_edge_set();
                    let mut xi = vec![false; patch.vertices.len()];
                    for (ci, comp) in dec.loops.iter().enumerate() {
                        if bmask >> ci & 1 == 1 {
                            for &e in &comp.edges {
                                block.insert(e as usize);
                            }
                            for &v in &comp.vertices {
                                if patch.vertices[v as usize].up {
                                    xi[v as usize] = true;
                                }
                            }
                        }
                    }
                    for (i, &v) in deg0.iter().enumerate() {
                        if vmask >> i & 1 == 1 {
                            xi[v as usize] = true;
                        }
                    }
                    let block_cfg = LoopConfig {
                        patch: patch.clone(),
                        edges: block,
                    };
                    let display = conditional_weight(&block_cfg, &xi, n, x);
                    let ratio = joint / display;
                    match reference {
                        None => reference = Some(ratio),
                        Some(r) => {
                            assert!(
                                (ratio / r - 1.0).abs() < 1e-9,
                                "ratio {ratio} deviates from {r}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn window_margin_is_checked() {
        let patch = Arc::new(build_hex_patch(1));
        let b0 = Domain::ball(patch.clone(), 0).unwrap();
        assert!(check_window_margin(&b0).is_ok());
        let whole = Domain::whole(patch.clone());
        assert!(check_window_margin(&whole).is_ok());
    }

    #[test]
    fn resample_preserves_the_single_hexagon_law() {
        // Exact stationarity on the smallest instance, one parameter point.
        let patch = Arc::new(build_hex_patch(0));
        let spec = GibbsSpec::free(patch.clone(), 1.0, 1.0).unwrap();
        let window = Domain::whole(patch.clone());
        let tv = exact_resample_tv(&spec, &window).unwrap();
        assert!(tv < 1e-12, "tv {tv}");
    }

    #[test]
    fn resample_is_exactly_stationary_on_b1_smoke() {
        let patch = Arc::new(build_hex_patch(1));
        let spec = GibbsSpec::free(patch.clone(), 1.5, 0.8).unwrap();
        let window = Domain::ball(patch.clone(), 0).unwrap();
        let tv = exact_resample_tv(&spec, &window).unwrap();
        assert!(tv < 1e-9, "tv {tv}");
    }

    #[test]
    fn injected_weight_bug_breaks_law_equality() {
        // Corrupt the measure (edge weight exponent negated) and verify the
        // oracle notices: the kernel no longer preserves it.
        let patch = Arc::new(build_hex_patch(1));
        let n = 1.5;
        let x = 0.8;
        let spec = GibbsSpec::free(patch.clone(), n, x).unwrap();
        let good = enumerate_gibbs(&spec).unwrap();
        let mut bad = good.clone();
        let weights: Vec<f64> = bad
            .states
            .iter()
            .zip(&good.probs)
            .map(|(s, &p)| p / x.powi(2 * s.count() as i32))
            .collect();
        let total: f64 = weights.iter().sum();
        bad.probs = weights.into_iter().map(|w| w / total).collect();
        let window = Domain::ball(patch.clone(), 0).unwrap();
        let pushed = resample_pushforward(&bad, &patch, &window).unwrap();
        let mut tv = 0.0;
        for (edges, &q) in &pushed {
            tv += (q - bad.prob_of(edges)).abs();
        }
        assert!(0.5 * tv > 1e-3, "mutated measure not detected: tv {tv}");
    }

    #[test]
    fn coupled_resample_matches_exact_law_on_single_hexagon() {
        let patch = Arc::new(build_hex_patch(0));
        let n = 1.0;
        let x = 1.0;
        let window = Domain::whole(patch.clone());
        // Start from both states; the empirical law of the output must be
        // Bernoulli(1/2) on the loop.
        for start_full in [false, true] {
            let mut edges = patch.empty_edge_set();
            if start_full {
                edges.xor_assign(patch.hex_mask(0));
            }
            let omega = LoopConfig::validate(patch.clone(), edges).unwrap();
            let mut full = 0u64;
            let trials = 20_000;
            for s in 0..trials {
                let out = coupled_resample(&omega, n, x, &window, s).unwrap();
                if out.edges.count() == 6 {
                    full += 1;
                }
            }
            let freq = full as f64 / trials as f64;
            assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn coupled_resample_never_blocks_at_unit_n() {
        let patch = Arc::new(build_hex_patch(2));
        let window = Domain::ball(patch.clone(), 1).unwrap();
        for seed in 0..50 {
            let omega = random_even_config(&patch, seed);
            let xi = sample_xi(&omega, 1.0, 0.9, seed).unwrap();
            let split = split_omega(&omega, &xi).unwrap();
            assert!(split.block.edges.is_empty());
            let out = coupled_resample(&omega, 1.0, 0.9, &window, seed).unwrap();
            // The move only changes window edges.
            let mut diff = out.edges.clone();
            diff.xor_assign(&omega.edges);
            assert!(diff.iter_ones().all(|e| window.edge_set.contains(e)));
        }
    }

    #[test]
    fn unit_weights_reduce_to_fair_site_percolation_on_faces() {
        // Push the uniform 32-state measure on B_1 through the inverse
        // domain-wall map with a fair anchor sign: face spins come out
        // exactly i.i.d. plus-minus with probability 1/2, i.e. the spin
        // marginal of the model at n = x = 1 is fair site percolation on
        // the faces.
        let patch = Arc::new(build_hex_patch(1));
        let spec = GibbsSpec::free(patch.clone(), 1.0, 1.0).unwrap();
        let mu = enumerate_gibbs(&spec).unwrap();
        let mut spin_law: HashMap<Vec<i8>, f64> = HashMap::new();
        for (state, &p) in mu.states.iter().zip(&mu.probs) {
            let omega = LoopConfig {
                patch: patch.clone(),
                edges: state.clone(),
            };
            for sign in [1i8, -1] {
                let sigma = dw_inverse(&omega, default_anchor(&patch), sign);
                let mut key = sigma.spins.clone();
                key.push(sigma.outer);
                *spin_law.entry(key).or_insert(0.0) += 0.5 * p;
            }
        }
        // Uniform over all 2^6 assignments (5 faces + outer).
        assert_eq!(spin_law.len(), 64);
        for (&ref key, &p) in &spin_law {
            assert!((p - 1.0 / 64.0).abs() < 1e-12, "{key:?} has mass {p}");
        }
        // Hence every face marginal is exactly one half and faces are
        // independent in pairs.
        let p_first: f64 = spin_law
            .iter()
            .filter(|(k, _)| k[0] == 1)
            .map(|(_, &p)| p)
            .sum();
        assert!((p_first - 0.5).abs() < 1e-12);
        let p_pair: f64 = spin_law
            .iter()
            .filter(|(k, _)| k[0] == 1 && k[1] == 1)
            .map(|(_, &p)| p)
            .sum();
        assert!((p_pair - 0.25).abs() < 1e-12);
    }

    #[test]
    fn serialization_of_index_lists() {
        let patch = Arc::new(build_hex_patch(1));
        let omega = random_even_config(&patch, 3);
        let xi = sample_xi(&omega, 1.5, 0.8, 4).unwrap();
        let open: Vec<u32> = serde_json::from_str(&xi.to_json()).unwrap();
        assert_eq!(open, xi.open_up_vertices());
        let split = split_omega(&omega, &xi).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&split.to_json()).unwrap();
        assert!(doc["free"].is_array() && doc["block"].is_array());
        let d = delta(&xi);
        let pairs: Vec<[[i32; 2]; 2]> = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(pairs.len(), d.open_edge_count());
    }

    #[test]
    fn connectivity_equivalence_on_random_blocking() {
        let patch = build_hex_patch(3);
        let mut rng = StreamRng::new(2024, 0);
        for _ in 0..500 {
            let mut open = vec![false; patch.vertices.len()];
            for &v in &patch.up_vertices {
                if rng.coin(0.45) {
                    open[v as usize] = true;
                }
            }
            assert!(delta_connectivity_equivalent(&patch, &open));
        }
    }
}
