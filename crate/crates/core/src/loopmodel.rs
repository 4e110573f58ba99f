//! The loop O(n) model on hexagonal patches: configurations with all degrees
//! 0 or 2, exact Gibbs enumeration on small domains, face-flip Metropolis
//! dynamics with frozen boundary conditions, and loop-geometry observables.
//!
//! The measure on a domain with loop weight n, edge weight x, and boundary
//! condition omega' is proportional to n^(number of loops meeting the domain
//! vertices) * x^(number of edges inside the domain), over configurations
//! agreeing with omega' outside the domain's edges.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hex::{ball_faces, surrounds_dir, Domain, EdgeSet, FaceCoord, HexPatch};
use crate::measure::ExactMeasure;
use crate::rng::StreamRng;

/// Hard cap on exactly enumerable domains: 2^16 states.
pub const ENUMERATION_FACE_LIMIT: usize = 16;

/// An edge subset of a host patch in which every vertex has degree 0 or 2.
#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub patch: Arc<HexPatch>,
    pub edges: EdgeSet,
}

impl PartialEq for LoopConfig {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.patch, &other.patch) && self.edges == other.edges
    }
}

impl LoopConfig {
    pub fn empty(patch: Arc<HexPatch>) -> LoopConfig {
        let edges = patch.empty_edge_set();
        LoopConfig { patch, edges }
    }

    /// Accept an edge subset iff all degrees are 0 or 2.
    pub fn validate(patch: Arc<HexPatch>, edges: EdgeSet) -> Result<LoopConfig> {
        for v in 0..patch.vertices.len() {
            let d = patch.degree_in(v as u32, &edges);
            if d != 0 && d != 2 {
                return Err(Error::DegreeViolation {
                    vertex: v,
                    degree: d,
                });
            }
        }
        Ok(LoopConfig { patch, edges })
    }

    pub fn edge_indices(&self) -> Vec<usize> {
        self.edges.to_indices()
    }
}

/// One traced component of a loop configuration.
#[derive(Debug, Clone)]
pub struct Component {
    /// Vertex cycle, in walk order.
    pub vertices: Vec<u32>,
    /// Edge ids of the component.
    pub edges: Vec<u32>,
    /// Does the component meet the vertex set of the decomposing domain?
    pub meets_domain: bool,
}

impl Component {
    pub fn edge_set(&self, patch: &HexPatch) -> EdgeSet {
        let mut s = patch.empty_edge_set();
        for &e in &self.edges {
            s.insert(e as usize);
        }
        s
    }
}

/// Components of a configuration, classified against a domain.
///
/// In these finite closed patches every vertex of a valid configuration has
/// even degree, so every component is a simple cycle; the `paths` list is the
/// slot for open strands, which cannot arise once `validate` has accepted the
/// configuration.
#[derive(Debug, Clone)]
pub struct LoopDecomposition {
    pub loops: Vec<Component>,
    pub paths: Vec<Component>,
    /// Number of loops meeting the domain's vertex set.
    pub ell: usize,
}

/// Trace all components of the configuration and count the loops meeting the
/// domain.
pub fn decompose(omega: &LoopConfig, domain: &Domain) -> LoopDecomposition {
    let patch = &omega.patch;
    let mut visited = vec![false; patch.vertices.len()];
    let mut loops = Vec::new();
    let mut ell = 0;
    for v0 in 0..patch.vertices.len() as u32 {
        if visited[v0 as usize] || patch.degree_in(v0, &omega.edges) == 0 {
            continue;
        }
        let comp = trace_cycle(patch, &omega.edges, v0, &mut visited);
        let meets = comp
            .vertices
            .iter()
            .any(|&v| domain.vertex_mask[v as usize]);
        if meets {
            ell += 1;
        }
        loops.push(Component {
            meets_domain: meets,
            ..comp
        });
    }
    LoopDecomposition {
        loops,
        paths: Vec::new(),
        ell,
    }
}

fn trace_cycle(
    patch: &HexPatch,
    edges: &EdgeSet,
    start: u32,
    visited: &mut [bool],
) -> Component {
    let mut vs = Vec::new();
    let mut es = Vec::new();
    let mut prev_edge = u32::MAX;
    let mut cur = start;
    loop {
        visited[cur as usize] = true;
        vs.push(cur);
        let next_edge = patch.vertex_edges[cur as usize]
            .iter()
            .flatten()
            .copied()
            .find(|&e| edges.contains(e as usize) && e != prev_edge)
            .expect("degree-2 vertex always has an unused incident edge");
        es.push(next_edge);
        let nxt = patch.edges[next_edge as usize].other_endpoint(cur);
        prev_edge = next_edge;
        cur = nxt;
        if cur == start {
            break;
        }
    }
    Component {
        vertices: vs,
        edges: es,
        meets_domain: false,
    }
}

/// The Gibbs specification: domain, weights, and frozen boundary condition.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    pub domain: Domain,
    pub n: f64,
    pub x: f64,
    pub boundary: LoopConfig,
}

impl GibbsSpec {
    pub fn new(domain: Domain, n: f64, x: f64, boundary: LoopConfig) -> Result<GibbsSpec> {
        if !(n > 0.0) || !(x > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "loop and edge weights must be positive, got n={n}, x={x}"
            )));
        }
        if !Arc::ptr_eq(&domain.patch, &boundary.patch) {
            return Err(Error::InvalidParameter(
                "boundary condition lives on a different patch".into(),
            ));
        }
        Ok(GibbsSpec {
            domain,
            n,
            x,
            boundary,
        })
    }

    /// Empty boundary condition on the whole patch.
    pub fn free(patch: Arc<HexPatch>, n: f64, x: f64) -> Result<GibbsSpec> {
        let domain = Domain::whole(patch.clone());
        GibbsSpec::new(domain, n, x, LoopConfig::empty(patch))
    }

    pub fn patch(&self) -> &Arc<HexPatch> {
        &self.domain.patch
    }

    /// Does the configuration agree with the boundary condition off the
    /// domain's edges?
    pub fn agrees_off_domain(&self, omega: &LoopConfig) -> bool {
        let mut diff = omega.edges.clone();
        diff.xor_assign(&self.boundary.edges);
        !(0..diff.len()).any(|e| diff.contains(e) && !self.domain.edge_set.contains(e))
    }
}

/// Log of the unnormalized weight n^ell * x^edges.
pub fn log_weight(omega: &LoopConfig, spec: &GibbsSpec) -> Result<f64> {
    if !spec.agrees_off_domain(omega) {
        return Err(Error::BoundaryMismatch);
    }
    let dec = decompose(omega, &spec.domain);
    let edges_inside = omega
        .edges
        .iter_ones()
        .filter(|&e| spec.domain.edge_set.contains(e))
        .count();
    Ok(dec.ell as f64 * spec.n.ln() + edges_inside as f64 * spec.x.ln())
}

/// The unnormalized weight itself.
pub fn weight(omega: &LoopConfig, spec: &GibbsSpec) -> Result<f64> {
    Ok(log_weight(omega, spec)?.exp())
}

/// Exactly enumerated Gibbs measure on a small domain.
#[derive(Debug, Clone)]
pub struct GibbsMeasure {
    pub n: f64,
    pub x: f64,
    /// Number of flippable faces of the enumerated domain.
    pub n_faces: usize,
    pub states: Vec<EdgeSet>,
    /// Flip subset generating each state from the boundary condition, as a
    /// face-index bitmask over the domain's face list.
    pub face_subsets: Vec<u64>,
    pub probs: Vec<f64>,
    pub log_z: f64,
    index: HashMap<EdgeSet, usize>,
}

impl GibbsMeasure {
    pub fn prob_of(&self, edges: &EdgeSet) -> f64 {
        self.index.get(edges).map(|&i| self.probs[i]).unwrap_or(0.0)
    }

    pub fn state_index(&self, edges: &EdgeSet) -> Option<usize> {
        self.index.get(edges).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// View over face-subset masks, for serialization and TV computations.
    pub fn as_exact_measure(&self) -> ExactMeasure {
        ExactMeasure::new(self.n_faces, self.face_subsets.clone(), self.probs.clone())
            .expect("enumeration produces a normalized table")
    }
}

/// Enumerate every valid completion of the boundary condition inside the
/// domain: the coset of the domain's hexagon-flip span.
pub fn enumerate_gibbs(spec: &GibbsSpec) -> Result<GibbsMeasure> {
    let faces = &spec.domain.faces;
    if faces.len() > ENUMERATION_FACE_LIMIT {
        return Err(Error::EnumerationGuard {
            faces: faces.len(),
            limit: ENUMERATION_FACE_LIMIT,
        });
    }
    let patch = spec.patch();
    let masks: Vec<&EdgeSet> = faces.iter().map(|&f| patch.hex_mask(f)).collect();
    let count = 1u64 << faces.len();
    let mut states = Vec::with_capacity(count as usize);
    let mut face_subsets = Vec::with_capacity(count as usize);
    let mut log_weights = Vec::with_capacity(count as usize);
    for subset in 0..count {
        let mut edges = spec.boundary.edges.clone();
        for (i, mask) in masks.iter().enumerate() {
            if subset >> i & 1 == 1 {
                edges.xor_assign(mask);
            }
        }
        let omega = LoopConfig {
            patch: patch.clone(),
            edges,
        };
        debug_assert!(
            LoopConfig::validate(patch.clone(), omega.edges.clone()).is_ok(),
            "flip span left the loop space"
        );
        let lw = log_weight(&omega, spec)?;
        states.push(omega.edges);
        face_subsets.push(subset);
        log_weights.push(lw);
    }
    let max_lw = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_weights.iter().map(|lw| (lw - max_lw).exp()).collect();
    let total: f64 = scaled.iter().sum();
    let log_z = max_lw + total.ln();
    let probs: Vec<f64> = scaled.iter().map(|w| w / total).collect();
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(GibbsMeasure {
        n: spec.n,
        x: spec.x,
        n_faces: faces.len(),
        states,
        face_subsets,
        probs,
        log_z,
        index,
    })
}

/// Symmetric difference with the hexagon of a domain face. An involution that
/// preserves the loop space.
pub fn face_flip(omega: &LoopConfig, domain: &Domain, face: u32) -> Result<LoopConfig> {
    if !domain.contains_face(face) {
        return Err(Error::InvalidParameter(format!(
            "face {face} is outside the domain; flipping it would alter the boundary condition"
        )));
    }
    let mut edges = omega.edges.clone();
    edges.xor_assign(omega.patch.hex_mask(face));
    Ok(LoopConfig {
        patch: omega.patch.clone(),
        edges,
    })
}

/// Number of components meeting any of the seed vertices.
fn components_through(patch: &HexPatch, edges: &EdgeSet, seeds: &[u32]) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut count = 0;
    for &s in seeds {
        if seen.contains(&s) || patch.degree_in(s, edges) == 0 {
            continue;
        }
        count += 1;
        // Walk the cycle through s.
        let mut prev_edge = u32::MAX;
        let mut cur = s;
        loop {
            seen.insert(cur);
            let next_edge = patch.vertex_edges[cur as usize]
                .iter()
                .flatten()
                .copied()
                .find(|&e| edges.contains(e as usize) && e != prev_edge)
                .expect("valid configurations have even degrees");
            let nxt = patch.edges[next_edge as usize].other_endpoint(cur);
            prev_edge = next_edge;
            cur = nxt;
            if cur == s {
                break;
            }
        }
    }
    count
}

/// Apply the flip of `face` to `edges` in place and return the log weight
/// ratio of the move, with the loop-count change computed by tracing only
/// the components incident to the flipped hexagon. (Those components all
/// meet the domain's vertex set, so the local difference equals the global
/// one.)
pub fn flip_log_ratio(
    patch: &HexPatch,
    edges: &mut EdgeSet,
    face: u32,
    log_n: f64,
    log_x: f64,
) -> f64 {
    let seeds = patch.face_vertices[face as usize];
    let before = components_through(patch, edges, &seeds);
    let hex = patch.hex_mask(face);
    let edges_before: i64 = hex.iter_ones().filter(|&e| edges.contains(e)).count() as i64;
    edges.xor_assign(hex);
    let after = components_through(patch, edges, &seeds);
    let d_ell = after as f64 - before as f64;
    let d_edges = (6 - 2 * edges_before) as f64;
    d_ell * log_n + d_edges * log_x
}

/// One Metropolis chain with face-flip proposals.
pub struct Chain {
    pub spec: GibbsSpec,
    pub state: LoopConfig,
    rng: StreamRng,
    log_n: f64,
    log_x: f64,
    pub proposals: u64,
    pub accepted: u64,
}

impl Chain {
    pub fn new(spec: GibbsSpec, initial: LoopConfig, seed: u64, stream: u64) -> Result<Chain> {
        if !Arc::ptr_eq(spec.patch(), &initial.patch) || !spec.agrees_off_domain(&initial) {
            return Err(Error::BoundaryMismatch);
        }
        let log_n = spec.n.ln();
        let log_x = spec.x.ln();
        Ok(Chain {
            spec,
            state: initial,
            rng: StreamRng::new(seed, stream),
            log_n,
            log_x,
            proposals: 0,
            accepted: 0,
        })
    }

    /// One lazy Metropolis step: hold with probability 1/2, otherwise
    /// propose a uniform face flip and accept with min(1, n^dl * x^de).
    /// The lazy coin removes the period-two behavior of the pure kernel at
    /// full acceptance (n = x = 1 flips exactly one hexagon per proposal, so
    /// the flipped-subset parity would alternate deterministically).
    pub fn step(&mut self) {
        if self.rng.coin(0.5) {
            return;
        }
        let domain = &self.spec.domain;
        let face = domain.faces[self.rng.index(domain.faces.len())];
        let patch = self.spec.patch().clone();
        let hex = patch.hex_mask(face);
        let log_ratio = flip_log_ratio(&patch, &mut self.state.edges, face, self.log_n, self.log_x);
        self.proposals += 1;
        if log_ratio >= 0.0 || self.rng.uniform() < log_ratio.exp() {
            self.accepted += 1;
        } else {
            // Reject: undo the flip.
            self.state.edges.xor_assign(hex);
        }
    }

    /// One sweep = one lazy step per domain face.
    pub fn sweep(&mut self) {
        for _ in 0..self.spec.domain.face_count() {
            self.step();
        }
    }

    pub fn run(&mut self, sweeps: u64) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }
}

/// Sampling diagnostics emitted with every chain run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainDiagnostics {
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
}

/// Run a chain for the given number of sweeps and return the final state.
pub fn metropolis_chain(
    spec: &GibbsSpec,
    initial: &LoopConfig,
    sweeps: u64,
    seed: u64,
) -> Result<(LoopConfig, ChainDiagnostics)> {
    let mut chain = Chain::new(spec.clone(), initial.clone(), seed, 0)?;
    chain.run(sweeps);
    let diag = ChainDiagnostics {
        proposals: chain.proposals,
        accepted: chain.accepted,
        acceptance_rate: chain.accepted as f64 / chain.proposals.max(1) as f64,
    };
    Ok((chain.state, diag))
}

/// Number of loops of the configuration surrounding the face.
pub fn loops_around(omega: &LoopConfig, face: FaceCoord) -> usize {
    let domain = Domain::whole(omega.patch.clone());
    let dec = decompose(omega, &domain);
    dec.loops
        .iter()
        .filter(|c| surrounds_dir(&omega.patch, &c.edge_set(&omega.patch), face, 0))
        .count()
}

/// The conjectured critical edge weight 1/sqrt(2 + sqrt(2 - n)) for loop
/// weight n in [0, 2].
pub fn x_critical(n: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "critical weight defined for n in [0,2], got {n}"
        )));
    }
    Ok(1.0 / (2.0 + (2.0 - n).sqrt()).sqrt())
}

/// Is there a loop inside the annulus A_k = B_2k minus B_k surrounding the
/// origin face? A loop lies in the annulus when none of its vertices belongs
/// to the inner ball's subgraph.
pub fn annulus_loop_present(omega: &LoopConfig, k: u32) -> bool {
    let patch = &omega.patch;
    let inner: std::collections::HashSet<FaceCoord> = ball_faces(k).into_iter().collect();
    let banned: Vec<bool> = patch
        .vertices
        .iter()
        .map(|v| v.faces().iter().any(|f| inner.contains(f)))
        .collect();
    let domain = Domain::whole(patch.clone());
    let dec = decompose(omega, &domain);
    let origin = FaceCoord::new(0, 0);
    dec.loops.iter().any(|c| {
        c.vertices.iter().all(|&v| !banned[v as usize])
            && surrounds_dir(patch, &c.edge_set(patch), origin, 0)
    })
}

/// Result of an annulus-loop probability estimate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RswEstimate {
    pub n: f64,
    pub x: f64,
    pub k: u32,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub samples: u64,
    /// True when n*x^2 <= 1, the regime the annulus-loop band is asserted in;
    /// other parameter points are exploratory.
    pub supported: bool,
}

/// Monte Carlo estimate of P(a loop in A_k surrounds the origin) under the
/// Gibbs measure on B_2k, with a Wilson-score 95% interval. Chain c runs on
/// stream c and results reduce in chain order, so the estimate depends only
/// on (config, seed), not on how many worker threads execute the chains.
#[allow(clippy::too_many_arguments)]
pub fn rsw_estimate(
    spec: &GibbsSpec,
    k: u32,
    samples: u64,
    burnin: u64,
    gap: u64,
    chains: u64,
    threads: u64,
    seed: u64,
    initial: Option<&LoopConfig>,
) -> Result<RswEstimate> {
    let chains = chains.max(1);
    let per_chain: Vec<u64> = (0..chains)
        .map(|c| samples / chains + u64::from(c < samples % chains))
        .collect();
    let run_chain = |c: u64| -> Result<u64> {
        let init = match initial {
            Some(cfg) => cfg.clone(),
            None => LoopConfig {
                patch: spec.patch().clone(),
                edges: spec.boundary.edges.clone(),
            },
        };
        let mut chain = Chain::new(spec.clone(), init, seed, c)?;
        chain.run(burnin);
        let mut hits = 0;
        for _ in 0..per_chain[c as usize] {
            chain.run(gap.max(1));
            if annulus_loop_present(&chain.state, k) {
                hits += 1;
            }
        }
        Ok(hits)
    };
    let batch = if threads == 0 { chains } else { threads.max(1) };
    let mut hits = 0u64;
    let mut next = 0u64;
    while next < chains {
        let upto = (next + batch).min(chains);
        let results: Vec<Result<u64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (next..upto)
                .map(|c| scope.spawn(move || run_chain(c)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for r in results {
            hits += r?;
        }
        next = upto;
    }
    let (lo, hi) = crate::rng::wilson_ci(hits, samples);
    Ok(RswEstimate {
        n: spec.n,
        x: spec.x,
        k,
        estimate: hits as f64 / samples.max(1) as f64,
        ci_lo: lo,
        ci_hi: hi,
        samples,
        supported: spec.n * spec.x * spec.x <= 1.0 + 1e-12,
    })
}
