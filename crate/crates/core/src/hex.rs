//! Finite patches of the hexagonal lattice.
//!
//! Faces are addressed by the axial pair (k, l) of their center k + l*e^{i pi/3}.
//! Every vertex of the lattice is the meeting point of three faces and is
//! either the top endpoint of its unique vertical edge (an UP vertex) or the
//! bottom endpoint (a DOWN vertex):
//!
//! * `Up(k,l)` sits between faces (k,l), (k+1,l), (k,l+1) — an upward triangle
//!   of the dual lattice;
//! * `Down(k,l)` sits between faces (k+1,l), (k,l+1), (k+1,l+1) — a downward
//!   triangle.
//!
//! Edges are keyed by their UP endpoint and a direction (`NE`, `NW`, `S`), so
//! all neighborhood queries are closed-form integer arithmetic. A patch is the
//! union of the closed hexagons of a face set; vertices therefore have degree
//! 2 or 3 and the outer boundary is a simple cycle.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axial coordinate of a hexagonal face (equivalently a vertex of the dual
/// triangular lattice).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceCoord {
    pub k: i32,
    pub l: i32,
}

impl FaceCoord {
    pub const fn new(k: i32, l: i32) -> Self {
        FaceCoord { k, l }
    }

    /// The six neighboring face centers, in counterclockwise order starting
    /// from +k.
    pub fn neighbors(self) -> [FaceCoord; 6] {
        let FaceCoord { k, l } = self;
        [
            FaceCoord::new(k + 1, l),
            FaceCoord::new(k, l + 1),
            FaceCoord::new(k - 1, l + 1),
            FaceCoord::new(k - 1, l),
            FaceCoord::new(k, l - 1),
            FaceCoord::new(k + 1, l - 1),
        ]
    }

    /// Scaled integer center: (6k + 3l, 3l) in units of (1/6, sqrt(3)/6).
    pub fn center6(self) -> (i64, i64) {
        (6 * self.k as i64 + 3 * self.l as i64, 3 * self.l as i64)
    }
}

/// A lattice vertex: coordinate of its triangle plus the UP/DOWN tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HexVertex {
    pub k: i32,
    pub l: i32,
    pub up: bool,
}

impl HexVertex {
    pub const fn up(k: i32, l: i32) -> Self {
        HexVertex { k, l, up: true }
    }

    pub const fn down(k: i32, l: i32) -> Self {
        HexVertex { k, l, up: false }
    }

    /// The three faces meeting at this vertex.
    pub fn faces(self) -> [FaceCoord; 3] {
        let HexVertex { k, l, up } = self;
        if up {
            [
                FaceCoord::new(k, l),
                FaceCoord::new(k + 1, l),
                FaceCoord::new(k, l + 1),
            ]
        } else {
            [
                FaceCoord::new(k + 1, l),
                FaceCoord::new(k, l + 1),
                FaceCoord::new(k + 1, l + 1),
            ]
        }
    }

    /// Scaled integer position in units of (1/6, sqrt(3)/6): UP vertices at
    /// (6k+3l+3, 3l+1), DOWN vertices at (6k+3l+6, 3l+2).
    pub fn pos6(self) -> (i64, i64) {
        let k = self.k as i64;
        let l = self.l as i64;
        if self.up {
            (6 * k + 3 * l + 3, 3 * l + 1)
        } else {
            (6 * k + 3 * l + 6, 3 * l + 2)
        }
    }
}

/// Direction of an edge relative to its UP endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeDir {
    /// Up(k,l) -> Down(k,l); separates faces (k+1,l) and (k,l+1).
    NE,
    /// Up(k,l) -> Down(k-1,l); separates faces (k,l) and (k,l+1).
    NW,
    /// Up(k,l) -> Down(k,l-1), the vertical edge; separates (k,l) and (k+1,l).
    S,
}

/// Global key of an edge: UP endpoint coordinate plus direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub k: i32,
    pub l: i32,
    pub dir: EdgeDir,
}

impl EdgeKey {
    pub const fn new(k: i32, l: i32, dir: EdgeDir) -> Self {
        EdgeKey { k, l, dir }
    }

    pub fn up_vertex(self) -> HexVertex {
        HexVertex::up(self.k, self.l)
    }

    pub fn down_vertex(self) -> HexVertex {
        match self.dir {
            EdgeDir::NE => HexVertex::down(self.k, self.l),
            EdgeDir::NW => HexVertex::down(self.k - 1, self.l),
            EdgeDir::S => HexVertex::down(self.k, self.l - 1),
        }
    }

    /// The two faces separated by this edge.
    pub fn faces(self) -> [FaceCoord; 2] {
        let EdgeKey { k, l, .. } = self;
        match self.dir {
            EdgeDir::NE => [FaceCoord::new(k + 1, l), FaceCoord::new(k, l + 1)],
            EdgeDir::NW => [FaceCoord::new(k, l), FaceCoord::new(k, l + 1)],
            EdgeDir::S => [FaceCoord::new(k, l), FaceCoord::new(k + 1, l)],
        }
    }
}

/// The six edges of the hexagon around face (k,l), counterclockwise starting
/// at the lower-right side.
pub fn hexagon_edges(f: FaceCoord) -> [EdgeKey; 6] {
    let FaceCoord { k, l } = f;
    [
        EdgeKey::new(k, l - 1, EdgeDir::NE),
        EdgeKey::new(k, l, EdgeDir::S),
        EdgeKey::new(k, l, EdgeDir::NW),
        EdgeKey::new(k - 1, l, EdgeDir::NE),
        EdgeKey::new(k - 1, l, EdgeDir::S),
        EdgeKey::new(k, l - 1, EdgeDir::NW),
    ]
}

/// The six vertices of the hexagon around face (k,l), counterclockwise
/// starting at the bottom vertex.
pub fn hexagon_vertices(f: FaceCoord) -> [HexVertex; 6] {
    let FaceCoord { k, l } = f;
    [
        HexVertex::up(k, l - 1),
        HexVertex::down(k, l - 1),
        HexVertex::up(k, l),
        HexVertex::down(k - 1, l),
        HexVertex::up(k - 1, l),
        HexVertex::down(k - 1, l - 1),
    ]
}

/// Dense bit set over patch edges. Configurations are symmetric differences
/// of hexagon masks, so xor is the workhorse.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    words: Vec<u64>,
    len: usize,
}

impl EdgeSet {
    pub fn empty(len: usize) -> Self {
        EdgeSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn xor_assign(&mut self, other: &EdgeSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn or_assign(&mut self, other: &EdgeSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersects(&self, other: &EdgeSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }
}

/// Rotation slot order at an UP vertex: NE (30 deg), NW (150 deg), S (270 deg);
/// at a DOWN vertex: N (90 deg), SW (210 deg), SE (330 deg). Both are
/// counterclockwise.
const UP_SLOTS: usize = 3;

/// One undirected edge of a patch.
#[derive(Debug, Clone)]
pub struct PatchEdge {
    pub key: EdgeKey,
    /// Vertex ids of the UP and DOWN endpoints.
    pub up: u32,
    pub down: u32,
    /// Patch face ids on the two sides; `None` marks the outer region.
    pub faces: [Option<u32>; 2],
}

impl PatchEdge {
    pub fn is_boundary(&self) -> bool {
        self.faces[0].is_none() || self.faces[1].is_none()
    }

    pub fn other_endpoint(&self, v: u32) -> u32 {
        if v == self.up {
            self.down
        } else {
            self.up
        }
    }
}

/// A finite piece of the hexagonal lattice: the union of the closed hexagons
/// of a face set, with derived vertices, edges, rotations, and boundary walk.
#[derive(Debug)]
pub struct HexPatch {
    pub faces: Vec<FaceCoord>,
    pub face_index: HashMap<FaceCoord, u32>,
    pub vertices: Vec<HexVertex>,
    pub vertex_index: HashMap<HexVertex, u32>,
    pub edges: Vec<PatchEdge>,
    pub edge_index: HashMap<EdgeKey, u32>,
    /// Incident edges per vertex in counterclockwise slot order; absent slots
    /// are `None`.
    pub vertex_edges: Vec<[Option<u32>; UP_SLOTS]>,
    /// Six edge ids per face, counterclockwise.
    pub face_edges: Vec<[u32; 6]>,
    /// Six vertex ids per face, counterclockwise.
    pub face_vertices: Vec<[u32; 6]>,
    /// Hexagon edge masks, one per face.
    hex_masks: Vec<EdgeSet>,
    /// Outer boundary walk as vertex ids, clockwise, starting at the
    /// lexicographically minimal boundary vertex.
    pub boundary: Vec<u32>,
    /// Edge ids on the outer boundary.
    pub boundary_edges: Vec<u32>,
    /// Ids of UP vertices.
    pub up_vertices: Vec<u32>,
}

impl HexPatch {
    /// Build the patch spanned by an arbitrary nonempty face set. The set
    /// must be edge-connected and hole-free.
    pub fn from_faces(mut faces: Vec<FaceCoord>) -> Result<HexPatch> {
        faces.sort();
        faces.dedup();
        if faces.is_empty() {
            return Err(Error::InvalidParameter("empty face set".into()));
        }
        let face_index: HashMap<FaceCoord, u32> = faces
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, i as u32))
            .collect();

        // Edge-connectivity of the face set.
        let mut seen = vec![false; faces.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(fi) = stack.pop() {
            for nb in faces[fi as usize].neighbors() {
                if let Some(&j) = face_index.get(&nb) {
                    if !seen[j as usize] {
                        seen[j as usize] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::BadDomain);
        }

        let mut vertices: Vec<HexVertex> = Vec::new();
        let mut vertex_index: HashMap<HexVertex, u32> = HashMap::new();
        let mut edges: Vec<PatchEdge> = Vec::new();
        let mut edge_index: HashMap<EdgeKey, u32> = HashMap::new();
        let mut face_edges = vec![[u32::MAX; 6]; faces.len()];
        let mut face_vertices = vec![[u32::MAX; 6]; faces.len()];

        let intern_vertex = |v: HexVertex,
                                 vertices: &mut Vec<HexVertex>,
                                 vertex_index: &mut HashMap<HexVertex, u32>|
         -> u32 {
            *vertex_index.entry(v).or_insert_with(|| {
                vertices.push(v);
                (vertices.len() - 1) as u32
            })
        };

        for (fi, &f) in faces.iter().enumerate() {
            let vs = hexagon_vertices(f);
            let es = hexagon_edges(f);
            for i in 0..6 {
                let vid = intern_vertex(vs[i], &mut vertices, &mut vertex_index);
                face_vertices[fi][i] = vid;
                let key = es[i];
                let eid = *edge_index.entry(key).or_insert_with(|| {
                    let up = intern_vertex(key.up_vertex(), &mut vertices, &mut vertex_index);
                    let down = intern_vertex(key.down_vertex(), &mut vertices, &mut vertex_index);
                    let fc = key.faces();
                    let side = [
                        face_index.get(&fc[0]).copied(),
                        face_index.get(&fc[1]).copied(),
                    ];
                    edges.push(PatchEdge {
                        key,
                        up,
                        down,
                        faces: side,
                    });
                    (edges.len() - 1) as u32
                });
                face_edges[fi][i] = eid;
            }
        }

        // Rotation system: fixed slot order per vertex parity.
        let mut vertex_edges = vec![[None; UP_SLOTS]; vertices.len()];
        for (eid, e) in edges.iter().enumerate() {
            let slot_up = match e.key.dir {
                EdgeDir::NE => 0,
                EdgeDir::NW => 1,
                EdgeDir::S => 2,
            };
            vertex_edges[e.up as usize][slot_up] = Some(eid as u32);
            // At the DOWN endpoint (k,l): N is the S-edge of Up(k,l+1), SW the
            // NE-edge of Up(k,l), SE the NW-edge of Up(k+1,l).
            let dv = vertices[e.down as usize];
            debug_assert!(!dv.up);
            let slot_down = match e.key.dir {
                EdgeDir::S => 0,
                EdgeDir::NE => 1,
                EdgeDir::NW => 2,
            };
            debug_assert!(
                (e.key.dir == EdgeDir::S && e.key == EdgeKey::new(dv.k, dv.l + 1, EdgeDir::S))
                    || (e.key.dir == EdgeDir::NE && e.key == EdgeKey::new(dv.k, dv.l, EdgeDir::NE))
                    || (e.key.dir == EdgeDir::NW
                        && e.key == EdgeKey::new(dv.k + 1, dv.l, EdgeDir::NW)),
                "edge {:?} inconsistent with down endpoint {:?}",
                e.key,
                dv
            );
            vertex_edges[e.down as usize][slot_down] = Some(eid as u32);
        }

        let hex_masks = faces
            .iter()
            .enumerate()
            .map(|(fi, _)| {
                let mut m = EdgeSet::empty(edges.len());
                for &e in &face_edges[fi] {
                    m.insert(e as usize);
                }
                m
            })
            .collect();

        let up_vertices = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.up)
            .map(|(i, _)| i as u32)
            .collect();

        let mut patch = HexPatch {
            faces,
            face_index,
            vertices,
            vertex_index,
            edges,
            edge_index,
            vertex_edges,
            face_edges,
            face_vertices,
            hex_masks,
            boundary: Vec::new(),
            boundary_edges: Vec::new(),
            up_vertices,
        };
        patch.trace_boundary()?;

        // Hole-freeness: Euler on the sphere with hexagons + one outer face.
        let v = patch.vertices.len() as i64;
        let e = patch.edges.len() as i64;
        let f = patch.faces.len() as i64 + 1;
        if v - e + f != 2 {
            return Err(Error::BadDomain);
        }
        Ok(patch)
    }

    fn trace_boundary(&mut self) -> Result<()> {
        let all = {
            let mut s = EdgeSet::empty(self.edges.len());
            for i in 0..self.edges.len() {
                s.insert(i);
            }
            s
        };
        let in_patch: Vec<bool> = self.faces.iter().map(|_| true).collect();
        let (walk_vertices, walk_edges) = outer_face_walk(
            &self.vertices,
            &self.edges,
            &self.vertex_edges,
            &self.face_edges,
            &self.face_vertices,
            &all,
            &in_patch,
        )?;
        let n_boundary = self.edges.iter().filter(|e| e.is_boundary()).count();
        if walk_edges.len() != n_boundary {
            // The walk failed to cover every boundary edge: the face set
            // encloses a hole.
            return Err(Error::BadDomain);
        }
        self.boundary = walk_vertices;
        self.boundary_edges = walk_edges;
        Ok(())
    }

    pub fn face_id(&self, f: FaceCoord) -> Option<u32> {
        self.face_index.get(&f).copied()
    }

    pub fn vertex_id(&self, v: HexVertex) -> Option<u32> {
        self.vertex_index.get(&v).copied()
    }

    pub fn edge_id(&self, key: EdgeKey) -> Option<u32> {
        self.edge_index.get(&key).copied()
    }

    pub fn contains_face(&self, f: FaceCoord) -> bool {
        self.face_index.contains_key(&f)
    }

    pub fn degree(&self, v: u32) -> usize {
        self.vertex_edges[v as usize]
            .iter()
            .filter(|s| s.is_some())
            .count()
    }

    pub fn hex_mask(&self, face: u32) -> &EdgeSet {
        &self.hex_masks[face as usize]
    }

    pub fn empty_edge_set(&self) -> EdgeSet {
        EdgeSet::empty(self.edges.len())
    }

    /// Vertex ids on the outer boundary, as a set membership vector.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.vertices.len()];
        for &v in &self.boundary {
            m[v as usize] = true;
        }
        m
    }

    /// Degree of a vertex within an edge subset.
    pub fn degree_in(&self, v: u32, set: &EdgeSet) -> usize {
        self.vertex_edges[v as usize]
            .iter()
            .flatten()
            .filter(|&&e| set.contains(e as usize))
            .count()
    }

    /// Serialize as `{"faces": [[k,l], ...]}`.
    pub fn to_json(&self) -> String {
        let desc = PatchJson {
            faces: self.faces.iter().map(|f| [f.k, f.l]).collect(),
        };
        serde_json::to_string(&desc).expect("patch serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<HexPatch> {
        let desc: PatchJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        HexPatch::from_faces(
            desc.faces
                .into_iter()
                .map(|[k, l]| FaceCoord::new(k, l))
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct PatchJson {
    faces: Vec<[i32; 2]>,
}

/// Face set of the ball B_r: centers with |k+l| <= r and |k-l| <= r.
pub fn ball_faces(r: u32) -> Vec<FaceCoord> {
    let r = r as i32;
    let mut out = Vec::new();
    for k in -r..=r {
        for l in -r..=r {
            if (k + l).abs() <= r && (k - l).abs() <= r {
                out.push(FaceCoord::new(k, l));
            }
        }
    }
    out
}

/// The patch B_r.
pub fn build_hex_patch(r: u32) -> HexPatch {
    HexPatch::from_faces(ball_faces(r)).expect("B_r face sets are connected and hole-free")
}

/// Face set of the annulus A_r = B_{2r} \ B_r.
pub fn annulus(r: u32) -> Vec<FaceCoord> {
    assert!(r >= 1, "annulus radius must be positive");
    let inner: std::collections::HashSet<FaceCoord> = ball_faces(r).into_iter().collect();
    ball_faces(2 * r)
        .into_iter()
        .filter(|f| !inner.contains(f))
        .collect()
}

/// A simply connected sub-region of a patch: a face subset together with its
/// derived vertex set, edge set, and boundary cycle.
#[derive(Debug, Clone)]
pub struct Domain {
    pub patch: Arc<HexPatch>,
    /// Face ids of the domain, sorted.
    pub faces: Vec<u32>,
    pub face_mask: Vec<bool>,
    /// Edges of the domain: all hexagon edges of its faces.
    pub edge_set: EdgeSet,
    pub vertex_mask: Vec<bool>,
    /// Boundary cycle as vertex ids (clockwise, canonical start).
    pub boundary: Vec<u32>,
}

impl Domain {
    pub fn new(patch: Arc<HexPatch>, mut faces: Vec<u32>) -> Result<Domain> {
        faces.sort_unstable();
        faces.dedup();
        if faces.is_empty() || faces.iter().any(|&f| f as usize >= patch.faces.len()) {
            return Err(Error::BadDomain);
        }
        let mut face_mask = vec![false; patch.faces.len()];
        for &f in &faces {
            face_mask[f as usize] = true;
        }

        // Edge-connectivity of the subset.
        let mut seen = vec![false; patch.faces.len()];
        let mut stack = vec![faces[0]];
        seen[faces[0] as usize] = true;
        let mut reached = 1;
        while let Some(fi) = stack.pop() {
            for nb in patch.faces[fi as usize].neighbors() {
                if let Some(j) = patch.face_id(nb) {
                    if face_mask[j as usize] && !seen[j as usize] {
                        seen[j as usize] = true;
                        reached += 1;
                        stack.push(j);
                    }
                }
            }
        }
        if reached != faces.len() {
            return Err(Error::BadDomain);
        }

        // Simple connectivity: the complement (other faces plus the outer
        // region) must be connected.
        let outer = patch.faces.len();
        let mut comp_seen = vec![false; patch.faces.len() + 1];
        let mut stack = vec![outer];
        comp_seen[outer] = true;
        while let Some(node) = stack.pop() {
            if node == outer {
                for e in patch.edges.iter().filter(|e| e.is_boundary()) {
                    let f = e.faces[0].or(e.faces[1]).unwrap() as usize;
                    if !face_mask[f] && !comp_seen[f] {
                        comp_seen[f] = true;
                        stack.push(f);
                    }
                }
            } else {
                for e in &patch.face_edges[node] {
                    let pe = &patch.edges[*e as usize];
                    match (pe.faces[0], pe.faces[1]) {
                        (Some(a), Some(b)) => {
                            let o = if a as usize == node { b } else { a } as usize;
                            if !face_mask[o] && !comp_seen[o] {
                                comp_seen[o] = true;
                                stack.push(o);
                            }
                        }
                        _ => {
                            if !comp_seen[outer] {
                                comp_seen[outer] = true;
                                stack.push(outer);
                            }
                        }
                    }
                }
            }
        }
        if (0..patch.faces.len()).any(|f| !face_mask[f] && !comp_seen[f]) {
            return Err(Error::BadDomain);
        }

        let mut edge_set = EdgeSet::empty(patch.edges.len());
        let mut vertex_mask = vec![false; patch.vertices.len()];
        for &f in &faces {
            edge_set.or_assign(patch.hex_mask(f));
            for &v in &patch.face_vertices[f as usize] {
                vertex_mask[v as usize] = true;
            }
        }

        let boundary = domain_boundary(&patch, &face_mask, &edge_set)?;
        Ok(Domain {
            patch,
            faces,
            face_mask,
            edge_set,
            vertex_mask,
            boundary,
        })
    }

    /// The whole patch as a domain.
    pub fn whole(patch: Arc<HexPatch>) -> Domain {
        let n = patch.faces.len() as u32;
        Domain::new(patch, (0..n).collect()).expect("a validated patch is a valid domain")
    }

    pub fn ball(patch: Arc<HexPatch>, r: u32) -> Result<Domain> {
        let ids: Vec<u32> = ball_faces(r)
            .into_iter()
            .map(|f| {
                patch
                    .face_id(f)
                    .ok_or_else(|| Error::InvalidParameter(format!("face {f:?} not in patch")))
            })
            .collect::<Result<_>>()?;
        Domain::new(patch, ids)
    }

    pub fn contains_face(&self, f: u32) -> bool {
        self.face_mask[f as usize]
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
}

/// Walk the outer boundary of a face subset: the outer-face trace of the
/// subgraph spanned by the subset's hexagon edges.
fn domain_boundary(patch: &HexPatch, face_mask: &[bool], edge_set: &EdgeSet) -> Result<Vec<u32>> {
    let in_region = |f: Option<u32>| f.map(|x| face_mask[x as usize]).unwrap_or(false);
    let boundary_count = patch
        .edges
        .iter()
        .enumerate()
        .filter(|(i, e)| {
            edge_set.contains(*i) && !(in_region(e.faces[0]) && in_region(e.faces[1]))
        })
        .count();
    let (walk, walk_edges) = outer_face_walk(
        &patch.vertices,
        &patch.edges,
        &patch.vertex_edges,
        &patch.face_edges,
        &patch.face_vertices,
        edge_set,
        face_mask,
    )?;
    if walk_edges.len() != boundary_count {
        return Err(Error::BadDomain);
    }
    Ok(walk)
}

/// Trace the outer face of the subgraph given by `edge_set`, where
/// `face_mask` tells which patch faces belong to the region. Returns the walk
/// as (vertices, edges), rotated to start at the lexicographically minimal
/// vertex. The walk runs clockwise around the region.
#[allow(clippy::too_many_arguments)]
fn outer_face_walk(
    vertices: &[HexVertex],
    edges: &[PatchEdge],
    vertex_edges: &[[Option<u32>; UP_SLOTS]],
    face_edges: &[[u32; 6]],
    face_vertices: &[[u32; 6]],
    edge_set: &EdgeSet,
    face_mask: &[bool],
) -> Result<(Vec<u32>, Vec<u32>)> {
    let in_region = |f: Option<u32>| f.map(|x| face_mask[x as usize]).unwrap_or(false);
    let start = (0..edges.len())
        .find(|&i| {
            edge_set.contains(i) && !(in_region(edges[i].faces[0]) && in_region(edges[i].faces[1]))
        })
        .ok_or(Error::BadDomain)?;
    // Direct the starting edge so the region lies on the right: the hexagon
    // cycle a -> b runs counterclockwise with its face on the left, so the
    // outer trace takes b -> a.
    let e = &edges[start];
    let fi = match (e.faces[0], e.faces[1]) {
        (Some(a), _) if face_mask[a as usize] => a,
        (_, Some(b)) if face_mask[b as usize] => b,
        _ => return Err(Error::BadDomain),
    } as usize;
    let pos = face_edges[fi]
        .iter()
        .position(|&x| x == start as u32)
        .unwrap();
    let a = face_vertices[fi][pos];
    let (from, to) = (edges[start].other_endpoint(a), a);

    let mut walk_vertices = Vec::new();
    let mut walk_edges = Vec::new();
    let (mut u, mut v) = (from, to);
    let mut cur = start as u32;
    loop {
        walk_vertices.push(u);
        walk_edges.push(cur);
        if walk_edges.len() > 2 * edges.len() {
            return Err(Error::MalformedRotation("boundary walk does not close".into()));
        }
        // Next directed edge of the same traced face: counterclockwise
        // predecessor of the arrival edge in the rotation at v, restricted to
        // the subgraph.
        let slots = &vertex_edges[v as usize];
        let arrival = slots
            .iter()
            .position(|&s| s == Some(cur))
            .expect("arrival edge missing from rotation");
        let mut next = None;
        for step in 1..=UP_SLOTS {
            if let Some(eid) = slots[(arrival + UP_SLOTS - step) % UP_SLOTS] {
                if edge_set.contains(eid as usize) {
                    next = Some(eid);
                    break;
                }
            }
        }
        let next = next.expect("arrival edge is itself in the subgraph");
        let w = edges[next as usize].other_endpoint(v);
        u = v;
        v = w;
        cur = next;
        if u == from && v == to && cur == start as u32 {
            break;
        }
    }
    let min_pos = (0..walk_vertices.len())
        .min_by_key(|&i| vertices[walk_vertices[i] as usize])
        .unwrap();
    walk_vertices.rotate_left(min_pos);
    walk_edges.rotate_left(min_pos);
    Ok((walk_vertices, walk_edges))
}

/// Ray directions for the surround test, as (face step, crossing edge key of
/// the step from face (k,l)).
fn ray_cross_edge(dir: usize, f: FaceCoord) -> EdgeKey {
    let FaceCoord { k, l } = f;
    match dir {
        0 => EdgeKey::new(k, l, EdgeDir::S),          // (k,l) -> (k+1,l)
        1 => EdgeKey::new(k, l, EdgeDir::NW),         // (k,l) -> (k,l+1)
        2 => EdgeKey::new(k - 1, l, EdgeDir::NE),     // (k,l) -> (k-1,l+1)
        3 => EdgeKey::new(k - 1, l, EdgeDir::S),      // (k,l) -> (k-1,l)
        4 => EdgeKey::new(k, l - 1, EdgeDir::NW),     // (k,l) -> (k,l-1)
        5 => EdgeKey::new(k, l - 1, EdgeDir::NE),     // (k,l) -> (k+1,l-1)
        _ => unreachable!(),
    }
}

fn ray_step(dir: usize) -> (i32, i32) {
    [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)][dir]
}

/// Does the loop surround the face? Decided by the parity of loop edges
/// crossed by a lattice ray from the face center; the ray through face
/// centers meets edges only in their interiors, so the test is exact integer
/// arithmetic.
pub fn surrounds(patch: &HexPatch, loop_edges: &EdgeSet, face: FaceCoord) -> Result<bool> {
    validate_simple_cycle(patch, loop_edges)?;
    Ok(surrounds_dir(patch, loop_edges, face, 0))
}

/// Surround test along one of the six lattice directions. All six agree for
/// simple cycles; exposed for the direction-invariance property test.
pub fn surrounds_dir(patch: &HexPatch, loop_edges: &EdgeSet, face: FaceCoord, dir: usize) -> bool {
    let (dk, dl) = ray_step(dir);
    let span = patch
        .faces
        .iter()
        .map(|f| (f.k - face.k).abs().max((f.l - face.l).abs()))
        .max()
        .unwrap_or(0)
        + 2;
    let mut crossings = 0usize;
    let mut cur = face;
    for _ in 0..span {
        let key = ray_cross_edge(dir, cur);
        if let Some(eid) = patch.edge_id(key) {
            if loop_edges.contains(eid as usize) {
                crossings += 1;
            }
        }
        cur = FaceCoord::new(cur.k + dk, cur.l + dl);
    }
    crossings % 2 == 1
}

/// Check that an edge subset forms one simple cycle.
pub fn validate_simple_cycle(patch: &HexPatch, edges: &EdgeSet) -> Result<()> {
    let mut touched = Vec::new();
    for v in 0..patch.vertices.len() {
        let d = patch.degree_in(v as u32, edges);
        if d != 0 && d != 2 {
            return Err(Error::NonSimpleCycle(v));
        }
        if d == 2 {
            touched.push(v as u32);
        }
    }
    if touched.is_empty() {
        return Err(Error::NonSimpleCycle(0));
    }
    // Single component: walk from one vertex and count edges.
    let start = touched[0];
    let mut count = 0usize;
    let mut prev = u32::MAX;
    let mut cur = start;
    loop {
        let next_edge = patch.vertex_edges[cur as usize]
            .iter()
            .flatten()
            .find(|&&e| {
                edges.contains(e as usize) && patch.edges[e as usize].other_endpoint(cur) != prev
            })
            .copied();
        let next_edge = match next_edge {
            Some(e) => e,
            None => {
                // Degenerate two-vertex case: go back along the unused edge.
                return Err(Error::NonSimpleCycle(cur as usize));
            }
        };
        let nxt = patch.edges[next_edge as usize].other_endpoint(cur);
        count += 1;
        prev = cur;
        cur = nxt;
        if cur == start {
            break;
        }
    }
    if count != edges.count() {
        return Err(Error::NonSimpleCycle(cur as usize));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_hexagon_counts() {
        let p = build_hex_patch(0);
        assert_eq!(p.faces.len(), 1);
        assert_eq!(p.vertices.len(), 6);
        assert_eq!(p.edges.len(), 6);
        assert_eq!(p.boundary.len(), 6);
    }

    #[test]
    fn ball_one_faces_and_euler() {
        let p = build_hex_patch(1);
        let mut expect = vec![
            FaceCoord::new(0, 0),
            FaceCoord::new(1, 0),
            FaceCoord::new(-1, 0),
            FaceCoord::new(0, 1),
            FaceCoord::new(0, -1),
        ];
        expect.sort();
        assert_eq!(p.faces, expect);
        // Euler with hexagonal faces plus the outer face.
        let v = p.vertices.len() as i64;
        let e = p.edges.len() as i64;
        let f = p.faces.len() as i64 + 1;
        assert_eq!(v - e + f, 2);
        assert_eq!((v, e), (20, 24));
    }

    #[test]
    fn ball_face_count_matches_direct_enumeration() {
        for r in 0..6u32 {
            let direct = {
                let ri = r as i32;
                let mut c = 0usize;
                for k in -2 * ri..=2 * ri {
                    for l in -2 * ri..=2 * ri {
                        if (k + l).abs() <= ri && (k - l).abs() <= ri {
                            c += 1;
                        }
                    }
                }
                c
            };
            assert_eq!(ball_faces(r).len(), direct);
            assert_eq!(direct, (2 * r * r + 2 * r + 1) as usize);
        }
    }

    #[test]
    fn annulus_is_a_set_difference() {
        let a1 = annulus(1);
        let b1: std::collections::HashSet<_> = ball_faces(1).into_iter().collect();
        assert!(a1.iter().all(|f| !b1.contains(f)));
        assert_eq!(a1.len(), ball_faces(2).len() - ball_faces(1).len());
        for r in 1..4 {
            let ar = annulus(r);
            let br: std::collections::HashSet<_> = ball_faces(r).into_iter().collect();
            assert!(ar.iter().all(|f| !br.contains(f)));
        }
    }

    #[test]
    fn degrees_and_bipartition() {
        for r in 0..4u32 {
            let p = build_hex_patch(r);
            for v in 0..p.vertices.len() as u32 {
                let d = p.degree(v);
                assert!(d == 2 || d == 3, "degree {d}");
            }
            for e in &p.edges {
                assert!(p.vertices[e.up as usize].up);
                assert!(!p.vertices[e.down as usize].up);
            }
            // UP vertices are in bijection with their upward triangles.
            let coords: std::collections::HashSet<(i32, i32)> = p
                .up_vertices
                .iter()
                .map(|&v| {
                    let hv = p.vertices[v as usize];
                    (hv.k, hv.l)
                })
                .collect();
            assert_eq!(coords.len(), p.up_vertices.len());
        }
    }

    #[test]
    fn every_up_vertex_has_its_vertical_edge() {
        // Interior UP vertices have their vertical (S) edge in the patch;
        // verify the slot bookkeeping agrees with the direction table.
        let p = build_hex_patch(2);
        for &vid in &p.up_vertices {
            let hv = p.vertices[vid as usize];
            if let Some(eid) = p.edge_id(EdgeKey::new(hv.k, hv.l, EdgeDir::S)) {
                assert_eq!(p.vertex_edges[vid as usize][2], Some(eid));
            }
        }
    }

    #[test]
    fn boundary_walk_is_clockwise_simple_and_canonical() {
        for r in 0..4u32 {
            let p = build_hex_patch(r);
            let n = p.boundary.len();
            assert_eq!(n, p.boundary_edges.len());
            let mut seen = std::collections::HashSet::new();
            for &v in &p.boundary {
                assert!(seen.insert(v), "boundary repeats a vertex");
            }
            // Clockwise: negative shoelace area in y-up coordinates.
            let mut area2 = 0i64;
            for i in 0..n {
                let (x1, y1) = p.vertices[p.boundary[i] as usize].pos6();
                let (x2, y2) = p.vertices[p.boundary[(i + 1) % n] as usize].pos6();
                area2 += x1 * y2 - x2 * y1;
            }
            assert!(area2 < 0, "boundary walk not clockwise");
            let min = p
                .boundary
                .iter()
                .min_by_key(|&&v| p.vertices[v as usize])
                .unwrap();
            assert_eq!(p.boundary[0], *min);
        }
    }

    #[test]
    fn domain_rejects_disconnected_and_holed_sets() {
        let p = Arc::new(build_hex_patch(2));
        let two = vec![
            p.face_id(FaceCoord::new(-2, 0)).unwrap(),
            p.face_id(FaceCoord::new(2, 0)).unwrap(),
        ];
        assert!(Domain::new(p.clone(), two).is_err());
        // Ring of six faces around (0,0) leaves a hole.
        let ring: Vec<u32> = FaceCoord::new(0, 0)
            .neighbors()
            .iter()
            .map(|&f| p.face_id(f).unwrap())
            .collect();
        assert!(Domain::new(p.clone(), ring).is_err());
        assert!(Domain::ball(p, 1).is_ok());
    }

    #[test]
    fn hexagon_surrounds_its_own_face_only() {
        let p = build_hex_patch(4);
        let f = FaceCoord::new(0, 0);
        let mut hex = p.empty_edge_set();
        hex.xor_assign(p.hex_mask(p.face_id(f).unwrap()));
        assert!(surrounds(&p, &hex, f).unwrap());
        let far = FaceCoord::new(3, 0);
        let mut hex_far = p.empty_edge_set();
        hex_far.xor_assign(p.hex_mask(p.face_id(far).unwrap()));
        assert!(!surrounds(&p, &hex_far, FaceCoord::new(0, 0)).unwrap());
        assert!(!surrounds(&p, &hex, far).unwrap());
    }

    #[test]
    fn ball_boundary_cycle_surrounds_center() {
        // Sum of all B_1 hexagons = the 18-edge outer cycle of B_1, embedded
        // in a larger patch.
        let p = build_hex_patch(3);
        let mut cyc = p.empty_edge_set();
        for f in ball_faces(1) {
            cyc.xor_assign(p.hex_mask(p.face_id(f).unwrap()));
        }
        assert_eq!(cyc.count(), 18);
        assert!(surrounds(&p, &cyc, FaceCoord::new(0, 0)).unwrap());
        for dir in 0..6 {
            assert!(surrounds_dir(&p, &cyc, FaceCoord::new(0, 0), dir));
        }
    }

    #[test]
    fn surround_rejects_non_simple_input() {
        let p = build_hex_patch(2);
        let mut two = p.empty_edge_set();
        two.xor_assign(p.hex_mask(p.face_id(FaceCoord::new(1, 0)).unwrap()));
        two.xor_assign(p.hex_mask(p.face_id(FaceCoord::new(-1, 0)).unwrap()));
        // Two disjoint hexagons: valid degrees but two components.
        assert!(surrounds(&p, &two, FaceCoord::new(0, 0)).is_err());
        let mut open = p.empty_edge_set();
        open.insert(0);
        assert!(surrounds(&p, &open, FaceCoord::new(0, 0)).is_err());
    }

    #[test]
    fn patch_json_round_trip() {
        let p = build_hex_patch(2);
        let s = p.to_json();
        let q = HexPatch::from_json(&s).unwrap();
        assert_eq!(p.faces, q.faces);
        assert_eq!(p.edges.len(), q.edges.len());
    }
}
