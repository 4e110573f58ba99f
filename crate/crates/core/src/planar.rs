//! Combinatorial maps: finite planar graphs with explicit rotation systems,
//! face tracing, combinatorial balls, and the cut-set construction.
//!
//! A rotation system lists the incident edges of every vertex in
//! counterclockwise order. Face tracing follows the usual rule: arriving at v
//! along e, the next edge of the same face is the counterclockwise
//! predecessor of e in the rotation at v. Interior faces come out
//! counterclockwise and the outer face clockwise.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hex::HexPatch;

/// A finite planar graph with a rotation system and a designated outer face.
#[derive(Debug, Clone)]
pub struct PlanarGraph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    /// Counterclockwise cyclic order of incident edge ids, per vertex.
    pub rotations: Vec<Vec<u32>>,
    /// Traced faces, as sequences of directed edges (edge id, forward flag).
    /// Forward means the edge is traversed from `edges[e].0` to `edges[e].1`.
    pub faces: Vec<Vec<(u32, bool)>>,
    pub outer_face: usize,
    /// Face id on the left of each directed edge: `[forward, backward]`.
    edge_face: Vec<[u32; 2]>,
    /// Faces incident to each vertex (deduplicated).
    vertex_faces: Vec<Vec<u32>>,
    adj: Vec<Vec<(u32, u32)>>,
}

impl PlanarGraph {
    /// Build from explicit rotations. `outer` may be `None` for graphs where
    /// the caller does not care (it then defaults to face 0).
    pub fn new(
        n: usize,
        edges: Vec<(u32, u32)>,
        rotations: Vec<Vec<u32>>,
        outer: Option<usize>,
    ) -> Result<PlanarGraph> {
        if rotations.len() != n {
            return Err(Error::MalformedRotation(format!(
                "{} rotations for {} vertices",
                rotations.len(),
                n
            )));
        }
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u as usize >= n || v as usize >= n {
                return Err(Error::MalformedRotation(format!(
                    "edge {e} touches a vertex out of range"
                )));
            }
            if u == v {
                return Err(Error::MalformedRotation(format!("edge {e} is a self-loop")));
            }
            for w in [u, v] {
                let count = rotations[w as usize]
                    .iter()
                    .filter(|&&x| x == e as u32)
                    .count();
                if count != 1 {
                    return Err(Error::MalformedRotation(format!(
                        "edge {e} appears {count} times in the rotation of vertex {w}"
                    )));
                }
            }
        }
        for (v, rot) in rotations.iter().enumerate() {
            for &e in rot {
                let (a, b) = *edges.get(e as usize).ok_or_else(|| {
                    Error::MalformedRotation(format!("vertex {v} lists unknown edge {e}"))
                })?;
                if a as usize != v && b as usize != v {
                    return Err(Error::MalformedRotation(format!(
                        "vertex {v} lists non-incident edge {e}"
                    )));
                }
            }
        }

        let mut adj = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adj[u as usize].push((v, e as u32));
            adj[v as usize].push((u, e as u32));
        }

        let mut g = PlanarGraph {
            n,
            edges,
            rotations,
            faces: Vec::new(),
            outer_face: outer.unwrap_or(0),
            edge_face: Vec::new(),
            vertex_faces: Vec::new(),
            adj,
        };
        g.trace_all_faces();
        if let Some(o) = outer {
            if o >= g.faces.len() {
                return Err(Error::MalformedRotation(format!(
                    "outer face {o} out of range ({} faces)",
                    g.faces.len()
                )));
            }
        }
        Ok(g)
    }

    /// Build rotations from vertex positions: neighbors sorted by angle,
    /// exactly (integer cross products, no floating point). The outer face is
    /// the unique face traced clockwise (non-positive signed area).
    pub fn from_embedded(positions: &[(i64, i64)], edges: Vec<(u32, u32)>) -> Result<PlanarGraph> {
        let n = positions.len();
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            incident[u as usize].push(e as u32);
            incident[v as usize].push(e as u32);
        }
        let dir = |v: usize, e: u32| -> (i64, i64) {
            let (a, b) = edges[e as usize];
            let w = if a as usize == v { b } else { a } as usize;
            (
                positions[w].0 - positions[v].0,
                positions[w].1 - positions[v].1,
            )
        };
        let half = |d: (i64, i64)| -> u8 {
            // 0 for angles in [0, pi), 1 for [pi, 2pi).
            if d.1 > 0 || (d.1 == 0 && d.0 > 0) {
                0
            } else {
                1
            }
        };
        let mut rotations = Vec::with_capacity(n);
        for v in 0..n {
            let mut rot = incident[v].clone();
            rot.sort_by(|&e1, &e2| {
                let d1 = dir(v, e1);
                let d2 = dir(v, e2);
                half(d1).cmp(&half(d2)).then_with(|| {
                    let cross = d1.0 * d2.1 - d1.1 * d2.0;
                    cross.cmp(&0).reverse()
                })
            });
            rotations.push(rot);
        }
        let mut g = PlanarGraph::new(n, edges, rotations, None)?;
        // Signed area of each traced walk; the outer face is the most
        // negative one.
        let mut best = (i64::MAX, 0usize);
        for (fi, face) in g.faces.iter().enumerate() {
            let mut area2 = 0i64;
            for &(e, fwd) in face {
                let (u, v) = g.edge_endpoints(e, fwd);
                let (x1, y1) = positions[u as usize];
                let (x2, y2) = positions[v as usize];
                area2 += x1 * y2 - x2 * y1;
            }
            if area2 < best.0 {
                best = (area2, fi);
            }
        }
        g.outer_face = best.1;
        Ok(g)
    }

    /// Hexagon-shaped patch of the triangular lattice (site percolation on
    /// it is critical at one half). Returns the graph and its center vertex.
    pub fn triangular_patch(radius: u32) -> (PlanarGraph, u32) {
        let r = radius as i64;
        let mut coords = Vec::new();
        for i in -r..=r {
            for j in -r..=r {
                if (i + j).abs() <= r {
                    coords.push((i, j));
                }
            }
        }
        let index: HashMap<(i64, i64), u32> = coords
            .iter()
            .enumerate()
            .map(|(n, &c)| (c, n as u32))
            .collect();
        let mut edges = Vec::new();
        for (n, &(i, j)) in coords.iter().enumerate() {
            for (di, dj) in [(1, 0), (0, 1), (1, -1)] {
                if let Some(&m) = index.get(&(i + di, j + dj)) {
                    edges.push((n as u32, m));
                }
            }
        }
        let pos: Vec<(i64, i64)> = coords.iter().map(|&(i, j)| (2 * i + j, j)).collect();
        let g = PlanarGraph::from_embedded(&pos, edges).expect("triangular patch is planar");
        (g, index[&(0, 0)])
    }

    /// View a hexagonal patch as a planar graph with identical vertex and
    /// edge ids.
    pub fn from_hex_patch(patch: &HexPatch) -> PlanarGraph {
        let edges: Vec<(u32, u32)> = patch.edges.iter().map(|e| (e.up, e.down)).collect();
        let rotations: Vec<Vec<u32>> = patch
            .vertex_edges
            .iter()
            .map(|slots| slots.iter().flatten().copied().collect())
            .collect();
        let mut g = PlanarGraph::new(patch.vertices.len(), edges, rotations, None)
            .expect("patch rotations are coherent");
        // The outer face is the unique traced face that is not a hexagon of
        // the patch: it contains the first boundary edge directed with the
        // patch on its right.
        let b = patch.boundary_edges[0];
        let (u0, _) = (patch.boundary[0], ());
        let fwd = g.edges[b as usize].0 == u0;
        g.outer_face = g.edge_face[b as usize][if fwd { 0 } else { 1 }] as usize;
        g
    }

    fn edge_endpoints(&self, e: u32, forward: bool) -> (u32, u32) {
        let (u, v) = self.edges[e as usize];
        if forward {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Directed-edge successor in the face permutation.
    fn next_in_face(&self, e: u32, forward: bool) -> (u32, bool) {
        let (_, v) = self.edge_endpoints(e, forward);
        let rot = &self.rotations[v as usize];
        let pos = rot.iter().position(|&x| x == e).unwrap();
        let next = rot[(pos + rot.len() - 1) % rot.len()];
        let fwd = self.edges[next as usize].0 == v;
        (next, fwd)
    }

    fn trace_all_faces(&mut self) {
        let m = self.edges.len();
        let mut face_of = vec![[u32::MAX; 2]; m];
        let mut faces = Vec::new();
        for e0 in 0..m as u32 {
            for fwd0 in [true, false] {
                if face_of[e0 as usize][if fwd0 { 0 } else { 1 }] != u32::MAX {
                    continue;
                }
                let id = faces.len() as u32;
                let mut walk = Vec::new();
                let (mut e, mut fwd) = (e0, fwd0);
                loop {
                    face_of[e as usize][if fwd { 0 } else { 1 }] = id;
                    walk.push((e, fwd));
                    let (ne, nf) = self.next_in_face(e, fwd);
                    e = ne;
                    fwd = nf;
                    if e == e0 && fwd == fwd0 {
                        break;
                    }
                }
                faces.push(walk);
            }
        }
        let mut vertex_faces = vec![Vec::new(); self.n];
        for (fi, face) in faces.iter().enumerate() {
            for &(e, fwd) in face {
                let (u, _) = self.edge_endpoints(e, fwd);
                let vf = &mut vertex_faces[u as usize];
                if !vf.contains(&(fi as u32)) {
                    vf.push(fi as u32);
                }
            }
        }
        self.faces = faces;
        self.edge_face = face_of;
        self.vertex_faces = vertex_faces;
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Euler's relation V - E + F = 2 on each connected component, faces
    /// counted from this component's own trace.
    pub fn euler_ok(&self) -> bool {
        let comps = self.components();
        let ncomp = comps.iter().copied().max().map(|m| m + 1).unwrap_or(0);
        for c in 0..ncomp {
            let v = comps.iter().filter(|&&x| x == c).count() as i64;
            let e = self
                .edges
                .iter()
                .filter(|&&(u, _)| comps[u as usize] == c)
                .count() as i64;
            let mut fs = std::collections::HashSet::new();
            for (fi, face) in self.faces.iter().enumerate() {
                let (u, _) = self.edge_endpoints(face[0].0, face[0].1);
                if comps[u as usize] == c {
                    fs.insert(fi);
                }
            }
            if v - e + fs.len() as i64 != 2 {
                return false;
            }
        }
        true
    }

    fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut c = 0;
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = c;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adj[v] {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = c;
                        stack.push(w as usize);
                    }
                }
            }
            c += 1;
        }
        comp
    }

    /// Breadth-first distances from a root.
    pub fn distances(&self, root: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        dist[root as usize] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// The combinatorial ball Lambda_n(root) and its shell of vertices at
    /// distance exactly n.
    pub fn combinatorial_ball(&self, root: u32, n: u32) -> (Vec<u32>, Vec<u32>) {
        let dist = self.distances(root);
        let ball = (0..self.n as u32)
            .filter(|&v| dist[v as usize] <= n)
            .collect();
        let shell = (0..self.n as u32)
            .filter(|&v| dist[v as usize] == n)
            .collect();
        (ball, shell)
    }

    /// Vertices incident to the outer face.
    pub fn outer_vertices(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.faces[self.outer_face]
            .iter()
            .map(|&(e, fwd)| self.edge_endpoints(e, fwd).0)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The cut-set construction: grow the region of the outer face in the
    /// complement of the ball, take its complement as the enclosed region,
    /// and read the ordered cut vertices off the region's boundary walk.
    pub fn cut_set(&self, root: u32, n: u32) -> Result<CutSet> {
        let dist = self.distances(root);
        if dist.contains(&u32::MAX) {
            return Err(Error::Disconnected);
        }
        let in_ball = |v: u32| dist[v as usize] <= n;
        for &v in &self.outer_vertices() {
            if in_ball(v) {
                return Err(Error::PatchTooSmall { radius: n as usize });
            }
        }
        // Edges of the induced subgraph on the ball block the region growth.
        let blocked: Vec<bool> = self
            .edges
            .iter()
            .map(|&(u, v)| in_ball(u) && in_ball(v))
            .collect();
        if blocked.iter().all(|&b| !b) {
            // Degenerate ball with no induced edge (n = 0): the region is the
            // ball itself and the walk is the single shell vertex.
            let shell: Vec<u32> = (0..self.n as u32)
                .filter(|&v| dist[v as usize] == n)
                .collect();
            return Ok(CutSet {
                root,
                radius: n,
                ball: (0..self.n as u32).filter(|&v| in_ball(v)).collect(),
                shell: shell.clone(),
                omega_vertices: (0..self.n as u32).map(in_ball).collect(),
                walk: shell.clone(),
                s_n: shell,
                q_faces: vec![true; self.faces.len()],
            });
        }

        // Q: faces reachable from the outer face across unblocked edges.
        let mut in_q = vec![false; self.faces.len()];
        in_q[self.outer_face] = true;
        let mut stack = vec![self.outer_face as u32];
        while let Some(f) = stack.pop() {
            for &(e, _) in &self.faces[f as usize] {
                if blocked[e as usize] {
                    continue;
                }
                for side in 0..2 {
                    let g = self.edge_face[e as usize][side];
                    if !in_q[g as usize] {
                        in_q[g as usize] = true;
                        stack.push(g);
                    }
                }
            }
        }

        // Vertices of the enclosed region: the ball plus anything whose faces
        // all avoid Q. (A vertex outside the ball has no blocked edge, so all
        // its faces lie in one region.)
        let omega_vertices: Vec<bool> = (0..self.n as u32)
            .map(|v| {
                in_ball(v)
                    || self.vertex_faces[v as usize]
                        .iter()
                        .all(|&f| !in_q[f as usize])
            })
            .collect();

        // Boundary walk of the region: trace the merged face of the
        // ball-induced subgraph that contains Q. Start from a directed
        // blocked edge whose left face is in Q.
        let mut start = None;
        'outer: for e in 0..self.edges.len() as u32 {
            if !blocked[e as usize] {
                continue;
            }
            for (side, fwd) in [(0usize, true), (1usize, false)] {
                if in_q[self.edge_face[e as usize][side] as usize] {
                    start = Some((e, fwd));
                    break 'outer;
                }
            }
        }
        let (e0, f0) = start.ok_or(Error::PatchTooSmall { radius: n as usize })?;
        let mut walk = Vec::new();
        let (mut e, mut fwd) = (e0, f0);
        loop {
            let (u, v) = self.edge_endpoints(e, fwd);
            walk.push(u);
            if walk.len() > 2 * self.edges.len() + 4 {
                return Err(Error::MalformedRotation(
                    "cut-set boundary walk does not close".into(),
                ));
            }
            // Counterclockwise predecessor among blocked edges at v.
            let rot = &self.rotations[v as usize];
            let pos = rot.iter().position(|&x| x == e).unwrap();
            let mut chosen = None;
            for step in 1..=rot.len() {
                let cand = rot[(pos + rot.len() - step) % rot.len()];
                if blocked[cand as usize] {
                    chosen = Some(cand);
                    break;
                }
            }
            let ne = chosen.expect("arrival edge is blocked");
            let nf = self.edges[ne as usize].0 == v;
            e = ne;
            fwd = nf;
            if e == e0 && fwd == f0 {
                break;
            }
        }

        let shell: Vec<bool> = (0..self.n as u32)
            .map(|v| dist[v as usize] == n)
            .collect();
        let mut seen_in_walk = vec![false; self.n];
        let mut s_n = Vec::new();
        for &v in &walk {
            if shell[v as usize] {
                if seen_in_walk[v as usize] {
                    return Err(Error::MalformedRotation(format!(
                        "cut vertex {v} covered twice on the boundary walk"
                    )));
                }
                seen_in_walk[v as usize] = true;
                s_n.push(v);
            }
        }

        Ok(CutSet {
            root,
            radius: n,
            ball: (0..self.n as u32).filter(|&v| in_ball(v)).collect(),
            shell: (0..self.n as u32)
                .filter(|&v| shell[v as usize])
                .collect(),
            omega_vertices,
            walk,
            s_n,
            q_faces: in_q,
        })
    }

    pub fn adjacency(&self) -> &[Vec<(u32, u32)>] {
        &self.adj
    }
}

/// Output of the cut-set construction around (root, radius).
#[derive(Debug, Clone)]
pub struct CutSet {
    pub root: u32,
    pub radius: u32,
    /// Vertices at distance <= radius.
    pub ball: Vec<u32>,
    /// Vertices at distance exactly radius.
    pub shell: Vec<u32>,
    /// Membership of the enclosed region Omega_n (ball plus swallowed
    /// pockets).
    pub omega_vertices: Vec<bool>,
    /// Boundary walk of the region, as visited vertices (may repeat cut
    /// vertices of the ball, never vertices of `s_n`).
    pub walk: Vec<u32>,
    /// The ordered cut set: walk vertices on the shell, each exactly once.
    pub s_n: Vec<u32>,
    /// Faces of the exterior region Q_n.
    pub q_faces: Vec<bool>,
}

impl CutSet {
    /// Vertices strictly outside the enclosed region.
    pub fn exterior_mask(&self) -> Vec<bool> {
        self.omega_vertices.iter().map(|&b| !b).collect()
    }

    pub fn s_positions(&self) -> HashMap<u32, usize> {
        self.s_n
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect()
    }
}
