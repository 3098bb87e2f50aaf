//! Approximate geodesic graph: one node per vertex, arcs along mesh edges and
//! across pairs of adjacent faces ("dual" arcs between the two opposite
//! vertices, measured in the unfolded plane).
//!
//! Arc lists are a pure function of a vertex's neighborhood, so rebuilding a
//! node after local changes gives exactly what a full rebuild would.

mod solve;
pub mod steiner;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{EdgeRef, SplitEvent, TriMesh, NO_FACE};

pub use solve::{solve_distances, SolveOptions, Solver, SolverPool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcKind {
    Edge,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub node: u32,
    pub len: f32,
    pub kind: ArcKind,
}

pub type ArcList = SmallVec<[Arc; 12]>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeodesicGraph {
    adj: Vec<ArcList>,
}

impl GeodesicGraph {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn arcs(&self, v: u32) -> &[Arc] {
        &self.adj[v as usize]
    }

    /// Number of bidirectional arcs.
    pub fn arc_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn dual_arc_count(&self) -> usize {
        self.adj.iter().flatten().filter(|a| a.kind == ArcKind::Dual).count() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adj.is_empty() {
            return 0.0;
        }
        self.adj.iter().map(|a| a.len()).sum::<usize>() as f64 / self.adj.len() as f64
    }

    pub fn arc_length(&self, u: u32, v: u32) -> Option<f32> {
        self.adj[u as usize].iter().find(|a| a.node == v).map(|a| a.len)
    }

    /// Describes the first difference to `other` (node count, arc set or a
    /// length beyond `tol`), or `None` when the graphs agree.
    pub fn difference(&self, other: &GeodesicGraph, tol: f64) -> Option<String> {
        if self.adj.len() != other.adj.len() {
            return Some(format!("node count {} vs {}", self.adj.len(), other.adj.len()));
        }
        for (v, (a, b)) in self.adj.iter().zip(&other.adj).enumerate() {
            if a.len() != b.len() {
                return Some(format!("node {v}: {} arcs vs {}", a.len(), b.len()));
            }
            for (x, y) in a.iter().zip(b.iter()) {
                if x.node != y.node || x.kind != y.kind {
                    return Some(format!("node {v}: arc to {} ({:?}) vs {} ({:?})", x.node, x.kind, y.node, y.kind));
                }
                if (x.len as f64 - y.len as f64).abs() > tol {
                    return Some(format!("node {v}: arc to {} length {} vs {}", x.node, x.len, y.len));
                }
            }
        }
        None
    }

    /// Checks symmetry and positivity of all arcs.
    pub fn check_invariants(&self) -> Result<()> {
        for (u, list) in self.adj.iter().enumerate() {
            for a in list {
                if !(a.len > 0.0 && a.len.is_finite()) {
                    return Err(Error::InvalidMesh(format!("arc {u}->{} has length {}", a.node, a.len)));
                }
                let back = self.adj[a.node as usize].iter().find(|b| b.node == u as u32);
                match back {
                    Some(b) if b.len == a.len && b.kind == a.kind => {}
                    _ => return Err(Error::InvalidMesh(format!("arc {u}->{} is not mirrored", a.node))),
                }
            }
        }
        Ok(())
    }
}

/// Length of the dual arc across an interior edge, `None` when the unfolded
/// segment between the opposite vertices misses the edge interior.
pub fn dual_arc_length(mesh: &TriMesh, edge: EdgeRef) -> Result<Option<f64>> {
    let g = mesh.neighbor(edge.face, edge.corner as usize);
    if g == NO_FACE {
        return Err(Error::InvalidParameter("dual arc requested on a boundary edge".into()));
    }
    let (a, b) = mesh.edge_vertices(edge.face, edge.corner as usize);
    let p = mesh.triangle(edge.face)[edge.corner as usize];
    let j = mesh.edge_slot(g, b, a).expect("symmetric adjacency");
    let q = mesh.triangle(g)[j];
    if (mesh.position(a) - mesh.position(b)).norm() == 0.0 {
        return Err(Error::Degenerate(format!("edge ({a}, {b}) has zero length")));
    }
    Ok(unfolded_length(mesh.positions(), a, b, p, q))
}

/// Unfolds triangles `(a, b, p)` and `(b, a, q)` about `a-b`. Inputs are put
/// in canonical order first so both endpoints get bit-identical results.
fn unfolded_length(pos: &[Point], a: u32, b: u32, p: u32, q: u32) -> Option<f64> {
    let (a, b) = (a.min(b), a.max(b));
    let (p, q) = (p.min(q), p.max(q));
    let pa = &pos[a as usize];
    let ab = pos[b as usize] - pa;
    let lab = ab.norm();
    if !(lab > 0.0) {
        return None;
    }
    let ex = ab / lab;
    let coords = |v: u32| {
        let d = pos[v as usize] - pa;
        let x = d.dot(&ex);
        let y = (d - ex * x).norm();
        (x, y)
    };
    let (x1, y1) = coords(p);
    let (x2, y2) = coords(q);
    let h = y1 + y2;
    if !(h > 0.0) {
        return None;
    }
    let cross = x1 + (x2 - x1) * (y1 / h);
    let margin = 1e-9 * lab;
    if cross <= margin || cross >= lab - margin {
        return None;
    }
    Some(((x2 - x1).powi(2) + h * h).sqrt())
}

/// Arc list of vertex `v`, sorted by neighbor id.
pub fn node_arcs(mesh: &TriMesh, pos: &[Point], v: u32) -> ArcList {
    let mut arcs: ArcList = SmallVec::new();
    let fan = mesh.fan(v);
    let pv = &pos[v as usize];
    for &(f, c) in &fan {
        let t = mesh.triangle(f);
        for w in [t[(c as usize + 1) % 3], t[(c as usize + 2) % 3]] {
            if !arcs.iter().any(|a| a.node == w) {
                let len = (pos[w as usize] - pv).norm() as f32;
                arcs.push(Arc { node: w, len, kind: ArcKind::Edge });
            }
        }
    }
    let edge_count = arcs.len();
    for &(f, c) in &fan {
        let g = mesh.neighbor(f, c as usize);
        if g == NO_FACE {
            continue;
        }
        let (a, b) = mesh.edge_vertices(f, c as usize);
        let Some(j) = mesh.edge_slot(g, b, a) else { continue };
        let w = mesh.triangle(g)[j];
        if w == v || arcs[..edge_count].iter().any(|x| x.node == w) {
            continue;
        }
        if let Some(len) = unfolded_length(pos, a, b, v, w) {
            let len = len as f32;
            match arcs[edge_count..].iter_mut().find(|x| x.node == w) {
                Some(x) => x.len = x.len.min(len),
                None => arcs.push(Arc { node: w, len, kind: ArcKind::Dual }),
            }
        }
    }
    arcs.sort_by(|x, y| x.node.cmp(&y.node).then(x.kind.cmp(&y.kind)));
    arcs
}

/// Builds the graph with arc lengths measured on the mesh positions.
pub fn build_graph(mesh: &TriMesh) -> GeodesicGraph {
    build_graph_with(mesh, mesh.positions())
}

/// Builds the graph with arc lengths measured on `pos` (e.g. perturbed
/// positions) over the mesh connectivity.
pub fn build_graph_with(mesh: &TriMesh, pos: &[Point]) -> GeodesicGraph {
    assert_eq!(pos.len(), mesh.vertex_count(), "one position per vertex");
    GeodesicGraph { adj: (0..mesh.vertex_count() as u32).map(|v| node_arcs(mesh, pos, v)).collect() }
}

/// Patches the graph after splits: appends nodes for new vertices and
/// rebuilds the arcs of every node whose neighborhood changed.
/// Returns the rebuilt nodes.
pub fn update_graph_after_split(
    graph: &mut GeodesicGraph,
    mesh: &TriMesh,
    pos: &[Point],
    events: &[SplitEvent],
) -> Result<Vec<u32>> {
    if graph.adj.len() > mesh.vertex_count() || pos.len() != mesh.vertex_count() {
        return Err(Error::StaleEvents(format!(
            "graph has {} nodes, mesh {} vertices, {} positions",
            graph.adj.len(),
            mesh.vertex_count(),
            pos.len()
        )));
    }
    let nf = mesh.face_count() as u32;
    let mut touched: Vec<u32> = Vec::new();
    for e in events {
        if e.face >= nf || e.children.first() != Some(&e.face) {
            return Err(Error::StaleEvents(format!("event for face {} does not match the mesh", e.face)));
        }
        for &c in &e.children {
            if c >= nf {
                return Err(Error::StaleEvents(format!("child face {c} does not exist")));
            }
            touched.extend(mesh.triangle(c));
            for k in 0..3 {
                let g = mesh.neighbor(c, k);
                if g != NO_FACE {
                    touched.extend(mesh.triangle(g));
                }
            }
        }
    }
    graph.adj.resize(mesh.vertex_count(), ArcList::new());
    touched.sort_unstable();
    touched.dedup();
    for &v in &touched {
        graph.adj[v as usize] = node_arcs(mesh, pos, v);
    }
    Ok(touched)
}

/// Recomputes arc lengths from new positions. With `changed`, only nodes
/// whose arcs can depend on a changed vertex are recomputed; the result is
/// the same as a full rebuild on `pos`.
pub fn update_lengths(graph: &mut GeodesicGraph, mesh: &TriMesh, pos: &[Point], changed: Option<&[u32]>) {
    assert_eq!(pos.len(), mesh.vertex_count(), "one position per vertex");
    graph.adj.resize(mesh.vertex_count(), ArcList::new());
    match changed {
        None => {
            for v in 0..mesh.vertex_count() as u32 {
                graph.adj[v as usize] = node_arcs(mesh, pos, v);
            }
        }
        Some(changed) => {
            for v in affected_by_moves(mesh, changed) {
                graph.adj[v as usize] = node_arcs(mesh, pos, v);
            }
        }
    }
}

/// Vertices whose arc lists read the position of any vertex in `moved`:
/// the moved vertices, their rings and the vertices across their opposite
/// edges.
pub fn affected_by_moves(mesh: &TriMesh, moved: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(moved.len() * 8);
    for &v in moved {
        out.push(v);
        for (f, c) in mesh.fan(v) {
            let t = mesh.triangle(f);
            out.push(t[(c as usize + 1) % 3]);
            out.push(t[(c as usize + 2) % 3]);
            let g = mesh.neighbor(f, c as usize);
            if g != NO_FACE {
                let (a, b) = mesh.edge_vertices(f, c as usize);
                if let Some(j) = mesh.edge_slot(g, b, a) {
                    out.push(mesh.triangle(g)[j]);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
