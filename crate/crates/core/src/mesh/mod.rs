//! Indexed triangle mesh with face adjacencies.
//!
//! Geometry lives in three parallel arrays: positions, triangles and face
//! adjacencies. `adjacency[f][k]` is the face across the edge opposite corner
//! `k` of face `f`, i.e. the edge `(t[(k+1)%3], t[(k+2)%3])`, or
//! [`NO_FACE`] on the mesh boundary.

mod boundary;
pub mod io;
pub mod primitives;
mod split;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Point, Vec3};

pub use boundary::{boundary_loops, mesh_boundary_loops, BoundaryLoop};
pub use split::{CutOutcome, CutPoint, CutRequest, EdgeSplit, NewVertex, SplitEvent, SNAP_TOLERANCE};

/// Sentinel stored in adjacency slots for boundary edges.
pub const NO_FACE: u32 = u32::MAX;

/// Triangle fan around a vertex: `(face, corner)` pairs in rotation order.
pub type Fan = SmallVec<[(u32, u8); 16]>;

/// One edge of a face, named by the corner opposite to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRef {
    pub face: u32,
    pub corner: u8,
}

impl EdgeRef {
    pub fn new(face: u32, corner: u8) -> Self {
        debug_assert!(corner < 3);
        Self { face, corner }
    }

    /// The two half-edge views of an interior edge map to the view held by
    /// the lower face id.
    pub fn canonical(self, mesh: &TriMesh) -> EdgeRef {
        let g = mesh.adjacency[self.face as usize][self.corner as usize];
        if g == NO_FACE || g > self.face {
            return self;
        }
        let (a, b) = mesh.edge_vertices(self.face, self.corner as usize);
        match mesh.edge_slot(g, b, a) {
            Some(k) => EdgeRef::new(g, k as u8),
            None => self,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    positions: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    adjacency: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
    vertex_face: Vec<u32>,
}

impl TriMesh {
    /// Builds a mesh from a triangle soup, computing adjacencies and vertex
    /// normals. Rejects out of range indices, degenerate faces and
    /// non-manifold configurations.
    pub fn new(positions: Vec<Point>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = positions.len() as u32;
        for (f, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("face {f} references a missing vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[2] == t[0] {
                return Err(Error::Degenerate(format!("face {f} repeats a vertex")));
            }
            let area = triangle_area(
                &positions[t[0] as usize],
                &positions[t[1] as usize],
                &positions[t[2] as usize],
            );
            if !(area > 0.0) {
                return Err(Error::Degenerate(format!("face {f} has zero area")));
            }
        }
        let adjacency = compute_adjacencies(&triangles)?;
        let mut mesh = TriMesh {
            vertex_face: vec![NO_FACE; positions.len()],
            normals: vec![Vec3::zeros(); positions.len()],
            positions,
            triangles,
            adjacency,
        };
        for (f, t) in mesh.triangles.iter().enumerate() {
            for &v in t {
                if mesh.vertex_face[v as usize] == NO_FACE {
                    mesh.vertex_face[v as usize] = f as u32;
                }
            }
        }
        mesh.check_vertex_fans()?;
        mesh.recompute_normals();
        Ok(mesh)
    }

    fn check_vertex_fans(&self) -> Result<()> {
        let mut incident = vec![0u32; self.positions.len()];
        for t in &self.triangles {
            for &v in t {
                incident[v as usize] += 1;
            }
        }
        for v in 0..self.positions.len() as u32 {
            if self.vertex_face[v as usize] == NO_FACE {
                continue;
            }
            if self.fan(v).len() as u32 != incident[v as usize] {
                return Err(Error::NonManifoldVertex(v));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn adjacency(&self) -> &[[u32; 3]] {
        &self.adjacency
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    #[inline]
    pub fn position(&self, v: u32) -> &Point {
        &self.positions[v as usize]
    }

    #[inline]
    pub fn triangle(&self, f: u32) -> [u32; 3] {
        self.triangles[f as usize]
    }

    #[inline]
    pub fn neighbor(&self, f: u32, corner: usize) -> u32 {
        self.adjacency[f as usize][corner]
    }

    /// Endpoints of the edge opposite `corner`, in face winding order.
    #[inline]
    pub fn edge_vertices(&self, f: u32, corner: usize) -> (u32, u32) {
        let t = self.triangles[f as usize];
        (t[(corner + 1) % 3], t[(corner + 2) % 3])
    }

    /// Corner of `f` opposite the directed edge `a -> b`, if the face has it.
    pub fn edge_slot(&self, f: u32, a: u32, b: u32) -> Option<usize> {
        let t = self.triangles[f as usize];
        (0..3).find(|&k| t[(k + 1) % 3] == a && t[(k + 2) % 3] == b)
    }

    pub fn corner_of(&self, f: u32, v: u32) -> Option<usize> {
        self.triangles[f as usize].iter().position(|&x| x == v)
    }

    pub fn face_points(&self, f: u32) -> [&Point; 3] {
        let t = self.triangles[f as usize];
        [
            &self.positions[t[0] as usize],
            &self.positions[t[1] as usize],
            &self.positions[t[2] as usize],
        ]
    }

    pub fn face_area(&self, f: u32) -> f64 {
        let [a, b, c] = self.face_points(f);
        triangle_area(a, b, c)
    }

    pub fn face_normal(&self, f: u32) -> Vec3 {
        let [a, b, c] = self.face_points(f);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_centroid(&self, f: u32) -> Point {
        let [a, b, c] = self.face_points(f);
        Point::from((a.coords + b.coords + c.coords) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.face_count() as u32).map(|f| self.face_area(f)).sum()
    }

    pub fn vertex_face(&self, v: u32) -> u32 {
        self.vertex_face[v as usize]
    }

    /// Faces around `v` in rotation order. For boundary vertices the fan
    /// starts at one boundary edge and ends at the other.
    pub fn fan(&self, v: u32) -> Fan {
        const LIMIT: usize = 4096;
        let mut fan = Fan::new();
        let start = self.vertex_face[v as usize];
        if start == NO_FACE {
            return fan;
        }
        // rotate backwards to the boundary (if any) to find the first face
        let mut first = start;
        for _ in 0..LIMIT {
            let c = self.corner_of(first, v).expect("fan face contains vertex");
            let g = self.adjacency[first as usize][(c + 2) % 3];
            if g == NO_FACE {
                break;
            }
            if g == start {
                first = start;
                break;
            }
            first = g;
        }
        let mut f = first;
        loop {
            let c = self.corner_of(f, v).expect("fan face contains vertex");
            fan.push((f, c as u8));
            let g = self.adjacency[f as usize][(c + 1) % 3];
            if g == NO_FACE || g == first || fan.len() > LIMIT {
                break;
            }
            f = g;
        }
        fan
    }

    pub fn is_boundary_vertex(&self, v: u32) -> bool {
        let fan = self.fan(v);
        match fan.last() {
            Some(&(f, c)) => self.adjacency[f as usize][(c as usize + 1) % 3] == NO_FACE,
            None => true,
        }
    }

    /// Distinct neighbours of `v` in fan order.
    pub fn vertex_ring(&self, v: u32) -> SmallVec<[u32; 16]> {
        let mut ring = SmallVec::new();
        for (f, c) in self.fan(v) {
            let t = self.triangles[f as usize];
            for w in [t[(c as usize + 1) % 3], t[(c as usize + 2) % 3]] {
                if !ring.contains(&w) {
                    ring.push(w);
                }
            }
        }
        ring
    }

    /// Area-weighted average of incident face normals.
    pub fn recompute_normals(&mut self) {
        let mut normals = vec![Vec3::zeros(); self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|v| self.positions[v as usize]);
            // cross product norm is twice the area: area weighting for free
            let n = (b - a).cross(&(c - a));
            for &v in t {
                normals[v as usize] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        self.normals = normals;
    }

    /// Replaces vertex positions without touching connectivity.
    pub fn set_positions(&mut self, positions: Vec<Point>) -> Result<()> {
        if positions.len() != self.positions.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} positions, got {}",
                self.positions.len(),
                positions.len()
            )));
        }
        self.positions = positions;
        self.recompute_normals();
        Ok(())
    }

    /// Uniformly scales the mesh about the origin.
    pub fn scaled(&self, s: f64) -> TriMesh {
        let mut m = self.clone();
        for p in &mut m.positions {
            p.coords *= s;
        }
        m
    }

    /// Checks every connectivity invariant. Used by tests and after replay.
    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len() as u32;
        for (f, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("face {f} out of range")));
            }
            if !(self.face_area(f as u32) > 0.0) {
                return Err(Error::Degenerate(format!("face {f} has zero area")));
            }
            for k in 0..3 {
                let g = self.adjacency[f][k];
                if g == NO_FACE {
                    continue;
                }
                let (a, b) = self.edge_vertices(f as u32, k);
                match self.edge_slot(g, b, a) {
                    Some(j) if self.adjacency[g as usize][j] == f as u32 => {}
                    _ => {
                        return Err(Error::InvalidMesh(format!(
                            "adjacency of face {f} across ({a}, {b}) is not symmetric"
                        )))
                    }
                }
            }
        }
        let fresh = compute_adjacencies(&self.triangles)?;
        if fresh != self.adjacency {
            return Err(Error::InvalidMesh("stored adjacency differs from recomputed".into()));
        }
        Ok(())
    }

    /// Counts undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut interior2 = 0usize;
        let mut boundary = 0usize;
        for adj in &self.adjacency {
            for &g in adj {
                if g == NO_FACE {
                    boundary += 1;
                } else {
                    interior2 += 1;
                }
            }
        }
        interior2 / 2 + boundary
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used = self.vertex_face.iter().filter(|&&f| f != NO_FACE).count() as i64;
        used - self.edge_count() as i64 + self.face_count() as i64
    }
}

/// Face adjacencies of a consistently oriented 2-manifold triangle soup.
pub fn compute_adjacencies(triangles: &[[u32; 3]]) -> Result<Vec<[u32; 3]>> {
    let mut adjacency = vec![[NO_FACE; 3]; triangles.len()];
    let mut open: FxHashMap<(u32, u32), (u32, u8)> = FxHashMap::default();
    open.reserve(triangles.len() * 2);
    let mut closed: FxHashMap<(u32, u32), ()> = FxHashMap::default();
    for (f, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = t[(k + 1) % 3];
            let b = t[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            if closed.contains_key(&key) {
                return Err(Error::NonManifoldEdge(key.0, key.1));
            }
            match open.remove(&key) {
                Some((g, j)) => {
                    let gt = triangles[g as usize];
                    // the other face must traverse the edge the opposite way
                    if gt[(j as usize + 1) % 3] != b || gt[(j as usize + 2) % 3] != a {
                        return Err(Error::NonManifoldEdge(key.0, key.1));
                    }
                    adjacency[f][k] = g;
                    adjacency[g as usize][j as usize] = f as u32;
                    closed.insert(key, ());
                }
                None => {
                    open.insert(key, (f as u32, k as u8));
                }
            }
        }
    }
    Ok(adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn unit_square() -> TriMesh {
        primitives::unit_square()
    }

    #[test]
    fn single_triangle_has_boundary_slots() {
        let m = TriMesh::new(
            vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.adjacency()[0], [NO_FACE; 3]);
    }

    #[test]
    fn square_adjacency_is_symmetric() {
        let m = unit_square();
        let adj = m.adjacency();
        assert_eq!(adj[0].iter().filter(|&&g| g == 1).count(), 1);
        assert_eq!(adj[1].iter().filter(|&&g| g == 0).count(), 1);
        let sentinels = adj.iter().flatten().filter(|&&g| g == NO_FACE).count();
        assert_eq!(sentinels, 4);
        m.validate().unwrap();
    }

    #[test]
    fn icosahedron_is_closed() {
        let m = primitives::icosphere(0);
        assert_eq!(m.face_count(), 20);
        assert!(m.adjacency().iter().flatten().all(|&g| g != NO_FACE));
        // brute-force edge-pair matching
        for f in 0..20u32 {
            for k in 0..3 {
                let (a, b) = m.edge_vertices(f, k);
                let mates: Vec<u32> = (0..20u32)
                    .filter(|&g| g != f && m.edge_slot(g, b, a).is_some())
                    .collect();
                assert_eq!(mates, vec![m.neighbor(f, k)]);
            }
        }
    }

    #[test]
    fn icosphere_euler_characteristic() {
        for k in 0..4 {
            let m = primitives::icosphere(k);
            assert_eq!(m.face_count(), 20 * 4usize.pow(k));
            let mut edges = std::collections::HashSet::new();
            for t in m.triangles() {
                for i in 0..3 {
                    let (a, b) = (t[i], t[(i + 1) % 3]);
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let chi = m.vertex_count() as i64 - edges.len() as i64 + m.face_count() as i64;
            assert_eq!(chi, 2);
            assert_eq!(m.euler_characteristic(), 2);
        }
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let p = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let err = TriMesh::new(p, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge(0, 1)), "{err}");
    }

    #[test]
    fn rejects_degenerate_face() {
        let p = vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0)];
        assert!(matches!(TriMesh::new(p, vec![[0, 1, 2]]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fan_orders_boundary_vertex() {
        let m = primitives::grid(2, 2, 1.0);
        // center vertex of a 2x2 grid is interior
        let center = 4;
        assert!(!m.is_boundary_vertex(center));
        assert_eq!(m.fan(center).len(), 6);
        assert!(m.is_boundary_vertex(0));
        let ring = m.vertex_ring(center);
        assert_eq!(ring.len(), 6);
    }

    #[test]
    fn canonical_edge_ref_agrees_from_both_sides() {
        let m = unit_square();
        for f in 0..2u32 {
            for k in 0..3u8 {
                let e = EdgeRef::new(f, k).canonical(&m);
                let g = m.neighbor(f, k as usize);
                if g != NO_FACE {
                    let (a, b) = m.edge_vertices(f, k as usize);
                    let j = m.edge_slot(g, b, a).unwrap() as u8;
                    assert_eq!(EdgeRef::new(g, j).canonical(&m), e);
                }
            }
        }
    }

    #[test]
    fn normals_are_unit_and_outward_on_sphere() {
        let m = primitives::icosphere(2);
        for (p, n) in m.positions().iter().zip(m.normals()) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!(n.dot(&p.coords) > 0.9);
        }
    }
}
