use rustc_hash::FxHashSet;

use super::{TriMesh, NO_FACE};

/// A closed boundary loop of a face set, oriented with the faces on its left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryLoop {
    /// `vertices[i] -> vertices[i + 1]` is the edge opposite corner
    /// `edges[i].1` of face `edges[i].0`.
    pub vertices: Vec<u32>,
    pub edges: Vec<(u32, u8)>,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn length(&self, mesh: &TriMesh) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| (mesh.position(self.vertices[(i + 1) % n]) - mesh.position(self.vertices[i])).norm())
            .sum()
    }

    pub fn min_vertex(&self) -> u32 {
        self.vertices.iter().copied().min().unwrap_or(u32::MAX)
    }
}

/// Boundary loops of the face set `faces` (membership given by `in_region`).
/// An edge is on the boundary when it is a mesh boundary edge, borders a
/// face outside the set, or is a seam. Loops are sorted by smallest vertex
/// id and each starts at its smallest vertex.
pub fn boundary_loops(
    mesh: &TriMesh,
    faces: &[u32],
    in_region: impl Fn(u32) -> bool,
    is_seam: impl Fn(u32, u32) -> bool,
) -> Vec<BoundaryLoop> {
    let is_boundary = |f: u32, k: usize| {
        let g = mesh.neighbor(f, k);
        if g == NO_FACE || !in_region(g) {
            return true;
        }
        let (a, b) = mesh.edge_vertices(f, k);
        is_seam(a, b)
    };
    let mut sorted: Vec<u32> = faces.to_vec();
    sorted.sort_unstable();
    let mut seen: FxHashSet<(u32, u8)> = FxHashSet::default();
    let mut loops = Vec::new();
    for &f in &sorted {
        for k in 0..3 {
            if seen.contains(&(f, k as u8)) || !is_boundary(f, k) {
                continue;
            }
            let mut lp = BoundaryLoop { vertices: Vec::new(), edges: Vec::new() };
            let (mut cf, mut ck) = (f, k);
            loop {
                seen.insert((cf, ck as u8));
                lp.vertices.push(mesh.edge_vertices(cf, ck).0);
                lp.edges.push((cf, ck as u8));
                // rotate around the head vertex to the next boundary edge
                let (mut hf, mut hk) = (cf, (ck + 1) % 3);
                let mut guard = 0;
                while !is_boundary(hf, hk) {
                    let g = mesh.neighbor(hf, hk);
                    let (b, c) = mesh.edge_vertices(hf, hk);
                    let j = mesh.edge_slot(g, c, b).expect("symmetric adjacency");
                    hf = g;
                    hk = (j + 1) % 3;
                    guard += 1;
                    if guard > 4096 {
                        break;
                    }
                }
                cf = hf;
                ck = hk;
                if (cf, ck) == (f, k) || seen.contains(&(cf, ck as u8)) {
                    break;
                }
            }
            let start = (0..lp.vertices.len()).min_by_key(|&i| (lp.vertices[i], i)).unwrap_or(0);
            lp.vertices.rotate_left(start);
            lp.edges.rotate_left(start);
            loops.push(lp);
        }
    }
    loops.sort_by_key(|l| (l.min_vertex(), l.len()));
    loops
}

/// Loops of the whole mesh.
pub fn mesh_boundary_loops(mesh: &TriMesh) -> Vec<BoundaryLoop> {
    let faces: Vec<u32> = (0..mesh.face_count() as u32).collect();
    boundary_loops(mesh, &faces, |_| true, |_, _| false)
}
