//! Region hierarchy over a per-face leaf labeling.
//!
//! Node ids are assigned in creation order, so a parent always has a
//! smaller id than its children. Every face carries the id of the leaf that
//! contains it; the face set of an internal node is the union of its
//! descendant leaves.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{boundary_loops, BoundaryLoop, EdgeSplit, SplitEvent, TriMesh, NO_FACE};

pub type RegionId = u32;

pub const ROOT: RegionId = 0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    #[default]
    Generic,
    OutlineBand,
    OutlineInside,
    Dot,
    DotBackground,
    Stripe,
    Frame,
    Wedge,
    Cell,
}

impl RegionTag {
    pub const ALL: [RegionTag; 9] = [
        RegionTag::Generic,
        RegionTag::OutlineBand,
        RegionTag::OutlineInside,
        RegionTag::Dot,
        RegionTag::DotBackground,
        RegionTag::Stripe,
        RegionTag::Frame,
        RegionTag::Wedge,
        RegionTag::Cell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionTag::Generic => "generic",
            RegionTag::OutlineBand => "outline_band",
            RegionTag::OutlineInside => "outline_inside",
            RegionTag::Dot => "dot",
            RegionTag::DotBackground => "dot_background",
            RegionTag::Stripe => "stripe",
            RegionTag::Frame => "frame",
            RegionTag::Wedge => "wedge",
            RegionTag::Cell => "cell",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionNode {
    pub id: RegionId,
    pub parent: Option<RegionId>,
    pub children: Vec<RegionId>,
    pub tag: RegionTag,
    pub material: u32,
    /// Pieces created together from one band or cell family share a group.
    pub group: Option<u32>,
    /// Index of the command that created the region.
    pub created_by: Option<usize>,
}

/// How a new piece should be recorded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PieceInfo {
    pub tag: RegionTag,
    pub group: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAttributes {
    pub loop_count: usize,
    pub corner_count: usize,
    pub tag: RegionTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternTree {
    nodes: Vec<RegionNode>,
    labels: Vec<RegionId>,
    /// Cut edges with the same leaf on both sides, `(min, max)`.
    seams: BTreeSet<(u32, u32)>,
    next_group: u32,
}

/// Minimum boundary turning angle, in degrees, that makes a mesh boundary
/// vertex a corner.
pub const SHARP_CORNER_DEG: f64 = 30.0;

impl PatternTree {
    pub fn new(face_count: usize) -> Self {
        PatternTree {
            nodes: vec![RegionNode {
                id: ROOT,
                parent: None,
                children: Vec::new(),
                tag: RegionTag::Generic,
                material: 0,
                group: None,
                created_by: None,
            }],
            labels: vec![ROOT; face_count],
            seams: BTreeSet::new(),
            next_group: 0,
        }
    }

    pub fn labels(&self) -> &[RegionId] {
        &self.labels
    }

    pub fn label(&self, f: u32) -> RegionId {
        self.labels[f as usize]
    }

    pub fn nodes(&self) -> &[RegionNode] {
        &self.nodes
    }

    pub fn node(&self, id: RegionId) -> Result<&RegionNode> {
        self.nodes.get(id as usize).ok_or(Error::UnknownRegion(id))
    }

    pub fn node_mut(&mut self, id: RegionId) -> Result<&mut RegionNode> {
        self.nodes.get_mut(id as usize).ok_or(Error::UnknownRegion(id))
    }

    pub fn region_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn seams(&self) -> &BTreeSet<(u32, u32)> {
        &self.seams
    }

    pub fn is_seam(&self, a: u32, b: u32) -> bool {
        self.seams.contains(&(a.min(b), a.max(b)))
    }

    pub fn is_leaf(&self, id: RegionId) -> bool {
        self.nodes.get(id as usize).is_some_and(|n| n.children.is_empty())
    }

    pub fn leaves(&self) -> Vec<RegionId> {
        self.nodes.iter().filter(|n| n.children.is_empty()).map(|n| n.id).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    /// Number of nodes on the path from the root to `id`, inclusive.
    pub fn depth(&self, id: RegionId) -> usize {
        self.ancestors(id).len() + 1
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| self.depth(n.id)).max().unwrap_or(1)
    }

    /// Proper ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: RegionId) -> Vec<RegionId> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(id as usize).and_then(|n| n.parent);
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p as usize].parent;
        }
        out
    }

    /// `sub[n]` tells whether node `n` lies in the subtree of `id`.
    fn subtree(&self, id: RegionId) -> Vec<bool> {
        let mut sub = vec![false; self.nodes.len()];
        for n in &self.nodes {
            sub[n.id as usize] = n.id == id || n.parent.is_some_and(|p| sub[p as usize]);
        }
        sub
    }

    pub fn contains(&self, ancestor: RegionId, id: RegionId) -> bool {
        id == ancestor || self.ancestors(id).contains(&ancestor)
    }

    /// Leaves under `id` (itself if a leaf), ascending.
    pub fn leaves_under(&self, id: RegionId) -> Vec<RegionId> {
        let sub = self.subtree(id);
        self.nodes.iter().filter(|n| sub[n.id as usize] && n.children.is_empty()).map(|n| n.id).collect()
    }

    pub fn face_mask(&self, id: RegionId) -> Result<Vec<bool>> {
        self.node(id)?;
        let sub = self.subtree(id);
        Ok(self.labels.iter().map(|&l| sub[l as usize]).collect())
    }

    pub fn region_faces(&self, id: RegionId) -> Result<Vec<u32>> {
        let mask = self.face_mask(id)?;
        Ok((0..mask.len() as u32).filter(|&f| mask[f as usize]).collect())
    }

    /// Vertices of the region's faces.
    pub fn vertex_mask(&self, mesh: &TriMesh, id: RegionId) -> Result<Vec<bool>> {
        let faces = self.face_mask(id)?;
        Ok(vertex_mask_of(mesh, &faces))
    }

    /// Gives the children created by mesh splits the label of their parent
    /// and carries seams over split edges.
    pub fn apply_split_events(&mut self, face_count: usize, events: &[SplitEvent], edge_splits: &[EdgeSplit]) -> Result<()> {
        if face_count < self.labels.len() {
            return Err(Error::StaleEvents(format!("{} labels for {face_count} faces", self.labels.len())));
        }
        let old = self.labels.len();
        self.labels.resize(face_count, u32::MAX);
        for e in events {
            let parent = *self.labels.get(e.face as usize).filter(|&&l| l != u32::MAX).ok_or_else(|| {
                Error::StaleEvents(format!("split of unlabeled face {}", e.face))
            })?;
            for &c in &e.children {
                self.labels[c as usize] = parent;
            }
        }
        if let Some(f) = self.labels[old..].iter().position(|&l| l == u32::MAX) {
            return Err(Error::StaleEvents(format!("face {} has no parent event", old + f)));
        }
        for s in edge_splits {
            if self.seams.remove(&(s.a, s.b)) {
                let chain: Vec<u32> = std::iter::once(s.a).chain(s.inserted.iter().copied()).chain([s.b]).collect();
                for w in chain.windows(2) {
                    self.seams.insert((w[0].min(w[1]), w[0].max(w[1])));
                }
            }
        }
        Ok(())
    }

    /// Turns leaf `parent` into an internal node with one child per piece.
    /// The pieces must partition the leaf's faces and be edge-connected.
    pub fn split_region(
        &mut self,
        mesh: &TriMesh,
        parent: RegionId,
        pieces: &[Vec<u32>],
        info: &[PieceInfo],
        created_by: Option<usize>,
    ) -> Result<Vec<RegionId>> {
        if !self.is_leaf(parent) {
            return Err(Error::InvalidPartition(format!("region {parent} is not a leaf")));
        }
        if info.len() != pieces.len() {
            return Err(Error::InvalidPartition("one piece description per piece required".into()));
        }
        let mut owner: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidPartition(format!("piece {i} is empty")));
            }
            for &f in p {
                if f as usize >= self.labels.len() || self.labels[f as usize] != parent {
                    return Err(Error::InvalidPartition(format!("face {f} is not in region {parent}")));
                }
                if owner.insert(f, i).is_some() {
                    return Err(Error::InvalidPartition(format!("face {f} appears in two pieces")));
                }
            }
        }
        let total = self.labels.iter().filter(|&&l| l == parent).count();
        if owner.len() != total {
            return Err(Error::InvalidPartition(format!("pieces cover {} of {total} faces", owner.len())));
        }
        for (i, p) in pieces.iter().enumerate() {
            if !connected(mesh, p, |f| owner.get(&f) == Some(&i)) {
                return Err(Error::InvalidPartition(format!("piece {i} is not connected")));
            }
        }
        if pieces.len() == 1 {
            return Ok(vec![parent]);
        }
        let mut ids = Vec::with_capacity(pieces.len());
        let material = self.nodes[parent as usize].material;
        for (p, inf) in pieces.iter().zip(info) {
            let id = self.nodes.len() as RegionId;
            self.nodes.push(RegionNode {
                id,
                parent: Some(parent),
                children: Vec::new(),
                tag: inf.tag,
                material,
                group: inf.group,
                created_by,
            });
            for &f in p {
                self.labels[f as usize] = id;
            }
            ids.push(id);
        }
        self.nodes[parent as usize].children = ids.clone();
        Ok(ids)
    }

    /// Splits every leaf under `ancestor` that `cut` (undirected mesh edges)
    /// disconnects. Returns the new leaves in creation order.
    pub fn apply_at_ancestor(
        &mut self,
        mesh: &TriMesh,
        ancestor: RegionId,
        cut: &BTreeSet<(u32, u32)>,
        mut describe: impl FnMut(&[u32]) -> PieceInfo,
        created_by: Option<usize>,
    ) -> Result<Vec<RegionId>> {
        let mask = self.face_mask(ancestor)?;
        for &(a, b) in cut {
            if !mesh.faces_of_edge(a, b).iter().any(|&f| mask[f as usize]) {
                return Err(Error::InvalidSplit(format!("cut edge ({a}, {b}) lies outside region {ancestor}")));
            }
        }
        let mut created = Vec::new();
        for leaf in self.leaves_under(ancestor) {
            let faces: Vec<u32> = (0..self.labels.len() as u32).filter(|&f| self.labels[f as usize] == leaf).collect();
            let pieces = flood_regions(mesh, &faces, |a, b| cut.contains(&(a.min(b), a.max(b))) || self.is_seam(a, b));
            if pieces.len() > 1 {
                let info: Vec<PieceInfo> = pieces.iter().map(|p| describe(p)).collect();
                created.extend(self.split_region(mesh, leaf, &pieces, &info, created_by)?);
            }
        }
        for &(a, b) in cut {
            let fs = mesh.faces_of_edge(a, b);
            if fs.len() == 2 && self.labels[fs[0] as usize] == self.labels[fs[1] as usize] {
                self.seams.insert((a, b));
            }
        }
        Ok(created)
    }

    pub fn new_group(&mut self) -> u32 {
        self.next_group += 1;
        self.next_group
    }

    pub fn boundary_loops(&self, mesh: &TriMesh, id: RegionId) -> Result<Vec<BoundaryLoop>> {
        let mask = self.face_mask(id)?;
        let faces: Vec<u32> = (0..mask.len() as u32).filter(|&f| mask[f as usize]).collect();
        Ok(boundary_loops(mesh, &faces, |f| mask[f as usize], |a, b| self.is_seam(a, b)))
    }

    /// Loop count and corner count of a region. A corner is a boundary
    /// vertex around which at least three labels meet, where the mesh
    /// boundary and a sharp turn of the mesh boundary count as labels.
    pub fn region_attributes(&self, mesh: &TriMesh, id: RegionId) -> Result<RegionAttributes> {
        let loops = self.boundary_loops(mesh, id)?;
        let mut corners = BTreeSet::new();
        for l in &loops {
            for &v in &l.vertices {
                if corners.contains(&v) {
                    continue;
                }
                let mut labels: BTreeSet<u64> = mesh.fan(v).iter().map(|&(f, _)| self.labels[f as usize] as u64).collect();
                if mesh.is_boundary_vertex(v) {
                    labels.insert(u64::MAX);
                    if boundary_turn_deg(mesh, v) > SHARP_CORNER_DEG {
                        labels.insert(u64::MAX - 1);
                    }
                }
                if labels.len() >= 3 {
                    corners.insert(v);
                }
            }
        }
        Ok(RegionAttributes { loop_count: loops.len(), corner_count: corners.len(), tag: self.node(id)?.tag })
    }

    pub fn check_invariants(&self) -> Result<()> {
        let mut counts = vec![0usize; self.nodes.len()];
        for &l in &self.labels {
            let n = self.nodes.get(l as usize).ok_or(Error::UnknownRegion(l))?;
            if !n.children.is_empty() {
                return Err(Error::InvalidPartition(format!("face labeled with internal region {l}")));
            }
            counts[l as usize] += 1;
        }
        for n in self.nodes.iter().rev() {
            for &c in &n.children {
                if self.nodes[c as usize].parent != Some(n.id) {
                    return Err(Error::InvalidPartition(format!("child {c} of {} has another parent", n.id)));
                }
                counts[n.id as usize] += counts[c as usize];
            }
            if counts[n.id as usize] == 0 {
                return Err(Error::InvalidPartition(format!("region {} has no faces", n.id)));
            }
        }
        if counts[ROOT as usize] != self.labels.len() {
            return Err(Error::InvalidPartition("root does not cover the mesh".into()));
        }
        Ok(())
    }
}

pub fn vertex_mask_of(mesh: &TriMesh, faces: &[bool]) -> Vec<bool> {
    let mut vm = vec![false; mesh.vertex_count()];
    for (f, &inside) in faces.iter().enumerate() {
        if inside {
            for v in mesh.triangle(f as u32) {
                vm[v as usize] = true;
            }
        }
    }
    vm
}

/// Turning angle of the mesh boundary at `v`, in degrees; 0 for interior
/// vertices and non-manifold boundary configurations.
pub fn boundary_turn_deg(mesh: &TriMesh, v: u32) -> f64 {
    let fan = mesh.fan(v);
    let (Some(&(f0, c0)), Some(&(f1, c1))) = (fan.first(), fan.last()) else { return 0.0 };
    // the fan of a boundary vertex runs between its two boundary edges
    let t0 = mesh.triangle(f0);
    let t1 = mesh.triangle(f1);
    let next = t0[(c0 as usize + 1) % 3];
    let prev = t1[(c1 as usize + 2) % 3];
    if mesh.neighbor(f0, (c0 as usize + 2) % 3) != NO_FACE || mesh.neighbor(f1, (c1 as usize + 1) % 3) != NO_FACE {
        return 0.0;
    }
    let p = mesh.position(v);
    let (a, b) = (p - mesh.position(prev), mesh.position(next) - p);
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Edge-connected components of `faces`, not crossing edges for which
/// `blocked` holds. Components are sorted by smallest face id.
pub fn flood_regions(mesh: &TriMesh, faces: &[u32], blocked: impl Fn(u32, u32) -> bool) -> Vec<Vec<u32>> {
    let mut index: BTreeMap<u32, usize> = BTreeMap::new();
    let mut sorted = faces.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for (i, &f) in sorted.iter().enumerate() {
        index.insert(f, i);
    }
    let mut comp = vec![usize::MAX; sorted.len()];
    let mut out = Vec::new();
    for start in 0..sorted.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut piece = Vec::new();
        let mut stack = vec![start];
        comp[start] = id;
        while let Some(i) = stack.pop() {
            let f = sorted[i];
            piece.push(f);
            for k in 0..3 {
                let g = mesh.neighbor(f, k);
                if g == NO_FACE {
                    continue;
                }
                let Some(&j) = index.get(&g) else { continue };
                if comp[j] != usize::MAX {
                    continue;
                }
                let (a, b) = mesh.edge_vertices(f, k);
                if blocked(a, b) {
                    continue;
                }
                comp[j] = id;
                stack.push(j);
            }
        }
        piece.sort_unstable();
        out.push(piece);
    }
    out
}

fn connected(mesh: &TriMesh, piece: &[u32], inside: impl Fn(u32) -> bool) -> bool {
    flood_regions(mesh, piece, |_, _| false).len() == 1 && piece.iter().all(|&f| inside(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::dist_field;
    use crate::graph::{build_graph, Solver};
    use crate::mesh::{primitives, CutRequest};
    use crate::trace::extract_isolines;

    /// Cuts `mesh` along the polylines and returns the embedded edges.
    fn cut(mesh: &mut TriMesh, tree: &mut PatternTree, lines: Vec<Vec<crate::mesh::CutPoint>>) -> BTreeSet<(u32, u32)> {
        let out = mesh.cut(&CutRequest { polylines: lines, points: vec![] }).unwrap();
        tree.apply_split_events(mesh.face_count(), &out.events, &out.edge_splits).unwrap();
        out.embedded.into_iter().collect()
    }

    fn disk_with_loop() -> (TriMesh, PatternTree, BTreeSet<(u32, u32)>) {
        let mut m = primitives::disk(1.0, 12);
        let mut tree = PatternTree::new(m.face_count());
        let d = dist_field(&build_graph(&m), &mut Solver::new(), None, &[0]).unwrap();
        let lines = extract_isolines(&m, None, &d, 0.5);
        let e = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        (m, tree, e)
    }

    #[test]
    fn closed_loop_splits_disk_in_two() {
        let (m, mut tree, e) = disk_with_loop();
        let all: Vec<u32> = (0..m.face_count() as u32).collect();
        assert_eq!(flood_regions(&m, &all, |_, _| false).len(), 1);
        let pieces = flood_regions(&m, &all, |a, b| e.contains(&(a.min(b), a.max(b))));
        assert_eq!(pieces.len(), 2);
        let ids = tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), None).unwrap();
        assert_eq!(ids, vec![1, 2]);
        tree.check_invariants().unwrap();
        let sizes: usize = ids.iter().map(|&i| tree.region_faces(i).unwrap().len()).sum();
        assert_eq!(sizes, m.face_count());
        assert!(tree.seams().is_empty());
        let inner = ids.iter().copied().find(|&i| tree.region_attributes(&m, i).unwrap().loop_count == 1).unwrap();
        let a = tree.region_attributes(&m, inner).unwrap();
        assert_eq!((a.loop_count, a.corner_count), (1, 0));
    }

    #[test]
    fn resplitting_a_leaf_deepens_the_tree() {
        let (mut m, mut tree, e) = disk_with_loop();
        tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), None).unwrap();
        let leaf = 1;
        let mask = tree.face_mask(leaf).unwrap();
        let vm = vertex_mask_of(&m, &mask);
        let g = build_graph(&m);
        let seed = (0..m.vertex_count() as u32).find(|&v| vm[v as usize]).unwrap();
        let d = dist_field(&g, &mut Solver::new(), Some(&vm), &[seed]).unwrap();
        let max = d.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
        let lines = extract_isolines(&m, Some(&mask), &d, 0.5 * max);
        assert!(!lines.is_empty());
        let e2 = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        tree.apply_at_ancestor(&m, leaf, &e2, |_| PieceInfo::default(), None).unwrap();
        tree.check_invariants().unwrap();
        assert_eq!(tree.max_depth(), 3);
        assert_eq!(tree.region_faces(ROOT).unwrap().len(), m.face_count());
    }

    #[test]
    fn ancestor_cut_splits_every_crossed_leaf() {
        // three vertical strips, then a horizontal cut at the root
        let mut m = primitives::grid(6, 6, 1.0 / 6.0);
        let mut tree = PatternTree::new(m.face_count());
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let mut lines = extract_isolines(&m, None, &x, 0.34);
        lines.extend(extract_isolines(&m, None, &x, 0.66));
        let e = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        let strips = tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo { tag: RegionTag::Stripe, group: Some(1) }, Some(0)).unwrap();
        assert_eq!(strips.len(), 3);
        let y: Vec<f64> = m.positions().iter().map(|p| p.y).collect();
        let lines = extract_isolines(&m, None, &y, 0.5);
        let e = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        let cells = tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), Some(1)).unwrap();
        assert_eq!(cells.len(), 6);
        for s in strips {
            assert_eq!(tree.node(s).unwrap().children.len(), 2);
        }
        tree.check_invariants().unwrap();
    }

    #[test]
    fn chain_avoiding_a_leaf_leaves_it_alone() {
        let mut m = primitives::grid(6, 6, 1.0 / 6.0);
        let mut tree = PatternTree::new(m.face_count());
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let lines = extract_isolines(&m, None, &x, 0.5);
        let e = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), None).unwrap();
        let before = tree.clone();
        // a cut inside the left half only
        let mask = tree.face_mask(1).unwrap();
        let y: Vec<f64> = m.positions().iter().map(|p| p.y).collect();
        let lines = extract_isolines(&m, Some(&mask), &y, 0.5);
        let e = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), None).unwrap();
        assert!(tree.is_leaf(2));
        assert_eq!(tree.node(2).unwrap(), before.node(2).unwrap());
        assert_eq!(tree.node(1).unwrap().children.len(), 2);
    }

    #[test]
    fn grid_cell_has_four_corners() {
        let mut m = primitives::grid(8, 8, 0.125);
        let mut tree = PatternTree::new(m.face_count());
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let y: Vec<f64> = m.positions().iter().map(|p| p.y).collect();
        let mut lines = extract_isolines(&m, None, &x, 0.5);
        lines.extend(extract_isolines(&m, None, &y, 0.5));
        let e = cut(&mut m, &mut tree, lines.iter().map(|l| l.cut_points()).collect());
        let cells = tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), None).unwrap();
        assert_eq!(cells.len(), 4);
        for c in cells {
            let a = tree.region_attributes(&m, c).unwrap();
            assert_eq!((a.loop_count, a.corner_count), (1, 4));
        }
        let s = primitives::icosphere(2);
        let a = PatternTree::new(s.face_count()).region_attributes(&s, ROOT).unwrap();
        assert_eq!((a.loop_count, a.corner_count), (0, 0));
    }

    #[test]
    fn open_cut_becomes_a_seam() {
        let mut m = primitives::grid(6, 6, 1.0 / 6.0);
        let mut tree = PatternTree::new(m.face_count());
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let line = &extract_isolines(&m, None, &x, 0.5)[0];
        // keep only the lower half of the vertical line: a slit from the boundary
        let half: Vec<_> = line.points.iter().copied().filter(|p| p.position(&m).y <= 0.5 + 1e-9).collect();
        let e = cut(&mut m, &mut tree, vec![half]);
        let created = tree.apply_at_ancestor(&m, ROOT, &e, |_| PieceInfo::default(), None).unwrap();
        assert!(created.is_empty());
        assert!(!tree.seams().is_empty());
        let a = tree.region_attributes(&m, ROOT).unwrap();
        assert_eq!(a.loop_count, 1);
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        let m = primitives::grid(2, 2, 0.5);
        let mut tree = PatternTree::new(m.face_count());
        let info = [PieceInfo::default(); 2];
        assert!(tree.split_region(&m, ROOT, &[vec![0, 1, 2], vec![2, 3, 4, 5, 6, 7]], &info, None).is_err());
        assert!(tree.split_region(&m, ROOT, &[vec![0, 1], vec![2, 3, 4, 5, 6]], &info, None).is_err());
        // faces 0 and 7 are opposite corners of the square
        assert!(tree.split_region(&m, ROOT, &[vec![0, 7], vec![1, 2, 3, 4, 5, 6]], &info, None).is_err());
        assert_eq!(tree, PatternTree::new(m.face_count()));
        assert!(tree.split_region(&m, 5, &[vec![0]], &[PieceInfo::default()], None).is_err());
    }
}
