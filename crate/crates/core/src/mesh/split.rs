//! Embedding polylines into the mesh by local retriangulation.
//!
//! A cut is a batch of polylines whose consecutive points share a face. Every
//! face touched by a polyline (or incident to an edge that receives a point)
//! is replaced by a constrained triangulation of its own little planar
//! graph. The first child reuses the parent id, the rest are appended, so
//! unrelated face ids stay stable.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::geom::{orient2d, planar_frame, segment_intersection_2d, Point, Vec3};

use super::{TriMesh, NO_FACE};

/// Points closer than this (relative to the edge length) to a vertex or
/// edge are snapped onto it.
pub const SNAP_TOLERANCE: f64 = 1e-4;

/// A point on the surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutPoint {
    Vertex { v: u32 },
    /// `(1 - t) * a + t * b`
    Edge { a: u32, b: u32, t: f64 },
    Interior { face: u32, bary: [f64; 3] },
}

impl CutPoint {
    pub fn vertex(v: u32) -> Self {
        CutPoint::Vertex { v }
    }

    pub fn edge(a: u32, b: u32, t: f64) -> Self {
        CutPoint::Edge { a, b, t }
    }

    pub fn interior(face: u32, bary: [f64; 3]) -> Self {
        CutPoint::Interior { face, bary }
    }

    pub fn position(&self, mesh: &TriMesh) -> Point {
        match *self {
            CutPoint::Vertex { v } => *mesh.position(v),
            CutPoint::Edge { a, b, t } => mesh.position(a) + (mesh.position(b) - mesh.position(a)) * t,
            CutPoint::Interior { face, bary } => {
                let [p, q, r] = mesh.face_points(face);
                Point::from(p.coords * bary[0] + q.coords * bary[1] + r.coords * bary[2])
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutRequest {
    pub polylines: Vec<Vec<CutPoint>>,
    /// Isolated points to insert as vertices.
    pub points: Vec<CutPoint>,
}

/// A parent face and the faces that replaced it (the first child keeps the
/// parent id).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitEvent {
    pub face: u32,
    pub children: SmallVec<[u32; 4]>,
}

/// An original edge `a < b` and the vertices inserted along it, from `a` to `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSplit {
    pub a: u32,
    pub b: u32,
    pub inserted: Vec<u32>,
}

/// A vertex created by a cut, expressed as an affine combination of vertices
/// that existed before it.
#[derive(Clone, Debug, PartialEq)]
pub struct NewVertex {
    pub id: u32,
    pub weights: SmallVec<[(u32, f64); 3]>,
}

impl NewVertex {
    pub fn interpolate_point(&self, values: &[Point]) -> Point {
        let mut acc = Vec3::zeros();
        for &(v, w) in &self.weights {
            acc += values[v as usize].coords * w;
        }
        Point::from(acc)
    }

    pub fn interpolate_scalar(&self, values: &[f64]) -> f64 {
        self.weights.iter().map(|&(v, w)| values[v as usize] * w).sum()
    }
}

#[derive(Clone, Debug, Default)]
pub struct CutOutcome {
    pub events: Vec<SplitEvent>,
    pub new_vertices: Vec<NewVertex>,
    /// Undirected mesh edges `(min, max)` lying on the cut, sorted.
    pub embedded: Vec<(u32, u32)>,
    pub edge_splits: Vec<EdgeSplit>,
    /// Vertex of each input polyline point, `None` where it was dropped
    /// (dead ends inside a face).
    pub polyline_vertices: Vec<Vec<Option<u32>>>,
    pub point_vertices: Vec<Option<u32>>,
}

impl CutOutcome {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.embedded.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
enum Loc {
    Vertex(u32),
    /// Edge `a < b`, parameter `t`, vertex id.
    Edge { a: u32, b: u32, t: f64, id: u32 },
    /// Face and index into the interior point table.
    Interior { face: u32, idx: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NodeKey {
    Id(u32),
    Interior(u32),
    Crossing(u32),
}

#[derive(Clone, Copy, Debug)]
struct EdgePoint {
    a: u32,
    b: u32,
    t: f64,
}

#[derive(Clone, Copy, Debug)]
struct InteriorPoint {
    face: u32,
    bary: [f64; 3],
    forced: bool,
}

#[derive(Default)]
struct FaceWork {
    chords: Vec<(NodeKey, NodeKey)>,
    forced: Vec<u32>,
}

struct FaceResult {
    face: u32,
    triangles: Vec<[NodeKey; 3]>,
    embedded: Vec<(NodeKey, NodeKey)>,
    crossings: Vec<[f64; 3]>,
}

impl TriMesh {
    /// Faces containing the undirected edge `(a, b)`.
    pub fn faces_of_edge(&self, a: u32, b: u32) -> SmallVec<[u32; 2]> {
        let mut out = SmallVec::new();
        if a as usize >= self.vertex_count() {
            return out;
        }
        for (f, _) in self.fan(a) {
            if self.triangles[f as usize].contains(&b) {
                out.push(f);
            }
        }
        out
    }

    /// The face with corners `a`, `b` and `c` in any order.
    pub fn face_with(&self, a: u32, b: u32, c: u32) -> Option<u32> {
        self.fan(a).into_iter().map(|(f, _)| f).find(|&f| {
            let t = self.triangles[f as usize];
            t.contains(&b) && t.contains(&c)
        })
    }

    /// Embeds the request's polylines and points. On error the mesh is left
    /// untouched.
    pub fn cut(&mut self, req: &CutRequest) -> Result<CutOutcome> {
        let plan = Cutter::plan(self, req)?;
        Ok(plan.commit(self))
    }

    /// Splits face `f` along the segment between points on two distinct
    /// edges. Both faces incident to each split edge are subdivided; the
    /// event for `f` lists its children (three, or two when an endpoint
    /// snaps onto a vertex).
    pub fn split_triangle(&mut self, f: u32, p: CutPoint, q: CutPoint) -> Result<CutOutcome> {
        if f as usize >= self.face_count() {
            return Err(err(format!("face {f} out of range")));
        }
        let t = self.triangle(f);
        let edge_of = |c: &CutPoint| match *c {
            CutPoint::Edge { a, b, .. } if t.contains(&a) && t.contains(&b) && a != b => Ok((a.min(b), a.max(b))),
            _ => Err(err("segment endpoints must lie on edges of the face")),
        };
        if edge_of(&p)? == edge_of(&q)? {
            return Err(err("segment endpoints lie on the same edge"));
        }
        self.cut(&CutRequest { polylines: vec![vec![p, q]], points: Vec::new() })
    }

    /// Inserts a vertex at barycentric coordinates `bary` of face `f`.
    pub fn insert_point(&mut self, f: u32, bary: [f64; 3]) -> Result<CutOutcome> {
        if f as usize >= self.face_count() {
            return Err(err(format!("face {f} out of range")));
        }
        self.cut(&CutRequest { polylines: Vec::new(), points: vec![CutPoint::interior(f, bary)] })
    }

    /// Inserts a vertex on edge `(a, b)` at parameter `t`.
    pub fn split_edge(&mut self, a: u32, b: u32, t: f64) -> Result<CutOutcome> {
        self.cut(&CutRequest { polylines: Vec::new(), points: vec![CutPoint::edge(a, b, t)] })
    }
}

struct Cutter<'m> {
    mesh: &'m TriMesh,
    n0: u32,
    edge_points: Vec<EdgePoint>,
    /// Sorted vertex ids (including endpoints) along each split edge.
    edge_runs: BTreeMap<(u32, u32), Vec<(f64, u32)>>,
    interior: Vec<InteriorPoint>,
    locs: Vec<Loc>,
}

struct Plan {
    n0: u32,
    edge_points: Vec<EdgePoint>,
    edge_runs: BTreeMap<(u32, u32), Vec<(f64, u32)>>,
    interior: Vec<InteriorPoint>,
    faces: Vec<FaceResult>,
    along: Vec<(u32, u32)>,
    locs: Vec<Loc>,
    polyline_lens: Vec<usize>,
}

fn err(msg: impl Into<String>) -> Error {
    Error::InvalidSplit(msg.into())
}

impl<'m> Cutter<'m> {
    fn plan(mesh: &'m TriMesh, req: &CutRequest) -> Result<Plan> {
        let mut cutter = Cutter {
            mesh,
            n0: mesh.vertex_count() as u32,
            edge_points: Vec::new(),
            edge_runs: BTreeMap::new(),
            interior: Vec::new(),
            locs: Vec::new(),
        };
        let flat: Vec<CutPoint> = req.polylines.iter().flatten().chain(req.points.iter()).copied().collect();
        let forced_from = flat.len() - req.points.len();
        let normalized = flat.iter().map(|p| cutter.normalize(*p)).collect::<Result<Vec<_>>>()?;
        cutter.resolve(&normalized, forced_from);

        let mut work: BTreeMap<u32, FaceWork> = BTreeMap::new();
        let mut along = Vec::new();
        let mut offset = 0;
        for line in &req.polylines {
            for k in 1..line.len() {
                let (p, q) = (cutter.locs[offset + k - 1], cutter.locs[offset + k]);
                cutter.segment(p, q, &mut work, &mut along)?;
            }
            offset += line.len();
        }
        for loc in &cutter.locs[forced_from..] {
            if let Loc::Interior { face, idx } = *loc {
                work.entry(face).or_default().forced.push(idx);
            }
        }
        for &(a, b) in cutter.edge_runs.keys() {
            for f in mesh.faces_of_edge(a, b) {
                work.entry(f).or_default();
            }
        }
        let mut faces = Vec::with_capacity(work.len());
        for (f, w) in &work {
            faces.push(cutter.retriangulate(*f, w)?);
        }
        Ok(Plan {
            n0: cutter.n0,
            edge_points: cutter.edge_points,
            edge_runs: cutter.edge_runs,
            interior: cutter.interior,
            faces,
            along,
            locs: cutter.locs,
            polyline_lens: req.polylines.iter().map(Vec::len).collect(),
        })
    }

    fn check_vertex(&self, v: u32) -> Result<()> {
        if v >= self.n0 || self.mesh.vertex_face(v) == NO_FACE {
            return Err(err(format!("vertex {v} is not part of the mesh")));
        }
        Ok(())
    }

    fn normalize(&self, p: CutPoint) -> Result<CutPoint> {
        match p {
            CutPoint::Vertex { v } => {
                self.check_vertex(v)?;
                Ok(p)
            }
            CutPoint::Edge { a, b, t } => {
                self.check_vertex(a)?;
                self.check_vertex(b)?;
                if self.mesh.faces_of_edge(a, b).is_empty() {
                    return Err(err(format!("({a}, {b}) is not an edge")));
                }
                if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                    return Err(err(format!("edge parameter {t} outside [0, 1]")));
                }
                let (a, b, t) = if a < b { (a, b, t) } else { (b, a, 1.0 - t) };
                Ok(if t < SNAP_TOLERANCE {
                    CutPoint::vertex(a)
                } else if t > 1.0 - SNAP_TOLERANCE {
                    CutPoint::vertex(b)
                } else {
                    CutPoint::edge(a, b, t)
                })
            }
            CutPoint::Interior { face, bary } => {
                if face as usize >= self.mesh.face_count() {
                    return Err(err(format!("face {face} out of range")));
                }
                if bary.iter().any(|&x| !(x >= -1e-9)) {
                    return Err(err("barycentric coordinates must be non-negative"));
                }
                let mut bary = bary.map(|x| x.max(0.0));
                let sum: f64 = bary.iter().sum();
                if !(sum > 0.0) {
                    return Err(err("barycentric coordinates sum to zero"));
                }
                bary.iter_mut().for_each(|x| *x /= sum);
                let t = self.mesh.triangle(face);
                let small: SmallVec<[usize; 3]> = (0..3).filter(|&k| bary[k] < SNAP_TOLERANCE).collect();
                match small.len() {
                    0 => Ok(CutPoint::interior(face, bary)),
                    1 => {
                        let k = small[0];
                        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                        self.normalize(CutPoint::edge(t[i], t[j], bary[j] / (bary[i] + bary[j])))
                    }
                    _ => {
                        let k = (0..3).max_by(|&x, &y| bary[x].total_cmp(&bary[y])).unwrap();
                        Ok(CutPoint::vertex(t[k]))
                    }
                }
            }
        }
    }

    /// Clusters edge and interior points and gives every input point a location.
    fn resolve(&mut self, pts: &[CutPoint], forced_from: usize) {
        let mut per_edge: BTreeMap<(u32, u32), Vec<(f64, usize)>> = BTreeMap::new();
        for (i, p) in pts.iter().enumerate() {
            if let CutPoint::Edge { a, b, t } = *p {
                per_edge.entry((a, b)).or_default().push((t, i));
            }
        }
        let mut edge_id = vec![(0u32, 0f64); pts.len()];
        for (&(a, b), list) in per_edge.iter_mut() {
            list.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let mut run = vec![(0.0, a)];
            let mut rep_t = f64::NEG_INFINITY;
            for &(t, i) in list.iter() {
                if t - rep_t >= SNAP_TOLERANCE {
                    rep_t = t;
                    let id = self.n0 + self.edge_points.len() as u32;
                    self.edge_points.push(EdgePoint { a, b, t });
                    run.push((t, id));
                }
                edge_id[i] = (run.last().unwrap().1, rep_t);
            }
            run.push((1.0, b));
            self.edge_runs.insert((a, b), run);
        }
        let mut per_face: FxHashMap<u32, Vec<u32>> = FxHashMap::default();
        self.locs = pts
            .iter()
            .enumerate()
            .map(|(i, p)| match *p {
                CutPoint::Vertex { v } => Loc::Vertex(v),
                CutPoint::Edge { a, b, .. } => Loc::Edge { a, b, t: edge_id[i].1, id: edge_id[i].0 },
                CutPoint::Interior { face, bary } => {
                    let forced = i >= forced_from;
                    let list = per_face.entry(face).or_default();
                    let existing = list.iter().copied().find(|&idx| {
                        let q = self.interior[idx as usize].bary;
                        (0..3).all(|k| (q[k] - bary[k]).abs() < SNAP_TOLERANCE)
                    });
                    let idx = match existing {
                        Some(idx) => {
                            self.interior[idx as usize].forced |= forced;
                            idx
                        }
                        None => {
                            let idx = self.interior.len() as u32;
                            self.interior.push(InteriorPoint { face, bary, forced });
                            list.push(idx);
                            idx
                        }
                    };
                    Loc::Interior { face, idx }
                }
            })
            .collect();
    }

    fn key(loc: Loc) -> NodeKey {
        match loc {
            Loc::Vertex(v) => NodeKey::Id(v),
            Loc::Edge { id, .. } => NodeKey::Id(id),
            Loc::Interior { idx, .. } => NodeKey::Interior(idx),
        }
    }

    /// Records the part of a polyline between two consecutive points.
    fn segment(
        &self,
        p: Loc,
        q: Loc,
        work: &mut BTreeMap<u32, FaceWork>,
        along: &mut Vec<(u32, u32)>,
    ) -> Result<()> {
        let (kp, kq) = (Self::key(p), Self::key(q));
        if kp == kq {
            return Ok(());
        }
        let mesh = self.mesh;
        let face = match (p, q) {
            (Loc::Interior { face, .. }, other) | (other, Loc::Interior { face, .. }) => {
                let t = mesh.triangle(face);
                let ok = match other {
                    Loc::Vertex(v) => t.contains(&v),
                    Loc::Edge { a, b, .. } => t.contains(&a) && t.contains(&b),
                    Loc::Interior { face: g, .. } => g == face,
                };
                if !ok {
                    return Err(err(format!("consecutive points do not share face {face}")));
                }
                face
            }
            (Loc::Vertex(u), Loc::Vertex(v)) => {
                if mesh.faces_of_edge(u, v).is_empty() {
                    return Err(err(format!("vertices {u} and {v} are not adjacent")));
                }
                self.along_run(u.min(v), u.max(v), 0.0, 1.0, along);
                return Ok(());
            }
            (Loc::Vertex(v), Loc::Edge { a, b, t, .. }) | (Loc::Edge { a, b, t, .. }, Loc::Vertex(v)) => {
                if v == a || v == b {
                    let tv = if v == a { 0.0 } else { 1.0 };
                    self.along_run(a, b, tv, t, along);
                    return Ok(());
                }
                mesh.face_with(a, b, v)
                    .ok_or_else(|| err(format!("vertex {v} and edge ({a}, {b}) share no face")))?
            }
            (Loc::Edge { a, b, t: s, .. }, Loc::Edge { a: c, b: d, t, .. }) => {
                if (a, b) == (c, d) {
                    self.along_run(a, b, s, t, along);
                    return Ok(());
                }
                let shared = if a == c || a == d {
                    a
                } else if b == c || b == d {
                    b
                } else {
                    return Err(err(format!("edges ({a}, {b}) and ({c}, {d}) share no face")));
                };
                let others: SmallVec<[u32; 2]> =
                    [a, b, c, d].into_iter().filter(|&x| x != shared).collect();
                mesh.face_with(shared, others[0], others[1])
                    .ok_or_else(|| err(format!("edges ({a}, {b}) and ({c}, {d}) share no face")))?
            }
        };
        work.entry(face).or_default().chords.push((kp, kq));
        Ok(())
    }

    fn along_run(&self, a: u32, b: u32, s: f64, t: f64, along: &mut Vec<(u32, u32)>) {
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        let fallback = [(0.0, a), (1.0, b)];
        let run = self.edge_runs.get(&(a, b)).map(Vec::as_slice).unwrap_or(&fallback);
        for w in run.windows(2) {
            if w[0].0 >= lo - 1e-12 && w[1].0 <= hi + 1e-12 {
                along.push((w[0].1.min(w[1].1), w[0].1.max(w[1].1)));
            }
        }
    }

    fn node_bary(&self, f: u32, key: NodeKey) -> [f64; 3] {
        let t = self.mesh.triangle(f);
        let corner = |v: u32| t.iter().position(|&x| x == v).expect("node vertex on face");
        match key {
            NodeKey::Id(v) if v < self.n0 => {
                let mut b = [0.0; 3];
                b[corner(v)] = 1.0;
                b
            }
            NodeKey::Id(id) => {
                let e = self.edge_points[(id - self.n0) as usize];
                let mut b = [0.0; 3];
                b[corner(e.a)] = 1.0 - e.t;
                b[corner(e.b)] = e.t;
                b
            }
            NodeKey::Interior(idx) => {
                debug_assert_eq!(self.interior[idx as usize].face, f);
                self.interior[idx as usize].bary
            }
            NodeKey::Crossing(_) => unreachable!("crossings are created locally"),
        }
    }

    fn retriangulate(&self, f: u32, work: &FaceWork) -> Result<FaceResult> {
        let tri = self.mesh.triangle(f);
        let [p0, p1, p2] = self.mesh.face_points(f);
        let frame = planar_frame(p0, p1, p2);
        let scale = (p1 - p0).norm().max((p2 - p1).norm()).max((p0 - p2).norm());
        let to2d = |b: &[f64; 3]| {
            [
                b[0] * frame[0][0] + b[1] * frame[1][0] + b[2] * frame[2][0],
                b[0] * frame[0][1] + b[1] * frame[1][1] + b[2] * frame[2][1],
            ]
        };

        let mut keys: Vec<NodeKey> = Vec::new();
        let mut bary: Vec<[f64; 3]> = Vec::new();
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut index: FxHashMap<NodeKey, usize> = FxHashMap::default();
        let mut add = |key: NodeKey, b: [f64; 3], keys: &mut Vec<NodeKey>, bary: &mut Vec<[f64; 3]>, pts: &mut Vec<[f64; 2]>| {
            *index.entry(key).or_insert_with(|| {
                keys.push(key);
                bary.push(b);
                pts.push(to2d(&b));
                keys.len() - 1
            })
        };

        // boundary polygon, counter-clockwise in the face frame
        for k in 0..3 {
            let (u, v) = (tri[k], tri[(k + 1) % 3]);
            add(NodeKey::Id(u), self.node_bary(f, NodeKey::Id(u)), &mut keys, &mut bary, &mut pts);
            if let Some(run) = self.edge_runs.get(&(u.min(v), u.max(v))) {
                let inner = &run[1..run.len() - 1];
                let ids: Vec<u32> = if u < v {
                    inner.iter().map(|e| e.1).collect()
                } else {
                    inner.iter().rev().map(|e| e.1).collect()
                };
                for id in ids {
                    add(NodeKey::Id(id), self.node_bary(f, NodeKey::Id(id)), &mut keys, &mut bary, &mut pts);
                }
            }
        }
        let nb = keys.len();

        let mut chords: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in &work.chords {
            let ia = add(a, self.node_bary(f, a), &mut keys, &mut bary, &mut pts);
            let ib = add(b, self.node_bary(f, b), &mut keys, &mut bary, &mut pts);
            if ia != ib {
                chords.push((ia.min(ib), ia.max(ib)));
            }
        }
        for &idx in &work.forced {
            let key = NodeKey::Interior(idx);
            add(key, self.node_bary(f, key), &mut keys, &mut bary, &mut pts);
        }
        chords.sort_unstable();
        chords.dedup();

        // chord crossings
        let merge = 1e-7 * scale;
        let mut crossings: Vec<[f64; 3]> = Vec::new();
        let mut splits: Vec<Vec<(f64, usize)>> = vec![Vec::new(); chords.len()];
        for i in 0..chords.len() {
            for j in i + 1..chords.len() {
                let (a, b) = chords[i];
                let (c, d) = chords[j];
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                if let Some((s, _)) = segment_intersection_2d(pts[a], pts[b], pts[c], pts[d]) {
                    let x = [pts[a][0] + s * (pts[b][0] - pts[a][0]), pts[a][1] + s * (pts[b][1] - pts[a][1])];
                    let near = (0..pts.len()).find(|&n| dist2(pts[n], x) < merge * merge);
                    if near.is_none() {
                        let bx = lerp3(&bary[a], &bary[b], s);
                        keys.push(NodeKey::Crossing(crossings.len() as u32));
                        crossings.push(bx);
                        bary.push(bx);
                        pts.push(x);
                    }
                }
            }
        }
        // split chords at every node lying on them (crossings and T junctions)
        let on_tol = 1e-7 * scale;
        for (ci, &(a, b)) in chords.iter().enumerate() {
            let d = [pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            for n in 0..pts.len() {
                if n == a || n == b {
                    continue;
                }
                let w = [pts[n][0] - pts[a][0], pts[n][1] - pts[a][1]];
                let s = (w[0] * d[0] + w[1] * d[1]) / len2;
                if s <= 1e-9 || s >= 1.0 - 1e-9 {
                    continue;
                }
                let perp = (w[0] * d[1] - w[1] * d[0]).abs() / len2.sqrt();
                if perp < on_tol {
                    splits[ci].push((s, n));
                }
            }
        }
        let mut sub: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (ci, &(a, b)) in chords.iter().enumerate() {
            let mut s = std::mem::take(&mut splits[ci]);
            s.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut prev = a;
            for (_, n) in s.into_iter().chain(std::iter::once((1.0, b))) {
                if n != prev {
                    sub.insert((prev.min(n), prev.max(n)));
                }
                prev = n;
            }
        }
        for k in 0..nb {
            sub.remove(&(k.min((k + 1) % nb), k.max((k + 1) % nb)));
        }

        // prune dead ends and components detached from the boundary
        let n = keys.len();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(a, b) in &sub {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let mut alive = vec![true; n];
        let mut stack: Vec<usize> = (nb..n).filter(|&v| adj[v].len() <= 1).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] || adj[v].len() > 1 {
                continue;
            }
            alive[v] = false;
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            for w in nbrs {
                adj[w].remove(&v);
                adj[v].remove(&w);
                if w >= nb && alive[w] && adj[w].len() <= 1 {
                    stack.push(w);
                }
            }
        }
        let mut reached = vec![false; n];
        let mut queue: Vec<usize> = (0..nb).collect();
        for &v in &queue {
            reached[v] = true;
        }
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if !reached[w] {
                    reached[w] = true;
                    queue.push(w);
                }
            }
        }
        for v in nb..n {
            if !reached[v] && alive[v] {
                alive[v] = false;
                let nbrs: Vec<usize> = adj[v].iter().copied().collect();
                for w in nbrs {
                    adj[w].remove(&v);
                }
                adj[v].clear();
            }
        }
        let edges: Vec<(usize, usize)> = sub.iter().copied().filter(|&(a, b)| alive[a] && alive[b] && adj[a].contains(&b)).collect();

        let forced: Vec<usize> = work
            .forced
            .iter()
            .map(|&idx| index_of(&keys, NodeKey::Interior(idx)))
            .filter(|&v| adj[v].is_empty())
            .collect();

        let mut local: Vec<[usize; 3]> = Vec::new();
        if !forced.is_empty() {
            if !edges.is_empty() || forced.len() > 1 {
                return Err(err(format!("face {f}: isolated points must be inserted on their own")));
            }
            let c = forced[0];
            for k in 0..nb {
                local.push([k, (k + 1) % nb, c]);
            }
        } else {
            for k in 0..nb {
                adj[k].insert((k + 1) % nb);
                adj[(k + 1) % nb].insert(k);
            }
            trace_faces(&pts, &adj, scale, &mut local)?;
        }
        let area_tol = 1e-14 * scale * scale;
        for t in &local {
            if orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) <= area_tol {
                return Err(Error::Degenerate(format!("cut through face {f} produces a sliver")));
            }
        }

        Ok(FaceResult {
            face: f,
            triangles: local.iter().map(|t| t.map(|i| keys[i])).collect(),
            embedded: edges.iter().map(|&(a, b)| (keys[a], keys[b])).collect(),
            crossings,
        })
    }
}

fn index_of(keys: &[NodeKey], key: NodeKey) -> usize {
    keys.iter().position(|&k| k == key).expect("key registered")
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn lerp3(a: &[f64; 3], b: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])]
}

/// Walks every bounded face of a connected planar straight-line graph and
/// ear-clips it.
fn trace_faces(
    pts: &[[f64; 2]],
    adj: &[BTreeSet<usize>],
    scale: f64,
    out: &mut Vec<[usize; 3]>,
) -> Result<()> {
    let angle = |from: usize, to: usize| (pts[to][1] - pts[from][1]).atan2(pts[to][0] - pts[from][0]);
    let sorted: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(v, nb)| {
            let mut list: Vec<usize> = nb.iter().copied().collect();
            list.sort_by(|&a, &b| angle(v, a).total_cmp(&angle(v, b)));
            list
        })
        .collect();
    let mut visited: FxHashMap<(usize, usize), ()> = FxHashMap::default();
    let total: usize = sorted.iter().map(Vec::len).sum();
    for u in 0..sorted.len() {
        for &v in &sorted[u] {
            if visited.contains_key(&(u, v)) {
                continue;
            }
            let mut cycle = Vec::new();
            let (mut a, mut b) = (u, v);
            loop {
                visited.insert((a, b), ());
                cycle.push(a);
                // next edge clockwise from b -> a
                let list = &sorted[b];
                let i = list.iter().position(|&x| x == a).expect("symmetric adjacency");
                let c = list[(i + list.len() - 1) % list.len()];
                a = b;
                b = c;
                if (a, b) == (u, v) {
                    break;
                }
                if cycle.len() > total {
                    return Err(err("face walk did not close"));
                }
            }
            let area: f64 = (0..cycle.len())
                .map(|k| {
                    let (p, q) = (pts[cycle[k]], pts[cycle[(k + 1) % cycle.len()]]);
                    p[0] * q[1] - p[1] * q[0]
                })
                .sum();
            if area > 0.0 {
                ear_clip(&cycle, pts, scale, out);
            }
        }
    }
    Ok(())
}

fn ear_clip(poly: &[usize], pts: &[[f64; 2]], scale: f64, out: &mut Vec<[usize; 3]>) {
    let eps = 1e-12 * scale * scale;
    let mut ring: Vec<usize> = poly.to_vec();
    while ring.len() > 3 {
        let m = ring.len();
        let mut ear = None;
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..m {
            let (p, c, n) = (ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]);
            let cross = orient2d(pts[p], pts[c], pts[n]);
            if cross > best.0 {
                best = (cross, i);
            }
            if cross <= eps {
                continue;
            }
            let blocked = ring.iter().any(|&r| {
                r != p
                    && r != c
                    && r != n
                    && orient2d(pts[p], pts[c], pts[r]) >= -eps
                    && orient2d(pts[c], pts[n], pts[r]) >= -eps
                    && orient2d(pts[n], pts[p], pts[r]) >= -eps
            });
            if !blocked {
                ear = Some(i);
                break;
            }
        }
        let i = ear.unwrap_or(best.1);
        out.push([ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]]);
        ring.remove(i);
    }
    out.push([ring[0], ring[1], ring[2]]);
}

impl Plan {
    fn commit(self, mesh: &mut TriMesh) -> CutOutcome {
        let mut next = self.n0 + self.edge_points.len() as u32;
        let mut new_vertices: Vec<NewVertex> = self
            .edge_points
            .iter()
            .enumerate()
            .map(|(i, e)| NewVertex {
                id: self.n0 + i as u32,
                weights: smallvec![(e.a, 1.0 - e.t), (e.b, e.t)],
            })
            .collect();
        let mut interior_ids: Vec<Option<u32>> = vec![None; self.interior.len()];

        let old_tris: FxHashMap<u32, ([u32; 3], [u32; 3])> = self
            .faces
            .iter()
            .map(|r| (r.face, (mesh.triangles[r.face as usize], mesh.adjacency[r.face as usize])))
            .collect();

        let mut children: Vec<(u32, u32, [u32; 3])> = Vec::new(); // (child id, parent, triangle)
        let mut events = Vec::with_capacity(self.faces.len());
        let mut embedded: Vec<(u32, u32)> = self.along.clone();
        let mut appended = mesh.triangles.len() as u32;
        for r in &self.faces {
            let corners = mesh.triangles[r.face as usize];
            let mut crossing_ids = vec![0u32; r.crossings.len()];
            for (i, b) in r.crossings.iter().enumerate() {
                crossing_ids[i] = next;
                new_vertices.push(NewVertex {
                    id: next,
                    weights: smallvec![(corners[0], b[0]), (corners[1], b[1]), (corners[2], b[2])],
                });
                next += 1;
            }
            let mut resolve = |k: NodeKey, new_vertices: &mut Vec<NewVertex>| -> u32 {
                match k {
                    NodeKey::Id(v) => v,
                    NodeKey::Crossing(i) => crossing_ids[i as usize],
                    NodeKey::Interior(idx) => *interior_ids[idx as usize].get_or_insert_with(|| {
                        let b = self.interior[idx as usize].bary;
                        let id = next;
                        next += 1;
                        new_vertices.push(NewVertex {
                            id,
                            weights: smallvec![(corners[0], b[0]), (corners[1], b[1]), (corners[2], b[2])],
                        });
                        id
                    }),
                }
            };
            let mut ids: SmallVec<[u32; 4]> = SmallVec::new();
            for (i, t) in r.triangles.iter().enumerate() {
                let tri = t.map(|k| resolve(k, &mut new_vertices));
                let id = if i == 0 {
                    r.face
                } else {
                    appended += 1;
                    appended - 1
                };
                ids.push(id);
                children.push((id, r.face, tri));
            }
            for &(a, b) in &r.embedded {
                let (a, b) = (resolve(a, &mut new_vertices), resolve(b, &mut new_vertices));
                embedded.push((a.min(b), a.max(b)));
            }
            events.push(SplitEvent { face: r.face, children: ids });
        }
        new_vertices.sort_by_key(|v| v.id);

        // geometry for new vertices
        for nv in &new_vertices {
            let p = nv.interpolate_point(&mesh.positions);
            let mut nrm = Vec3::zeros();
            for &(v, w) in &nv.weights {
                nrm += mesh.normals[v as usize] * w;
            }
            let len = nrm.norm();
            mesh.positions.push(p);
            mesh.normals.push(if len > 0.0 { nrm / len } else { nrm });
            mesh.vertex_face.push(NO_FACE);
        }

        // write triangles
        let total = appended as usize;
        mesh.triangles.resize(total, [0; 3]);
        mesh.adjacency.resize(total, [NO_FACE; 3]);
        for &(id, _, tri) in &children {
            mesh.triangles[id as usize] = tri;
        }

        // adjacency among children, then to untouched neighbours
        let mut directed: FxHashMap<(u32, u32), u32> = FxHashMap::default();
        directed.reserve(children.len() * 3);
        for &(id, _, tri) in &children {
            for k in 0..3 {
                directed.insert((tri[(k + 1) % 3], tri[(k + 2) % 3]), id);
            }
        }
        let edge_of = |v: u32| -> Option<(u32, u32)> {
            (v >= self.n0 && ((v - self.n0) as usize) < self.edge_points.len()).then(|| {
                let e = self.edge_points[(v - self.n0) as usize];
                (e.a, e.b)
            })
        };
        for &(id, parent, tri) in &children {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if let Some(&g) = directed.get(&(b, a)) {
                    mesh.adjacency[id as usize][k] = g;
                    continue;
                }
                let (ot, oadj) = old_tris[&parent];
                // only boundary sub-edges of split edges or unsplit parent edges remain
                let on_parent = |x: u32, y: u32| -> Option<usize> {
                    (0..3).find(|&j| {
                        let (p, q) = (ot[(j + 1) % 3], ot[(j + 2) % 3]);
                        (p == x && q == y) || (p == y && q == x)
                    })
                };
                let orig = if a < self.n0 && b < self.n0 {
                    on_parent(a, b)
                } else {
                    edge_of(if a >= self.n0 { a } else { b }).and_then(|(x, y)| on_parent(x, y))
                };
                let g = orig.map(|j| oadj[j]).unwrap_or(NO_FACE);
                mesh.adjacency[id as usize][k] = NO_FACE;
                if g == NO_FACE || old_tris.contains_key(&g) {
                    continue;
                }
                if let Some(j) = mesh.edge_slot(g, b, a) {
                    mesh.adjacency[id as usize][k] = g;
                    mesh.adjacency[g as usize][j] = id;
                }
            }
        }
        for &(id, _, tri) in &children {
            for v in tri {
                mesh.vertex_face[v as usize] = id;
            }
        }

        embedded.sort_unstable();
        embedded.dedup();
        let edge_splits = self
            .edge_runs
            .iter()
            .map(|(&(a, b), run)| EdgeSplit { a, b, inserted: run[1..run.len() - 1].iter().map(|e| e.1).collect() })
            .collect();

        let vertex_of = |loc: &Loc| -> Option<u32> {
            match *loc {
                Loc::Vertex(v) => Some(v),
                Loc::Edge { id, .. } => Some(id),
                Loc::Interior { idx, .. } => interior_ids[idx as usize],
            }
        };
        let mut polyline_vertices = Vec::with_capacity(self.polyline_lens.len());
        let mut offset = 0;
        for &len in &self.polyline_lens {
            polyline_vertices.push(self.locs[offset..offset + len].iter().map(vertex_of).collect());
            offset += len;
        }
        let point_vertices = self.locs[offset..].iter().map(vertex_of).collect();

        CutOutcome { events, new_vertices, embedded, edge_splits, polyline_vertices, point_vertices }
    }
}
