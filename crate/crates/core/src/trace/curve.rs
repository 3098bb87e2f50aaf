use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::face_gradient;
use crate::geom::{barycentric_gradients, Vec3};
use crate::graph::{GeodesicGraph, SolveOptions, Solver};
use crate::mesh::{CutPoint, TriMesh, NO_FACE, SNAP_TOLERANCE};

use super::{in_mask, SurfacePolyline};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ascend,
    Descend,
}

/// Why a curve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Left the region through its boundary.
    Boundary,
    /// Reached a vertex with no neighbor improving the field.
    Extremum,
    /// Entered a face whose gradient vanishes.
    Critical,
    MaxSteps,
}

#[derive(Clone, Debug)]
pub struct TracedCurve {
    pub polyline: SurfacePolyline,
    pub termination: Termination,
}

const GRAD_EPS: f64 = 1e-12;

struct Tracer<'a> {
    mesh: &'a TriMesh,
    mask: Option<&'a [bool]>,
    values: &'a [f64],
    sign: f64,
}

enum State {
    /// On vertex `v`.
    Vertex(u32),
    /// Entering face `f` from a point with barycentrics `bary`.
    Face { f: u32, bary: [f64; 3] },
    /// On edge `(a, b)` at parameter `t`, coming from face `from`.
    Edge { a: u32, b: u32, t: f64, from: u32 },
}

impl Tracer<'_> {
    fn dir(&self, f: u32) -> Vec3 {
        face_gradient(self.mesh, self.values, f) * self.sign
    }

    fn better(&self, x: f64, than: f64) -> bool {
        if self.sign > 0.0 {
            x > than
        } else {
            x < than
        }
    }

    fn value_at(&self, a: u32, b: u32, t: f64) -> f64 {
        self.values[a as usize] * (1.0 - t) + self.values[b as usize] * t
    }

    fn is_region_boundary_vertex(&self, v: u32) -> bool {
        let mesh = self.mesh;
        mesh.fan(v).into_iter().any(|(f, c)| {
            if !in_mask(self.mask, f) {
                return true;
            }
            let c = c as usize;
            [(c + 1) % 3, (c + 2) % 3].into_iter().any(|k| !in_mask(self.mask, mesh.neighbor(f, k)))
        })
    }

    /// Face of the fan around `v` whose flow leaves `v` into its interior.
    fn leave_vertex(&self, v: u32) -> Option<u32> {
        let mut best: Option<(u32, f64)> = None;
        for (f, c) in self.mesh.fan(v) {
            if !in_mask(self.mask, f) {
                continue;
            }
            let d = self.dir(f);
            let n = d.norm();
            if n < GRAD_EPS {
                continue;
            }
            let Some(g) = barycentric_gradients(self.mesh.face_points(f)) else { continue };
            let c = c as usize;
            let (ra, rb) = (g[(c + 1) % 3].dot(&d), g[(c + 2) % 3].dot(&d));
            if ra >= -1e-12 * n && rb >= -1e-12 * n && best.is_none_or(|(_, bn)| n > bn) {
                best = Some((f, n));
            }
        }
        best.map(|(f, _)| f)
    }

    /// Ring neighbor of `v` (through region faces) that improves the field most.
    fn slide_from(&self, v: u32) -> Option<u32> {
        let mut best: Option<u32> = None;
        for (f, c) in self.mesh.fan(v) {
            if !in_mask(self.mask, f) {
                continue;
            }
            let t = self.mesh.triangle(f);
            for u in [t[(c as usize + 1) % 3], t[(c as usize + 2) % 3]] {
                let x = self.values[u as usize];
                if !x.is_finite() || !self.better(x, self.values[v as usize]) {
                    continue;
                }
                if best.is_none_or(|b| self.better(x, self.values[b as usize]) || (x == self.values[b as usize] && u < b)) {
                    best = Some(u);
                }
            }
        }
        best
    }

    fn trace(&self, start: CutPoint, max_steps: usize) -> Result<TracedCurve> {
        let mesh = self.mesh;
        let mut pts = vec![start];
        let mut state = match start {
            CutPoint::Vertex { v } => State::Vertex(v),
            CutPoint::Interior { face, bary } => {
                if !in_mask(self.mask, face) {
                    return Err(Error::SeedOutsideRegion(face));
                }
                if self.dir(face).norm() < GRAD_EPS {
                    return Err(Error::Degenerate(format!("zero gradient at start face {face}")));
                }
                State::Face { f: face, bary }
            }
            CutPoint::Edge { a, b, t } => State::Edge { a, b, t, from: NO_FACE },
        };
        let mut first = true;
        for _ in 0..max_steps {
            state = match state {
                State::Vertex(v) => {
                    if let Some(f) = self.leave_vertex(v) {
                        let mut bary = [0.0; 3];
                        bary[mesh.corner_of(f, v).unwrap()] = 1.0;
                        State::Face { f, bary }
                    } else if !first && self.is_region_boundary_vertex(v) {
                        return Ok(self.done(pts, Termination::Boundary));
                    } else if let Some(u) = self.slide_from(v) {
                        pts.push(CutPoint::vertex(u));
                        State::Vertex(u)
                    } else {
                        return Ok(self.done(pts, Termination::Extremum));
                    }
                }
                State::Edge { a, b, t, from } => {
                    let faces = mesh.faces_of_edge(a, b);
                    let entering = faces.iter().copied().filter(|&g| g != from && in_mask(self.mask, g)).find(|&g| {
                        let d = self.dir(g);
                        let opp = mesh.triangle(g).iter().position(|&x| x != a && x != b).unwrap();
                        barycentric_gradients(mesh.face_points(g)).is_some_and(|gr| gr[opp].dot(&d) > 1e-9 * d.norm())
                    });
                    match entering {
                        Some(g) => {
                            let mut bary = [0.0; 3];
                            bary[mesh.corner_of(g, a).unwrap()] = 1.0 - t;
                            bary[mesh.corner_of(g, b).unwrap()] = t;
                            State::Face { f: g, bary }
                        }
                        None if from != NO_FACE && faces.iter().all(|&g| g == from || !in_mask(self.mask, g)) => {
                            return Ok(self.done(pts, Termination::Boundary));
                        }
                        None => {
                            // slide along the edge toward the better endpoint
                            let here = self.value_at(a, b, t);
                            let (va, vb) = (self.values[a as usize], self.values[b as usize]);
                            let target = if self.better(va, vb) { a } else { b };
                            if !self.better(self.values[target as usize], here) {
                                let term = if self.dir_norm_max(&faces) < GRAD_EPS { Termination::Critical } else { Termination::Extremum };
                                return Ok(self.done(pts, term));
                            }
                            pts.push(CutPoint::vertex(target));
                            State::Vertex(target)
                        }
                    }
                }
                State::Face { f, bary } => {
                    let d = self.dir(f);
                    if d.norm() < GRAD_EPS {
                        return Ok(self.done(pts, Termination::Critical));
                    }
                    let Some(g) = barycentric_gradients(mesh.face_points(f)) else {
                        return Ok(self.done(pts, Termination::Critical));
                    };
                    let rates = [g[0].dot(&d), g[1].dot(&d), g[2].dot(&d)];
                    let mut s_min = f64::INFINITY;
                    let mut k_min = 0;
                    for k in 0..3 {
                        if rates[k] < 0.0 {
                            let s = bary[k].max(0.0) / -rates[k];
                            if s < s_min {
                                s_min = s;
                                k_min = k;
                            }
                        }
                    }
                    if !s_min.is_finite() {
                        return Ok(self.done(pts, Termination::Critical));
                    }
                    let mut exit = [0.0; 3];
                    for k in 0..3 {
                        exit[k] = (bary[k] + s_min * rates[k]).max(0.0);
                    }
                    exit[k_min] = 0.0;
                    let t = mesh.triangle(f);
                    let (i, j) = ((k_min + 1) % 3, (k_min + 2) % 3);
                    let (a, b) = (t[i], t[j]);
                    let u = exit[j] / (exit[i] + exit[j]);
                    if !(SNAP_TOLERANCE..=1.0 - SNAP_TOLERANCE).contains(&u) {
                        let v = if u < SNAP_TOLERANCE { a } else { b };
                        if pts.last() == Some(&CutPoint::vertex(v)) {
                            // flow runs back into the vertex we left
                            return Ok(self.done(pts, Termination::Extremum));
                        }
                        pts.push(CutPoint::vertex(v));
                        State::Vertex(v)
                    } else {
                        pts.push(CutPoint::edge(a, b, u));
                        if !in_mask(self.mask, mesh.neighbor(f, k_min)) {
                            return Ok(self.done(pts, Termination::Boundary));
                        }
                        State::Edge { a, b, t: u, from: f }
                    }
                }
            };
            first = false;
        }
        Ok(self.done(pts, Termination::MaxSteps))
    }

    fn dir_norm_max(&self, faces: &[u32]) -> f64 {
        faces.iter().filter(|&&g| in_mask(self.mask, g)).map(|&g| self.dir(g).norm()).fold(0.0, f64::max)
    }

    fn done(&self, mut pts: Vec<CutPoint>, termination: Termination) -> TracedCurve {
        pts.dedup();
        TracedCurve { polyline: SurfacePolyline::open(pts), termination }
    }
}

/// Follows `direction` along the piecewise-constant gradient of `values`
/// from `start` until the region boundary, an extremum or a critical face.
pub fn trace_integral_curve(
    mesh: &TriMesh,
    mask: Option<&[bool]>,
    values: &[f64],
    start: CutPoint,
    direction: Direction,
) -> Result<TracedCurve> {
    let region_faces = match mask {
        Some(m) => m.iter().filter(|&&b| b).count(),
        None => mesh.face_count(),
    };
    let tracer = Tracer { mesh, mask, values, sign: if direction == Direction::Ascend { 1.0 } else { -1.0 } };
    tracer.trace(start, 10 * region_faces.max(1))
}

/// Shortest path from vertex `a` to vertex `b` inside the region, found by
/// descending the distance field of `a` from `b`. `vertex_mask` and
/// `face_mask` describe the same region.
pub fn trace_geodesic_path(
    mesh: &TriMesh,
    graph: &GeodesicGraph,
    solver: &mut Solver,
    vertex_mask: Option<&[bool]>,
    face_mask: Option<&[bool]>,
    a: u32,
    b: u32,
) -> Result<SurfacePolyline> {
    if a == b {
        return Ok(SurfacePolyline::open(vec![CutPoint::vertex(a)]));
    }
    let mut targets: Vec<u32> = mesh.vertex_ring(b).to_vec();
    targets.push(b);
    if let Some(m) = vertex_mask {
        targets.retain(|&v| m[v as usize]);
        if !m[b as usize] {
            return Err(Error::SeedOutsideRegion(b));
        }
    }
    let opts = SolveOptions { region_mask: vertex_mask, targets: Some(&targets), ..Default::default() };
    let dist = solver.solve(graph, &[(a, 0.0)], &opts)?;
    if !dist[b as usize].is_finite() {
        return Err(Error::Unreachable(format!("vertex {b} cannot be reached from {a} inside the region")));
    }
    let tracer = Tracer { mesh, mask: face_mask, values: &dist, sign: -1.0 };
    let curve = tracer.trace(CutPoint::vertex(b), 10 * mesh.face_count())?;
    let mut pts = curve.polyline.points;
    // finish on the graph: step to the lowest ring neighbor until `a`
    let mut cur = match pts.last().copied() {
        Some(CutPoint::Vertex { v }) => v,
        Some(CutPoint::Edge { a: x, b: y, .. }) => {
            let v = if dist[x as usize] <= dist[y as usize] { x } else { y };
            pts.push(CutPoint::vertex(v));
            v
        }
        _ => b,
    };
    let mut guard = mesh.vertex_count();
    while cur != a && guard > 0 {
        guard -= 1;
        let next = mesh
            .vertex_ring(cur)
            .iter()
            .copied()
            .filter(|&u| dist[u as usize] < dist[cur as usize])
            .min_by(|&x, &y| dist[x as usize].total_cmp(&dist[y as usize]).then(x.cmp(&y)));
        match next {
            Some(u) => {
                pts.push(CutPoint::vertex(u));
                cur = u;
            }
            None => break,
        }
    }
    if cur != a {
        return Err(Error::Unreachable(format!("descent from {b} stalled at vertex {cur}")));
    }
    pts.dedup();
    pts.reverse();
    Ok(SurfacePolyline::open(pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::mesh::primitives;

    fn nearest(m: &TriMesh, x: f64, y: f64, z: f64) -> u32 {
        let p = crate::geom::Point::new(x, y, z);
        (0..m.vertex_count() as u32).min_by(|&a, &b| (m.position(a) - p).norm().total_cmp(&(m.position(b) - p).norm())).unwrap()
    }

    #[test]
    fn linear_field_runs_straight_to_boundary() {
        let m = primitives::grid(10, 10, 0.1);
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let f = (0..m.face_count() as u32).find(|&f| {
            let c = m.face_centroid(f);
            (c.x - 0.1).abs() < 0.05 && (c.y - 0.5).abs() < 0.05
        }).unwrap();
        let c = trace_integral_curve(&m, None, &x, CutPoint::interior(f, [1.0 / 3.0; 3]), Direction::Ascend).unwrap();
        assert_eq!(c.termination, Termination::Boundary);
        let pos = c.polyline.positions(&m);
        let y0 = pos[0].y;
        for p in &pos {
            assert!((p.y - y0).abs() < 1e-9);
        }
        assert!((pos.last().unwrap().x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_start_is_an_error() {
        let m = primitives::grid(3, 3, 0.3);
        let c = vec![1.0; m.vertex_count()];
        assert!(trace_integral_curve(&m, None, &c, CutPoint::interior(0, [1.0 / 3.0; 3]), Direction::Ascend).is_err());
    }

    #[test]
    fn descent_ends_near_source() {
        let m = primitives::grid(30, 30, 1.0 / 30.0);
        let g = build_graph(&m);
        let p = nearest(&m, 0.3, 0.3, 0.0);
        let q = nearest(&m, 0.8, 0.6, 0.0);
        let d = crate::field::dist_field(&g, &mut Solver::new(), None, &[p]).unwrap();
        let c = trace_integral_curve(&m, None, &d, CutPoint::vertex(q), Direction::Descend).unwrap();
        let end = c.polyline.points.last().unwrap().position(&m);
        let ring: Vec<u32> = m.vertex_ring(p).to_vec();
        let near = (end - m.position(p)).norm() <= ring.iter().map(|&u| (m.position(u) - m.position(p)).norm()).fold(0.0, f64::max) + 1e-9;
        assert!(near, "{end:?}");
    }

    #[test]
    fn flat_path_is_straight() {
        let m = primitives::grid(30, 30, 1.0 / 30.0);
        let g = build_graph(&m);
        let (a, b) = (nearest(&m, 0.1, 0.2, 0.0), nearest(&m, 0.9, 0.7, 0.0));
        let path = trace_geodesic_path(&m, &g, &mut Solver::new(), None, None, a, b).unwrap();
        assert_eq!(path.points.first(), Some(&CutPoint::vertex(a)));
        assert_eq!(path.points.last(), Some(&CutPoint::vertex(b)));
        let exact = (m.position(a) - m.position(b)).norm();
        assert!((path.length(&m) - exact).abs() / exact < 0.02, "{} vs {exact}", path.length(&m));
        let single = trace_geodesic_path(&m, &g, &mut Solver::new(), None, None, a, a).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn sphere_path_follows_great_circle() {
        let m = primitives::icosphere(4);
        let g = build_graph(&m);
        let a = nearest(&m, 0.0, 0.0, 1.0);
        let b = nearest(&m, 0.8, 0.0, -0.6);
        let exact = m.position(a).coords.normalize().dot(&m.position(b).coords.normalize()).acos();
        let mut s = Solver::new();
        let ab = trace_geodesic_path(&m, &g, &mut s, None, None, a, b).unwrap();
        let ba = trace_geodesic_path(&m, &g, &mut s, None, None, b, a).unwrap();
        assert!((ab.length(&m) - exact).abs() / exact < 0.03, "{} vs {exact}", ab.length(&m));
        assert!((ab.length(&m) - ba.length(&m)).abs() / exact < 0.05);
    }

    #[test]
    fn path_can_be_cut() {
        let mut m = primitives::icosphere(3);
        let g = build_graph(&m);
        let path = trace_geodesic_path(&m, &g, &mut Solver::new(), None, None, 0, 400).unwrap();
        let out = m.cut(&crate::mesh::CutRequest { polylines: vec![path.cut_points()], points: vec![] }).unwrap();
        assert!(!out.embedded.is_empty());
        m.validate().unwrap();
    }

    #[test]
    fn unreachable_inside_mask() {
        let m = primitives::grid(10, 10, 0.1);
        let g = build_graph(&m);
        let vm: Vec<bool> = m.positions().iter().map(|p| (p.x - 0.5).abs() > 0.15).collect();
        let fm: Vec<bool> = (0..m.face_count() as u32).map(|f| m.triangle(f).iter().all(|&v| vm[v as usize])).collect();
        let (a, b) = (nearest(&m, 0.1, 0.5, 0.0), nearest(&m, 0.9, 0.5, 0.0));
        let r = trace_geodesic_path(&m, &g, &mut Solver::new(), Some(&vm), Some(&fm), a, b);
        assert!(matches!(r, Err(Error::Unreachable(_))));
    }
}
