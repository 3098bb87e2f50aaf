//! Curves on the surface: isolines of vertex fields, integral curves of
//! their gradients and geodesic paths.
//!
//! Polylines are sequences of [`CutPoint`]s in which consecutive points lie
//! on a common face, so they can be handed to the mesh cutter unchanged.

mod curve;
mod isoline;

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::mesh::{CutPoint, TriMesh, NO_FACE};

pub use curve::{trace_geodesic_path, trace_integral_curve, Direction, Termination, TracedCurve};
pub use isoline::extract_isolines;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfacePolyline {
    pub points: Vec<CutPoint>,
    pub closed: bool,
}

impl SurfacePolyline {
    pub fn open(points: Vec<CutPoint>) -> Self {
        SurfacePolyline { points, closed: false }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self, mesh: &TriMesh) -> Vec<Point> {
        self.points.iter().map(|p| p.position(mesh)).collect()
    }

    pub fn length(&self, mesh: &TriMesh) -> f64 {
        let pos = self.positions(mesh);
        let mut l: f64 = pos.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && pos.len() > 2 {
            l += (pos[0] - pos[pos.len() - 1]).norm();
        }
        l
    }

    /// Points in cutter order; closed polylines repeat their first point.
    pub fn cut_points(&self) -> Vec<CutPoint> {
        let mut pts = self.points.clone();
        if self.closed && pts.len() > 2 {
            pts.push(pts[0]);
        }
        pts
    }

    /// Each point as a face and barycentric coordinates on that face.
    pub fn anchors(&self, mesh: &TriMesh) -> Vec<(u32, [f64; 3])> {
        self.points.iter().map(|p| anchor(mesh, p)).collect()
    }

    pub fn reversed(mut self) -> Self {
        self.points.reverse();
        self
    }
}

/// A face containing `p` and the barycentric coordinates of `p` on it.
pub fn anchor(mesh: &TriMesh, p: &CutPoint) -> (u32, [f64; 3]) {
    match *p {
        CutPoint::Interior { face, bary } => (face, bary),
        CutPoint::Vertex { v } => {
            let f = mesh.vertex_face(v);
            let mut b = [0.0; 3];
            if f != NO_FACE {
                b[mesh.corner_of(f, v).unwrap_or(0)] = 1.0;
            }
            (f, b)
        }
        CutPoint::Edge { a, b, t } => {
            let f = mesh.faces_of_edge(a, b).first().copied().unwrap_or(NO_FACE);
            let mut bary = [0.0; 3];
            if f != NO_FACE {
                bary[mesh.corner_of(f, a).unwrap_or(0)] = 1.0 - t;
                bary[mesh.corner_of(f, b).unwrap_or(0)] = t;
            }
            (f, bary)
        }
    }
}

pub(crate) fn in_mask(mask: Option<&[bool]>, f: u32) -> bool {
    f != NO_FACE && mask.is_none_or(|m| m[f as usize])
}
