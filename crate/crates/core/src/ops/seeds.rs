use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryLoop, CutPoint, TriMesh, SNAP_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    Poisson,
    Boundary,
    UniformOnLine,
    Mixed,
}

/// A vertex path on the surface, typically (part of) a boundary loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLine {
    pub vertices: Vec<u32>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    pub vertices: Vec<u32>,
    pub lines: Vec<SeedLine>,
    pub provenance: Provenance,
}

impl SeedSet {
    pub fn points(vertices: Vec<u32>, provenance: Provenance) -> Self {
        SeedSet { vertices, lines: Vec::new(), provenance }
    }

    /// Every vertex of the set, sorted and deduplicated. Lines contribute
    /// their vertices.
    pub fn all_vertices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.vertices.iter().chain(self.lines.iter().flat_map(|l| &l.vertices)).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.lines.iter().all(|l| l.vertices.is_empty())
    }

    pub fn has_points_only(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn merge(mut self, other: SeedSet) -> SeedSet {
        self.vertices.extend(other.vertices);
        self.vertices.sort_unstable();
        self.vertices.dedup();
        self.lines.extend(other.lines);
        if self.provenance != other.provenance {
            self.provenance = Provenance::Mixed;
        }
        self
    }
}

fn cumulative(mesh: &TriMesh, vertices: &[u32], closed: bool) -> Vec<f64> {
    let mut acc = vec![0.0];
    let n = vertices.len();
    let segs = if closed { n } else { n.saturating_sub(1) };
    for i in 0..segs {
        let d = (mesh.position(vertices[(i + 1) % n]) - mesh.position(vertices[i])).norm();
        acc.push(acc[i] + d);
    }
    acc
}

/// Slack on arclength fractions.
const EPS: f64 = 1e-9;

/// Vertices of a loop between arclength fractions `from` and `to`.
pub fn loop_arc(mesh: &TriMesh, lp: &BoundaryLoop, from: f64, to: f64) -> Result<SeedLine> {
    if !(0.0..=1.0).contains(&from) || !(0.0..=1.0).contains(&to) {
        return Err(Error::InvalidParameter(format!("arc fractions must lie in [0, 1], got {from}..{to}")));
    }
    let acc = cumulative(mesh, &lp.vertices, true);
    let total = *acc.last().unwrap();
    let frac: Vec<f64> = acc[..lp.vertices.len()].iter().map(|a| a / total).collect();
    let mut order: Vec<usize> = (0..lp.vertices.len()).collect();
    if to < from {
        // wrap: start at the first vertex past `from`
        let start = frac.iter().position(|&f| f >= from - EPS).unwrap_or(0);
        order.rotate_left(start);
    }
    let inside = |f: f64| if from <= to { f >= from - EPS && f <= to + EPS } else { f >= from - EPS || f <= to + EPS };
    let vertices: Vec<u32> = order.into_iter().filter(|&i| inside(frac[i])).map(|i| lp.vertices[i]).collect();
    if vertices.is_empty() {
        return Err(Error::EmptySeeds);
    }
    Ok(SeedLine { vertices, closed: false })
}

/// `count` points equally spaced by arclength along a vertex path, as
/// surface points on its edges. Closed paths start at their first vertex;
/// open paths are sampled at cell midpoints.
pub fn sample_line(mesh: &TriMesh, line: &SeedLine, count: usize) -> Vec<CutPoint> {
    let v = &line.vertices;
    if v.is_empty() || count == 0 {
        return Vec::new();
    }
    if v.len() == 1 {
        return vec![CutPoint::vertex(v[0])];
    }
    let closed = line.closed && v.len() > 2;
    let acc = cumulative(mesh, v, closed);
    let total = *acc.last().unwrap();
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let s = if closed { total * i as f64 / count as f64 } else { total * (i as f64 + 0.5) / count as f64 };
        while seg + 2 < acc.len() && acc[seg + 1] < s {
            seg += 1;
        }
        let (a, b) = (v[seg], v[(seg + 1) % v.len()]);
        let len = acc[seg + 1] - acc[seg];
        let t = if len > 0.0 { ((s - acc[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(if t < SNAP_TOLERANCE {
            CutPoint::vertex(a)
        } else if t > 1.0 - SNAP_TOLERANCE {
            CutPoint::vertex(b)
        } else {
            CutPoint::edge(a, b, t)
        });
    }
    out
}

/// `count` path vertices nearest to equally spaced arclength positions.
pub fn uniform_on_line(mesh: &TriMesh, line: &SeedLine, count: usize) -> Vec<u32> {
    let mut out: Vec<u32> = sample_line(mesh, line, count)
        .into_iter()
        .map(|p| match p {
            CutPoint::Vertex { v } => v,
            CutPoint::Edge { a, b, t } => {
                if t <= 0.5 {
                    a
                } else {
                    b
                }
            }
            CutPoint::Interior { .. } => unreachable!("line samples lie on edges"),
        })
        .collect();
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}
