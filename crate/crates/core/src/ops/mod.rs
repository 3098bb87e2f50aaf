//! Split operators, seed selection, sampling and displacement.

mod apply;
mod sampling;
mod seeds;
mod voronoi;

use crate::command::{FieldSpec, SeedSpec};
use crate::error::{Error, Result};
use crate::field::{blend_values, FieldKind};
use crate::graph::{GeodesicGraph, SolveOptions, Solver};
use crate::mesh::{BoundaryLoop, TriMesh};
use crate::tree::{vertex_mask_of, PatternTree, RegionId};

pub use sampling::{poisson_sample, poisson_sample_naive, PoissonSamples};
pub use seeds::{loop_arc, sample_line, uniform_on_line, Provenance, SeedLine, SeedSet};
pub use voronoi::{bisector_polylines, pick_nearest, voronoi_labels, VoronoiLabels, NO_SEED, TIE_EPS};

/// Face and vertex membership of a region plus its boundary loops.
#[derive(Clone, Debug)]
pub struct RegionView {
    pub id: RegionId,
    pub faces: Vec<bool>,
    pub verts: Vec<bool>,
    pub loops: Vec<BoundaryLoop>,
}

impl RegionView {
    pub fn new(mesh: &TriMesh, tree: &PatternTree, id: RegionId) -> Result<Self> {
        let faces = tree.face_mask(id)?;
        let verts = vertex_mask_of(mesh, &faces);
        let loops = tree.boundary_loops(mesh, id)?;
        Ok(RegionView { id, faces, verts, loops })
    }

    pub fn face_count(&self) -> usize {
        self.faces.iter().filter(|&&b| b).count()
    }

    pub fn vertices(&self) -> Vec<u32> {
        (0..self.verts.len() as u32).filter(|&v| self.verts[v as usize]).collect()
    }

    pub fn boundary_vertices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.loops.iter().flat_map(|l| l.vertices.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Vertex 0 when it belongs to the region, else the lowest region vertex.
    pub fn fallback_vertex(&self) -> Result<u32> {
        self.verts.iter().position(|&b| b).map(|v| v as u32).ok_or(Error::InvalidParameter("region has no vertices".into()))
    }

    pub fn area(&self, mesh: &TriMesh) -> f64 {
        (0..self.faces.len() as u32).filter(|&f| self.faces[f as usize]).map(|f| mesh.face_area(f)).sum()
    }

    /// `(min, max)` of the finite field values over the region.
    pub fn range(&self, values: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (v, &x) in values.iter().enumerate() {
            if self.verts[v] && x.is_finite() {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        (lo, hi)
    }

    /// Region vertex with the largest finite value, lowest id on ties.
    pub fn argmax(&self, values: &[f64]) -> Option<u32> {
        let mut best: Option<(u32, f64)> = None;
        for (v, &x) in values.iter().enumerate() {
            if self.verts[v] && x.is_finite() && best.is_none_or(|(_, b)| x > b) {
                best = Some((v as u32, x));
            }
        }
        best.map(|(v, _)| v)
    }
}

/// Turns a symbolic seed selection into concrete vertices and lines.
pub fn resolve_seeds(
    mesh: &TriMesh,
    graph: &GeodesicGraph,
    solver: &mut Solver,
    region: &RegionView,
    spec: &SeedSpec,
) -> Result<SeedSet> {
    let loop_at = |index: usize| {
        region.loops.get(index).ok_or_else(|| {
            Error::InvalidParameter(format!("region {} has {} boundary loops, no loop {index}", region.id, region.loops.len()))
        })
    };
    let set = match spec {
        SeedSpec::Vertices { vertices } => {
            for &v in vertices {
                if v as usize >= region.verts.len() || !region.verts[v as usize] {
                    return Err(Error::SeedOutsideRegion(v));
                }
            }
            let mut v = vertices.clone();
            v.sort_unstable();
            v.dedup();
            SeedSet::points(v, Provenance::Manual)
        }
        SeedSpec::Boundary => SeedSet {
            vertices: Vec::new(),
            lines: region.loops.iter().map(|l| SeedLine { vertices: l.vertices.clone(), closed: true }).collect(),
            provenance: Provenance::Boundary,
        },
        SeedSpec::Loop { index } => SeedSet {
            vertices: Vec::new(),
            lines: vec![SeedLine { vertices: loop_at(*index)?.vertices.clone(), closed: true }],
            provenance: Provenance::Boundary,
        },
        SeedSpec::Arc { index, from, to } => SeedSet {
            vertices: Vec::new(),
            lines: vec![loop_arc(mesh, loop_at(*index)?, *from, *to)?],
            provenance: Provenance::Boundary,
        },
        SeedSpec::Uniform { index, count } => {
            let lp = loop_at(*index)?;
            let line = SeedLine { vertices: lp.vertices.clone(), closed: true };
            SeedSet::points(uniform_on_line(mesh, &line, *count), Provenance::UniformOnLine)
        }
        SeedSpec::Poisson { count, min_radius } => {
            let p = poisson_sample(
                graph,
                solver,
                Some(&region.verts),
                &region.boundary_vertices(),
                region.fallback_vertex()?,
                *count,
                *min_radius,
            )?;
            SeedSet::points(p.samples, Provenance::Poisson)
        }
        SeedSpec::Union { parts } => {
            let mut acc: Option<SeedSet> = None;
            for p in parts {
                let s = resolve_seeds(mesh, graph, solver, region, p)?;
                acc = Some(match acc {
                    None => s,
                    Some(a) => a.merge(s),
                });
            }
            acc.ok_or(Error::EmptySeeds)?
        }
    };
    if set.is_empty() {
        return Err(Error::EmptySeeds);
    }
    Ok(set)
}

#[derive(Clone, Debug)]
pub struct FieldResult {
    pub values: Vec<f64>,
    pub kind: FieldKind,
    pub source: SeedSet,
    pub target: Option<SeedSet>,
}

pub fn compute_field(
    mesh: &TriMesh,
    graph: &GeodesicGraph,
    solver: &mut Solver,
    region: &RegionView,
    spec: &FieldSpec,
) -> Result<FieldResult> {
    let opts = SolveOptions { region_mask: Some(&region.verts), ..Default::default() };
    let sources = |s: &SeedSet| -> Vec<(u32, f64)> { s.all_vertices().into_iter().map(|v| (v, 0.0)).collect() };
    match spec {
        FieldSpec::Dist { seeds } => {
            let source = resolve_seeds(mesh, graph, solver, region, seeds)?;
            let values = solver.solve(graph, &sources(&source), &opts)?;
            Ok(FieldResult { values, kind: FieldKind::Dist, source, target: None })
        }
        FieldSpec::Blend { from, to } => {
            let source = resolve_seeds(mesh, graph, solver, region, from)?;
            let target = resolve_seeds(mesh, graph, solver, region, to)?;
            let a = solver.solve(graph, &sources(&source), &opts)?;
            let b = solver.solve(graph, &sources(&target), &opts)?;
            Ok(FieldResult { values: blend_values(&a, &b)?, kind: FieldKind::Blend, source, target: Some(target) })
        }
    }
}
