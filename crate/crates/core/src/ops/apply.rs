//! Operator bodies on the engine.

use std::collections::BTreeSet;

use super::{bisector_polylines, compute_field, resolve_seeds, sample_line, voronoi_labels, FieldResult, RegionView, SeedLine};
use crate::command::{DisplacementProfile, FieldSpec, Isovalues, OperatorCommand, SeedSpec};
use crate::engine::{ApplyReport, Engine, Perturbation, Preview};
use crate::error::{Error, Result};
use crate::field::{perturbation_offsets, FieldKind, NoiseParams};
use crate::geom::Vec3;
use crate::graph::{GeodesicGraph, SolveOptions, Solver};
use crate::mesh::{CutPoint, CutRequest, TriMesh};
use crate::trace::{extract_isolines, trace_geodesic_path, trace_integral_curve, Direction, SurfacePolyline, Termination};
use crate::tree::{PieceInfo, RegionId, RegionTag};

fn lines_to_request(lines: &[SurfacePolyline]) -> CutRequest {
    CutRequest { polylines: lines.iter().map(|l| l.cut_points()).collect(), points: Vec::new() }
}

fn overlay(mesh: &TriMesh, lines: &[SurfacePolyline]) -> Vec<(Vec<[f64; 3]>, bool)> {
    lines.iter().map(|l| (l.positions(mesh).iter().map(|p| [p.x, p.y, p.z]).collect(), l.closed)).collect()
}

/// Isovalues strictly inside the field range of the region.
fn contour_lines(
    mesh: &TriMesh,
    region: &RegionView,
    field: &FieldResult,
    isovalues: &Isovalues,
    report: &mut ApplyReport,
) -> (Vec<f64>, Vec<SurfacePolyline>) {
    let (lo, hi) = region.range(&field.values);
    let isos: Vec<f64> = isovalues.resolve(lo, hi).into_iter().filter(|&x| x > lo && x < hi).collect();
    if isos.is_empty() {
        report.warn(format!("no isovalue lies inside the field range [{lo}, {hi}]"));
        return (isos, Vec::new());
    }
    let lines: Vec<SurfacePolyline> =
        isos.iter().flat_map(|&iso| extract_isolines(mesh, Some(&region.faces), &field.values, iso)).collect();
    if lines.is_empty() {
        report.warn("no isoline crosses the region");
    }
    (isos, lines)
}

/// Splits `total` starting points over lines proportionally to length.
fn distribute(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    if sum <= 0.0 {
        let mut out = vec![0; lengths.len()];
        if let Some(o) = out.first_mut() {
            *o = total;
        }
        return out;
    }
    let exact: Vec<f64> = lengths.iter().map(|l| l / sum * total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - out[b] as f64).total_cmp(&(exact[a] - out[a] as f64)).then(a.cmp(&b)));
    let mut left = total - out.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Integral curves ascending from points sampled along the seed lines.
/// Curves that stop at an extremum other than the field maximum are
/// continued to it along a shortest path.
fn stream_curves(
    mesh: &TriMesh,
    graph: &GeodesicGraph,
    solver: &mut Solver,
    region: &RegionView,
    field: &FieldResult,
    count: usize,
    report: &mut ApplyReport,
) -> Result<Vec<SurfacePolyline>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!("stream needs at least 2 curves, got {count}")));
    }
    let lines: &[SeedLine] = &field.source.lines;
    if lines.is_empty() {
        return Err(Error::InvalidParameter("stream needs a seed line".into()));
    }
    let lengths: Vec<f64> = lines
        .iter()
        .map(|l| {
            let n = l.vertices.len();
            let segs = if l.closed { n } else { n.saturating_sub(1) };
            (0..segs).map(|i| (mesh.position(l.vertices[(i + 1) % n]) - mesh.position(l.vertices[i])).norm()).sum()
        })
        .collect();
    let peak = region.argmax(&field.values).ok_or(Error::EmptySeeds)?;
    let mut curves = Vec::new();
    for (line, k) in lines.iter().zip(distribute(&lengths, count)) {
        for start in sample_line(mesh, line, k) {
            let traced = match trace_integral_curve(mesh, Some(&region.faces), &field.values, start, Direction::Ascend) {
                Ok(t) => t,
                Err(e) => {
                    report.warn(format!("curve dropped: {e}"));
                    continue;
                }
            };
            let mut poly = traced.polyline;
            match traced.termination {
                Termination::Boundary => {}
                Termination::Extremum => {
                    if let Some(&CutPoint::Vertex { v }) = poly.points.last() {
                        if v != peak {
                            let path = trace_geodesic_path(
                                mesh,
                                graph,
                                solver,
                                Some(&region.verts),
                                Some(&region.faces),
                                v,
                                peak,
                            )?;
                            poly.points.extend(path.points.into_iter().skip(1));
                        }
                    }
                }
                Termination::Critical | Termination::MaxSteps => {
                    report.warn(format!("curve stopped early ({:?})", traced.termination));
                    continue;
                }
            }
            if poly.len() >= 2 {
                curves.push(poly);
            }
        }
    }
    if curves.len() < count {
        report.warn(format!("{} of {count} curves traced", curves.len()));
    }
    Ok(curves)
}

fn check_point(mesh: &TriMesh, region: &RegionView, p: &CutPoint) -> Result<()> {
    let ok = match *p {
        CutPoint::Vertex { v } => (v as usize) < region.verts.len() && region.verts[v as usize],
        CutPoint::Edge { a, b, t } => {
            (0.0..=1.0).contains(&t)
                && (a as usize) < region.verts.len()
                && (b as usize) < region.verts.len()
                && mesh.faces_of_edge(a, b).iter().any(|&f| region.faces[f as usize])
        }
        CutPoint::Interior { face, bary } => {
            (face as usize) < region.faces.len() && region.faces[face as usize] && bary.iter().all(|x| x.is_finite())
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("polyline point {p:?} lies outside region {}", region.id)))
    }
}

/// Shortest-path polyline through consecutive vertices.
fn join_vertices(
    mesh: &TriMesh,
    graph: &GeodesicGraph,
    solver: &mut Solver,
    region: &RegionView,
    ids: &[u32],
) -> Result<SurfacePolyline> {
    let mut pts: Vec<CutPoint> = vec![CutPoint::vertex(ids[0])];
    for w in ids.windows(2) {
        let path = trace_geodesic_path(mesh, graph, solver, Some(&region.verts), Some(&region.faces), w[0], w[1])?;
        pts.extend(path.points.into_iter().skip(1));
    }
    Ok(SurfacePolyline::open(pts))
}

fn displacement_offsets(
    mesh: &TriMesh,
    graph: &GeodesicGraph,
    solver: &mut Solver,
    region: &RegionView,
    profile: &DisplacementProfile,
) -> Result<Vec<f64>> {
    profile.validate().map_err(Error::InvalidParameter)?;
    if region.loops.is_empty() {
        return Err(Error::InvalidParameter(format!("region {} has no boundary to displace from", region.id)));
    }
    if region.area(mesh) <= 0.0 {
        return Err(Error::Degenerate(format!("region {} has zero area", region.id)));
    }
    let src: Vec<(u32, f64)> = region.boundary_vertices().into_iter().map(|v| (v, 0.0)).collect();
    let d = solver.solve(graph, &src, &SolveOptions { region_mask: Some(&region.verts), ..Default::default() })?;
    let (_, max) = region.range(&d);
    if !(max > 0.0) {
        return Err(Error::Degenerate(format!("region {} has no interior", region.id)));
    }
    Ok(d.iter()
        .enumerate()
        .map(|(v, &x)| if region.verts[v] && x.is_finite() { profile.shape(x / max) } else { 0.0 })
        .collect())
}

/// Majority band of a piece: how many isovalues lie below its faces.
fn band_of(mesh: &TriMesh, values: &[f64], isos: &[f64], piece: &[u32]) -> usize {
    let mut votes = vec![0usize; isos.len() + 1];
    for &f in piece {
        let t = mesh.triangle(f);
        let c = t.iter().map(|&v| values[v as usize]).sum::<f64>() / 3.0;
        if c.is_finite() {
            votes[isos.iter().filter(|&&x| x < c).count()] += 1;
        }
    }
    let best = votes.iter().max().copied().unwrap_or(0);
    votes.iter().position(|&n| n == best).unwrap_or(0)
}

impl Engine {
    fn region_view(&self, id: RegionId) -> Result<RegionView> {
        RegionView::new(&self.mesh, &self.tree, id)
    }

    fn field_in(&mut self, region: &RegionView, spec: &FieldSpec) -> Result<FieldResult> {
        compute_field(&self.mesh, &self.graph, &mut self.solver, region, spec)
    }

    /// Resolves a seed selection against a region in its own metric.
    pub fn resolve_in(&mut self, region: RegionId, spec: &SeedSpec) -> Result<super::SeedSet> {
        self.prepare_metric(region)?;
        let view = self.region_view(region)?;
        resolve_seeds(&self.mesh, &self.graph, &mut self.solver, &view, spec)
    }

    /// Splits every leaf under `region` along the embedded cut edges.
    fn split_along(
        &mut self,
        region: RegionId,
        embedded: &[(u32, u32)],
        describe: impl FnMut(&[u32]) -> PieceInfo,
    ) -> Result<Vec<RegionId>> {
        let cut: BTreeSet<(u32, u32)> = embedded.iter().copied().collect();
        let by = Some(self.current);
        self.tree.apply_at_ancestor(&self.mesh, region, &cut, describe, by)
    }

    pub(crate) fn contour(&mut self, region: RegionId, spec: &FieldSpec, isovalues: &Isovalues) -> Result<ApplyReport> {
        self.contour_with(region, spec, isovalues, None)
    }

    /// Contour with explicit tags per band, the last one repeating.
    pub(crate) fn contour_with(
        &mut self,
        region: RegionId,
        spec: &FieldSpec,
        isovalues: &Isovalues,
        band_tags: Option<&[RegionTag]>,
    ) -> Result<ApplyReport> {
        self.prepare_metric(region)?;
        let view = self.region_view(region)?;
        let mut field = self.field_in(&view, spec)?;
        let mut report = ApplyReport::default();
        let (isos, lines) = contour_lines(&self.mesh, &view, &field, isovalues, &mut report);
        if lines.is_empty() {
            return Ok(report);
        }
        let out = self.commit_cut(&lines_to_request(&lines), Some(&mut field.values))?;
        let groups: Vec<u32> = (0..=isos.len()).map(|_| self.tree.new_group()).collect();
        let points = field.kind == FieldKind::Dist && field.source.has_points_only();
        let tag_of = |band: usize| match (band_tags, field.kind, points) {
            (Some(t), _, _) if !t.is_empty() => t[band.min(t.len() - 1)],
            (_, FieldKind::Dist, true) if band == 0 => RegionTag::Dot,
            (_, FieldKind::Dist, true) => RegionTag::DotBackground,
            (_, FieldKind::Dist, false) => RegionTag::Frame,
            (_, FieldKind::Blend, _) => RegionTag::Stripe,
        };
        let mesh = &self.mesh;
        let values = &field.values;
        let describe = |piece: &[u32]| {
            let band = band_of(mesh, values, &isos, piece);
            PieceInfo { tag: tag_of(band), group: Some(groups[band]) }
        };
        let cut: BTreeSet<(u32, u32)> = out.embedded.iter().copied().collect();
        report.created = self.tree.apply_at_ancestor(mesh, region, &cut, describe, Some(self.current))?;
        Ok(report)
    }

    pub(crate) fn stream(&mut self, region: RegionId, spec: &FieldSpec, count: usize) -> Result<ApplyReport> {
        self.prepare_metric(region)?;
        let view = self.region_view(region)?;
        let field = self.field_in(&view, spec)?;
        let mut report = ApplyReport::default();
        let curves = stream_curves(&self.mesh, &self.graph, &mut self.solver, &view, &field, count, &mut report)?;
        if curves.is_empty() {
            report.warn("no curve could be traced");
            return Ok(report);
        }
        let out = self.commit_cut(&lines_to_request(&curves), None)?;
        let tag = if field.kind == FieldKind::Dist { RegionTag::Wedge } else { RegionTag::Stripe };
        let group = Some(self.tree.new_group());
        report.created = self.split_along(region, &out.embedded, |_| PieceInfo { tag, group })?;
        Ok(report)
    }

    pub(crate) fn voronoi(&mut self, region: RegionId, seeds: &SeedSpec) -> Result<ApplyReport> {
        self.prepare_metric(region)?;
        let view = self.region_view(region)?;
        let set = resolve_seeds(&self.mesh, &self.graph, &mut self.solver, &view, seeds)?;
        let labels = voronoi_labels(&self.graph, &mut self.solver, Some(&view.verts), &set.all_vertices())?;
        let lines = bisector_polylines(&self.mesh, Some(&view.faces), &labels);
        let mut report = ApplyReport::default();
        if lines.is_empty() {
            report.warn("voronoi cells do not split the region");
            return Ok(report);
        }
        let req = CutRequest { polylines: lines, points: Vec::new() };
        let out = self.commit_cut(&req, None)?;
        let group = Some(self.tree.new_group());
        report.created = self.split_along(region, &out.embedded, |_| PieceInfo { tag: RegionTag::Cell, group })?;
        Ok(report)
    }

    pub(crate) fn polyline(&mut self, region: RegionId, points: &[CutPoint], closed: bool) -> Result<ApplyReport> {
        let need = if closed { 3 } else { 2 };
        if points.len() < need {
            return Err(Error::InvalidParameter(format!("polyline needs at least {need} points, got {}", points.len())));
        }
        self.prepare_metric(region)?;
        let view = self.region_view(region)?;
        for p in points {
            check_point(&self.mesh, &view, p)?;
        }
        let mut ids: Vec<u32> = Vec::with_capacity(points.len() + 1);
        if points.iter().all(|p| matches!(p, CutPoint::Vertex { .. })) {
            ids.extend(points.iter().map(|p| match *p {
                CutPoint::Vertex { v } => v,
                _ => unreachable!(),
            }));
        } else {
            let out = self.commit_cut(&CutRequest { polylines: Vec::new(), points: points.to_vec() }, None)?;
            for (i, v) in out.point_vertices.iter().enumerate() {
                ids.push(v.ok_or_else(|| Error::InvalidParameter(format!("polyline point {i} could not be inserted")))?);
            }
        }
        ids.dedup();
        if closed {
            ids.push(ids[0]);
        }
        if ids.len() < 2 {
            return Err(Error::InvalidParameter("polyline points coincide".into()));
        }
        let view = self.region_view(region)?;
        let path = join_vertices(&self.mesh, &self.graph, &mut self.solver, &view, &ids)?;
        let mut report = ApplyReport::default();
        if path.len() < 2 {
            report.warn("polyline is empty");
            return Ok(report);
        }
        let out = self.commit_cut(&lines_to_request(&[path]), None)?;
        let group = Some(self.tree.new_group());
        report.created = self.split_along(region, &out.embedded, |_| PieceInfo { tag: RegionTag::Generic, group })?;
        if report.created.is_empty() {
            report.warn("polyline does not separate the region; embedded as a seam");
        }
        Ok(report)
    }

    pub(crate) fn displace(&mut self, region: RegionId, profile: &DisplacementProfile) -> Result<ApplyReport> {
        self.prepare_metric(region)?;
        let view = self.region_view(region)?;
        let offsets = displacement_offsets(&self.mesh, &self.graph, &mut self.solver, &view, profile)?;
        if profile.amplitude == 0.0 {
            return Ok(ApplyReport::default());
        }
        let normals = self.mesh.normals();
        let positions = self.mesh.positions().iter().zip(normals).zip(&offsets).map(|((p, n), &o)| p + n * o).collect();
        self.move_vertices(positions)?;
        Ok(ApplyReport::default())
    }

    pub(crate) fn perturb(&mut self, region: RegionId, params: &NoiseParams) -> Result<ApplyReport> {
        params.validate().map_err(Error::InvalidParameter)?;
        let view = self.region_view(region)?;
        self.perturbations.retain(|p| p.region != region);
        if params.gain > 0.0 {
            let mut offsets = vec![Vec3::zeros(); self.mesh.vertex_count()];
            for (v, o) in perturbation_offsets(&self.mesh, &view.vertices(), params) {
                offsets[v as usize] = o;
            }
            self.perturbations.push(Perturbation { region, params: *params, offsets });
        }
        self.invalidate_metric();
        self.prepare_metric(region)?;
        Ok(ApplyReport::default())
    }

    pub(crate) fn assign_material(&mut self, region: RegionId, material: u32) -> Result<ApplyReport> {
        self.tree.node(region)?;
        let ids: Vec<RegionId> =
            self.tree.nodes().iter().map(|n| n.id).filter(|&id| self.tree.contains(region, id)).collect();
        for id in ids {
            self.tree.node_mut(id)?.material = material;
        }
        Ok(ApplyReport::default())
    }

    /// Overlay for the field-driven operators, computed on `graph`.
    pub(crate) fn preview_overlay(&self, graph: &GeodesicGraph, solver: &mut Solver, cmd: &OperatorCommand) -> Result<Preview> {
        let mesh = &self.mesh;
        let view = self.region_view(cmd.region())?;
        let mut report = ApplyReport::default();
        let mut p = Preview::default();
        match cmd {
            OperatorCommand::Contour { field, isovalues, .. } => {
                let f = compute_field(mesh, graph, solver, &view, field)?;
                let (_, lines) = contour_lines(mesh, &view, &f, isovalues, &mut report);
                p.polylines = overlay(mesh, &lines);
                p.field = Some(f.values);
            }
            OperatorCommand::Stream { field, count, .. } => {
                let f = compute_field(mesh, graph, solver, &view, field)?;
                let curves = stream_curves(mesh, graph, solver, &view, &f, *count, &mut report)?;
                p.polylines = overlay(mesh, &curves);
                p.field = Some(f.values);
            }
            OperatorCommand::Voronoi { seeds, .. } => {
                let set = resolve_seeds(mesh, graph, solver, &view, seeds)?;
                let labels = voronoi_labels(graph, solver, Some(&view.verts), &set.all_vertices())?;
                let lines: Vec<SurfacePolyline> =
                    bisector_polylines(mesh, Some(&view.faces), &labels).into_iter().map(SurfacePolyline::open).collect();
                p.polylines = overlay(mesh, &lines);
                p.field = Some(
                    (0..mesh.vertex_count())
                        .map(|v| labels.closest[v][0].0)
                        .map(|d| if d.is_finite() { d } else { f64::INFINITY })
                        .collect(),
                );
            }
            OperatorCommand::Displace { profile, .. } => {
                p.field = Some(displacement_offsets(mesh, graph, solver, &view, profile)?);
            }
            OperatorCommand::Perturb { params, .. } => {
                params.validate().map_err(Error::InvalidParameter)?;
                let mut f = vec![0.0; mesh.vertex_count()];
                for (v, o) in perturbation_offsets(mesh, &view.vertices(), params) {
                    f[v as usize] = o.dot(&mesh.normals()[v as usize]);
                }
                p.field = Some(f);
            }
            _ => {}
        }
        p.warnings = report.warnings;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribute_keeps_total() {
        assert_eq!(distribute(&[1.0, 1.0], 5), vec![3, 2]);
        assert_eq!(distribute(&[3.0, 1.0], 8), vec![6, 2]);
        assert_eq!(distribute(&[0.0], 4), vec![4]);
        assert_eq!(distribute(&[1.0, 2.0, 3.0], 7).iter().sum::<usize>(), 7);
    }
}
