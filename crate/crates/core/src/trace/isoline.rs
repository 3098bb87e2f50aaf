use std::collections::BTreeMap;

use crate::mesh::{CutPoint, TriMesh, SNAP_TOLERANCE};

use super::{in_mask, SurfacePolyline};

/// Level set `values == iso` over the faces in `mask`, linked into maximal
/// polylines. Vertex values equal to `iso` are nudged up by `1e-7 * range`.
pub fn extract_isolines(mesh: &TriMesh, mask: Option<&[bool]>, values: &[f64], iso: f64) -> Vec<SurfacePolyline> {
    let faces: Vec<u32> = (0..mesh.face_count() as u32)
        .filter(|&f| in_mask(mask, f) && mesh.triangle(f).iter().all(|&v| values[v as usize].is_finite()))
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &f in &faces {
        for v in mesh.triangle(f) {
            lo = lo.min(values[v as usize]);
            hi = hi.max(values[v as usize]);
        }
    }
    if !(iso > lo && iso < hi) {
        return Vec::new();
    }
    let nudge = 1e-7 * (hi - lo);
    let value = |v: u32| {
        let x = values[v as usize];
        if x == iso {
            x + nudge
        } else {
            x
        }
    };

    // crossing edge (min, max) -> faces that link through it
    let mut links: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    let mut face_edges: BTreeMap<u32, [(u32, u32); 2]> = BTreeMap::new();
    for &f in &faces {
        let t = mesh.triangle(f);
        let mut crossing = Vec::with_capacity(2);
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if (value(a) > iso) != (value(b) > iso) {
                crossing.push((a.min(b), a.max(b)));
            }
        }
        if crossing.len() == 2 {
            for &e in &crossing {
                links.entry(e).or_default().push(f);
            }
            face_edges.insert(f, [crossing[0], crossing[1]]);
        }
    }

    let point = |(a, b): (u32, u32)| {
        let (fa, fb) = (value(a), value(b));
        let t = ((iso - fa) / (fb - fa)).clamp(0.0, 1.0);
        if t < SNAP_TOLERANCE {
            CutPoint::vertex(a)
        } else if t > 1.0 - SNAP_TOLERANCE {
            CutPoint::vertex(b)
        } else {
            CutPoint::edge(a, b, t)
        }
    };

    let mut used: BTreeMap<u32, bool> = face_edges.keys().map(|&f| (f, false)).collect();
    let mut out = Vec::new();
    let walk = |start: (u32, u32), used: &mut BTreeMap<u32, bool>| -> (Vec<(u32, u32)>, bool) {
        let mut chain = vec![start];
        let mut edge = start;
        loop {
            let next_face = links[&edge].iter().copied().find(|f| !used[f]);
            let Some(f) = next_face else { break };
            used.insert(f, true);
            let [e0, e1] = face_edges[&f];
            edge = if e0 == edge { e1 } else { e0 };
            if edge == start {
                return (chain, true);
            }
            chain.push(edge);
        }
        (chain, false)
    };

    // open chains start at crossings with a single linked face
    let ends: Vec<(u32, u32)> = links.iter().filter(|(_, fs)| fs.len() == 1).map(|(&e, _)| e).collect();
    let mut chains = Vec::new();
    for e in ends {
        if used[&links[&e][0]] {
            continue;
        }
        chains.push(walk(e, &mut used));
    }
    let faces_left: Vec<u32> = used.iter().filter(|(_, &u)| !u).map(|(&f, _)| f).collect();
    for f in faces_left {
        if !used[&f] {
            chains.push(walk(face_edges[&f][0], &mut used));
        }
    }

    for (chain, closed) in chains {
        let mut pts: Vec<CutPoint> = Vec::with_capacity(chain.len());
        for e in chain {
            let p = point(e);
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if closed && pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        let distinct = if closed { 3 } else { 2 };
        if pts.len() >= distinct {
            out.push(SurfacePolyline { points: pts, closed });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::dist_field;
    use crate::graph::{build_graph, Solver};
    use crate::mesh::primitives;

    #[test]
    fn linear_field_on_square() {
        let m = primitives::grid(10, 10, 0.1);
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let lines = extract_isolines(&m, None, &x, 0.55);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        for p in lines[0].positions(&m) {
            assert!((p.x - 0.55).abs() < 1e-6);
        }
        assert!((lines[0].length(&m) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn isovalue_through_vertices() {
        let m = primitives::grid(10, 10, 0.1);
        let x: Vec<f64> = m.positions().iter().map(|p| (p.x * 10.0).round() / 10.0).collect();
        let lines = extract_isolines(&m, None, &x, x[5]);
        assert_eq!(lines.len(), 1);
        for p in lines[0].positions(&m) {
            assert!((p.x - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn circle_on_disk() {
        let m = primitives::disk(1.0, 40);
        let g = build_graph(&m);
        let d = dist_field(&g, &mut Solver::new(), None, &[0]).unwrap();
        assert!(m.position(0).coords.norm() < 1e-12);
        let lines = extract_isolines(&m, None, &d, 0.5);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        let l = lines[0].length(&m);
        let exact = std::f64::consts::PI;
        assert!((l - exact).abs() / exact < 0.02, "{l}");
    }

    #[test]
    fn out_of_range_is_empty() {
        let m = primitives::grid(4, 4, 0.25);
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        assert!(extract_isolines(&m, None, &x, 2.0).is_empty());
        assert!(extract_isolines(&m, None, &x, 0.0).is_empty());
    }

    #[test]
    fn masked_faces_only() {
        let m = primitives::grid(10, 10, 0.1);
        let mask: Vec<bool> = (0..m.face_count() as u32).map(|f| m.face_centroid(f).y < 0.5).collect();
        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let lines = extract_isolines(&m, Some(&mask), &x, 0.55);
        assert_eq!(lines.len(), 1);
        assert!((lines[0].length(&m) - 0.5).abs() < 1e-9);
    }
}
