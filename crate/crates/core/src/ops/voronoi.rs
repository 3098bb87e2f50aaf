use crate::error::{Error, Result};
use crate::graph::{GeodesicGraph, SolveOptions, Solver};
use crate::mesh::{CutPoint, TriMesh};
use crate::trace::in_mask;

/// Distances within this margin count as ties, won by the lowest seed id.
pub const TIE_EPS: f64 = 1e-6;

pub const NO_SEED: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct VoronoiLabels {
    /// Sorted seed vertices.
    pub seeds: Vec<u32>,
    /// Nearest seed vertex per node, `NO_SEED` outside the region.
    pub nearest: Vec<u32>,
    /// Up to three closest `(distance, seed)` pairs per node, ascending.
    pub closest: Vec<[(f64, u32); 3]>,
}

impl VoronoiLabels {
    pub fn distance_to(&self, v: u32, seed: u32) -> Option<f64> {
        self.closest[v as usize].iter().find(|&&(_, s)| s == seed).map(|&(d, _)| d)
    }
}

/// Nearest-seed rule shared by the solver and the oracle: smallest
/// distance, ties within [`TIE_EPS`] to the lowest seed id.
pub fn pick_nearest(candidates: impl IntoIterator<Item = (f64, u32)>) -> u32 {
    let list: Vec<(f64, u32)> = candidates.into_iter().filter(|c| c.0.is_finite()).collect();
    let Some(min) = list.iter().map(|c| c.0).min_by(f64::total_cmp) else { return NO_SEED };
    list.iter().filter(|c| c.0 <= min + TIE_EPS).map(|c| c.1).min().unwrap_or(NO_SEED)
}

/// Geodesic Voronoi labeling. A joint solve from all seeds bounds every
/// per-seed solve by its maximum `D`; a per-seed solve is also cut off at
/// nodes that already know three closer seeds.
pub fn voronoi_labels(graph: &GeodesicGraph, solver: &mut Solver, mask: Option<&[bool]>, seeds: &[u32]) -> Result<VoronoiLabels> {
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() < 2 {
        return Err(Error::InvalidParameter(format!("voronoi needs at least 2 seeds, got {}", seeds.len())));
    }
    let n = graph.node_count();
    let all: Vec<(u32, f64)> = seeds.iter().map(|&s| (s, 0.0)).collect();
    let joint = solver.solve(graph, &all, &SolveOptions { region_mask: mask, ..Default::default() })?;
    let d_max = joint.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
    let empty = (f64::INFINITY, NO_SEED);
    let mut closest = vec![[empty; 3]; n];
    let mut bounds = vec![f64::INFINITY; n];
    // allow a slack so that ties at the far end still get recorded
    let limit = d_max + TIE_EPS;
    for &s in &seeds {
        let opts = SolveOptions { region_mask: mask, max_distance: Some(limit), node_bounds: Some(&bounds), ..Default::default() };
        let d = solver.solve(graph, &[(s, 0.0)], &opts)?;
        for v in 0..n {
            let x = d[v];
            if !x.is_finite() || x > limit {
                continue;
            }
            let c = &mut closest[v];
            if x < c[2].0 {
                c[2] = (x, s);
                c.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // keep a margin so that near-ties with the third entry survive
                bounds[v] = c[2].0 + TIE_EPS;
            }
        }
    }
    let nearest = closest.iter().map(|c| pick_nearest(c.iter().copied())).collect();
    Ok(VoronoiLabels { seeds, nearest, closest })
}

/// Bisector polylines over the faces of the region whose corners have
/// different nearest seeds. Each face contributes one chord, or three
/// spokes meeting at an interior point when all corner labels differ.
pub fn bisector_polylines(mesh: &TriMesh, face_mask: Option<&[bool]>, labels: &VoronoiLabels) -> Vec<Vec<CutPoint>> {
    let crossing = |a: u32, b: u32| -> CutPoint {
        let (la, lb) = (labels.nearest[a as usize], labels.nearest[b as usize]);
        let h = |v: u32| -> Option<f64> { Some(labels.distance_to(v, la)? - labels.distance_to(v, lb)?) };
        let t = match (h(a), h(b)) {
            (Some(ha), Some(hb)) if hb > ha => (-ha / (hb - ha)).clamp(0.0, 1.0),
            _ => 0.5,
        };
        // canonical orientation keeps the point identical from both faces
        if a < b {
            CutPoint::edge(a, b, t)
        } else {
            CutPoint::edge(b, a, 1.0 - t)
        }
    };
    let mut out = Vec::new();
    for f in 0..mesh.face_count() as u32 {
        if !in_mask(face_mask, f) {
            continue;
        }
        let t = mesh.triangle(f);
        let l = t.map(|v| labels.nearest[v as usize]);
        if l.contains(&NO_SEED) || (l[0] == l[1] && l[1] == l[2]) {
            continue;
        }
        let mut pts = Vec::with_capacity(3);
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if l[k] != l[(k + 1) % 3] {
                pts.push(crossing(a, b));
            }
        }
        if pts.len() == 2 {
            out.push(pts);
        } else {
            let mut bary = [0.0; 3];
            for p in &pts {
                if let CutPoint::Edge { a, b, t: s } = *p {
                    bary[mesh.corner_of(f, a).unwrap()] += (1.0 - s) / 3.0;
                    bary[mesh.corner_of(f, b).unwrap()] += s / 3.0;
                }
            }
            let center = CutPoint::interior(f, bary);
            for p in pts {
                out.push(vec![center, p]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::mesh::primitives;

    fn brute(g: &GeodesicGraph, seeds: &[u32]) -> Vec<u32> {
        let mut s = Solver::new();
        let fields: Vec<Vec<f64>> = seeds.iter().map(|&x| s.solve(g, &[(x, 0.0)], &SolveOptions::default()).unwrap()).collect();
        (0..g.node_count()).map(|v| pick_nearest(seeds.iter().zip(&fields).map(|(&x, f)| (f[v], x)))).collect()
    }

    #[test]
    fn matches_brute_force() {
        let m = primitives::icosphere(3);
        let g = build_graph(&m);
        let seeds = [5u32, 77, 301, 402, 9, 600, 123];
        let l = voronoi_labels(&g, &mut Solver::new(), None, &seeds).unwrap();
        assert_eq!(l.nearest, brute(&g, &l.seeds));
        for &s in &seeds {
            assert_eq!(l.nearest[s as usize], s);
        }
    }

    #[test]
    fn order_independent() {
        let m = primitives::icosphere(3);
        let g = build_graph(&m);
        let a = voronoi_labels(&g, &mut Solver::new(), None, &[3, 50, 400]).unwrap();
        let b = voronoi_labels(&g, &mut Solver::new(), None, &[400, 3, 50]).unwrap();
        assert_eq!(a.nearest, b.nearest);
    }

    #[test]
    fn needs_two_seeds() {
        let g = build_graph(&primitives::icosphere(1));
        assert!(voronoi_labels(&g, &mut Solver::new(), None, &[3, 3]).is_err());
    }

    #[test]
    fn two_seeds_bisector_is_straight() {
        // one-way diagonals skew the far ends slightly; the mean stays tight
        let m = primitives::grid(50, 50, 0.02);
        let g = build_graph(&m);
        let (a, b) = (25 * 51 + 10, 25 * 51 + 40);
        let l = voronoi_labels(&g, &mut Solver::new(), None, &[a, b]).unwrap();
        let dev: Vec<f64> = bisector_polylines(&m, None, &l).iter().flatten().map(|p| (p.position(&m).x - 0.5).abs()).collect();
        assert!(!dev.is_empty());
        let mean = dev.iter().sum::<f64>() / dev.len() as f64;
        assert!(mean < 0.02, "{mean}");
        assert!(dev.iter().all(|&d| d < 0.04));
    }
}
