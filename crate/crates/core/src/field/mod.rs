//! Scalar fields on mesh vertices and their per-face gradients.
//!
//! Vertices outside the region a field was computed on hold `+inf`.

mod noise;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{barycentric_gradients, Point, Vec3};
use crate::graph::{GeodesicGraph, SolveOptions, Solver};
use crate::mesh::TriMesh;

pub use noise::{NoiseParams, Perlin};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Dist,
    Blend,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub kind: FieldKind,
    pub region: u32,
}

impl ScalarField {
    /// Largest finite value.
    pub fn max(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    }

    /// Vertex with the largest finite value, lowest id on ties.
    pub fn argmax(&self) -> Option<u32> {
        let mut best: Option<(u32, f64)> = None;
        for (v, &x) in self.values.iter().enumerate() {
            if x.is_finite() && best.is_none_or(|(_, b)| x > b) {
                best = Some((v as u32, x));
            }
        }
        best.map(|(v, _)| v)
    }
}

fn sources(seeds: &[u32]) -> Vec<(u32, f64)> {
    let mut s: Vec<u32> = seeds.to_vec();
    s.sort_unstable();
    s.dedup();
    s.into_iter().map(|v| (v, 0.0)).collect()
}

/// Geodesic distance from a set of seed vertices, restricted to `mask`.
pub fn dist_field(
    graph: &GeodesicGraph,
    solver: &mut Solver,
    mask: Option<&[bool]>,
    seeds: &[u32],
) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    solver.solve(graph, &sources(seeds), &SolveOptions { region_mask: mask, ..Default::default() })
}

/// `dist_S / (dist_S + dist_S2)`: 0 on `s`, 1 on `s2`.
pub fn blend_field(
    graph: &GeodesicGraph,
    solver: &mut Solver,
    mask: Option<&[bool]>,
    s: &[u32],
    s2: &[u32],
) -> Result<Vec<f64>> {
    let a = dist_field(graph, solver, mask, s)?;
    let b = dist_field(graph, solver, mask, s2)?;
    blend_values(&a, &b)
}

/// Combines two distance fields into a blend.
pub fn blend_values(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(v, (&x, &y))| {
            if x == 0.0 && y == 0.0 {
                Err(Error::OverlappingSeeds(v as u32))
            } else if x.is_finite() && y.is_finite() {
                Ok(x / (x + y))
            } else {
                Ok(f64::INFINITY)
            }
        })
        .collect()
}

/// Piecewise-constant gradient per face; zero where a corner value is
/// undefined or the face is degenerate.
pub fn gradient(mesh: &TriMesh, values: &[f64]) -> Vec<Vec3> {
    (0..mesh.face_count() as u32).map(|f| face_gradient(mesh, values, f)).collect()
}

pub fn face_gradient(mesh: &TriMesh, values: &[f64], f: u32) -> Vec3 {
    let t = mesh.triangle(f);
    let vals = t.map(|v| values[v as usize]);
    if vals.iter().any(|x| !x.is_finite()) || (vals[0] == vals[1] && vals[1] == vals[2]) {
        return Vec3::zeros();
    }
    match barycentric_gradients(mesh.face_points(f)) {
        Some(g) => g[0] * vals[0] + g[1] * vals[1] + g[2] * vals[2],
        None => Vec3::zeros(),
    }
}

/// Symbolic positions `p + gain * noise(frequency * p) * n` for the given
/// vertices; other vertices keep `base`.
pub fn perturbed_positions(mesh: &TriMesh, base: &[Point], vertices: &[u32], params: &NoiseParams) -> Vec<Point> {
    let mut out = base.to_vec();
    for (v, off) in perturbation_offsets(mesh, vertices, params) {
        out[v as usize] += off;
    }
    out
}

/// Offsets (along vertex normals) of a Perlin metric perturbation.
pub fn perturbation_offsets(mesh: &TriMesh, vertices: &[u32], params: &NoiseParams) -> Vec<(u32, Vec3)> {
    if params.gain == 0.0 {
        return Vec::new();
    }
    let noise = Perlin::new(params.seed);
    vertices
        .iter()
        .map(|&v| {
            let p = mesh.position(v);
            let h = noise.fbm(p.coords * params.frequency, params.octaves);
            (v, mesh.normals()[v as usize] * (params.gain * h))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, build_graph_with};
    use crate::mesh::{mesh_boundary_loops, primitives};
    use proptest::prelude::*;

    #[test]
    fn single_seed_is_zero_and_min_plus() {
        let m = primitives::icosphere(3);
        let g = build_graph(&m);
        let mut s = Solver::new();
        let a = dist_field(&g, &mut s, None, &[3]).unwrap();
        let b = dist_field(&g, &mut s, None, &[300]).unwrap();
        let ab = dist_field(&g, &mut s, None, &[3, 300]).unwrap();
        assert_eq!(a[3], 0.0);
        for v in 0..ab.len() {
            assert_eq!(ab[v], a[v].min(b[v]));
        }
        assert!(matches!(dist_field(&g, &mut s, None, &[]), Err(Error::EmptySeeds)));
    }

    #[test]
    fn disk_boundary_distance_peaks_at_radius() {
        let m = primitives::disk(1.0, 24);
        let g = build_graph(&m);
        let seeds = mesh_boundary_loops(&m)[0].vertices.clone();
        let d = dist_field(&g, &mut Solver::new(), None, &seeds).unwrap();
        let max = d.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 0.02, "{max}");
    }

    #[test]
    fn blend_on_strip_midline() {
        let m = primitives::grid(40, 10, 0.1);
        let g = build_graph(&m);
        let left: Vec<u32> = (0..=10).map(|j| j * 41).collect();
        let right: Vec<u32> = (0..=10).map(|j| j * 41 + 40).collect();
        let b = blend_field(&g, &mut Solver::new(), None, &left, &right).unwrap();
        for j in 0..=10u32 {
            let mid = j * 41 + 20;
            assert!((b[mid as usize] - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn overlapping_seeds_rejected() {
        let m = primitives::icosphere(1);
        let g = build_graph(&m);
        assert!(matches!(
            blend_field(&g, &mut Solver::new(), None, &[1, 2], &[2, 5]),
            Err(Error::OverlappingSeeds(2))
        ));
    }

    #[test]
    fn blend_is_scale_invariant() {
        let m = primitives::icosphere(3);
        let big = m.scaled(3.0);
        let (g1, g3) = (build_graph(&m), build_graph(&big));
        let mut s = Solver::new();
        let b1 = blend_field(&g1, &mut s, None, &[0, 7], &[100]).unwrap();
        let b3 = blend_field(&g3, &mut s, None, &[0, 7], &[100]).unwrap();
        for (x, y) in b1.iter().zip(&b3) {
            assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn gradient_of_linear_field() {
        let m = primitives::grid(5, 5, 0.2);
        let f: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        for g in gradient(&m, &f) {
            assert!((g - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-9);
        }
        let c = vec![2.0; m.vertex_count()];
        assert!(gradient(&m, &c).iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn gradient_is_tangent_and_eikonal() {
        let m = primitives::grid(40, 40, 0.025);
        let g = build_graph(&m);
        let src = 20 * 41 + 20;
        let d = dist_field(&g, &mut Solver::new(), None, &[src]).unwrap();
        let ring = m.fan(src).iter().map(|&(f, _)| f).collect::<Vec<_>>();
        let grads = gradient(&m, &d);
        let (mut bad, mut sum, mut n) = (0, 0.0, 0);
        for (f, gr) in grads.iter().enumerate() {
            assert!(gr.dot(&m.face_normal(f as u32)).abs() <= 1e-6 * gr.norm().max(1.0));
            if ring.contains(&(f as u32)) {
                continue;
            }
            sum += gr.norm();
            n += 1;
            if (gr.norm() - 1.0).abs() > 0.25 {
                bad += 1;
            }
        }
        assert!((sum / n as f64 - 1.0).abs() < 0.05, "mean {}", sum / n as f64);
        assert!(bad * 20 < n, "{bad} of {n}");
    }

    #[test]
    fn perturbation_is_deterministic_and_bounded() {
        let m = primitives::grid(20, 20, 0.05);
        let all: Vec<u32> = (0..m.vertex_count() as u32).collect();
        let p = NoiseParams { gain: 0.01, frequency: 4.0, octaves: 3, seed: 9 };
        let a = perturbed_positions(&m, m.positions(), &all, &p);
        let b = perturbed_positions(&m, m.positions(), &all, &p);
        assert_eq!(a, b);
        let g0 = build_graph(&m);
        let g1 = build_graph_with(&m, &a);
        for v in 0..m.vertex_count() as u32 {
            for (x, y) in g0.arcs(v).iter().zip(g1.arcs(v)) {
                if x.node == y.node {
                    assert!((x.len - y.len).abs() as f64 <= 2.0 * p.gain + 1e-6);
                }
            }
        }
        let zero = NoiseParams { gain: 0.0, ..p };
        assert_eq!(perturbed_positions(&m, m.positions(), &all, &zero), m.positions());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn blend_properties(seed_a in proptest::collection::vec(0u32..642, 1..5),
                            seed_b in proptest::collection::vec(0u32..642, 1..5)) {
            let b: Vec<u32> = seed_b.into_iter().filter(|v| !seed_a.contains(v)).collect();
            prop_assume!(!b.is_empty());
            let m = primitives::icosphere(3);
            let g = build_graph(&m);
            let mut s = Solver::new();
            let x = blend_field(&g, &mut s, None, &seed_a, &b).unwrap();
            let y = blend_field(&g, &mut s, None, &b, &seed_a).unwrap();
            for v in 0..x.len() {
                prop_assert!((0.0..=1.0).contains(&x[v]));
                prop_assert!((x[v] + y[v] - 1.0).abs() < 1e-6);
            }
            for &v in &seed_a { prop_assert_eq!(x[v as usize], 0.0); }
            for &v in &b { prop_assert_eq!(x[v as usize], 1.0); }
        }
    }
}
