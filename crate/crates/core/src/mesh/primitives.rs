//! Procedural fixture meshes: grids, disks, annuli, cylinders, spheres and a
//! vase. Used by tests, benchmarks and `builtin:` mesh specifiers.

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::Point;

use super::TriMesh;

fn build(positions: Vec<Point>, triangles: Vec<[u32; 3]>) -> TriMesh {
    TriMesh::new(positions, triangles).expect("primitive meshes are valid")
}

/// Flat `nx` x `ny` cell grid in the z = 0 plane with square cells of side
/// `cell`, each split along its (i, j)-(i+1, j+1) diagonal.
pub fn grid(nx: usize, ny: usize, cell: f64) -> TriMesh {
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Point::new(i as f64 * cell, j as f64 * cell, 0.0));
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(positions, triangles)
}

/// Two triangles covering the unit square, split along the diagonal
/// from (0, 0) to (1, 1).
pub fn unit_square() -> TriMesh {
    grid(1, 1, 1.0)
}

/// Unit icosphere with `20 * 4^subdivisions` faces.
pub fn icosphere(subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::from(nalgebra::Vector3::new(x, y, z).normalize()))
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, positions: &mut Vec<Point>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = (positions[a as usize].coords + positions[b as usize].coords).normalize();
                positions.push(Point::from(m));
                positions.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut positions);
            let bc = midpoint(b, c, &mut positions);
            let ca = midpoint(c, a, &mut positions);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    build(positions, triangles)
}

/// Stitches two concentric closed rings of vertex ids (angles increasing)
/// with a zipper triangulation. `inner` triangles come out counterclockwise
/// seen from +z when `inner` has the smaller radius.
fn zip_rings(inner: &[(u32, f64)], outer: &[(u32, f64)], triangles: &mut Vec<[u32; 3]>) {
    let na = inner.len();
    let nb = outer.len();
    let angle = |ring: &[(u32, f64)], k: usize| -> f64 {
        let n = ring.len();
        ring[k % n].1 + TAU * (k / n) as f64
    };
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let advance_inner = j == nb || (i < na && angle(inner, i + 1) < angle(outer, j + 1));
        if advance_inner {
            triangles.push([inner[i % na].0, outer[j % nb].0, inner[(i + 1) % na].0]);
            i += 1;
        } else {
            triangles.push([inner[i % na].0, outer[j % nb].0, outer[(j + 1) % nb].0]);
            j += 1;
        }
    }
}

fn ring(positions: &mut Vec<Point>, radius: f64, count: usize, z: f64, phase: f64) -> Vec<(u32, f64)> {
    (0..count)
        .map(|k| {
            let a = phase + TAU * k as f64 / count as f64;
            positions.push(Point::new(radius * a.cos(), radius * a.sin(), z));
            (positions.len() as u32 - 1, a)
        })
        .collect()
}

/// Flat disk of the given radius in the z = 0 plane. Ring `i` of `rings`
/// carries `6 i` vertices, giving near-equilateral triangles.
pub fn disk(radius: f64, rings: usize) -> TriMesh {
    assert!(rings >= 1);
    let mut positions = vec![Point::origin()];
    let mut triangles = Vec::new();
    let mut prev = ring(&mut positions, radius / rings as f64, 6, 0.0, 0.0);
    for k in 0..6 {
        triangles.push([0, prev[k].0, prev[(k + 1) % 6].0]);
    }
    for i in 2..=rings {
        let next = ring(&mut positions, radius * i as f64 / rings as f64, 6 * i, 0.0, 0.0);
        zip_rings(&prev, &next, &mut triangles);
        prev = next;
    }
    build(positions, triangles)
}

/// Flat annulus between `inner` and `outer` radii with roughly uniform
/// edge length `outer / rings`-ish spacing.
pub fn annulus(inner: f64, outer: f64, rings: usize) -> TriMesh {
    assert!(inner > 0.0 && outer > inner && rings >= 1);
    let h = (outer - inner) / rings as f64;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let count = |r: f64| ((TAU * r / h).round() as usize).max(6);
    let mut prev = ring(&mut positions, inner, count(inner), 0.0, 0.0);
    for i in 1..=rings {
        let r = inner + h * i as f64;
        let next = ring(&mut positions, r, count(r), 0.0, 0.0);
        zip_rings(&prev, &next, &mut triangles);
        prev = next;
    }
    build(positions, triangles)
}

/// Open cylinder around the z axis, from z = 0 to z = `height`.
pub fn cylinder(radius: f64, height: f64, rings: usize, segments: usize) -> TriMesh {
    let mut positions = Vec::new();
    for i in 0..=rings {
        let z = height * i as f64 / rings as f64;
        let phase = if i % 2 == 0 { 0.0 } else { 0.5 * TAU / segments as f64 };
        for k in 0..segments {
            let a = phase + TAU * k as f64 / segments as f64;
            positions.push(Point::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let id = |i: usize, k: usize| (i * segments + k % segments) as u32;
    let mut triangles = Vec::new();
    for i in 0..rings {
        for k in 0..segments {
            if i % 2 == 0 {
                triangles.push([id(i, k), id(i, k + 1), id(i + 1, k)]);
                triangles.push([id(i, k + 1), id(i + 1, k + 1), id(i + 1, k)]);
            } else {
                triangles.push([id(i, k), id(i, k + 1), id(i + 1, k + 1)]);
                triangles.push([id(i, k), id(i + 1, k + 1), id(i + 1, k)]);
            }
        }
    }
    build(positions, triangles)
}

/// Vase-shaped surface of revolution: closed rounded bottom, open top.
pub fn vase(rings: usize, segments: usize) -> TriMesh {
    let profile = |s: f64| -> (f64, f64) {
        // s in (0, 1]: radius and height along the profile
        let z = 2.0 * s;
        let body = (std::f64::consts::PI * s).sin();
        let r = 0.35 + 0.45 * body - 0.15 * (3.0 * std::f64::consts::PI * s).sin() * s;
        (r.max(0.05), z)
    };
    let mut positions = vec![Point::new(0.0, 0.0, 0.0)];
    let mut triangles = Vec::new();
    let bottom_rings = (rings / 6).max(2);
    // spherical-ish bottom cap from the pole to the first profile ring
    let (r0, _) = profile(1.0 / rings as f64);
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for b in 1..=bottom_rings {
        let f = b as f64 / bottom_rings as f64;
        let r = r0 * f;
        let z = -0.15 * (1.0 - f * f).max(0.0) + 0.0;
        let phase = if b.is_multiple_of(2) { 0.0 } else { 0.5 * TAU / segments as f64 };
        let row = (0..segments)
            .map(|k| {
                let a = phase + TAU * k as f64 / segments as f64;
                positions.push(Point::new(r * a.cos(), r * a.sin(), z + 0.15));
                positions.len() as u32 - 1
            })
            .collect();
        rows.push(row);
    }
    for i in 1..=rings {
        let (r, z) = profile(i as f64 / rings as f64);
        let b = bottom_rings + i;
        let phase = if b.is_multiple_of(2) { 0.0 } else { 0.5 * TAU / segments as f64 };
        let row = (0..segments)
            .map(|k| {
                let a = phase + TAU * k as f64 / segments as f64;
                positions.push(Point::new(r * a.cos(), r * a.sin(), z + 0.15));
                positions.len() as u32 - 1
            })
            .collect();
        rows.push(row);
    }
    let s = segments;
    for k in 0..s {
        triangles.push([0, rows[0][(k + 1) % s], rows[0][k]]);
    }
    for (i, pair) in rows.windows(2).enumerate() {
        let (lo, hi) = (&pair[0], &pair[1]);
        // rows alternate phase: odd rows are rotated by half a segment
        let lo_shifted = (i + 1) % 2 == 1;
        for k in 0..s {
            if lo_shifted {
                triangles.push([lo[k], hi[(k + 1) % s], hi[k]]);
                triangles.push([lo[k], lo[(k + 1) % s], hi[(k + 1) % s]]);
            } else {
                triangles.push([lo[k], lo[(k + 1) % s], hi[k]]);
                triangles.push([lo[(k + 1) % s], hi[(k + 1) % s], hi[k]]);
            }
        }
    }
    build(positions, triangles)
}

/// Parses a `builtin:<name>[:<param>...]` mesh specifier.
///
/// Known names: `icosphere:<subdivisions>`, `grid:<nx>:<ny>[:<cell>]`,
/// `disk:<rings>`, `annulus:<rings>`, `cylinder:<rings>:<segments>`,
/// `vase:<rings>:<segments>`.
pub fn from_spec(spec: &str) -> Result<TriMesh> {
    let rest = spec
        .strip_prefix("builtin:")
        .ok_or_else(|| Error::InvalidParameter(format!("not a builtin mesh: {spec}")))?;
    let mut parts = rest.split(':');
    let name = parts.next().unwrap_or_default();
    let args: Vec<f64> = parts
        .map(|p| p.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number `{p}` in {spec}"))))
        .collect::<Result<_>>()?;
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    Ok(match name {
        "icosphere" => icosphere(arg(0, 4.0) as u32),
        "grid" => grid(arg(0, 100.0) as usize, arg(1, arg(0, 100.0)) as usize, arg(2, 1.0)),
        "square" => unit_square(),
        "disk" => disk(1.0, arg(0, 30.0) as usize),
        "annulus" => annulus(0.5, 1.0, arg(0, 12.0) as usize),
        "cylinder" => cylinder(0.5, 2.0, arg(0, 40.0) as usize, arg(1, 64.0) as usize),
        "vase" => vase(arg(0, 60.0) as usize, arg(1, 72.0) as usize),
        _ => return Err(Error::InvalidParameter(format!("unknown builtin mesh `{name}`"))),
    })
}
