//! Small geometric helpers shared by the mesh, graph and tracing code.

pub type Point = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Twice the signed area of the 2D triangle `(a, b, c)`.
#[inline]
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Lays out a 3D triangle in its own plane: `a` at the origin, `b` on the
/// positive x axis and `c` in the upper half plane.
pub fn planar_frame(a: &Point, b: &Point, c: &Point) -> [[f64; 2]; 3] {
    let ab = b - a;
    let ac = c - a;
    let lab = ab.norm();
    let x = ab.dot(&ac) / lab;
    let y = ab.cross(&ac).norm() / lab;
    [[0.0, 0.0], [lab, 0.0], [x, y]]
}

/// Gradients of the three barycentric coordinate functions of a triangle.
/// Returns `None` for degenerate triangles.
pub fn barycentric_gradients(p: [&Point; 3]) -> Option<[Vec3; 3]> {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let twice_area = n.norm();
    if twice_area <= f64::MIN_POSITIVE {
        return None;
    }
    let n = n / twice_area;
    let mut g = [Vec3::zeros(); 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        *gi = n.cross(&(p[k] - p[j])) / twice_area;
    }
    Some(g)
}

/// Intersection of the open segments `p1-p2` and `q1-q2` as the parameter
/// along the first segment, ignoring touching at endpoints.
pub fn segment_intersection_2d(
    p1: [f64; 2],
    p2: [f64; 2],
    q1: [f64; 2],
    q2: [f64; 2],
) -> Option<(f64, f64)> {
    let r = [p2[0] - p1[0], p2[1] - p1[1]];
    let s = [q2[0] - q1[0], q2[1] - q1[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    let scale = (r[0] * r[0] + r[1] * r[1]) * (s[0] * s[0] + s[1] * s[1]);
    if denom * denom <= 1e-24 * scale {
        return None;
    }
    let qp = [q1[0] - p1[0], q1[1] - p1[1]];
    let t = (qp[0] * s[1] - qp[1] * s[0]) / denom;
    let u = (qp[0] * r[1] - qp[1] * r[0]) / denom;
    const EPS: f64 = 1e-9;
    if t > EPS && t < 1.0 - EPS && u > EPS && u < 1.0 - EPS {
        Some((t, u))
    } else {
        None
    }
}
