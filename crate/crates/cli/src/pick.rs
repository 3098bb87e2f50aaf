//! Seed picking from a ray or a vertex id.

use geopattern::geom::{Point, Vec3};
use geopattern::Engine;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PickRequest {
    Vertex { vertex: u32 },
    Ray { ray: Ray },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pick {
    pub vertex: u32,
    /// Face hit by the ray, or a face incident to the picked vertex.
    pub face: u32,
    pub position: [f64; 3],
    /// Leaf region containing `face`.
    pub region: u32,
}

/// Ray parameter of the hit with triangle `abc`, if any.
fn intersect(origin: &Point, dir: &Vec3, a: &Point, b: &Point, c: &Point) -> Option<f64> {
    let (e1, e2) = (b - a, c - a);
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

/// Nearest face hit by the ray, with the hit point.
pub fn cast(engine: &Engine, ray: &Ray) -> Option<(u32, Point)> {
    let o = Point::from(ray.origin);
    let d = Vec3::from(ray.direction);
    if d.norm() == 0.0 || !d.iter().all(|x| x.is_finite()) {
        return None;
    }
    let mesh = engine.mesh();
    let mut best: Option<(u32, f64)> = None;
    for f in 0..mesh.face_count() as u32 {
        let [a, b, c] = mesh.face_points(f);
        if let Some(t) = intersect(&o, &d, a, b, c) {
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((f, t));
            }
        }
    }
    best.map(|(f, t)| (f, o + d * t))
}

/// Resolves a pick. `Ok(None)` is a miss.
pub fn pick(engine: &Engine, req: &PickRequest) -> geopattern::Result<Option<Pick>> {
    let mesh = engine.mesh();
    let (vertex, face) = match req {
        PickRequest::Vertex { vertex } => {
            if *vertex as usize >= mesh.vertex_count() {
                return Err(geopattern::Error::InvalidParameter(format!(
                    "vertex {vertex} out of range (mesh has {})",
                    mesh.vertex_count()
                )));
            }
            (*vertex, mesh.vertex_face(*vertex))
        }
        PickRequest::Ray { ray } => {
            let Some((face, hit)) = cast(engine, ray) else {
                return Ok(None);
            };
            let v = mesh
                .triangle(face)
                .into_iter()
                .min_by(|&a, &b| (mesh.position(a) - hit).norm().total_cmp(&(mesh.position(b) - hit).norm()).then(a.cmp(&b)))
                .expect("triangles have three corners");
            (v, face)
        }
    };
    let p = mesh.position(vertex);
    Ok(Some(Pick { vertex, face, position: [p.x, p.y, p.z], region: engine.tree().label(face) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use geopattern::mesh::primitives;

    #[test]
    fn ray_down_onto_a_disk_snaps_to_the_nearest_vertex() {
        let engine = Engine::new(primitives::disk(1.0, 8));
        let req = PickRequest::Ray { ray: Ray { origin: [0.01, -0.02, 5.0], direction: [0.0, 0.0, -1.0] } };
        let p = pick(&engine, &req).unwrap().unwrap();
        let nearest = (0..engine.mesh().vertex_count() as u32)
            .min_by(|&a, &b| {
                let d = |v: u32| (engine.mesh().position(v) - Point::new(0.01, -0.02, 0.0)).norm();
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        assert_eq!(p.vertex, nearest);
        assert!(engine.mesh().triangle(p.face).contains(&p.vertex));
    }

    #[test]
    fn rays_that_miss_return_none() {
        let engine = Engine::new(primitives::disk(1.0, 8));
        let up = PickRequest::Ray { ray: Ray { origin: [0.0, 0.0, 5.0], direction: [0.0, 0.0, 1.0] } };
        assert_eq!(pick(&engine, &up).unwrap(), None);
        let aside = PickRequest::Ray { ray: Ray { origin: [3.0, 0.0, 5.0], direction: [0.0, 0.0, -1.0] } };
        assert_eq!(pick(&engine, &aside).unwrap(), None);
    }

    #[test]
    fn closest_of_two_layers_wins() {
        let engine = Engine::new(primitives::icosphere(2));
        let req = PickRequest::Ray { ray: Ray { origin: [0.0, 0.0, 3.0], direction: [0.0, 0.0, -1.0] } };
        let p = pick(&engine, &req).unwrap().unwrap();
        assert!(p.position[2] > 0.9);
    }

    #[test]
    fn vertex_ids_are_validated() {
        let engine = Engine::new(primitives::unit_square());
        assert!(pick(&engine, &PickRequest::Vertex { vertex: 2 }).unwrap().is_some());
        assert!(pick(&engine, &PickRequest::Vertex { vertex: 99 }).is_err());
    }
}
