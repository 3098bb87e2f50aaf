//! Dense Steiner-point graph used as an accuracy oracle. Every edge carries
//! `m` evenly spaced Steiner points and every pair of points on different
//! sides of a face is joined by a straight arc.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::geom::Point;
use crate::mesh::TriMesh;

pub struct SteinerGraph {
    vertex_count: usize,
    adj: Vec<Vec<(u32, f64)>>,
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl SteinerGraph {
    pub fn new(mesh: &TriMesh, per_edge: usize) -> Self {
        let n = mesh.vertex_count();
        let mut pos: Vec<Point> = mesh.positions().to_vec();
        let mut base: FxHashMap<(u32, u32), u32> = FxHashMap::default();
        for t in mesh.triangles() {
            for k in 0..3 {
                let (a, b) = (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]));
                base.entry((a, b)).or_insert_with(|| {
                    let first = pos.len() as u32;
                    let (pa, pb) = (*mesh.position(a), *mesh.position(b));
                    for i in 1..=per_edge {
                        let s = i as f64 / (per_edge + 1) as f64;
                        pos.push(pa + (pb - pa) * s);
                    }
                    first
                });
            }
        }
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); pos.len()];
        let link = |u: u32, v: u32, adj: &mut Vec<Vec<(u32, f64)>>| {
            let d = (pos[u as usize] - pos[v as usize]).norm();
            adj[u as usize].push((v, d));
            adj[v as usize].push((u, d));
        };
        for t in mesh.triangles() {
            // side k runs from t[k] to t[k + 1]
            let sides: Vec<Vec<u32>> = (0..3)
                .map(|k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    let first = base[&(a.min(b), a.max(b))];
                    let mut side = vec![a];
                    let inner: Vec<u32> = (0..per_edge as u32).map(|i| first + i).collect();
                    if a < b {
                        side.extend(inner);
                    } else {
                        side.extend(inner.into_iter().rev());
                    }
                    side.push(b);
                    side
                })
                .collect();
            for k in 0..3 {
                for w in sides[k].windows(2) {
                    link(w[0], w[1], &mut adj);
                }
                // points strictly inside side k against every node on the other two sides
                let other: Vec<u32> = sides[(k + 1) % 3].iter().chain(&sides[(k + 2) % 3]).copied().collect();
                for &u in &sides[k][1..sides[k].len() - 1] {
                    for &v in &other {
                        link(u, v, &mut adj);
                    }
                }
            }
        }
        SteinerGraph { vertex_count: n, adj }
    }

    /// Shortest-path distances from mesh vertex `src` to every mesh vertex.
    pub fn distances_from(&self, src: u32) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; self.adj.len()];
        let mut heap = BinaryHeap::new();
        d[src as usize] = 0.0;
        heap.push(Entry(0.0, src));
        while let Some(Entry(du, u)) = heap.pop() {
            if du > d[u as usize] {
                continue;
            }
            for &(v, l) in &self.adj[u as usize] {
                let nd = du + l;
                if nd < d[v as usize] {
                    d[v as usize] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
        d.truncate(self.vertex_count);
        d
    }
}
