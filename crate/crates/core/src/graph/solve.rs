use std::collections::VecDeque;
use std::sync::Mutex;

use crate::error::{Error, Result};

use super::GeodesicGraph;

/// Restrictions and early exits for a distance solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions<'a> {
    /// Only nodes with `true` are visited.
    pub region_mask: Option<&'a [bool]>,
    /// Nodes popped with a label above this bound are not expanded.
    pub max_distance: Option<f64>,
    /// Stop once no queued label can still improve any target.
    pub targets: Option<&'a [u32]>,
    /// Start from these labels instead of +inf; only improvements propagate.
    pub initial_field: Option<&'a [f64]>,
    /// Per-node exclusive upper bounds: labels at or above them are dropped.
    pub node_bounds: Option<&'a [f64]>,
}

/// Label-correcting shortest paths with the small-label-first and
/// large-label-last deque heuristics. Owns its queue buffers so repeated
/// solves do not allocate.
#[derive(Debug, Default)]
pub struct Solver {
    queue: VecDeque<u32>,
    queued: Vec<bool>,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full solve returning a fresh field.
    pub fn solve(&mut self, graph: &GeodesicGraph, sources: &[(u32, f64)], opts: &SolveOptions) -> Result<Vec<f64>> {
        let mut field = match opts.initial_field {
            Some(init) => {
                if init.len() != graph.node_count() {
                    return Err(Error::InvalidParameter("initial field size differs from node count".into()));
                }
                init.to_vec()
            }
            None => vec![f64::INFINITY; graph.node_count()],
        };
        self.run(graph, &mut field, sources, opts)?;
        Ok(field)
    }

    /// Lowers `field` in place by the given sources (incremental mode).
    pub fn update(
        &mut self,
        graph: &GeodesicGraph,
        field: &mut [f64],
        sources: &[(u32, f64)],
        opts: &SolveOptions,
    ) -> Result<()> {
        if field.len() != graph.node_count() {
            return Err(Error::InvalidParameter("field size differs from node count".into()));
        }
        self.run(graph, field, sources, opts)
    }

    fn run(&mut self, graph: &GeodesicGraph, dist: &mut [f64], sources: &[(u32, f64)], opts: &SolveOptions) -> Result<()> {
        let n = graph.node_count();
        if sources.is_empty() {
            return Err(Error::EmptySeeds);
        }
        let mask = opts.region_mask;
        if let Some(m) = mask {
            if m.len() != n {
                return Err(Error::InvalidParameter("region mask size differs from node count".into()));
            }
        }
        let bounds = opts.node_bounds;
        if bounds.is_some_and(|b| b.len() != n) {
            return Err(Error::InvalidParameter("node bounds size differs from node count".into()));
        }
        self.queued.clear();
        self.queued.resize(n, false);
        self.queue.clear();
        let mut sum = 0.0f64;
        let mut count = 0usize;

        for &(s, d0) in sources {
            if s as usize >= n {
                return Err(Error::InvalidParameter(format!("source {s} out of range")));
            }
            if mask.is_some_and(|m| !m[s as usize]) {
                return Err(Error::SeedOutsideRegion(s));
            }
            if !(d0 >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative initial distance at {s}")));
            }
            if d0 < dist[s as usize] && bounds.is_none_or(|b| d0 < b[s as usize]) {
                if self.queued[s as usize] {
                    sum -= dist[s as usize] - d0;
                } else {
                    self.queued[s as usize] = true;
                    self.queue.push_back(s);
                    sum += d0;
                    count += 1;
                }
                dist[s as usize] = d0;
            }
        }

        let mut bound = opts.max_distance.unwrap_or(f64::INFINITY);
        let targets = opts.targets.filter(|t| !t.is_empty());
        let target_bound = |dist: &[f64]| -> f64 {
            targets.map_or(f64::INFINITY, |t| t.iter().map(|&v| dist[v as usize]).fold(0.0, f64::max))
        };
        if targets.is_some() {
            bound = bound.min(target_bound(dist));
        }

        while !self.queue.is_empty() {
            // large label last: send an above-average front to the back
            let mut rotations = 0;
            while rotations < count {
                let front = *self.queue.front().unwrap();
                if dist[front as usize] * count as f64 > sum {
                    self.queue.rotate_left(1);
                    rotations += 1;
                } else {
                    break;
                }
            }
            let u = self.queue.pop_front().unwrap();
            self.queued[u as usize] = false;
            let du = dist[u as usize];
            count -= 1;
            sum = if count == 0 { 0.0 } else { sum - du };
            if du > bound {
                continue;
            }
            for arc in graph.arcs(u) {
                let v = arc.node as usize;
                if mask.is_some_and(|m| !m[v]) {
                    continue;
                }
                let nd = du + arc.len as f64;
                if bounds.is_some_and(|b| nd >= b[v]) {
                    continue;
                }
                if nd < dist[v] {
                    if self.queued[v] {
                        sum -= dist[v] - nd;
                        dist[v] = nd;
                    } else {
                        dist[v] = nd;
                        self.queued[v] = true;
                        sum += nd;
                        count += 1;
                        // small label first
                        match self.queue.front() {
                            Some(&f) if nd < dist[f as usize] => self.queue.push_front(v as u32),
                            _ => self.queue.push_back(v as u32),
                        }
                    }
                    if targets.is_some_and(|t| t.contains(&(v as u32))) {
                        bound = bound.min(target_bound(dist));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Convenience wrapper around a throwaway [`Solver`].
pub fn solve_distances(graph: &GeodesicGraph, sources: &[(u32, f64)], opts: &SolveOptions) -> Result<Vec<f64>> {
    Solver::new().solve(graph, sources, opts)
}

/// Reusable solver buffers for concurrent solves over a shared graph.
#[derive(Debug, Default)]
pub struct SolverPool {
    free: Mutex<Vec<Solver>>,
}

impl SolverPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<R>(&self, f: impl FnOnce(&mut Solver) -> R) -> R {
        let mut solver = self.free.lock().map(|mut v| v.pop()).ok().flatten().unwrap_or_default();
        let out = f(&mut solver);
        if let Ok(mut v) = self.free.lock() {
            v.push(solver);
        }
        out
    }

    pub fn solve(&self, graph: &GeodesicGraph, sources: &[(u32, f64)], opts: &SolveOptions) -> Result<Vec<f64>> {
        self.with(|s| s.solve(graph, sources, opts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::mesh::primitives;
    use proptest::prelude::*;
    use std::collections::BinaryHeap;

    fn dijkstra(g: &GeodesicGraph, sources: &[(u32, f64)], mask: Option<&[bool]>) -> Vec<f64> {
        #[derive(PartialEq)]
        struct E(f64, u32);
        impl Eq for E {}
        impl PartialOrd for E {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for E {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                o.0.total_cmp(&self.0)
            }
        }
        let mut d = vec![f64::INFINITY; g.node_count()];
        let mut heap = BinaryHeap::new();
        for &(s, d0) in sources {
            d[s as usize] = d0.min(d[s as usize]);
            heap.push(E(d0, s));
        }
        while let Some(E(du, u)) = heap.pop() {
            if du > d[u as usize] {
                continue;
            }
            for a in g.arcs(u) {
                if mask.is_some_and(|m| !m[a.node as usize]) {
                    continue;
                }
                let nd = du + a.len as f64;
                if nd < d[a.node as usize] {
                    d[a.node as usize] = nd;
                    heap.push(E(nd, a.node));
                }
            }
        }
        d
    }

    #[test]
    fn path_graph_distances() {
        // a strip of two triangles: vertices 0..3 on a line plus apexes
        let m = primitives::grid(2, 1, 1.0);
        let g = build_graph(&m);
        let d = solve_distances(&g, &[(0, 0.0)], &SolveOptions::default()).unwrap();
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 1.0).abs() < 1e-6);
        assert!((d[2] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn matches_dijkstra_on_sphere() {
        let g = build_graph(&primitives::icosphere(3));
        let d = solve_distances(&g, &[(5, 0.0), (77, 0.1)], &SolveOptions::default()).unwrap();
        assert_eq!(d, dijkstra(&g, &[(5, 0.0), (77, 0.1)], None));
    }

    #[test]
    fn mask_equals_extracted_subgraph() {
        let m = primitives::icosphere(3);
        let g = build_graph(&m);
        let mask: Vec<bool> = m.positions().iter().map(|p| p.z > -0.2).collect();
        let src = (0..m.vertex_count() as u32).find(|&v| mask[v as usize]).unwrap();
        let opts = SolveOptions { region_mask: Some(&mask), ..Default::default() };
        let d = solve_distances(&g, &[(src, 0.0)], &opts).unwrap();
        assert_eq!(d, dijkstra(&g, &[(src, 0.0)], Some(&mask)));
        for (v, &inside) in mask.iter().enumerate() {
            if !inside {
                assert!(d[v].is_infinite());
            }
        }
        let outside = mask.iter().position(|&b| !b).unwrap() as u32;
        assert!(matches!(solve_distances(&g, &[(outside, 0.0)], &opts), Err(Error::SeedOutsideRegion(_))));
    }

    #[test]
    fn targets_are_exact() {
        let g = build_graph(&primitives::icosphere(3));
        let full = solve_distances(&g, &[(0, 0.0)], &SolveOptions::default()).unwrap();
        let targets = [10u32, 200];
        let d = solve_distances(&g, &[(0, 0.0)], &SolveOptions { targets: Some(&targets), ..Default::default() }).unwrap();
        for t in targets {
            assert_eq!(d[t as usize], full[t as usize]);
        }
    }

    #[test]
    fn max_distance_bounds_the_search() {
        let g = build_graph(&primitives::icosphere(3));
        let full = solve_distances(&g, &[(0, 0.0)], &SolveOptions::default()).unwrap();
        let d = solve_distances(&g, &[(0, 0.0)], &SolveOptions { max_distance: Some(0.5), ..Default::default() }).unwrap();
        for v in 0..d.len() {
            if full[v] <= 0.5 {
                assert_eq!(d[v], full[v]);
            }
        }
        assert!(d.iter().any(|x| x.is_infinite()));
    }

    #[test]
    fn pool_reuses_buffers() {
        let g = build_graph(&primitives::icosphere(2));
        let pool = SolverPool::new();
        let a = pool.solve(&g, &[(3, 0.0)], &SolveOptions::default()).unwrap();
        let b = pool.solve(&g, &[(3, 0.0)], &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn incremental_equals_full(a in 0u32..642, b in 0u32..642, c in 0u32..642) {
            let g = build_graph(&primitives::icosphere(3));
            let opts = SolveOptions::default();
            let mut field = solve_distances(&g, &[(a, 0.0)], &opts).unwrap();
            let mut solver = Solver::new();
            solver.update(&g, &mut field, &[(b, 0.0), (c, 0.0)], &opts).unwrap();
            let full = solve_distances(&g, &[(a, 0.0), (b, 0.0), (c, 0.0)], &opts).unwrap();
            prop_assert_eq!(field, full);
        }

        #[test]
        fn triangle_inequality_and_monotonicity(a in 0u32..642, b in 0u32..642) {
            let g = build_graph(&primitives::icosphere(3));
            let opts = SolveOptions::default();
            let d1 = solve_distances(&g, &[(a, 0.0)], &opts).unwrap();
            let d2 = solve_distances(&g, &[(a, 0.0), (b, 0.0)], &opts).unwrap();
            for u in 0..g.node_count() as u32 {
                prop_assert!(d2[u as usize] <= d1[u as usize]);
                for arc in g.arcs(u) {
                    prop_assert!((d1[u as usize] - d1[arc.node as usize]).abs() <= arc.len as f64 + 1e-9);
                }
            }
        }
    }
}
