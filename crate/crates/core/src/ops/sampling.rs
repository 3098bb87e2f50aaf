use crate::error::{Error, Result};
use crate::graph::{GeodesicGraph, SolveOptions, Solver};

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSamples {
    pub samples: Vec<u32>,
    /// Largest remaining distance to the samples and initial seeds.
    pub radius: f64,
    pub field: Vec<f64>,
}

fn argmax(field: &[f64], mask: Option<&[bool]>) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for (v, &x) in field.iter().enumerate() {
        if x.is_finite() && mask.is_none_or(|m| m[v]) && best.is_none_or(|(_, b)| x > b) {
            best = Some((v as u32, x));
        }
    }
    best
}

fn check(mask: Option<&[bool]>, n: usize, count: Option<usize>, min_radius: Option<f64>) -> Result<()> {
    if count.is_none() && min_radius.is_none() {
        return Err(Error::InvalidParameter("poisson sampling needs a count or a minimum radius".into()));
    }
    let available = mask.map_or(n, |m| m.iter().filter(|&&b| b).count());
    if available == 0 {
        return Err(Error::InvalidParameter("region has no vertices".into()));
    }
    if let Some(c) = count {
        if c > available {
            return Err(Error::InvalidParameter(format!("{c} samples requested from {available} vertices")));
        }
    }
    Ok(())
}

/// Farthest-point sampling. The field starts as the distance from
/// `boundary` (or from `fallback`, which then becomes the first sample),
/// and each new sample lowers it incrementally. Stops after `count`
/// samples or when the largest distance drops below `min_radius`. Ties go
/// to the lowest vertex id.
pub fn poisson_sample(
    graph: &GeodesicGraph,
    solver: &mut Solver,
    mask: Option<&[bool]>,
    boundary: &[u32],
    fallback: u32,
    count: Option<usize>,
    min_radius: Option<f64>,
) -> Result<PoissonSamples> {
    check(mask, graph.node_count(), count, min_radius)?;
    let opts = SolveOptions { region_mask: mask, ..Default::default() };
    let mut samples = Vec::new();
    let mut field = if boundary.is_empty() {
        samples.push(fallback);
        solver.solve(graph, &[(fallback, 0.0)], &opts)?
    } else {
        let src: Vec<(u32, f64)> = boundary.iter().map(|&v| (v, 0.0)).collect();
        solver.solve(graph, &src, &opts)?
    };
    while let Some((v, m)) = argmax(&field, mask) {
        if count.is_some_and(|c| samples.len() >= c) || min_radius.is_some_and(|r| m < r) || m <= 0.0 {
            break;
        }
        samples.push(v);
        solver.update(graph, &mut field, &[(v, 0.0)], &opts)?;
    }
    let radius = argmax(&field, mask).map_or(0.0, |(_, m)| m);
    Ok(PoissonSamples { samples, radius, field })
}

/// Reference version of [`poisson_sample`] that re-solves from scratch
/// after every sample.
pub fn poisson_sample_naive(
    graph: &GeodesicGraph,
    mask: Option<&[bool]>,
    boundary: &[u32],
    fallback: u32,
    count: Option<usize>,
    min_radius: Option<f64>,
) -> Result<PoissonSamples> {
    check(mask, graph.node_count(), count, min_radius)?;
    let opts = SolveOptions { region_mask: mask, ..Default::default() };
    let mut solver = Solver::new();
    let mut samples = Vec::new();
    if boundary.is_empty() {
        samples.push(fallback);
    }
    let solve = |samples: &[u32], solver: &mut Solver| {
        let src: Vec<(u32, f64)> = boundary.iter().chain(samples).map(|&v| (v, 0.0)).collect();
        solver.solve(graph, &src, &opts)
    };
    let mut field = solve(&samples, &mut solver)?;
    while let Some((v, m)) = argmax(&field, mask) {
        if count.is_some_and(|c| samples.len() >= c) || min_radius.is_some_and(|r| m < r) || m <= 0.0 {
            break;
        }
        samples.push(v);
        field = solve(&samples, &mut solver)?;
    }
    let radius = argmax(&field, mask).map_or(0.0, |(_, m)| m);
    Ok(PoissonSamples { samples, radius, field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::mesh::{mesh_boundary_loops, primitives};

    #[test]
    fn single_sample_is_disk_center() {
        let m = primitives::disk(1.0, 10);
        let g = build_graph(&m);
        let b = mesh_boundary_loops(&m)[0].vertices.clone();
        let p = poisson_sample(&g, &mut Solver::new(), None, &b, 0, Some(1), None).unwrap();
        assert_eq!(p.samples.len(), 1);
        assert!(m.position(p.samples[0]).coords.norm() < 0.11);
    }

    #[test]
    fn matches_naive_and_is_poisson() {
        let m = primitives::icosphere(3);
        let g = build_graph(&m);
        let fast = poisson_sample(&g, &mut Solver::new(), None, &[], 0, Some(12), None).unwrap();
        let slow = poisson_sample_naive(&g, None, &[], 0, Some(12), None).unwrap();
        assert_eq!(fast.samples, slow.samples);
        assert_eq!(fast.field, slow.field);
        let mut s = Solver::new();
        for &a in &fast.samples {
            let d = s.solve(&g, &[(a, 0.0)], &SolveOptions::default()).unwrap();
            for &b in &fast.samples {
                if a != b {
                    assert!(d[b as usize] >= fast.radius);
                }
            }
        }
    }

    #[test]
    fn min_radius_and_errors() {
        let m = primitives::icosphere(2);
        let g = build_graph(&m);
        let p = poisson_sample(&g, &mut Solver::new(), None, &[], 0, None, Some(0.5)).unwrap();
        assert!(p.radius < 0.5);
        assert!(p.samples.len() > 4);
        assert!(poisson_sample(&g, &mut Solver::new(), None, &[], 0, Some(10_000), None).is_err());
        assert!(poisson_sample(&g, &mut Solver::new(), None, &[], 0, None, None).is_err());
    }
}
