//! Poisson point dump.

use std::io::Write;

use geopattern::graph::{build_graph, Solver};
use geopattern::mesh::{mesh_boundary_loops, TriMesh};
use geopattern::ops::{poisson_sample, PoissonSamples};

use crate::CliError;

/// Farthest-point samples over the whole mesh. Open meshes start from their
/// boundary; closed ones from the vertex `seed % vertex_count`.
pub fn sample(mesh: &TriMesh, count: Option<usize>, min_radius: Option<f64>, seed: u64) -> Result<PoissonSamples, CliError> {
    if count.is_none() && min_radius.is_none() {
        return Err(CliError::Usage("sample needs --count or --radius".into()));
    }
    let graph = build_graph(mesh);
    let boundary: Vec<u32> = mesh_boundary_loops(mesh).into_iter().flat_map(|l| l.vertices).collect();
    let fallback = (seed % mesh.vertex_count() as u64) as u32;
    Ok(poisson_sample(&graph, &mut Solver::new(), None, &boundary, fallback, count, min_radius)?)
}

/// CSV with one row per sample: `index,vertex,x,y,z`.
pub fn write_samples(w: &mut impl Write, mesh: &TriMesh, s: &PoissonSamples) -> std::io::Result<()> {
    writeln!(w, "# radius {}", s.radius)?;
    writeln!(w, "index,vertex,x,y,z")?;
    for (i, &v) in s.samples.iter().enumerate() {
        let p = mesh.position(v);
        writeln!(w, "{i},{v},{},{},{}", p.x, p.y, p.z)?;
    }
    Ok(())
}
