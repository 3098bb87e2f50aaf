//! Graph build, solve and update timings with accuracy against an oracle.
//!
//! Output columns are fixed: `mesh,faces,build_s,solve_s_mean,rmse_rel,update_s_mean`.
//! Cells of stages that were not run are left empty.

use std::io::Write;
use std::time::Instant;

use geopattern::geom::Vec3;
use geopattern::graph::steiner::SteinerGraph;
use geopattern::graph::{build_graph, update_graph_after_split, GeodesicGraph, SolveOptions, Solver};
use geopattern::mesh::{CutPoint, CutRequest, TriMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const COLUMNS: &str = "mesh,faces,build_s,solve_s_mean,rmse_rel,update_s_mean";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Oracle {
    /// Great-circle or Euclidean distances; falls back to Steiner on other shapes.
    Analytic,
    /// Dense Steiner-point graph.
    Steiner,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    All,
    Build,
    Solve,
    Update,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub sources: usize,
    pub slices: usize,
    pub mode: Mode,
    pub oracle: Oracle,
    /// Sources checked against the oracle (Steiner solves are slow).
    pub oracle_sources: usize,
    pub steiner_points: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            sources: 100,
            slices: 10,
            mode: Mode::All,
            oracle: Oracle::Analytic,
            oracle_sources: 5,
            steiner_points: 4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchRow {
    pub mesh: String,
    pub faces: usize,
    pub build_s: Option<f64>,
    pub solve_s_mean: Option<f64>,
    pub rmse_rel: Option<f64>,
    pub update_s_mean: Option<f64>,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        let cell = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.mesh.replace(',', "_"),
            self.faces,
            cell(self.build_s),
            cell(self.solve_s_mean),
            cell(self.rmse_rel),
            cell(self.update_s_mean)
        )
    }
}

pub fn write_csv(w: &mut impl Write, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(w, "{COLUMNS}")?;
    for r in rows {
        writeln!(w, "{}", r.csv())?;
    }
    Ok(())
}

enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Plane,
}

fn centroid(mesh: &TriMesh) -> Vec3 {
    mesh.positions().iter().map(|p| p.coords).sum::<Vec3>() / mesh.vertex_count() as f64
}

fn detect_shape(mesh: &TriMesh) -> Option<Shape> {
    let c = centroid(mesh);
    let radii: Vec<f64> = mesh.positions().iter().map(|p| (p.coords - c).norm()).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let spread = radii.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
    if mean > 0.0 && spread <= 1e-6 * mean && geopattern::mesh::mesh_boundary_loops(mesh).is_empty() {
        return Some(Shape::Sphere { center: c, radius: mean });
    }
    let n = mesh.face_normal(0);
    let p0 = mesh.position(0).coords;
    let scale = radii.iter().copied().fold(0.0, f64::max).max(1e-300);
    if mesh.positions().iter().all(|p| (p.coords - p0).dot(&n).abs() <= 1e-9 * scale) {
        return Some(Shape::Plane);
    }
    None
}

fn analytic(mesh: &TriMesh, shape: &Shape, src: u32) -> Vec<f64> {
    let s = mesh.position(src).coords;
    match shape {
        Shape::Sphere { center, radius } => {
            let a = (s - center).normalize();
            mesh.positions()
                .iter()
                .map(|p| radius * (p.coords - center).normalize().dot(&a).clamp(-1.0, 1.0).acos())
                .collect()
        }
        Shape::Plane => mesh.positions().iter().map(|p| (p.coords - s).norm()).collect(),
    }
}

/// Per-vertex RMS relative error, skipping the source and coincident vertices.
pub fn rms_relative(approx: &[f64], exact: &[f64]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (&a, &e) in approx.iter().zip(exact) {
        if e > 0.0 && e.is_finite() {
            sum += ((a - e) / e).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Face crossings of a plane, one two-point polyline per crossed face.
pub fn plane_slice(mesh: &TriMesh, normal: Vec3, offset: f64) -> Vec<Vec<CutPoint>> {
    let side = |v: u32| mesh.position(v).coords.dot(&normal) - offset;
    let mut lines = Vec::new();
    for t in mesh.triangles() {
        let mut hits = Vec::new();
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let (za, zb) = (side(a), side(b));
            if (za < 0.0) != (zb < 0.0) {
                hits.push(CutPoint::edge(a, b, za / (za - zb)));
            }
        }
        if hits.len() == 2 {
            lines.push(hits);
        }
    }
    lines
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn accuracy(mesh: &TriMesh, graph: &GeodesicGraph, opts: &BenchOptions, sources: &[u32]) -> Result<Option<f64>, CliError> {
    let shape = match opts.oracle {
        Oracle::None => return Ok(None),
        Oracle::Analytic => detect_shape(mesh),
        Oracle::Steiner => None,
    };
    let steiner = shape.is_none().then(|| SteinerGraph::new(mesh, opts.steiner_points));
    let mut solver = Solver::new();
    let mut sq = 0.0;
    let picked = &sources[..opts.oracle_sources.min(sources.len())];
    for &src in picked {
        let d = solver.solve(graph, &[(src, 0.0)], &SolveOptions::default())?;
        let exact = match (&shape, &steiner) {
            (Some(s), _) => analytic(mesh, s, src),
            (None, Some(g)) => g.distances_from(src),
            _ => unreachable!(),
        };
        sq += rms_relative(&d, &exact).powi(2);
    }
    Ok((!picked.is_empty()).then(|| (sq / picked.len() as f64).sqrt()))
}

pub fn bench(name: &str, mesh: &TriMesh, opts: &BenchOptions) -> Result<BenchRow, CliError> {
    let mut row = BenchRow { mesh: name.to_string(), faces: mesh.face_count(), ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let run = |m: Mode| opts.mode == Mode::All || opts.mode == m;

    let t = Instant::now();
    let graph = build_graph(mesh);
    if run(Mode::Build) {
        row.build_s = Some(t.elapsed().as_secs_f64());
    }

    let n = mesh.vertex_count() as u32;
    let sources: Vec<u32> = (0..opts.sources).map(|_| rng.random_range(0..n)).collect();
    if run(Mode::Solve) && !sources.is_empty() {
        let mut solver = Solver::new();
        let t = Instant::now();
        for &s in &sources {
            solver.solve(&graph, &[(s, 0.0)], &SolveOptions::default())?;
        }
        row.solve_s_mean = Some(t.elapsed().as_secs_f64() / sources.len() as f64);
        row.rmse_rel = accuracy(mesh, &graph, opts, &sources)?;
    }

    if run(Mode::Update) && opts.slices > 0 {
        // planes through the centroid cut the mesh roughly in half
        let c = centroid(mesh);
        let mut total = 0.0;
        for _ in 0..opts.slices {
            let normal = random_direction(&mut rng);
            let lines = plane_slice(mesh, normal, c.dot(&normal));
            let mut m = mesh.clone();
            let mut g = graph.clone();
            let out = m.cut(&CutRequest { polylines: lines, points: vec![] })?;
            let pos = m.positions().to_vec();
            let t = Instant::now();
            update_graph_after_split(&mut g, &m, &pos, &out.events)?;
            total += t.elapsed().as_secs_f64();
        }
        row.update_s_mean = Some(total / opts.slices as f64);
    }
    Ok(row)
}
