use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geopattern::Engine;
use geopattern_cli::bench::{self, BenchOptions, Mode, Oracle};
use geopattern_cli::decorate::{decorate, DecorateOptions};
use geopattern_cli::{load_mesh_spec, sample, server, CliError};

#[derive(Parser)]
#[command(name = "geopattern", version, about = "Surface pattern tools: script replay, benchmarks and the editing service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a script and write a labelled PLY plus a JSON sidecar.
    Decorate {
        /// Mesh file (OBJ or PLY) or `builtin:<name>`; defaults to the script header.
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the script header seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time graph build, single-source solves and slice updates; CSV on stdout or --out.
    Bench {
        #[arg(long, required = true)]
        mesh: Vec<String>,
        #[arg(long, default_value_t = 100)]
        sources: usize,
        #[arg(long, default_value_t = 10)]
        slices: usize,
        #[arg(long, value_enum, default_value_t = Mode::All)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Oracle::Analytic)]
        oracle: Oracle,
        #[arg(long, default_value_t = 5)]
        oracle_sources: usize,
        #[arg(long, default_value_t = 4)]
        steiner_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump farthest-point samples as CSV.
    Sample {
        #[arg(long)]
        mesh: String,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve an editing session over HTTP.
    Serve {
        #[arg(long)]
        mesh: String,
        /// Script replayed before serving.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Decorate { mesh, script, out, seed } => {
            let s = decorate(&DecorateOptions { mesh, script, out, seed })?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{} faces, {} leaves, depth {} -> {} + {}",
                s.faces,
                s.leaves,
                s.depth,
                s.ply.display(),
                s.sidecar.display()
            );
        }
        Command::Bench { mesh, sources, slices, mode, oracle, oracle_sources, steiner_points, seed, out } => {
            let opts = BenchOptions { sources, slices, mode, oracle, oracle_sources, steiner_points, seed };
            let mut rows = Vec::new();
            for spec in &mesh {
                let m = load_mesh_spec(spec)?;
                rows.push(bench::bench(spec, &m, &opts)?);
            }
            let mut w = output(&out)?;
            bench::write_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::Sample { mesh, count, radius, seed, out } => {
            let m = load_mesh_spec(&mesh)?;
            let s = sample::sample(&m, count, radius, seed)?;
            let mut w = output(&out)?;
            sample::write_samples(&mut w, &m, &s)?;
            w.flush()?;
        }
        Command::Serve { mesh, script, port } => {
            let engine = match script {
                Some(path) => {
                    let opts = DecorateOptions { mesh: Some(mesh.clone()), script: path, out: PathBuf::new(), seed: None };
                    geopattern_cli::decorate::replay(&opts)?.0
                }
                None => Engine::new(load_mesh_spec(&mesh)?),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(server::Session::new(engine, Some(mesh)), port))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::CommandFailed { .. } => 3,
                CliError::Usage(_) => 2,
                _ => 1,
            })
        }
    }
}
