//! Batch tools and the editing session service built on `geopattern`.

pub mod bench;
pub mod decorate;
pub mod error;
pub mod pick;
pub mod sample;
pub mod server;

pub use error::CliError;

use std::path::Path;

use geopattern::mesh::{io::load_mesh, primitives, TriMesh};

/// Loads a mesh file, or a `builtin:` primitive spec.
pub fn load_mesh_spec(spec: &str) -> Result<TriMesh, CliError> {
    if spec.starts_with("builtin:") {
        Ok(primitives::from_spec(spec)?)
    } else {
        load_mesh(Path::new(spec)).map_err(|e| CliError::Mesh { path: spec.to_string(), source: e })
    }
}

/// Sidecar record of a session: tree, materials and counts, pretty JSON.
pub fn sidecar_json(engine: &geopattern::Engine) -> String {
    let mut s = serde_json::to_string_pretty(&engine.tree_record()).expect("tree records serialize");
    s.push('\n');
    s
}
