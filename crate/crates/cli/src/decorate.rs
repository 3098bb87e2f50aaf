//! Script replay into a labelled PLY plus a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use geopattern::mesh::io::write_ply;
use geopattern::script::PatternScript;
use geopattern::Engine;

use crate::{load_mesh_spec, sidecar_json, CliError};

#[derive(Clone, Debug)]
pub struct DecorateOptions {
    /// Overrides the mesh named in the script header.
    pub mesh: Option<String>,
    pub script: PathBuf,
    pub out: PathBuf,
    /// Overrides the script header seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecorateSummary {
    pub faces: usize,
    pub leaves: usize,
    pub depth: usize,
    pub warnings: Vec<String>,
    pub ply: PathBuf,
    pub sidecar: PathBuf,
}

/// Sidecar path next to the PLY output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Mesh reference of a script, resolved against the script location.
pub fn script_mesh(script: &PatternScript, script_path: &Path) -> Option<String> {
    let m = script.mesh.as_ref()?;
    if m.starts_with("builtin:") {
        return Some(m.clone());
    }
    script.mesh_path(script_path).map(|p| p.to_string_lossy().into_owned())
}

/// Replays a script and returns the engine, naming the failing command on error.
pub fn replay(opts: &DecorateOptions) -> Result<(Engine, Vec<String>), CliError> {
    let mut script = PatternScript::load(&opts.script)?;
    if let Some(seed) = opts.seed {
        script.seed = seed;
    }
    let mesh_ref = opts
        .mesh
        .clone()
        .or_else(|| script_mesh(&script, &opts.script))
        .ok_or_else(|| CliError::Usage("no mesh given and the script names none".into()))?;
    let mesh = load_mesh_spec(&mesh_ref)?;
    let cmds = script.effective_commands();
    let (engine, reports) = Engine::replay(mesh, script.materials.clone(), &cmds)
        .map_err(|(index, source)| CliError::CommandFailed { index, kind: cmds[index].kind(), source })?;
    let warnings = reports
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.warnings.iter().map(move |w| format!("command {i}: {w}")))
        .collect();
    Ok((engine, warnings))
}

pub fn decorate(opts: &DecorateOptions) -> Result<DecorateSummary, CliError> {
    let (engine, warnings) = replay(opts)?;
    if let Some(dir) = opts.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let sidecar = sidecar_path(&opts.out);
    write_ply(&opts.out, engine.mesh(), Some(engine.labels()), None)?;
    fs::write(&sidecar, sidecar_json(&engine))?;
    Ok(DecorateSummary {
        faces: engine.mesh().face_count(),
        leaves: engine.tree().leaf_count(),
        depth: engine.tree().max_depth(),
        warnings,
        ply: opts.out.clone(),
        sidecar,
    })
}
