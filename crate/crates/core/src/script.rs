//! Versioned JSON pattern scripts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::command::OperatorCommand;
use crate::engine::{ApplyReport, Engine, Material};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

pub const SCRIPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternScript {
    pub version: u32,
    /// Mesh path, relative to the script file, or a primitive spec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub materials: BTreeMap<u32, Material>,
    #[serde(default)]
    pub commands: Vec<OperatorCommand>,
}

impl PatternScript {
    pub fn new(commands: Vec<OperatorCommand>) -> Self {
        PatternScript { version: SCRIPT_VERSION, mesh: None, seed: 0, materials: BTreeMap::new(), commands }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: PatternScript = serde_json::from_str(text)?;
        if s.version != SCRIPT_VERSION {
            return Err(Error::Script(format!("unsupported script version {} (expected {SCRIPT_VERSION})", s.version)));
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scripts serialize")
    }

    /// Script capturing the command log of a session.
    pub fn from_engine(engine: &Engine, mesh: Option<String>) -> Self {
        PatternScript {
            version: SCRIPT_VERSION,
            mesh,
            seed: 0,
            materials: engine.materials().clone(),
            commands: engine.log().to_vec(),
        }
    }

    /// Mesh path resolved against the directory of the script.
    pub fn mesh_path(&self, script_path: &Path) -> Option<PathBuf> {
        let m = self.mesh.as_ref()?;
        let p = Path::new(m);
        Some(if p.is_absolute() { p.to_path_buf() } else { script_path.parent().unwrap_or(Path::new(".")).join(p) })
    }

    /// Commands with the header seed folded into every procedural seed.
    /// A zero header seed leaves the commands unchanged.
    pub fn effective_commands(&self) -> Vec<OperatorCommand> {
        let mut cmds = self.commands.clone();
        for c in &mut cmds {
            if let OperatorCommand::Procedural { seed, .. } = c {
                *seed ^= self.seed;
            }
        }
        cmds
    }

    /// Replays the script. A failing command is reported by index.
    pub fn replay(&self, mesh: TriMesh) -> Result<(Engine, Vec<ApplyReport>)> {
        Engine::replay(mesh, self.materials.clone(), &self.effective_commands())
            .map_err(|(i, e)| Error::Script(format!("command {i} ({}) failed: {e}", self.commands[i].kind())))
    }
}
