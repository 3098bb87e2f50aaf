//! Serializable operator commands: the unit of scripts, undo and the
//! session protocol.

use serde::{Deserialize, Serialize};

use crate::field::NoiseParams;
use crate::mesh::CutPoint;
use crate::tree::{RegionId, RegionTag};

/// Symbolic seed selection, resolved against the region at apply time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    /// Explicit vertex ids.
    Vertices { vertices: Vec<u32> },
    /// Every boundary loop of the region.
    Boundary,
    /// One full boundary loop, by index in loop order.
    Loop { index: usize },
    /// Part of a loop between two arclength fractions in `[0, 1]`,
    /// wrapping past the loop start when `to < from`.
    Arc { index: usize, from: f64, to: f64 },
    /// `count` vertices equally spaced by arclength along a loop.
    Uniform { index: usize, count: usize },
    /// Farthest-point samples of the region.
    Poisson {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_radius: Option<f64>,
    },
    Union { parts: Vec<SeedSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Dist { seeds: SeedSpec },
    Blend { from: SeedSpec, to: SeedSpec },
}

impl FieldSpec {
    /// The seed set a stream starts from.
    pub fn source(&self) -> &SeedSpec {
        match self {
            FieldSpec::Dist { seeds } => seeds,
            FieldSpec::Blend { from, .. } => from,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Isovalues {
    /// Absolute field values.
    Values { values: Vec<f64> },
    /// Fractions of the field maximum over the region.
    Fractions { values: Vec<f64> },
    /// `count` values `min + spacing * i`, `i = 1..=count`; the spacing
    /// defaults to `range / (count + 1)`.
    Spaced {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spacing: Option<f64>,
    },
}

impl Isovalues {
    /// Concrete sorted isovalues for a field spanning `[min, max]`.
    pub fn resolve(&self, min: f64, max: f64) -> Vec<f64> {
        let mut v = match self {
            Isovalues::Values { values } => values.clone(),
            Isovalues::Fractions { values } => values.iter().map(|x| x * max).collect(),
            Isovalues::Spaced { count, spacing } => {
                let s = spacing.unwrap_or((max - min) / (*count as f64 + 1.0));
                (1..=*count).map(|i| min + s * i as f64).collect()
            }
        };
        v.retain(|x| x.is_finite());
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Signed offset along the normal, shaped by Schlick's gain and bias.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementProfile {
    pub amplitude: f64,
    #[serde(default = "half")]
    pub gain: f64,
    #[serde(default = "half")]
    pub bias: f64,
}

fn half() -> f64 {
    0.5
}

impl DisplacementProfile {
    pub fn validate(&self) -> Result<(), String> {
        if !self.amplitude.is_finite() {
            return Err("amplitude must be finite".into());
        }
        for (name, x) in [("gain", self.gain), ("bias", self.bias)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(format!("{name} must lie in (0, 1), got {x}"));
            }
        }
        Ok(())
    }

    /// Profile value at normalized distance `t` in `[0, 1]`.
    pub fn shape(&self, t: f64) -> f64 {
        self.amplitude * bias(self.bias, gain(self.gain, t.clamp(0.0, 1.0)))
    }
}

pub fn bias(b: f64, t: f64) -> f64 {
    t / ((1.0 / b - 2.0) * (1.0 - t) + 1.0)
}

pub fn gain(g: f64, t: f64) -> f64 {
    if t < 0.5 {
        bias(g, 2.0 * t) / 2.0
    } else {
        1.0 - bias(g, 2.0 - 2.0 * t) / 2.0
    }
}

/// Displacement applied after a procedural expansion to every new leaf
/// with one of the given tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedDisplacement {
    pub tags: Vec<RegionTag>,
    pub profile: DisplacementProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorCommand {
    Contour {
        region: RegionId,
        field: FieldSpec,
        isovalues: Isovalues,
    },
    Stream {
        region: RegionId,
        field: FieldSpec,
        count: usize,
    },
    Voronoi {
        region: RegionId,
        seeds: SeedSpec,
    },
    Polyline {
        region: RegionId,
        points: Vec<CutPoint>,
        #[serde(default)]
        closed: bool,
    },
    Displace {
        region: RegionId,
        profile: DisplacementProfile,
    },
    /// Warps the metric of the region; a zero gain clears it.
    Perturb {
        region: RegionId,
        params: NoiseParams,
    },
    /// Assigns a material tag to the region and everything below it.
    Material {
        region: RegionId,
        material: u32,
    },
    Macro {
        region: RegionId,
        name: String,
        #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
        params: serde_json::Value,
    },
    Procedural {
        region: RegionId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rules: Option<crate::procedural::RuleSet>,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        displace: Option<TaggedDisplacement>,
    },
}

impl OperatorCommand {
    pub fn region(&self) -> RegionId {
        match self {
            OperatorCommand::Contour { region, .. }
            | OperatorCommand::Stream { region, .. }
            | OperatorCommand::Voronoi { region, .. }
            | OperatorCommand::Polyline { region, .. }
            | OperatorCommand::Displace { region, .. }
            | OperatorCommand::Perturb { region, .. }
            | OperatorCommand::Material { region, .. }
            | OperatorCommand::Macro { region, .. }
            | OperatorCommand::Procedural { region, .. } => *region,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OperatorCommand::Contour { .. } => "contour",
            OperatorCommand::Stream { .. } => "stream",
            OperatorCommand::Voronoi { .. } => "voronoi",
            OperatorCommand::Polyline { .. } => "polyline",
            OperatorCommand::Displace { .. } => "displace",
            OperatorCommand::Perturb { .. } => "perturb",
            OperatorCommand::Material { .. } => "material",
            OperatorCommand::Macro { .. } => "macro",
            OperatorCommand::Procedural { .. } => "procedural",
        }
    }
}
