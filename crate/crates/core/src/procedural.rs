//! Macros (named bundles of operator applications) and stochastic
//! recursive expansion driven by tag-conditioned rules.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::command::{FieldSpec, Isovalues, SeedSpec, TaggedDisplacement};
use crate::engine::{ApplyReport, Engine};
use crate::error::{Error, Result};
use crate::ops::{poisson_sample, uniform_on_line, RegionView, SeedLine};
use crate::tree::{RegionId, RegionTag};

pub const MACROS: [&str; 8] = ["sunburst", "polka_dots", "frames", "flower", "grid", "outline", "lace", "cells"];

/// Smallest region, in faces, that point-sampling macros accept.
pub const MIN_SAMPLING_FACES: usize = 64;

const DEFAULT_RULES: &str = include_str!("../rules/default.json");

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutlineParams {
    /// Band width as a fraction of the largest distance from the boundary.
    fraction: f64,
}

impl Default for OutlineParams {
    fn default() -> Self {
        OutlineParams { fraction: 0.2 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CountParams {
    count: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DotParams {
    count: usize,
    /// Dot radius relative to the sampling radius.
    radius: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridParams {
    rings: usize,
    wedges: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { rings: 3, wedges: 4 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlowerParams {
    count: usize,
    isovalues: Vec<f64>,
}

impl Default for FlowerParams {
    fn default() -> Self {
        FlowerParams { count: 5, isovalues: vec![0.3, 0.6] }
    }
}

fn params<T: DeserializeOwned + Default>(name: &str, v: &serde_json::Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| Error::InvalidParameter(format!("macro `{name}`: {e}")))
}

fn not_applicable(name: &str, reason: impl Into<String>) -> Error {
    Error::NotApplicable { name: name.into(), reason: reason.into() }
}

/// Checks the applicability predicate of a macro on a region.
pub fn check_applicable(engine: &Engine, region: RegionId, name: &str) -> Result<()> {
    if !MACROS.contains(&name) {
        return Err(Error::UnknownMacro(name.into()));
    }
    let view = RegionView::new(engine.mesh(), engine.tree(), region)?;
    let loops = view.loops.len();
    match name {
        "sunburst" | "grid" if loops != 2 => Err(not_applicable(name, format!("needs exactly 2 boundary loops, region has {loops}"))),
        "frames" | "outline" | "lace" if loops == 0 => Err(not_applicable(name, "region has no boundary")),
        "flower" if loops == 0 => Err(not_applicable(name, "region has no boundary")),
        "polka_dots" | "cells" | "flower" if view.face_count() < MIN_SAMPLING_FACES => {
            Err(not_applicable(name, format!("needs at least {MIN_SAMPLING_FACES} faces, region has {}", view.face_count())))
        }
        _ => Ok(()),
    }
}

fn retag(engine: &mut Engine, ids: &[RegionId], tag: RegionTag) -> Result<()> {
    for &id in ids {
        engine.tree.node_mut(id)?.tag = tag;
    }
    Ok(())
}

/// Poisson samples of a region together with the final sampling radius.
/// Regions too thin to hold an interior sample are not applicable.
fn sample_points(engine: &mut Engine, name: &str, region: RegionId, count: usize) -> Result<(Vec<u32>, f64)> {
    engine.prepare_metric(region)?;
    let view = RegionView::new(&engine.mesh, &engine.tree, region)?;
    let p = poisson_sample(
        &engine.graph,
        &mut engine.solver,
        Some(&view.verts),
        &view.boundary_vertices(),
        view.fallback_vertex()?,
        Some(count),
        None,
    )?;
    let interior = p.samples.iter().filter(|&&v| !view.loops.iter().any(|l| l.vertices.contains(&v))).count();
    if interior == 0 {
        return Err(not_applicable(name, "no interior sample fits in the region"));
    }
    Ok((p.samples, p.radius))
}

/// Applies a named macro to a region as part of the current command.
/// `null` parameters select the macro defaults.
pub fn apply_macro(engine: &mut Engine, region: RegionId, name: &str, p: &serde_json::Value) -> Result<ApplyReport> {
    check_applicable(engine, region, name)?;
    let defaults = default_params(name);
    let p = if p.is_null() { &defaults } else { p };
    use RegionTag::*;
    let mut report = match name {
        "outline" => {
            let o: OutlineParams = params(name, p)?;
            if !(o.fraction > 0.0 && o.fraction < 1.0) {
                return Err(Error::InvalidParameter(format!("outline fraction must lie in (0, 1), got {}", o.fraction)));
            }
            let field = FieldSpec::Dist { seeds: SeedSpec::Boundary };
            let iso = Isovalues::Fractions { values: vec![o.fraction] };
            engine.contour_with(region, &field, &iso, Some(&[OutlineBand, OutlineInside]))?
        }
        "frames" => {
            let c: CountParams = params(name, p)?;
            let field = FieldSpec::Dist { seeds: SeedSpec::Boundary };
            engine.contour_with(region, &field, &Isovalues::Spaced { count: c.count, spacing: None }, Some(&[Frame]))?
        }
        "polka_dots" => {
            let d: DotParams = params(name, p)?;
            let (pts, radius) = sample_points(engine, name, region, d.count)?;
            let field = FieldSpec::Dist { seeds: SeedSpec::Vertices { vertices: pts } };
            let iso = Isovalues::Values { values: vec![d.radius * radius] };
            engine.contour_with(region, &field, &iso, Some(&[Dot, DotBackground]))?
        }
        "flower" => {
            let f: FlowerParams = params(name, p)?;
            let (pts, _) = sample_points(engine, name, region, f.count)?;
            let field = FieldSpec::Blend { from: SeedSpec::Vertices { vertices: pts }, to: SeedSpec::Boundary };
            let iso = Isovalues::Values { values: f.isovalues };
            engine.contour_with(region, &field, &iso, Some(&[Dot, Stripe, DotBackground]))?
        }
        "sunburst" => {
            let c: CountParams = params(name, p)?;
            let field = FieldSpec::Blend { from: SeedSpec::Loop { index: 0 }, to: SeedSpec::Loop { index: 1 } };
            let mut r = engine.stream(region, &field, c.count)?;
            let created = std::mem::take(&mut r.created);
            retag(engine, &created, Stripe)?;
            r.created = created;
            r
        }
        "grid" => {
            let g: GridParams = params(name, p)?;
            if g.rings < 1 || g.wedges < 2 {
                return Err(Error::InvalidParameter("grid needs at least 1 ring and 2 wedges".into()));
            }
            let field = FieldSpec::Blend { from: SeedSpec::Loop { index: 0 }, to: SeedSpec::Loop { index: 1 } };
            let mut r = ApplyReport::default();
            if g.rings > 1 {
                let iso = Isovalues::Spaced { count: g.rings - 1, spacing: None };
                r.absorb(engine.contour_with(region, &field, &iso, Some(&[Stripe]))?);
            }
            let s = engine.stream(region, &field, g.wedges)?;
            r.warnings.extend(s.warnings);
            // the stream splits the rings, so the final leaves are its pieces
            r.created = engine.tree.leaves_under(region);
            retag(engine, &r.created, Cell)?;
            r
        }
        "lace" => {
            let d: DotParams = params(name, p)?;
            engine.prepare_metric(region)?;
            let view = RegionView::new(&engine.mesh, &engine.tree, region)?;
            let lp = &view.loops[0];
            let line = SeedLine { vertices: lp.vertices.clone(), closed: true };
            let pts = uniform_on_line(&engine.mesh, &line, d.count);
            if pts.is_empty() {
                return Err(Error::EmptySeeds);
            }
            let spacing = lp.length(&engine.mesh) / pts.len() as f64;
            let field = FieldSpec::Dist { seeds: SeedSpec::Vertices { vertices: pts } };
            let iso = Isovalues::Values { values: vec![d.radius * spacing] };
            engine.contour_with(region, &field, &iso, Some(&[Dot, DotBackground]))?
        }
        "cells" => {
            let c: CountParams = params(name, p)?;
            let (pts, _) = sample_points(engine, name, region, c.count)?;
            if pts.len() < 2 {
                return Err(not_applicable(name, format!("region holds {} sample(s), cells need 2", pts.len())));
            }
            engine.voronoi(region, &SeedSpec::Vertices { vertices: pts })?
        }
        _ => unreachable!("checked by check_applicable"),
    };
    report.created.sort_unstable();
    report.created.dedup();
    Ok(report)
}

impl Default for CountParams {
    fn default() -> Self {
        CountParams { count: 3 }
    }
}

impl Default for DotParams {
    fn default() -> Self {
        DotParams { count: 6, radius: 0.4 }
    }
}

/// Parameters for macros whose defaults differ from their parameter type's.
fn default_params(name: &str) -> serde_json::Value {
    match name {
        "sunburst" => serde_json::json!({ "count": 12 }),
        "cells" => serde_json::json!({ "count": 8 }),
        "lace" => serde_json::json!({ "count": 12, "radius": 0.45 }),
        _ => serde_json::Value::Null,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Leaves sharing a tag form one group.
    #[default]
    ByType,
    /// Leaves sharing tag, loop count and corner count form one group.
    ByAttribute,
    /// Siblings with one tag take the rule entries in turn, by creation order.
    Cyclic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    #[serde(rename = "macro")]
    pub name: String,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    /// Candidate macros per region tag; probabilities sum to at most 1,
    /// the remainder meaning "stop".
    pub rules: BTreeMap<RegionTag, Vec<RuleEntry>>,
    #[serde(default)]
    pub grouping: Grouping,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    /// Material tags assigned round-robin to created leaves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub palette: Vec<u32>,
}

fn default_depth() -> usize {
    3
}

impl RuleSet {
    pub fn empty() -> Self {
        RuleSet { rules: BTreeMap::new(), grouping: Grouping::ByType, max_depth: 1, palette: Vec::new() }
    }

    /// The shipped default rules.
    pub fn default_rules() -> Self {
        serde_json::from_str(DEFAULT_RULES).expect("bundled rules parse")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RuleSet = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        for (tag, entries) in &self.rules {
            let mut sum = 0.0;
            for e in entries {
                if !MACROS.contains(&e.name.as_str()) {
                    return Err(Error::UnknownMacro(e.name.clone()));
                }
                if !(0.0..=1.0).contains(&e.probability) {
                    return Err(Error::InvalidParameter(format!("probability {} for `{}` out of [0, 1]", e.probability, e.name)));
                }
                sum += e.probability;
            }
            if sum > 1.0 + 1e-9 {
                return Err(Error::InvalidParameter(format!("probabilities for `{}` sum to {sum}", tag.name())));
            }
        }
        Ok(())
    }

    /// Entries for a tag; tags without rules of their own use the
    /// `generic` rules.
    pub fn entries(&self, tag: RegionTag) -> Option<&[RuleEntry]> {
        self.rules.get(&tag).or_else(|| self.rules.get(&RegionTag::Generic)).map(|v| v.as_slice()).filter(|v| !v.is_empty())
    }

    /// Entry picked by one uniform sample `u` in `[0, 1)`, `None` to stop.
    pub fn pick(entries: &[RuleEntry], u: f64) -> Option<&RuleEntry> {
        let mut acc = 0.0;
        for e in entries {
            acc += e.probability;
            if u < acc {
                return Some(e);
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey {
    Type(RegionTag),
    Attribute(RegionTag, usize, usize),
    Siblings(RegionTag, Option<RegionId>),
}

/// Breadth-wise expansion of the leaves under `region`. At each level the
/// leaves are grouped, one macro is drawn per group and applied to every
/// member; macros not applicable to a member skip it.
pub fn expand_procedural(
    engine: &mut Engine,
    region: RegionId,
    rules: Option<&RuleSet>,
    seed: u64,
    displace: Option<&TaggedDisplacement>,
) -> Result<ApplyReport> {
    let owned;
    let rules = match rules {
        Some(r) => r,
        None => {
            owned = RuleSet::default_rules();
            &owned
        }
    };
    rules.validate()?;
    engine.tree.node(region)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ApplyReport::default();
    let mut frontier = engine.tree.leaves_under(region);
    let mut paint = 0usize;
    for _ in 0..rules.max_depth {
        let mut groups: BTreeMap<GroupKey, Vec<RegionId>> = BTreeMap::new();
        for &leaf in &frontier {
            let node = engine.tree.node(leaf)?;
            let key = match rules.grouping {
                Grouping::ByType => GroupKey::Type(node.tag),
                Grouping::ByAttribute => {
                    let a = engine.tree.region_attributes(&engine.mesh, leaf)?;
                    GroupKey::Attribute(a.tag, a.loop_count, a.corner_count)
                }
                Grouping::Cyclic => GroupKey::Siblings(node.tag, node.parent),
            };
            groups.entry(key).or_default().push(leaf);
        }
        let mut next = Vec::new();
        for (key, members) in groups {
            let tag = match key {
                GroupKey::Type(t) | GroupKey::Attribute(t, ..) | GroupKey::Siblings(t, _) => t,
            };
            let Some(entries) = rules.entries(tag) else { continue };
            let u: f64 = rng.random();
            let Some(first) = RuleSet::pick(entries, u) else { continue };
            let first_index = entries.iter().position(|e| std::ptr::eq(e, first)).unwrap_or(0);
            for (i, &leaf) in members.iter().enumerate() {
                let entry = if rules.grouping == Grouping::Cyclic { &entries[(first_index + i) % entries.len()] } else { first };
                match check_applicable(engine, leaf, &entry.name) {
                    Ok(()) => {}
                    Err(Error::NotApplicable { .. }) => continue,
                    Err(e) => return Err(e),
                }
                let before = engine.snapshot();
                match apply_macro(engine, leaf, &entry.name, &entry.params) {
                    Ok(r) => {
                        for &c in &r.created {
                            if !rules.palette.is_empty() {
                                engine.tree.node_mut(c)?.material = rules.palette[paint % rules.palette.len()];
                                paint += 1;
                            }
                        }
                        next.extend(r.created.iter().copied().filter(|&c| engine.tree.is_leaf(c)));
                        report.absorb(r);
                    }
                    Err(e) => {
                        engine.restore_state(before);
                        report.warn(format!("{} on region {leaf} failed: {e}", entry.name));
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    if let Some(d) = displace {
        report.absorb(apply_uniform_displacement(engine, region, d)?);
    }
    report.created.retain(|&c| engine.tree.is_leaf(c));
    Ok(report)
}

/// Displaces every leaf under `region` whose tag is selected, with one
/// shared profile.
pub fn apply_uniform_displacement(engine: &mut Engine, region: RegionId, d: &TaggedDisplacement) -> Result<ApplyReport> {
    let mut report = ApplyReport::default();
    if d.profile.amplitude == 0.0 {
        return Ok(report);
    }
    for leaf in engine.tree.leaves_under(region) {
        if d.tags.contains(&engine.tree.node(leaf)?.tag) {
            report.absorb(engine.displace(leaf, &d.profile)?);
        }
    }
    Ok(report)
}
