use std::collections::BTreeMap;

use geopattern::command::{DisplacementProfile, OperatorCommand, TaggedDisplacement};
use geopattern::mesh::primitives;
use geopattern::procedural::{Grouping, RuleEntry, RuleSet, MACROS};
use geopattern::tree::{RegionTag, ROOT};
use geopattern::{Engine, Error};

fn mac(region: u32, name: &str, params: serde_json::Value) -> OperatorCommand {
    OperatorCommand::Macro { region, name: name.into(), params }
}

fn leaves(e: &Engine) -> usize {
    e.tree().leaf_count()
}

#[test]
fn outline_on_disk() {
    let mut e = Engine::new(primitives::disk(1.0, 16));
    let r = e.apply(mac(ROOT, "outline", serde_json::Value::Null)).unwrap();
    assert_eq!(r.created.len(), 2);
    let tags: Vec<RegionTag> = r.created.iter().map(|&c| e.tree().node(c).unwrap().tag).collect();
    assert!(tags.contains(&RegionTag::OutlineBand) && tags.contains(&RegionTag::OutlineInside));
    e.check_invariants(Some(1e-6)).unwrap();
}

#[test]
fn grid_on_annulus() {
    let mut e = Engine::new(primitives::annulus(0.4, 1.0, 18));
    let r = e.apply(mac(ROOT, "grid", serde_json::json!({ "rings": 3, "wedges": 4 }))).unwrap();
    assert_eq!(r.created.len(), 12, "{:?}", r.warnings);
    for &c in &r.created {
        let a = e.tree().region_attributes(e.mesh(), c).unwrap();
        assert_eq!(a.tag, RegionTag::Cell);
        assert_eq!(a.corner_count, 4, "cell {c}");
        assert_eq!(a.loop_count, 1);
    }
    e.check_invariants(Some(1e-6)).unwrap();
}

#[test]
fn polka_dots_on_disk() {
    let mut e = Engine::new(primitives::disk(1.0, 24));
    e.apply(mac(ROOT, "polka_dots", serde_json::json!({ "count": 6 }))).unwrap();
    assert_eq!(leaves(&e), 7);
    let dots = e.tree().leaves().iter().filter(|&&l| e.tree().node(l).unwrap().tag == RegionTag::Dot).count();
    assert_eq!(dots, 6);
}

#[test]
fn every_macro_runs_where_applicable() {
    for name in MACROS {
        let mesh = if matches!(name, "sunburst" | "grid") { primitives::annulus(0.4, 1.0, 14) } else { primitives::disk(1.0, 20) };
        let mut e = Engine::new(mesh);
        let r = e.apply(mac(ROOT, name, serde_json::Value::Null)).unwrap_or_else(|err| panic!("{name}: {err}"));
        assert!(r.created.len() >= 2, "{name}: {:?}", r.warnings);
        e.check_invariants(Some(1e-6)).unwrap();
    }
}

#[test]
fn applicability() {
    let mut e = Engine::new(primitives::disk(1.0, 10));
    assert!(matches!(e.apply(mac(ROOT, "sunburst", serde_json::Value::Null)), Err(Error::NotApplicable { .. })));
    assert!(matches!(e.apply(mac(ROOT, "spiral", serde_json::Value::Null)), Err(Error::UnknownMacro(_))));
    let mut s = Engine::new(primitives::icosphere(0));
    assert!(matches!(s.apply(mac(ROOT, "cells", serde_json::Value::Null)), Err(Error::NotApplicable { .. })));
    assert!(matches!(s.apply(mac(ROOT, "outline", serde_json::Value::Null)), Err(Error::NotApplicable { .. })));
}

fn only(tag: RegionTag, name: &str, depth: usize) -> RuleSet {
    let mut rules = BTreeMap::new();
    rules.insert(tag, vec![RuleEntry { name: name.into(), probability: 1.0, params: serde_json::Value::Null }]);
    RuleSet { rules, grouping: Grouping::ByType, max_depth: depth, palette: vec![] }
}

fn expand(e: &mut Engine, rules: RuleSet, seed: u64) {
    e.apply(OperatorCommand::Procedural { region: ROOT, rules: Some(rules), seed, displace: None }).unwrap();
}

#[test]
fn empty_rules_do_nothing() {
    let mut e = Engine::new(primitives::disk(1.0, 10));
    expand(&mut e, RuleSet::empty(), 1);
    assert_eq!(leaves(&e), 1);
}

#[test]
fn nested_outlines() {
    let mut e = Engine::new(primitives::disk(1.0, 24));
    expand(&mut e, only(RegionTag::Generic, "outline", 2), 0);
    // the band has two boundary loops, so its own outline yields three pieces
    assert_eq!(leaves(&e), 5);
    assert_eq!(e.tree().max_depth(), 3);
}

#[test]
fn deterministic_given_seed() {
    let run = |seed| {
        let mut e = Engine::new(primitives::disk(1.0, 24));
        expand(&mut e, RuleSet::default_rules(), seed);
        e.labels().to_vec()
    };
    assert_eq!(run(11), run(11));
}

#[test]
fn cyclic_grouping_alternates() {
    let mut e = Engine::new(primitives::disk(1.0, 30));
    e.apply(mac(ROOT, "cells", serde_json::json!({ "count": 4 }))).unwrap();
    let cells = e.tree().leaves();
    let mut rules = BTreeMap::new();
    rules.insert(
        RegionTag::Cell,
        vec![
            RuleEntry { name: "outline".into(), probability: 0.5, params: serde_json::Value::Null },
            RuleEntry { name: "frames".into(), probability: 0.5, params: serde_json::json!({ "count": 2 }) },
        ],
    );
    let rs = RuleSet { rules, grouping: Grouping::Cyclic, max_depth: 1, palette: vec![] };
    e.apply(OperatorCommand::Procedural { region: ROOT, rules: Some(rs), seed: 5, displace: None }).unwrap();
    let kids: Vec<usize> = cells.iter().map(|&c| e.tree().node(c).unwrap().children.len()).collect();
    // outline makes 2 pieces, frames with 2 isovalues makes 3
    for w in kids.windows(2) {
        assert_ne!(w[0], w[1], "{kids:?}");
    }
}

#[test]
fn rules_validation() {
    let bad = r#"{"rules": {"generic": [{"macro": "spiral", "probability": 1.0}]}}"#;
    assert!(matches!(RuleSet::from_json(bad), Err(Error::UnknownMacro(_))));
    let over = r#"{"rules": {"generic": [{"macro": "outline", "probability": 0.8}, {"macro": "cells", "probability": 0.8}]}}"#;
    assert!(RuleSet::from_json(over).is_err());
    RuleSet::default_rules().validate().unwrap();
}

#[test]
fn uniform_displacement_of_dots() {
    let mut e = Engine::new(primitives::disk(1.0, 24));
    let before = e.mesh().positions().to_vec();
    let profile = DisplacementProfile { amplitude: 0.1, gain: 0.5, bias: 0.5 };
    let d = TaggedDisplacement { tags: vec![RegionTag::Dot], profile };
    let rules = only(RegionTag::Generic, "polka_dots", 1);
    e.apply(OperatorCommand::Procedural { region: ROOT, rules: Some(rules), seed: 0, displace: Some(d) }).unwrap();
    for leaf in e.tree().leaves() {
        let node = e.tree().node(leaf).unwrap();
        let verts: std::collections::BTreeSet<u32> =
            e.tree().region_faces(leaf).unwrap().iter().flat_map(|&f| e.mesh().triangle(f)).collect();
        let offs: Vec<f64> = verts.iter().filter(|&&v| (v as usize) < before.len()).map(|&v| (e.mesh().position(v) - before[v as usize]).norm()).collect();
        let max = offs.iter().cloned().fold(0.0, f64::max);
        if node.tag == RegionTag::Dot {
            assert!((max - 0.1).abs() < 1e-6, "dot {leaf}: {max}");
        }
    }
    // background interior vertices (not on a dot) are untouched
    let bg = e.tree().leaves().into_iter().find(|&l| e.tree().node(l).unwrap().tag == RegionTag::DotBackground).unwrap();
    let dot_verts: std::collections::BTreeSet<u32> = e
        .tree()
        .leaves()
        .into_iter()
        .filter(|&l| e.tree().node(l).unwrap().tag == RegionTag::Dot)
        .flat_map(|l| e.tree().region_faces(l).unwrap())
        .flat_map(|f| e.mesh().triangle(f))
        .collect();
    for f in e.tree().region_faces(bg).unwrap() {
        for v in e.mesh().triangle(f) {
            if (v as usize) < before.len() && !dot_verts.contains(&v) {
                assert_eq!(e.mesh().position(v), &before[v as usize]);
            }
        }
    }
}

#[test]
fn palette_round_robin() {
    let mut e = Engine::new(primitives::disk(1.0, 20));
    let mut rs = only(RegionTag::Generic, "frames", 1);
    rs.palette = vec![7, 8];
    e.apply(OperatorCommand::Procedural { region: ROOT, rules: Some(rs), seed: 0, displace: None }).unwrap();
    let mats: Vec<u32> = e.tree().leaves().iter().map(|&l| e.tree().node(l).unwrap().material).collect();
    assert_eq!(mats, vec![7, 8, 7, 8]);
}
