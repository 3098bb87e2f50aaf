//! Editing session state: mesh, graph, region tree and the command log,
//! with snapshot based undo and non-destructive previews.

use std::borrow::Cow;
use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::command::{DisplacementProfile, OperatorCommand};
use crate::error::{Error, Result};
use crate::field::NoiseParams;
use crate::geom::{Point, Vec3};
use crate::graph::{build_graph_with, update_graph_after_split, update_lengths, GeodesicGraph, Solver, SolverPool};
use crate::mesh::{CutOutcome, CutRequest, TriMesh};
use crate::tree::{PatternTree, RegionId, RegionNode, ROOT};

/// Number of undo snapshots kept.
pub const UNDO_DEPTH: usize = 32;

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

/// Base color and optional displacement attached to a material tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub color: [f32; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<DisplacementProfile>,
}

/// Metric perturbation attached to a region, as dense per-vertex offsets.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Perturbation {
    pub region: RegionId,
    pub params: NoiseParams,
    pub offsets: Vec<Vec3>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ApplyReport {
    /// Leaves created by the command, in creation order.
    pub created: Vec<RegionId>,
    pub warnings: Vec<String>,
}

impl ApplyReport {
    pub(crate) fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub(crate) fn absorb(&mut self, other: ApplyReport) {
        self.created.extend(other.created);
        self.warnings.extend(other.warnings);
    }
}

/// Saved engine state. The graph is rebuilt on restore.
#[derive(Clone, Debug)]
pub struct Snapshot {
    session: u64,
    mesh: TriMesh,
    tree: PatternTree,
    perturbations: Vec<Perturbation>,
    materials: BTreeMap<u32, Material>,
    log_len: usize,
}

/// Overlay data computed by a preview.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Preview {
    /// Per-vertex scalar, `+inf` outside the region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<f64>>,
    /// Polylines as surface positions, with a closed flag.
    pub polylines: Vec<(Vec<[f64; 3]>, bool)>,
    /// Per-face labels the command would produce, when it changes topology
    /// in ways a polyline overlay cannot show.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u32>>,
    pub warnings: Vec<String>,
}

/// Serializable description of the region tree and materials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub face_count: usize,
    pub region_count: usize,
    pub leaf_count: usize,
    pub depth: usize,
    pub regions: Vec<RegionNode>,
    pub materials: BTreeMap<u32, Material>,
}

/// One editing session over a mesh.
#[derive(Debug)]
pub struct Engine {
    pub(crate) session: u64,
    pub(crate) mesh: TriMesh,
    pub(crate) graph: GeodesicGraph,
    /// Positions the graph lengths are computed from.
    pub(crate) metric: Vec<Point>,
    /// Perturbation records folded into `metric`; `None` forces a refresh.
    pub(crate) metric_key: Option<Vec<usize>>,
    pub(crate) tree: PatternTree,
    pub(crate) perturbations: Vec<Perturbation>,
    pub(crate) materials: BTreeMap<u32, Material>,
    pub(crate) solver: Solver,
    pool: SolverPool,
    log: Vec<OperatorCommand>,
    undo: VecDeque<Snapshot>,
    redo: Vec<OperatorCommand>,
    /// Index of the command being executed, recorded as `created_by`.
    pub(crate) current: usize,
}

impl Engine {
    pub fn new(mesh: TriMesh) -> Self {
        let metric = mesh.positions().to_vec();
        let graph = build_graph_with(&mesh, &metric);
        let tree = PatternTree::new(mesh.face_count());
        Engine {
            session: NEXT_SESSION.fetch_add(1, Ordering::Relaxed),
            mesh,
            graph,
            metric,
            metric_key: Some(Vec::new()),
            tree,
            perturbations: Vec::new(),
            materials: BTreeMap::new(),
            solver: Solver::new(),
            pool: SolverPool::new(),
            log: Vec::new(),
            undo: VecDeque::new(),
            redo: Vec::new(),
            current: 0,
        }
    }

    /// Replays `commands` on a fresh session. On failure returns the index
    /// of the failing command.
    pub fn replay(
        mesh: TriMesh,
        materials: BTreeMap<u32, Material>,
        commands: &[OperatorCommand],
    ) -> std::result::Result<(Engine, Vec<ApplyReport>), (usize, Error)> {
        let mut e = Engine::new(mesh);
        e.materials = materials;
        let mut reports = Vec::with_capacity(commands.len());
        for (i, c) in commands.iter().enumerate() {
            reports.push(e.apply(c.clone()).map_err(|err| (i, err))?);
        }
        Ok((e, reports))
    }

    pub fn session_id(&self) -> u64 {
        self.session
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn graph(&self) -> &GeodesicGraph {
        &self.graph
    }

    pub fn metric(&self) -> &[Point] {
        &self.metric
    }

    pub fn tree(&self) -> &PatternTree {
        &self.tree
    }

    pub fn labels(&self) -> &[RegionId] {
        self.tree.labels()
    }

    pub fn log(&self) -> &[OperatorCommand] {
        &self.log
    }

    pub fn materials(&self) -> &BTreeMap<u32, Material> {
        &self.materials
    }

    pub fn set_material_entry(&mut self, tag: u32, material: Material) {
        self.materials.insert(tag, material);
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo.is_empty()
    }

    /// Applies a command as one undoable step. On error the state is left
    /// as it was before the call.
    pub fn apply(&mut self, cmd: OperatorCommand) -> Result<ApplyReport> {
        let report = self.apply_inner(&cmd)?;
        self.redo.clear();
        Ok(report)
    }

    fn apply_inner(&mut self, cmd: &OperatorCommand) -> Result<ApplyReport> {
        let snap = self.snapshot();
        self.current = self.log.len();
        match self.execute(cmd) {
            Ok(report) => {
                if self.undo.len() == UNDO_DEPTH {
                    self.undo.pop_front();
                }
                self.undo.push_back(snap);
                self.log.push(cmd.clone());
                Ok(report)
            }
            Err(e) => {
                self.restore_state(snap);
                Err(e)
            }
        }
    }

    pub fn undo(&mut self) -> Result<OperatorCommand> {
        let snap = self.undo.pop_back().ok_or(Error::NothingToUndo)?;
        let cmd = self.log[snap.log_len].clone();
        self.restore_state(snap);
        self.redo.push(cmd.clone());
        Ok(cmd)
    }

    /// Re-applies the most recently undone command.
    pub fn redo(&mut self) -> Result<ApplyReport> {
        let cmd = self.redo.pop().ok_or(Error::NothingToUndo)?;
        match self.apply_inner(&cmd) {
            Ok(r) => Ok(r),
            Err(e) => {
                self.redo.push(cmd);
                Err(e)
            }
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            session: self.session,
            mesh: self.mesh.clone(),
            tree: self.tree.clone(),
            perturbations: self.perturbations.clone(),
            materials: self.materials.clone(),
            log_len: self.log.len(),
        }
    }

    /// Restores a snapshot of this session. The command log is truncated
    /// to the snapshot point and the redo stack is cleared.
    pub fn restore(&mut self, snap: &Snapshot) -> Result<()> {
        if snap.session != self.session {
            return Err(Error::ForeignSnapshot);
        }
        if snap.log_len > self.log.len() {
            return Err(Error::InvalidParameter("snapshot is newer than the session log".into()));
        }
        self.undo.retain(|s| s.log_len < snap.log_len);
        self.redo.clear();
        self.restore_state(snap.clone());
        Ok(())
    }

    pub(crate) fn restore_state(&mut self, snap: Snapshot) {
        self.mesh = snap.mesh;
        self.tree = snap.tree;
        self.perturbations = snap.perturbations;
        self.materials = snap.materials;
        self.log.truncate(snap.log_len);
        self.metric = self.mesh.positions().to_vec();
        self.metric_key = Some(Vec::new());
        self.graph = build_graph_with(&self.mesh, &self.metric);
    }

    fn execute(&mut self, cmd: &OperatorCommand) -> Result<ApplyReport> {
        match cmd {
            OperatorCommand::Contour { region, field, isovalues } => self.contour(*region, field, isovalues),
            OperatorCommand::Stream { region, field, count } => self.stream(*region, field, *count),
            OperatorCommand::Voronoi { region, seeds } => self.voronoi(*region, seeds),
            OperatorCommand::Polyline { region, points, closed } => self.polyline(*region, points, *closed),
            OperatorCommand::Displace { region, profile } => self.displace(*region, profile),
            OperatorCommand::Perturb { region, params } => self.perturb(*region, params),
            OperatorCommand::Material { region, material } => self.assign_material(*region, *material),
            OperatorCommand::Macro { region, name, params } => crate::procedural::apply_macro(self, *region, name, params),
            OperatorCommand::Procedural { region, rules, seed, displace } => {
                crate::procedural::expand_procedural(self, *region, rules.as_ref(), *seed, displace.as_ref())
            }
        }
    }

    /// Perturbation records that shape the metric seen from `region`.
    fn metric_records(&self, region: RegionId) -> Vec<usize> {
        (0..self.perturbations.len()).filter(|&i| self.tree.contains(self.perturbations[i].region, region)).collect()
    }

    fn metric_for(&self, records: &[usize]) -> Vec<Point> {
        let mut m = self.mesh.positions().to_vec();
        for &i in records {
            for (p, o) in m.iter_mut().zip(&self.perturbations[i].offsets) {
                *p += o;
            }
        }
        m
    }

    fn changed_vertices(old: &[Point], new: &[Point]) -> Vec<u32> {
        (0..new.len() as u32).filter(|&v| old.get(v as usize) != Some(&new[v as usize])).collect()
    }

    /// Brings the graph to the metric of `region`: mesh positions plus the
    /// perturbations of the region and its ancestors.
    pub(crate) fn prepare_metric(&mut self, region: RegionId) -> Result<()> {
        self.tree.node(region)?;
        let records = self.metric_records(region);
        if self.metric_key.as_ref() == Some(&records) {
            return Ok(());
        }
        let metric = self.metric_for(&records);
        let changed = Self::changed_vertices(&self.metric, &metric);
        if !changed.is_empty() {
            update_lengths(&mut self.graph, &self.mesh, &metric, Some(&changed));
        }
        self.metric = metric;
        self.metric_key = Some(records);
        Ok(())
    }

    /// Forces the next `prepare_metric` to recompute.
    pub(crate) fn invalidate_metric(&mut self) {
        self.metric_key = None;
    }

    /// Graph for previews in `region`; cloned and patched when the
    /// committed graph carries another metric.
    fn preview_graph(&self, region: RegionId) -> Result<Cow<'_, GeodesicGraph>> {
        self.tree.node(region)?;
        let records = self.metric_records(region);
        if self.metric_key.as_ref() == Some(&records) {
            return Ok(Cow::Borrowed(&self.graph));
        }
        let metric = self.metric_for(&records);
        let changed = Self::changed_vertices(&self.metric, &metric);
        let mut g = self.graph.clone();
        update_lengths(&mut g, &self.mesh, &metric, Some(&changed));
        Ok(Cow::Owned(g))
    }

    /// Cuts the mesh and carries every per-vertex and per-face record
    /// over the split. `field` is extended with interpolated values.
    pub(crate) fn commit_cut(&mut self, req: &CutRequest, field: Option<&mut Vec<f64>>) -> Result<CutOutcome> {
        let out = self.mesh.cut(req)?;
        let mut field = field;
        for nv in &out.new_vertices {
            debug_assert_eq!(nv.id as usize, self.metric.len());
            let p = nv.interpolate_point(&self.metric);
            self.metric.push(p);
            for rec in &mut self.perturbations {
                let o = nv.weights.iter().fold(Vec3::zeros(), |acc, &(v, w)| acc + rec.offsets[v as usize] * w);
                rec.offsets.push(o);
            }
            if let Some(f) = field.as_deref_mut() {
                let x = nv.interpolate_scalar(f);
                f.push(x);
            }
        }
        self.tree.apply_split_events(self.mesh.face_count(), &out.events, &out.edge_splits)?;
        update_graph_after_split(&mut self.graph, &self.mesh, &self.metric, &out.events)?;
        Ok(out)
    }

    /// Replaces mesh positions (displacement) and refreshes normals and
    /// graph lengths.
    pub(crate) fn move_vertices(&mut self, positions: Vec<Point>) -> Result<()> {
        let moved = Self::changed_vertices(self.mesh.positions(), &positions);
        self.mesh.set_positions(positions)?;
        if moved.is_empty() {
            return Ok(());
        }
        let records = self.metric_key.clone().unwrap_or_default();
        let metric = self.metric_for(&records);
        update_lengths(&mut self.graph, &self.mesh, &metric, Some(&moved));
        self.metric = metric;
        self.metric_key = Some(records);
        Ok(())
    }

    /// Computes the overlay of a command without touching committed state.
    pub fn preview(&self, cmd: &OperatorCommand) -> Result<Preview> {
        match cmd {
            OperatorCommand::Macro { .. } | OperatorCommand::Procedural { .. } | OperatorCommand::Polyline { .. } => {
                let mut scratch = self.scratch();
                let report = scratch.execute(cmd)?;
                Ok(Preview { labels: Some(scratch.labels().to_vec()), warnings: report.warnings, ..Default::default() })
            }
            OperatorCommand::Material { region, .. } => {
                self.tree.node(*region)?;
                Ok(Preview::default())
            }
            _ => {
                let graph = self.preview_graph(cmd.region())?;
                self.pool.with(|solver| self.preview_overlay(&graph, solver, cmd))
            }
        }
    }

    /// Independent copy of the committed state without history.
    pub(crate) fn scratch(&self) -> Engine {
        Engine {
            session: self.session,
            mesh: self.mesh.clone(),
            graph: self.graph.clone(),
            metric: self.metric.clone(),
            metric_key: self.metric_key.clone(),
            tree: self.tree.clone(),
            perturbations: self.perturbations.clone(),
            materials: self.materials.clone(),
            solver: Solver::new(),
            pool: SolverPool::new(),
            log: Vec::new(),
            undo: VecDeque::new(),
            redo: Vec::new(),
            current: self.log.len(),
        }
    }

    pub fn tree_record(&self) -> TreeRecord {
        TreeRecord {
            face_count: self.mesh.face_count(),
            region_count: self.tree.region_count(),
            leaf_count: self.tree.leaf_count(),
            depth: self.tree.max_depth(),
            regions: self.tree.nodes().to_vec(),
            materials: self.materials.clone(),
        }
    }

    /// Face color from the material of its leaf, grey when unmapped.
    pub fn face_material(&self, f: u32) -> u32 {
        self.tree.nodes()[self.tree.label(f) as usize].material
    }

    /// Checks mesh, tree and graph consistency; `graph_tol` compares the
    /// graph against a fresh rebuild on the current metric.
    pub fn check_invariants(&self, graph_tol: Option<f64>) -> Result<()> {
        self.mesh.validate()?;
        self.tree.check_invariants()?;
        self.graph.check_invariants()?;
        if self.tree.labels().len() != self.mesh.face_count() {
            return Err(Error::InvalidPartition("label count differs from face count".into()));
        }
        if self.metric.len() != self.mesh.vertex_count() {
            return Err(Error::InvalidParameter("metric size differs from vertex count".into()));
        }
        if let Some(tol) = graph_tol {
            let fresh = build_graph_with(&self.mesh, &self.metric);
            if let Some(d) = self.graph.difference(&fresh, tol) {
                return Err(Error::InvalidParameter(format!("graph differs from rebuild: {d}")));
            }
        }
        Ok(())
    }

    /// Root region id, for symmetry with the tree API.
    pub fn root(&self) -> RegionId {
        ROOT
    }
}
