//! Scene document: subparts in modeling order, their hierarchy, and the
//! assembled global skeleton.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundeddp::{bounded_dp, initial_threshold, BoundedDpConfig};
use crate::connect::{apply_attach, choose_parent, compute_joint_radii, Attach, ConnectError, PartView};
use crate::geom::{Point, Segment};
use crate::refine::{is_long_branch, refine, RefineConfig, Scope};
use crate::skel::{branches, collapse_short_edges, from_straight_skeleton, replace_branch_interiors, SkelError, Skeleton};
use crate::sskel::{extract_straight_skeleton, SskelError};
use crate::stroke::{acquire_polygon, RawStroke, SimplePolygon, StrokeConfig, StrokeError};

pub const SCHEMA_VERSION: &str = "skelforge/1";

/// Short-edge collapse factor applied right after extraction.
pub const CLEAN_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error(transparent)]
    Stroke(#[from] StrokeError),
    #[error(transparent)]
    Sskel(#[from] SskelError),
    #[error(transparent)]
    Skel(#[from] SkelError),
    #[error(transparent)]
    Connect(#[from] ConnectError),
    #[error("unknown part {0}")]
    UnknownPart(u32),
    #[error("invalid transform: scale must be positive and all fields finite")]
    InvalidTransform,
    #[error("document version {found:?} is not {SCHEMA_VERSION:?}")]
    SchemaVersionMismatch { found: String },
    #[error("malformed document: {0}")]
    MalformedDocument(String),
}

impl SceneError {
    /// Stable machine-readable code for protocol replies.
    pub fn code(&self) -> &'static str {
        match self {
            SceneError::Stroke(StrokeError::SelfIntersecting) => "SelfIntersecting",
            SceneError::Stroke(StrokeError::DegenerateStroke { .. }) => "DegenerateStroke",
            SceneError::Stroke(StrokeError::OpenStroke) => "OpenStroke",
            SceneError::Stroke(_) => "InvalidStroke",
            SceneError::Sskel(_) => "SkeletonFailure",
            SceneError::Skel(_) => "SkeletonFailure",
            SceneError::Connect(_) => "SliceMiss",
            SceneError::UnknownPart(_) => "UnknownPart",
            SceneError::InvalidTransform => "InvalidTransform",
            SceneError::SchemaVersionMismatch { .. } => "SchemaVersionMismatch",
            SceneError::MalformedDocument(_) => "MalformedDocument",
        }
    }
}

/// Rigid motion with uniform scale: `p -> scale * R(rot) p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub tx: f64,
    pub ty: f64,
    pub rot: f64,
    pub scale: f64,
}

impl Default for Transform {
    fn default() -> Self {
        Transform::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform { tx: 0.0, ty: 0.0, rot: 0.0, scale: 1.0 };

    pub fn translation(tx: f64, ty: f64) -> Self {
        Transform { tx, ty, ..Transform::IDENTITY }
    }

    pub fn is_valid(&self) -> bool {
        [self.tx, self.ty, self.rot, self.scale].iter().all(|v| v.is_finite()) && self.scale > 0.0
    }

    pub fn apply(&self, p: Point) -> Point {
        p.rotated(self.rot) * self.scale + Point::new(self.tx, self.ty)
    }

    pub fn invert(&self, p: Point) -> Point {
        ((p - Point::new(self.tx, self.ty)) / self.scale).rotated(-self.rot)
    }

    pub fn apply_skeleton(&self, s: &Skeleton) -> Skeleton {
        let mut out = s.map_positions(|p| self.apply(p));
        for j in &mut out.joints {
            j.radius *= self.scale;
        }
        out
    }
}

/// Every tunable persisted with a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub step: f64,
    pub eps_poly: f64,
    pub alpha_s: f64,
    pub eps0_factor: f64,
    pub alpha: f64,
    pub eps_s: f64,
    pub eps_m: f64,
    pub eps_t: f64,
    pub eps_c: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let s = StrokeConfig::default();
        let b = BoundedDpConfig::default();
        let r = RefineConfig::default();
        SceneConfig {
            step: s.step,
            eps_poly: s.eps_poly,
            alpha_s: b.alpha_s,
            eps0_factor: b.eps0_factor,
            alpha: b.alpha,
            eps_s: r.eps_s,
            eps_m: r.eps_m,
            eps_t: r.eps_t,
            eps_c: r.eps_c,
        }
    }
}

impl SceneConfig {
    pub fn stroke(&self) -> StrokeConfig {
        StrokeConfig { step: self.step, eps_poly: self.eps_poly }
    }

    pub fn bounded_dp(&self) -> BoundedDpConfig {
        BoundedDpConfig { alpha_s: self.alpha_s, eps0_factor: self.eps0_factor, alpha: self.alpha, ..BoundedDpConfig::default() }
    }

    pub fn refine(&self, scope: Scope) -> RefineConfig {
        RefineConfig { eps_s: self.eps_s, eps_m: self.eps_m, eps_t: self.eps_t, eps_c: self.eps_c, scope }
    }

    pub fn is_valid(&self) -> bool {
        let v = [self.step, self.eps_poly, self.alpha_s, self.eps0_factor, self.alpha, self.eps_s, self.eps_m, self.eps_t, self.eps_c];
        v.iter().all(|x| x.is_finite() && *x >= 0.0) && self.step > 0.0 && self.alpha > 0.0 && self.alpha < 1.0 && self.eps0_factor > 0.0
    }
}

/// Wall-clock microseconds per pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub polygon: f64,
    pub sskel: f64,
    pub clean: f64,
    pub boundeddp: f64,
    pub connect: f64,
    pub refine: f64,
}

impl StageTimings {
    pub fn sum(&self) -> f64 {
        self.polygon + self.sskel + self.clean + self.boundeddp + self.connect + self.refine
    }
}

fn micros_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

/// BoundedDP on every long branch, each starting from its own default
/// threshold. Branches where BoundedDP fails keep their joints.
pub fn simplify_part_branches(skel: &Skeleton, poly: &SimplePolygon, config: &BoundedDpConfig) -> Skeleton {
    let reps: Vec<_> = branches(skel)
        .into_iter()
        .filter(|b| b.len() >= 3 && is_long_branch(skel, b))
        .filter_map(|b| {
            let pts = skel.branch_points(&b);
            let r = bounded_dp(&pts, poly, config, initial_threshold(&pts, config)).ok()?;
            (r.points.len() < b.len()).then_some((b, r.points))
        })
        .collect();
    if reps.is_empty() {
        skel.clone()
    } else {
        replace_branch_interiors(skel, &reps)
    }
}

/// Polygon to part skeleton with radii: extraction, cleanup, branch
/// simplification and joint radii.
pub fn skeletonize_polygon(poly: &SimplePolygon, config: &SceneConfig, timings: &mut StageTimings) -> Result<Skeleton, SceneError> {
    let t = Instant::now();
    let ss = extract_straight_skeleton(poly)?;
    timings.sskel += micros_since(t);

    let t = Instant::now();
    let skel = collapse_short_edges(&from_straight_skeleton(&ss)?, CLEAN_FACTOR);
    timings.clean += micros_since(t);

    let t = Instant::now();
    let skel = simplify_part_branches(&skel, poly, &config.bounded_dp());
    timings.boundeddp += micros_since(t);

    let t = Instant::now();
    let skel = compute_joint_radii(&skel, poly)?;
    timings.connect += micros_since(t);
    Ok(skel)
}

/// Stroke to polygon plus part skeleton.
pub fn build_part(stroke: &RawStroke, config: &SceneConfig, timings: &mut StageTimings) -> Result<(SimplePolygon, Skeleton), SceneError> {
    let t = Instant::now();
    let poly = acquire_polygon(stroke, &config.stroke())?;
    timings.polygon += micros_since(t);
    let skel = skeletonize_polygon(&poly, config, timings)?;
    Ok((poly, skel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpart {
    pub id: u32,
    pub seq: u64,
    pub transform: Transform,
    /// Local frame.
    pub polygon: SimplePolygon,
    /// Local frame, radii filled.
    pub skeleton: Skeleton,
}

impl Subpart {
    pub fn world_polygon(&self) -> SimplePolygon {
        self.polygon.map(|p| self.transform.apply(p))
    }

    pub fn world_skeleton(&self) -> Skeleton {
        let mut s = self.transform.apply_skeleton(&self.skeleton);
        for j in &mut s.joints {
            j.part = self.id;
        }
        s
    }
}

/// Parent/child link. Bone and joint ids refer to the part skeletons; a
/// bone-split point is stored in the parent's local frame so it follows the
/// parent when the parent moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyEdge {
    pub parent: u32,
    pub child: u32,
    pub attach: Attach,
    pub child_joint: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneDoc {
    version: String,
    config: SceneConfig,
    parts: Vec<Subpart>,
    hierarchy: Vec<HierarchyEdge>,
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    parts: Vec<Subpart>,
    hierarchy: Vec<HierarchyEdge>,
    pub config: SceneConfig,
    pub scope: Option<Scope>,
    next_id: u32,
    next_seq: u64,
    cache: Option<Skeleton>,
}

impl PartialEq for Scene {
    /// Persisted fields only.
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts && self.hierarchy == other.hierarchy && self.config == other.config
    }
}

impl Scene {
    pub fn new(config: SceneConfig) -> Self {
        Scene { config, next_id: 1, ..Default::default() }
    }

    pub fn parts(&self) -> &[Subpart] {
        &self.parts
    }

    pub fn hierarchy(&self) -> &[HierarchyEdge] {
        &self.hierarchy
    }

    pub fn part(&self, id: u32) -> Option<&Subpart> {
        self.parts.iter().find(|p| p.id == id)
    }

    pub fn parent_of(&self, id: u32) -> Option<&HierarchyEdge> {
        self.hierarchy.iter().find(|e| e.child == id)
    }

    pub fn roots(&self) -> Vec<u32> {
        self.parts.iter().filter(|p| self.parent_of(p.id).is_none()).map(|p| p.id).collect()
    }

    fn invalidate(&mut self) {
        self.cache = None;
    }

    pub fn set_config(&mut self, config: SceneConfig) {
        self.config = config;
        self.invalidate();
    }

    pub fn set_scope(&mut self, scope: Option<Scope>) {
        self.scope = scope;
        self.invalidate();
    }

    /// Runs the part pipeline on `stroke`, appends the part and attaches it
    /// to an earlier part if they intersect.
    pub fn add_part(&mut self, stroke: &RawStroke, timings: &mut StageTimings) -> Result<u32, SceneError> {
        let (polygon, skeleton) = build_part(stroke, &self.config, timings)?;
        let t = Instant::now();
        let id = self.insert_part(polygon, skeleton, Transform::IDENTITY);
        timings.connect += micros_since(t);
        Ok(id)
    }

    /// Appends an already skeletonized part (local frame).
    pub fn insert_part(&mut self, polygon: SimplePolygon, skeleton: Skeleton, transform: Transform) -> u32 {
        let id = self.next_id.max(1);
        self.next_id = id + 1;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.parts.push(Subpart { id, seq, transform, polygon, skeleton });
        self.update_edge(self.parts.len() - 1);
        self.invalidate();
        id
    }

    /// Replaces the transform of one part and recomputes only that part's
    /// parent link.
    pub fn move_part(&mut self, id: u32, transform: Transform) -> Result<(), SceneError> {
        if !transform.is_valid() {
            return Err(SceneError::InvalidTransform);
        }
        let k = self.parts.iter().position(|p| p.id == id).ok_or(SceneError::UnknownPart(id))?;
        self.parts[k].transform = transform;
        self.update_edge(k);
        self.invalidate();
        Ok(())
    }

    fn update_edge(&mut self, k: usize) {
        let child_id = self.parts[k].id;
        self.hierarchy.retain(|e| e.child != child_id);
        let worlds: Vec<Skeleton> = self.parts[..=k].iter().map(Subpart::world_skeleton).collect();
        let views: Vec<PartView<'_>> = self.parts[..=k].iter().zip(&worlds).map(|(p, s)| PartView { id: p.id, skeleton: s }).collect();
        let Some(choice) = choose_parent(&views, k) else { return };
        let parent = &self.parts[choice.parent];
        let attach = match choice.plan.attach {
            Attach::BoneSplit { bone, point } => Attach::BoneSplit { bone, point: parent.transform.invert(point) },
            other => other,
        };
        let edge = HierarchyEdge { parent: parent.id, child: child_id, attach, child_joint: choice.plan.child_joint };
        let pos = self
            .hierarchy
            .iter()
            .position(|e| self.part(e.child).map_or(0, |p| p.seq) > self.parts[k].seq)
            .unwrap_or(self.hierarchy.len());
        self.hierarchy.insert(pos, edge);
    }

    /// World-frame polygons keyed by part id.
    pub fn world_polygons(&self) -> BTreeMap<u32, SimplePolygon> {
        self.parts.iter().map(|p| (p.id, p.world_polygon())).collect()
    }

    /// Part skeletons in the world frame joined along the hierarchy, before
    /// refinement. Joints carry their part id.
    pub fn connected_skeleton(&self) -> Skeleton {
        let mut global = Skeleton::default();
        let mut offset: HashMap<u32, usize> = HashMap::new();
        for p in &self.parts {
            offset.insert(p.id, global.append(&p.world_skeleton()));
        }
        // Joints inserted on each original parent bone, by bone parameter.
        let mut splits: HashMap<(u32, usize), Vec<(f64, usize)>> = HashMap::new();
        for e in &self.hierarchy {
            let (Some(parent), Some(child)) = (self.part(e.parent), self.part(e.child)) else { continue };
            let (po, co) = (offset[&parent.id], offset[&child.id]);
            let child_joint = co + e.child_joint;
            match e.attach {
                Attach::BoneSplit { bone, point } => {
                    let b = parent.skeleton.bones[bone];
                    let (a, z) = (po + b.from, po + b.to);
                    let world = parent.transform.apply(point);
                    let seg = Segment::new(global.position(a), global.position(z));
                    let t = seg.project_clamped(world);
                    let list = splits.entry((parent.id, bone)).or_default();
                    if let Some(&(_, j)) = list.iter().find(|(s, _)| (s - t).abs() <= 1e-12) {
                        apply_attach(&mut global, &Attach::JointConnect { joint: j }, None, |j| j, child_joint);
                        continue;
                    }
                    let before = list.iter().filter(|(s, _)| *s < t).max_by(|x, y| x.0.total_cmp(&y.0)).map_or(a, |&(_, j)| j);
                    let after = list.iter().filter(|(s, _)| *s > t).min_by(|x, y| x.0.total_cmp(&y.0)).map_or(z, |&(_, j)| j);
                    let gb = global
                        .bones
                        .iter()
                        .position(|bn| (bn.from, bn.to) == (before, after) || (bn.from, bn.to) == (after, before))
                        .expect("split bone chain is intact");
                    let point = seg.at(t);
                    let new = apply_attach(&mut global, &Attach::BoneSplit { bone: gb, point }, Some(gb), |j| j, child_joint);
                    list.push((t, new));
                }
                Attach::JointConnect { .. } => {
                    apply_attach(&mut global, &e.attach, None, |j| po + j, child_joint);
                }
            }
        }
        global
    }

    /// Connected skeleton refined under the scene config and scope. Cached
    /// until the next mutation.
    pub fn global_skeleton(&mut self) -> &Skeleton {
        if self.cache.is_none() {
            self.cache = Some(self.assemble_global_skeleton());
        }
        self.cache.as_ref().unwrap()
    }

    pub fn assemble_global_skeleton(&self) -> Skeleton {
        let connected = self.connected_skeleton();
        let shapes = self.world_polygons();
        refine(&connected, &self.config.refine(self.scope.unwrap_or(Scope::Global)), &shapes, &self.config.bounded_dp())
    }

    pub fn save(&self) -> Vec<u8> {
        let doc = SceneDoc {
            version: SCHEMA_VERSION.to_string(),
            config: self.config,
            parts: self.parts.clone(),
            hierarchy: self.hierarchy.clone(),
        };
        let mut out = serde_json::to_vec_pretty(&doc).expect("scene documents always serialise");
        out.push(b'\n');
        out
    }

    pub fn load(bytes: &[u8]) -> Result<Scene, SceneError> {
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| SceneError::MalformedDocument(e.to_string()))?;
        let version = value.get("version").and_then(|v| v.as_str()).ok_or_else(|| SceneError::MalformedDocument("missing version".into()))?;
        if version != SCHEMA_VERSION {
            return Err(SceneError::SchemaVersionMismatch { found: version.to_string() });
        }
        let doc: SceneDoc = serde_json::from_value(value).map_err(|e| SceneError::MalformedDocument(e.to_string()))?;
        let bad = |m: String| Err(SceneError::MalformedDocument(m));
        if !doc.config.is_valid() {
            return bad("config out of range".into());
        }
        let mut seqs = HashMap::new();
        for (k, p) in doc.parts.iter().enumerate() {
            if k > 0 && p.seq <= doc.parts[k - 1].seq {
                return bad(format!("part {} is out of modeling order", p.id));
            }
            if p.id == 0 || seqs.insert(p.id, p.seq).is_some() {
                return bad(format!("invalid or duplicate part id {}", p.id));
            }
            if !p.transform.is_valid() {
                return bad(format!("part {} has an invalid transform", p.id));
            }
        }
        let mut children = std::collections::HashSet::new();
        for e in &doc.hierarchy {
            let (Some(&ps), Some(&cs)) = (seqs.get(&e.parent), seqs.get(&e.child)) else {
                return bad(format!("hierarchy edge {}->{} references a missing part", e.parent, e.child));
            };
            if ps >= cs || !children.insert(e.child) {
                return bad(format!("hierarchy edge {}->{} breaks modeling order", e.parent, e.child));
            }
            let parent = doc.parts.iter().find(|p| p.id == e.parent).unwrap();
            let child = doc.parts.iter().find(|p| p.id == e.child).unwrap();
            let ok_ref = match e.attach {
                Attach::BoneSplit { bone, .. } => bone < parent.skeleton.bones.len(),
                Attach::JointConnect { joint } => joint < parent.skeleton.joints.len(),
            };
            if !ok_ref || e.child_joint >= child.skeleton.joints.len() {
                return bad(format!("hierarchy edge {}->{} references a missing bone or joint", e.parent, e.child));
            }
        }
        let mut hierarchy = doc.hierarchy;
        hierarchy.sort_by_key(|e| seqs[&e.child]);
        Ok(Scene {
            next_id: doc.parts.iter().map(|p| p.id).max().unwrap_or(0) + 1,
            next_seq: doc.parts.last().map_or(0, |p| p.seq + 1),
            parts: doc.parts,
            hierarchy,
            config: doc.config,
            scope: None,
            cache: None,
        })
    }
}
