//! Animatable joint/bone skeletons.
//!
//! Joint ids are indices into `joints`; every operation that removes joints
//! renumbers the survivors in their original relative order. Joint type
//! (terminal, sleeve, junction) is derived from the degree and never stored.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point, Segment};
use crate::sskel::{EdgeKind, StraightSkeleton, VertexKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkelError {
    #[error("straight skeleton has no interior vertex")]
    EmptySkeleton,
    #[error("bone {0} references a missing joint")]
    DanglingBone(usize),
    #[error("bone {0} is a self-loop")]
    SelfLoop(usize),
    #[error("skeleton graph contains a cycle")]
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointKind {
    Isolated,
    Terminal,
    Sleeve,
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub position: Point,
    pub radius: f64,
    /// Subpart that contributed this joint; 0 for standalone skeletons.
    pub part: u32,
}

impl Joint {
    pub fn new(position: Point) -> Self {
        Joint { position, radius: 0.0, part: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bone {
    pub from: usize,
    pub to: usize,
}

impl Bone {
    pub fn other(&self, j: usize) -> usize {
        if self.from == j {
            self.to
        } else {
            self.from
        }
    }

    fn key(&self) -> (usize, usize) {
        (self.from.min(self.to), self.from.max(self.to))
    }
}

/// Ordered joint ids from one non-sleeve end to the other.
pub type Branch = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "SkeletonDoc", try_from = "SkeletonDoc")]
pub struct Skeleton {
    pub joints: Vec<Joint>,
    pub bones: Vec<Bone>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>, bones: Vec<Bone>) -> Result<Self, SkelError> {
        let s = Skeleton { joints, bones };
        s.validate()?;
        Ok(s)
    }

    pub fn from_points(points: &[Point], bones: &[(usize, usize)]) -> Result<Self, SkelError> {
        Skeleton::new(
            points.iter().map(|&p| Joint::new(p)).collect(),
            bones.iter().map(|&(from, to)| Bone { from, to }).collect(),
        )
    }

    /// Checks ids, self-loops and acyclicity (a forest is accepted).
    pub fn validate(&self) -> Result<(), SkelError> {
        let n = self.joints.len();
        let mut dsu = Dsu::new(n);
        for (i, b) in self.bones.iter().enumerate() {
            if b.from >= n || b.to >= n {
                return Err(SkelError::DanglingBone(i));
            }
            if b.from == b.to {
                return Err(SkelError::SelfLoop(i));
            }
            if !dsu.union(b.from, b.to) {
                return Err(SkelError::Cyclic);
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn position(&self, j: usize) -> Point {
        self.joints[j].position
    }

    pub fn bone_segment(&self, b: usize) -> Segment {
        let bone = self.bones[b];
        Segment::new(self.position(bone.from), self.position(bone.to))
    }

    pub fn bone_length(&self, b: usize) -> f64 {
        self.bone_segment(b).length()
    }

    pub fn total_length(&self) -> f64 {
        (0..self.bones.len()).map(|b| self.bone_length(b)).sum()
    }

    pub fn mean_bone_length(&self) -> f64 {
        if self.bones.is_empty() {
            0.0
        } else {
            self.total_length() / self.bones.len() as f64
        }
    }

    /// For every joint, its incident `(neighbour, bone index)` pairs in bone order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.joints.len()];
        for (i, b) in self.bones.iter().enumerate() {
            adj[b.from].push((b.to, i));
            adj[b.to].push((b.from, i));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.joints.len()];
        for b in &self.bones {
            deg[b.from] += 1;
            deg[b.to] += 1;
        }
        deg
    }

    pub fn kind(&self, j: usize) -> JointKind {
        kind_of_degree(self.degrees()[j])
    }

    pub fn kinds(&self) -> Vec<JointKind> {
        self.degrees().into_iter().map(kind_of_degree).collect()
    }

    pub fn count_kind(&self, kind: JointKind) -> usize {
        self.kinds().into_iter().filter(|&k| k == kind).count()
    }

    /// Connected components as sorted joint lists, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.joints.len();
        let mut dsu = Dsu::new(n);
        for b in &self.bones {
            dsu.union(b.from, b.to);
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for j in 0..n {
            by_root.entry(dsu.find(j)).or_default().push(j);
        }
        let mut comps: Vec<Vec<usize>> = by_root.into_values().collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }

    /// Canonical topology: joint count plus the sorted undirected bone list.
    pub fn topology(&self) -> (usize, Vec<(usize, usize)>) {
        let mut bones: Vec<_> = self.bones.iter().map(Bone::key).collect();
        bones.sort_unstable();
        (self.joints.len(), bones)
    }

    pub fn map_positions(&self, f: impl Fn(Point) -> Point) -> Skeleton {
        let mut s = self.clone();
        for j in &mut s.joints {
            j.position = f(j.position);
        }
        s
    }

    /// Appends `other`, shifting its joint ids; returns the id offset.
    pub fn append(&mut self, other: &Skeleton) -> usize {
        let off = self.joints.len();
        self.joints.extend(other.joints.iter().cloned());
        self.bones.extend(other.bones.iter().map(|b| Bone { from: b.from + off, to: b.to + off }));
        off
    }

    /// Contracts each group of joints into one joint at the given position.
    ///
    /// Groups must be disjoint. Bones inside a group vanish and parallel
    /// bones are deduplicated; joints outside every group keep their data.
    /// The merged joint takes the radius and part of the group's first
    /// member. Returns the old-to-new id map.
    pub fn contract(&mut self, groups: &[(Vec<usize>, Point)]) -> Vec<usize> {
        let n = self.joints.len();
        let mut rep: Vec<usize> = (0..n).collect();
        let mut moved: Vec<Option<Point>> = vec![None; n];
        for (members, pos) in groups {
            let head = *members.iter().min().expect("empty contraction group");
            for &m in members {
                rep[m] = head;
            }
            moved[head] = Some(*pos);
        }
        let mut new_id = vec![usize::MAX; n];
        let mut joints = Vec::new();
        for j in 0..n {
            if rep[j] == j {
                new_id[j] = joints.len();
                let mut joint = self.joints[j].clone();
                if let Some(p) = moved[j] {
                    joint.position = p;
                }
                joints.push(joint);
            }
        }
        let map: Vec<usize> = (0..n).map(|j| new_id[rep[j]]).collect();
        let mut seen = BTreeSet::new();
        let mut bones = Vec::new();
        for b in &self.bones {
            let nb = Bone { from: map[b.from], to: map[b.to] };
            if nb.from != nb.to && seen.insert(nb.key()) {
                bones.push(nb);
            }
        }
        self.joints = joints;
        self.bones = bones;
        map
    }

    /// Removes the given joints and every bone touching them. Returns the
    /// old-to-new id map (`None` for removed joints).
    pub fn remove_joints(&mut self, doomed: &BTreeSet<usize>) -> Vec<Option<usize>> {
        let mut map = vec![None; self.joints.len()];
        let mut joints = Vec::new();
        for (j, joint) in self.joints.iter().enumerate() {
            if !doomed.contains(&j) {
                map[j] = Some(joints.len());
                joints.push(joint.clone());
            }
        }
        self.bones = self
            .bones
            .iter()
            .filter_map(|b| Some(Bone { from: map[b.from]?, to: map[b.to]? }))
            .collect();
        self.joints = joints;
        map
    }

    /// Joint positions along a branch.
    pub fn branch_points(&self, branch: &[usize]) -> Vec<Point> {
        branch.iter().map(|&j| self.position(j)).collect()
    }

    pub fn branch_length(&self, branch: &[usize]) -> f64 {
        branch.windows(2).map(|w| self.position(w[0]).dist(self.position(w[1]))).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    id: usize,
    x: f64,
    y: f64,
    radius: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    part: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Serialize, Deserialize)]
struct SkeletonDoc {
    joints: Vec<JointDoc>,
    bones: Vec<[usize; 2]>,
}

impl From<Skeleton> for SkeletonDoc {
    fn from(s: Skeleton) -> Self {
        SkeletonDoc {
            joints: s
                .joints
                .iter()
                .enumerate()
                .map(|(id, j)| JointDoc { id, x: j.position.x, y: j.position.y, radius: j.radius, part: j.part })
                .collect(),
            bones: s.bones.iter().map(|b| [b.from, b.to]).collect(),
        }
    }
}

impl TryFrom<SkeletonDoc> for Skeleton {
    type Error = String;

    fn try_from(doc: SkeletonDoc) -> Result<Self, String> {
        let index: std::collections::HashMap<usize, usize> =
            doc.joints.iter().enumerate().map(|(i, j)| (j.id, i)).collect();
        if index.len() != doc.joints.len() {
            return Err("duplicate joint id".into());
        }
        let mut joints = Vec::with_capacity(doc.joints.len());
        for j in &doc.joints {
            let position = Point::try_new(j.x, j.y).map_err(|e| e.to_string())?;
            if !(j.radius.is_finite() && j.radius >= 0.0) {
                return Err(format!("joint {} has invalid radius", j.id));
            }
            joints.push(Joint { position, radius: j.radius, part: j.part });
        }
        let mut bones = Vec::with_capacity(doc.bones.len());
        for [a, b] in doc.bones {
            let from = *index.get(&a).ok_or_else(|| format!("bone references unknown joint {a}"))?;
            let to = *index.get(&b).ok_or_else(|| format!("bone references unknown joint {b}"))?;
            bones.push(Bone { from, to });
        }
        Skeleton::new(joints, bones).map_err(|e| e.to_string())
    }
}

fn kind_of_degree(d: usize) -> JointKind {
    match d {
        0 => JointKind::Isolated,
        1 => JointKind::Terminal,
        2 => JointKind::Sleeve,
        _ => JointKind::Junction,
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Replaces the interior joints of each branch by a new polyline whose end
/// points are the branch ends. New joints inherit the part of the first
/// branch end and get radius 0. Branches must not share interior joints.
pub fn replace_branch_interiors(skel: &Skeleton, replacements: &[(Branch, Vec<Point>)]) -> Skeleton {
    let mut out = skel.clone();
    let mut doomed = BTreeSet::new();
    let mut doomed_bones = BTreeSet::new();
    for (branch, _) in replacements {
        doomed.extend(branch[1..branch.len() - 1].iter().copied());
        for w in branch.windows(2) {
            doomed_bones.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    out.bones.retain(|b| !doomed_bones.contains(&b.key()));
    for (branch, line) in replacements {
        let (first, last) = (branch[0], *branch.last().unwrap());
        let part = skel.joints[first].part;
        let mut prev = first;
        for &p in &line[1..line.len() - 1] {
            let id = out.joints.len();
            out.joints.push(Joint { position: p, radius: 0.0, part });
            out.bones.push(Bone { from: prev, to: id });
            prev = id;
        }
        out.bones.push(Bone { from: prev, to: last });
    }
    out.remove_joints(&doomed);
    out
}

/// Interior (skeleton) vertices and edges of a straight skeleton.
///
/// A polygon whose wavefront vanishes in a single point (square, triangle)
/// gives a single joint with no bones.
pub fn from_straight_skeleton(ss: &StraightSkeleton) -> Result<Skeleton, SkelError> {
    let mut id = vec![usize::MAX; ss.vertices.len()];
    let mut joints = Vec::new();
    for (i, v) in ss.skeleton_vertices() {
        id[i] = joints.len();
        joints.push(Joint::new(v.position));
    }
    if joints.is_empty() {
        return Err(SkelError::EmptySkeleton);
    }
    let bones = ss
        .edges_of_kind(EdgeKind::Skeleton)
        .filter(|e| ss.vertices[e.from].kind == VertexKind::Skeleton && ss.vertices[e.to].kind == VertexKind::Skeleton)
        .map(|e| Bone { from: id[e.from], to: id[e.to] })
        .collect();
    Skeleton::new(joints, bones)
}

/// Repeatedly collapses the shortest bone while it is shorter than
/// `factor` times the current mean bone length. Endpoints merge at their
/// midpoint.
pub fn collapse_short_edges(skel: &Skeleton, factor: f64) -> Skeleton {
    let mut s = skel.clone();
    while s.bones.len() > 1 {
        let Some((b, len)) = shortest_bone(&s, |_, _| true) else { break };
        if len >= factor * s.mean_bone_length() {
            break;
        }
        collapse_bone(&mut s, b);
    }
    s
}

/// Shortest bone accepted by `eligible(skel, bone index)`; ties go to the
/// lower bone index.
pub(crate) fn shortest_bone(s: &Skeleton, eligible: impl Fn(&Skeleton, usize) -> bool) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for b in 0..s.bones.len() {
        if !eligible(s, b) {
            continue;
        }
        let len = s.bone_length(b);
        if best.is_none_or(|(_, l)| len < l) {
            best = Some((b, len));
        }
    }
    best
}

pub(crate) fn collapse_bone(s: &mut Skeleton, b: usize) {
    let bone = s.bones[b];
    let mid = s.position(bone.from).midpoint(s.position(bone.to));
    s.contract(&[(vec![bone.from, bone.to], mid)]);
}

/// Decomposes a forest into branches: maximal paths whose interior joints
/// are sleeves. Each bone belongs to exactly one branch. A component that is
/// a pure path yields one branch from its lower-id end.
pub fn branches(skel: &Skeleton) -> Vec<Branch> {
    let adj = skel.adjacency();
    let mut used = vec![false; skel.bones.len()];
    let mut out = Vec::new();
    for start in 0..skel.joints.len() {
        if adj[start].len() == 2 {
            continue;
        }
        for &(next, bone) in &adj[start] {
            if used[bone] {
                continue;
            }
            used[bone] = true;
            let mut path = vec![start];
            let (mut prev, mut cur) = (start, next);
            loop {
                path.push(cur);
                if adj[cur].len() != 2 {
                    break;
                }
                let &(nn, nb) = adj[cur].iter().find(|&&(n, _)| n != prev).expect("sleeve has two neighbours");
                used[nb] = true;
                prev = cur;
                cur = nn;
            }
            out.push(path);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sskel::extract_straight_skeleton;
    use crate::stroke::SimplePolygon;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn poly(pts: &[(f64, f64)]) -> SimplePolygon {
        SimplePolygon::new(pts.iter().map(|&(x, y)| p(x, y)).collect()).unwrap()
    }

    fn path(lengths: &[f64]) -> Skeleton {
        let mut x = 0.0;
        let mut pts = vec![p(0.0, 0.0)];
        for l in lengths {
            x += l;
            pts.push(p(x, 0.0));
        }
        let bones: Vec<_> = (0..lengths.len()).map(|i| (i, i + 1)).collect();
        Skeleton::from_points(&pts, &bones).unwrap()
    }

    #[test]
    fn rectangle_gives_one_bone() {
        let ss = extract_straight_skeleton(&poly(&[(0., 0.), (8., 0.), (8., 4.), (0., 4.)])).unwrap();
        let s = from_straight_skeleton(&ss).unwrap();
        assert_eq!(s.joints.len(), 2);
        assert_eq!(s.bones.len(), 1);
        assert!((s.bone_length(0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn square_gives_single_joint() {
        let ss = extract_straight_skeleton(&poly(&[(0., 0.), (4., 0.), (4., 4.), (0., 4.)])).unwrap();
        let s = from_straight_skeleton(&ss).unwrap();
        assert_eq!(s.joints.len(), 1);
        assert!(s.bones.is_empty());
        assert!(s.position(0).dist(p(2.0, 2.0)) < 1e-9);
    }

    #[test]
    fn l_shape_counts_match_straight_skeleton() {
        let ss = extract_straight_skeleton(&poly(&[(0., 0.), (6., 0.), (6., 2.), (2., 2.), (2., 6.), (0., 6.)])).unwrap();
        let s = from_straight_skeleton(&ss).unwrap();
        assert_eq!(s.joints.len(), ss.skeleton_vertices().count());
        assert_eq!(s.bones.len(), ss.edges_of_kind(EdgeKind::Skeleton).count());
        assert_eq!(s.components().len(), 1);
    }

    #[test]
    fn collapse_examples() {
        let s = collapse_short_edges(&path(&[1.0, 9.0]), 0.5);
        assert_eq!(s.bones.len(), 1);
        assert!(s.position(0).dist(p(0.5, 0.0)) < 1e-12);

        let s = collapse_short_edges(&path(&[3.0, 3.0, 3.0]), 0.5);
        assert_eq!(s.bones.len(), 3);

        // [1,1,10]: mean 4 -> collapse first unit bone (joints 0,1 -> 0.5);
        // lengths now [1.5, 10], mean 5.75, threshold 2.875 -> collapse 1.5;
        // lengths [10.75], single bone remains.
        let s = collapse_short_edges(&path(&[1.0, 1.0, 10.0]), 0.5);
        assert_eq!(s.bones.len(), 1);
        assert!((s.bone_length(0) - 10.75).abs() < 1e-12);
    }

    #[test]
    fn branch_examples() {
        let b = branches(&path(&[1.0; 4]));
        assert_eq!(b, vec![vec![0, 1, 2, 3, 4]]);

        let pts = [p(0., 0.), p(1., 0.), p(2., 0.), p(0., 1.), p(0., 2.), p(-1., -1.), p(-2., -2.)];
        let y = Skeleton::from_points(&pts, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap();
        let b = branches(&y);
        assert_eq!(b.len(), 3);
        for br in &b {
            assert_eq!(br.len(), 3);
            assert_eq!(y.kind(br[0]), JointKind::Junction);
            assert_eq!(y.kind(br[1]), JointKind::Sleeve);
            assert_eq!(y.kind(br[2]), JointKind::Terminal);
        }
    }

    #[test]
    fn validate_rejects_cycles() {
        let pts = [p(0., 0.), p(1., 0.), p(0., 1.)];
        assert_eq!(Skeleton::from_points(&pts, &[(0, 1), (1, 2), (2, 0)]), Err(SkelError::Cyclic));
        assert_eq!(Skeleton::from_points(&pts, &[(0, 0)]), Err(SkelError::SelfLoop(0)));
    }

    /// Random tree: joint k > 0 hangs off a random earlier joint.
    pub(crate) fn arb_tree(max: usize) -> impl Strategy<Value = Skeleton> {
        (2..max).prop_flat_map(|n| {
            (
                proptest::collection::vec((-100.0..100.0f64, -100.0..100.0f64), n),
                proptest::collection::vec(any::<proptest::sample::Index>(), n - 1),
            )
                .prop_map(|(pts, parents)| {
                    let pts: Vec<Point> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
                    let bones: Vec<_> = parents.iter().enumerate().map(|(k, ix)| (ix.index(k + 1), k + 1)).collect();
                    Skeleton::from_points(&pts, &bones).unwrap()
                })
        })
    }

    #[test]
    fn json_shape_round_trips() {
        let s = path(&[1.0, 2.5]);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(
            text,
            r#"{"joints":[{"id":0,"x":0.0,"y":0.0,"radius":0.0},{"id":1,"x":1.0,"y":0.0,"radius":0.0},{"id":2,"x":3.5,"y":0.0,"radius":0.0}],"bones":[[0,1],[1,2]]}"#
        );
        assert_eq!(serde_json::from_str::<Skeleton>(&text).unwrap(), s);
        let bad = r#"{"joints":[{"id":0,"x":0,"y":0,"radius":0}],"bones":[[0,4]]}"#;
        assert!(serde_json::from_str::<Skeleton>(bad).is_err());
    }

    proptest! {
        #[test]
        fn branches_partition_bones(s in arb_tree(20)) {
            let mut seen: Vec<(usize, usize)> = Vec::new();
            let kinds = s.kinds();
            for br in branches(&s) {
                prop_assert!(kinds[br[0]] != JointKind::Sleeve);
                prop_assert!(kinds[*br.last().unwrap()] != JointKind::Sleeve);
                for w in br.windows(2) {
                    seen.push((w[0].min(w[1]), w[0].max(w[1])));
                }
                for &j in &br[1..br.len() - 1] {
                    prop_assert_eq!(kinds[j], JointKind::Sleeve);
                }
            }
            seen.sort_unstable();
            prop_assert_eq!(seen, s.topology().1);
        }

        #[test]
        fn collapse_keeps_tree_and_reaches_fixpoint(s in arb_tree(20), factor in 0.1..0.9f64) {
            let c = collapse_short_edges(&s, factor);
            prop_assert!(c.validate().is_ok());
            prop_assert_eq!(c.components().len(), 1);
            prop_assert_eq!(c.joints.len(), c.bones.len() + 1);
            if c.bones.len() > 1 {
                let thr = factor * c.mean_bone_length();
                for b in 0..c.bones.len() {
                    prop_assert!(c.bone_length(b) >= thr);
                }
            }
        }
    }
}
