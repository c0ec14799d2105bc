//! Global skeleton refinement: branch simplification, junction merging,
//! branch pruning and internal edge collapsing, each limited to a scope.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::boundeddp::{bounded_dp, BoundedDpConfig};
use crate::geom::Point;
use crate::skel::{branches, collapse_bone, replace_branch_interiors, shortest_bone, Branch, Dsu, Skeleton};
use crate::stroke::SimplePolygon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scope {
    /// Index into `branches()` of the skeleton being refined.
    Branch(usize),
    /// Part id.
    Subpart(u32),
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub eps_s: f64,
    pub eps_m: f64,
    pub eps_t: f64,
    pub eps_c: f64,
    pub scope: Scope,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { eps_s: 5.0, eps_m: 30.0, eps_t: 30.0, eps_c: 10.0, scope: Scope::Global }
    }
}

impl RefineConfig {
    pub fn identity() -> Self {
        RefineConfig { eps_s: 0.0, eps_m: 0.0, eps_t: 0.0, eps_c: 0.0, scope: Scope::Global }
    }
}

/// Polygon (in the skeleton's frame) of each part, looked up by part id.
pub trait PartShapes {
    fn shape(&self, part: u32) -> Option<&SimplePolygon>;
}

impl PartShapes for SimplePolygon {
    fn shape(&self, _part: u32) -> Option<&SimplePolygon> {
        Some(self)
    }
}

impl PartShapes for BTreeMap<u32, SimplePolygon> {
    fn shape(&self, part: u32) -> Option<&SimplePolygon> {
        self.get(&part)
    }
}

/// No shapes: simplification is skipped.
pub struct NoShapes;

impl PartShapes for NoShapes {
    fn shape(&self, _part: u32) -> Option<&SimplePolygon> {
        None
    }
}

/// A branch is simplified only when it has interior joints to drop or is
/// long relative to the skeleton's bones.
pub fn is_long_branch(skel: &Skeleton, branch: &[usize]) -> bool {
    branch.len() >= 3 || skel.branch_length(branch) >= 4.0 * skel.mean_bone_length()
}

/// BoundedDP replacement for one branch starting at threshold `eps_s`, or
/// `None` when the branch stays as is (threshold 0, spans several parts,
/// no shape, no reduction in joint count, or BoundedDP gave up).
fn simplified_branch(skel: &Skeleton, branch: &[usize], shapes: &dyn PartShapes, eps_s: f64, bdp: &BoundedDpConfig) -> Option<Vec<Point>> {
    if eps_s <= 0.0 || branch.len() < 3 || !is_long_branch(skel, branch) {
        return None;
    }
    let part = skel.joints[branch[0]].part;
    if branch.iter().any(|&j| skel.joints[j].part != part) {
        return None;
    }
    let poly = shapes.shape(part)?;
    let result = bounded_dp(&skel.branch_points(branch), poly, bdp, eps_s).ok()?;
    (result.points.len() < branch.len()).then_some(result.points)
}

/// Replaces one branch (joint ids in `skel`) by its BoundedDP simplification.
pub fn simplify_branch(skel: &Skeleton, branch: &[usize], shapes: &dyn PartShapes, eps_s: f64, bdp: &BoundedDpConfig) -> Skeleton {
    match simplified_branch(skel, branch, shapes, eps_s, bdp) {
        Some(line) => replace_branch_interiors(skel, &[(branch.to_vec(), line)]),
        None => skel.clone(),
    }
}

/// Simplifies every branch whose joints are all in scope.
pub fn simplify_branches(skel: &Skeleton, shapes: &dyn PartShapes, eps_s: f64, bdp: &BoundedDpConfig, in_scope: &dyn Fn(&Skeleton, usize) -> bool) -> Skeleton {
    let reps: Vec<(Branch, Vec<Point>)> = branches(skel)
        .into_iter()
        .filter(|b| b.iter().all(|&j| in_scope(skel, j)))
        .filter_map(|b| simplified_branch(skel, &b, shapes, eps_s, bdp).map(|line| (b, line)))
        .collect();
    if reps.is_empty() {
        skel.clone()
    } else {
        replace_branch_interiors(skel, &reps)
    }
}

/// Merges clusters of nearby junctions.
///
/// Two junctions are linked when they are the two ends of one branch and
/// lie closer than `eps_m`; clusters are the connected components of these
/// links. A cluster collapses to one joint at the centroid of its junctions;
/// the sleeves on the linking branches are absorbed, which keeps the graph a
/// forest.
pub fn merge_joints(skel: &Skeleton, eps_m: f64, in_scope: &dyn Fn(&Skeleton, usize) -> bool) -> Skeleton {
    let deg = skel.degrees();
    let mut dsu = Dsu::new(skel.joints.len());
    let mut absorbed: Vec<(usize, Vec<usize>)> = Vec::new();
    for b in branches(skel) {
        let (a, z) = (b[0], *b.last().unwrap());
        if deg[a] < 3 || deg[z] < 3 || !b.iter().all(|&j| in_scope(skel, j)) {
            continue;
        }
        if skel.position(a).dist(skel.position(z)) < eps_m {
            dsu.union(a, z);
            absorbed.push((a, b[1..b.len() - 1].to_vec()));
        }
    }
    let mut clusters: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for j in 0..skel.joints.len() {
        if deg[j] >= 3 {
            clusters.entry(dsu.find(j)).or_default().0.push(j);
        }
    }
    for (a, sleeves) in absorbed {
        clusters.get_mut(&dsu.find(a)).unwrap().1.extend(sleeves);
    }
    let groups: Vec<(Vec<usize>, Point)> = clusters
        .into_values()
        .filter(|(junctions, _)| junctions.len() > 1)
        .map(|(junctions, sleeves)| {
            let c = junctions.iter().fold(Point::default(), |s, &j| s + skel.position(j)) / junctions.len() as f64;
            (junctions.into_iter().chain(sleeves).collect(), c)
        })
        .collect();
    let mut out = skel.clone();
    if !groups.is_empty() {
        out.contract(&groups);
    }
    out
}

/// Repeatedly removes the shortest junction-to-terminal branch shorter than
/// `eps_t`; the junction itself stays.
pub fn prune_branches(skel: &Skeleton, eps_t: f64, in_scope: &dyn Fn(&Skeleton, usize) -> bool) -> Skeleton {
    let mut s = skel.clone();
    loop {
        let deg = s.degrees();
        let mut best: Option<(f64, Branch)> = None;
        for mut b in branches(&s) {
            let (a, z) = (b[0], *b.last().unwrap());
            if deg[z] >= 3 && deg[a] == 1 {
                b.reverse();
            } else if !(deg[a] >= 3 && deg[z] == 1) {
                continue;
            }
            if !b[1..].iter().all(|&j| in_scope(&s, j)) {
                continue;
            }
            let len = s.branch_length(&b);
            if len < eps_t && best.as_ref().is_none_or(|(l, _)| len < *l) {
                best = Some((len, b));
            }
        }
        let Some((_, b)) = best else { break };
        let doomed: BTreeSet<usize> = b[1..].iter().copied().collect();
        s.remove_joints(&doomed);
    }
    s
}

/// Repeatedly collapses the shortest bone between two internal joints
/// (degree >= 2) shorter than `eps_c`, merging at the midpoint.
pub fn collapse_edges(skel: &Skeleton, eps_c: f64, in_scope: &dyn Fn(&Skeleton, usize) -> bool) -> Skeleton {
    let mut s = skel.clone();
    loop {
        let deg = s.degrees();
        let eligible = |s: &Skeleton, b: usize| {
            let bone = s.bones[b];
            deg[bone.from] >= 2 && deg[bone.to] >= 2 && in_scope(s, bone.from) && in_scope(s, bone.to)
        };
        match shortest_bone(&s, eligible) {
            Some((b, len)) if len < eps_c => collapse_bone(&mut s, b),
            _ => break,
        }
    }
    s
}

fn scope_filter(scope: Scope) -> Box<dyn Fn(&Skeleton, usize) -> bool> {
    match scope {
        Scope::Subpart(p) => Box::new(move |s: &Skeleton, j: usize| s.joints[j].part == p),
        Scope::Branch(_) | Scope::Global => Box::new(|_: &Skeleton, _: usize| true),
    }
}

/// One pass of simplify, merge, prune, collapse under the scope.
fn refine_pass(skel: &Skeleton, config: &RefineConfig, shapes: &dyn PartShapes, bdp: &BoundedDpConfig, target: Option<(Point, Point)>) -> Skeleton {
    if let Scope::Branch(_) = config.scope {
        let Some((a, z)) = target else { return skel.clone() };
        let found = branches(skel).into_iter().find(|b| {
            let (p, q) = (skel.position(b[0]), skel.position(*b.last().unwrap()));
            (p, q) == (a, z) || (p, q) == (z, a)
        });
        return match found {
            Some(b) => simplify_branch(skel, &b, shapes, config.eps_s, bdp),
            None => skel.clone(),
        };
    }
    let in_scope = scope_filter(config.scope);
    let s = simplify_branches(skel, shapes, config.eps_s, bdp, &*in_scope);
    let s = merge_joints(&s, config.eps_m, &*in_scope);
    let s = prune_branches(&s, config.eps_t, &*in_scope);
    collapse_edges(&s, config.eps_c, &*in_scope)
}

/// Applies the refinement operations until a pass leaves the topology
/// unchanged, and returns the state that pass started from. A second
/// application therefore returns its input unchanged.
pub fn refine(skel: &Skeleton, config: &RefineConfig, shapes: &dyn PartShapes, bdp: &BoundedDpConfig) -> Skeleton {
    let target = match config.scope {
        Scope::Branch(k) => branches(skel).get(k).map(|b| (skel.position(b[0]), skel.position(*b.last().unwrap()))),
        _ => None,
    };
    let mut cur = skel.clone();
    // Every topology-changing pass removes at least one joint.
    for _ in 0..=skel.joints.len() {
        let next = refine_pass(&cur, config, shapes, bdp, target);
        if next.topology() == cur.topology() {
            return cur;
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skel::JointKind;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn all(_: &Skeleton, _: usize) -> bool {
        true
    }

    /// Path along the x axis through `xs`, with a vertical leg of length
    /// `leg` hanging from each x in `junctions` (which must be interior).
    fn comb(xs: &[f64], junctions: &[usize], leg: f64) -> Skeleton {
        let mut pts: Vec<Point> = xs.iter().map(|&x| p(x, 0.0)).collect();
        let mut bones: Vec<(usize, usize)> = (1..xs.len()).map(|i| (i - 1, i)).collect();
        for &j in junctions {
            pts.push(p(xs[j], -leg));
            bones.push((j, pts.len() - 1));
        }
        Skeleton::from_points(&pts, &bones).unwrap()
    }

    #[test]
    fn merge_chain_of_junctions() {
        let s = comb(&[-50., 0., 10., 25., 80.], &[1, 2, 3], 40.0);
        let m = merge_joints(&s, 30.0, &all);
        assert_eq!(m.count_kind(JointKind::Junction), 1);
        let c = m.joints.iter().find(|j| j.position.y == 0.0 && j.position.x > 0.0 && j.position.x < 20.0).unwrap();
        assert!((c.position.x - 35.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.joints.len(), s.joints.len() - 2);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn distant_junctions_untouched() {
        let s = comb(&[-50., 0., 50., 100.], &[1, 2], 40.0);
        assert_eq!(merge_joints(&s, 30.0, &all), s);
    }

    #[test]
    fn prune_examples() {
        let short = comb(&[-50., 0., 50.], &[1], 20.0);
        let pruned = prune_branches(&short, 30.0, &all);
        assert_eq!(pruned.joints.len(), 3);
        assert_eq!(pruned.count_kind(JointKind::Junction), 0);
        let long = comb(&[-50., 0., 50.], &[1], 40.0);
        assert_eq!(prune_branches(&long, 30.0, &all), long);
    }

    #[test]
    fn prune_reaches_fixpoint_on_nested_stubs() {
        // Junction at 0 with legs 10 and 12 plus a long arm; after pruning
        // the 10-leg the junction becomes a sleeve and the 12-leg survives.
        let pts = [p(0., 0.), p(10., 0.), p(0., 12.), p(-100., 0.)];
        let s = Skeleton::from_points(&pts, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let out = prune_branches(&s, 30.0, &all);
        assert_eq!(out.joints.len(), 3);
        assert!(out.joints.iter().any(|j| j.position == p(0., 12.)));
    }

    #[test]
    fn collapse_examples() {
        let s = comb(&[-50., 0., 5., 60.], &[1, 2], 40.0);
        let c = collapse_edges(&s, 10.0, &all);
        assert_eq!((c.joints.len(), c.bones.len()), (s.joints.len() - 1, s.bones.len() - 1));

        let t = Skeleton::from_points(&[p(0., 0.), p(5., 0.), p(50., 0.)], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(collapse_edges(&t, 10.0, &all), t);
    }

    #[test]
    fn collapse_cascade_matches_replay() {
        // Internal chain of bones [5,5,5] between two long terminal bones.
        let s = Skeleton::from_points(
            &[p(-50., 0.), p(0., 0.), p(5., 0.), p(10., 0.), p(15., 0.), p(65., 0.)],
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)],
        )
        .unwrap();
        // Replay: collapse (0,5) -> 2.5; chain now 2.5,10,15 with bones 7.5,5:
        // collapse (10,15) -> 12.5; bone 2.5..12.5 = 10 is not < 10.
        let c = collapse_edges(&s, 10.0, &all);
        let xs: Vec<f64> = c.joints.iter().map(|j| j.position.x).collect();
        assert_eq!(xs, vec![-50., 2.5, 12.5, 65.]);
    }

    #[test]
    fn zero_thresholds_are_identity() {
        let s = comb(&[-50., 0., 5., 25., 60.], &[1, 2, 3], 8.0);
        assert_eq!(refine(&s, &RefineConfig::identity(), &NoShapes, &BoundedDpConfig::default()), s);
    }

    #[test]
    fn subpart_scope_leaves_other_parts_alone() {
        let mut s = comb(&[-50., 0., 5., 25., 60.], &[1, 2, 3], 8.0);
        let mut other = comb(&[200., 250., 255., 300.], &[1, 2], 8.0);
        for j in &mut other.joints {
            j.part = 7;
        }
        s.append(&other);
        let cfg = RefineConfig { scope: Scope::Subpart(0), ..RefineConfig::default() };
        let r = refine(&s, &cfg, &NoShapes, &BoundedDpConfig::default());
        let before: Vec<_> = s.joints.iter().filter(|j| j.part == 7).collect();
        let after: Vec<_> = r.joints.iter().filter(|j| j.part == 7).collect();
        assert_eq!(before, after);
        assert!(r.joints.len() < s.joints.len());
    }

    #[test]
    fn refine_is_idempotent_on_comb() {
        let s = comb(&[-50., 0., 5., 25., 60., 64., 120.], &[1, 2, 3, 4, 5], 20.0);
        let cfg = RefineConfig::default();
        let once = refine(&s, &cfg, &NoShapes, &BoundedDpConfig::default());
        let twice = refine(&once, &cfg, &NoShapes, &BoundedDpConfig::default());
        assert_eq!(once, twice);
        assert!(once.joints.len() < s.joints.len());
    }

    #[test]
    fn simplify_straight_branch_in_tube() {
        let tube = SimplePolygon::new(vec![p(0., 0.), p(100., 0.), p(100., 20.), p(0., 20.)]).unwrap();
        let s = Skeleton::from_points(&[p(10., 10.), p(30., 10.), p(50., 10.), p(70., 10.), p(90., 10.)], &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let bdp = BoundedDpConfig::default();
        let out = simplify_branch(&s, &branches(&s)[0], &tube, 5.0, &bdp);
        assert_eq!(out.joints.len(), 2);
        assert_eq!(simplify_branch(&s, &branches(&s)[0], &tube, 0.0, &bdp), s);
    }

    #[test]
    fn scope_serialises() {
        assert_eq!(serde_json::to_string(&Scope::Branch(3)).unwrap(), r#"{"type":"BRANCH","id":3}"#);
        assert_eq!(serde_json::to_string(&Scope::Global).unwrap(), r#"{"type":"GLOBAL"}"#);
    }
}
