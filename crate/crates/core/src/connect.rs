//! Sub-skeleton connection: joint radii, capsule approximation, the
//! bone/joint attach distance and the bone-split / joint-connect events.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{nearest_ring_hits, point_in_ring_tol, Point, Segment, EPS_GEOM};
use crate::skel::{Bone, JointKind, Joint, Skeleton};
use crate::stroke::SimplePolygon;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectError {
    #[error("joint {0} slice found no polygon boundary")]
    SliceMiss(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DistanceCase {
    Perpendicular,
    Endpoint,
}

/// Distance from joint `vk` to bone `(vi, vj)`.
///
/// Inside the slab spanned by the bone (both dot products non-negative) the
/// distance is the perpendicular one, otherwise the nearer endpoint.
pub fn bone_joint_distance(vi: Point, vj: Point, vk: Point) -> (f64, DistanceCase) {
    let (ij, ik) = (vj - vi, vk - vi);
    let (ji, jk) = (vi - vj, vk - vj);
    if ij.dot(ik) >= 0.0 && ji.dot(jk) >= 0.0 {
        (ij.cross(ik).abs() / ij.norm(), DistanceCase::Perpendicular)
    } else {
        (ik.norm().min(jk.norm()), DistanceCase::Endpoint)
    }
}

const RAY_DIRECTIONS: usize = 36;

/// Fills joint radii from perpendicular polygon slices.
///
/// Each incident bone contributes the mean distance to the two boundary hits
/// of the slice through the joint perpendicular to that bone; a joint's
/// radius averages its bones. A joint without bones takes the mean nearest
/// hit over 36 evenly spaced rays.
pub fn compute_joint_radii(skel: &Skeleton, poly: &SimplePolygon) -> Result<Skeleton, ConnectError> {
    let ring = poly.vertices();
    let tol = EPS_GEOM * poly.diameter().max(1.0);
    let adj = skel.adjacency();
    let mut out = skel.clone();
    for (j, nbrs) in adj.iter().enumerate() {
        let p = skel.position(j);
        if !point_in_ring_tol(p, ring, tol) {
            return Err(ConnectError::SliceMiss(j));
        }
        let radius = if nbrs.is_empty() {
            let mut sum = 0.0;
            for k in 0..RAY_DIRECTIONS {
                let a = std::f64::consts::TAU * k as f64 / RAY_DIRECTIONS as f64;
                let (hit, _) = nearest_ring_hits(p, Point::new(a.cos(), a.sin()), ring);
                sum += hit.ok_or(ConnectError::SliceMiss(j))?;
            }
            sum / RAY_DIRECTIONS as f64
        } else {
            let mut sum = 0.0;
            for &(n, _) in nbrs {
                let d = (skel.position(n) - p).normalized().map_err(|_| ConnectError::SliceMiss(j))?;
                match nearest_ring_hits(p, d.perp(), ring) {
                    (Some(l), Some(r)) => sum += 0.5 * (l + r),
                    _ => return Err(ConnectError::SliceMiss(j)),
                }
            }
            sum / nbrs.len() as f64
        };
        out.joints[j].radius = radius;
    }
    Ok(out)
}

/// Discs at joints and tapered capsules along bones.
#[derive(Debug, Clone, PartialEq)]
pub struct CapsuleApprox {
    pub discs: Vec<(Point, f64)>,
    /// Bone axis with the radii at its two ends.
    pub capsules: Vec<(Segment, f64, f64)>,
}

impl CapsuleApprox {
    pub fn from_skeleton(skel: &Skeleton) -> Self {
        CapsuleApprox {
            discs: skel.joints.iter().map(|j| (j.position, j.radius)).collect(),
            capsules: skel
                .bones
                .iter()
                .map(|b| {
                    let (a, c) = (&skel.joints[b.from], &skel.joints[b.to]);
                    (Segment::new(a.position, c.position), a.radius, c.radius)
                })
                .collect(),
        }
    }

    /// Boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        self.discs.iter().any(|&(c, r)| p.dist(c) <= r)
            || self.capsules.iter().any(|&(seg, ra, rb)| {
                let t = seg.project_clamped(p);
                p.dist(seg.at(t)) <= ra + (rb - ra) * t
            })
    }
}

/// Joints that may anchor an attachment: terminals, junctions and lone joints.
pub fn candidate_joints(skel: &Skeleton) -> Vec<usize> {
    skel.kinds().iter().enumerate().filter(|(_, &k)| k != JointKind::Sleeve).map(|(j, _)| j).collect()
}

/// First candidate joint of `child` (in id order) inside the parent's capsules.
pub fn parts_intersect(parent: &CapsuleApprox, child: &Skeleton) -> Option<usize> {
    candidate_joints(child).into_iter().find(|&j| parent.contains(child.position(j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Attach {
    /// New joint at `point` on parent bone `bone`, which is split in two.
    BoneSplit { bone: usize, point: Point },
    /// Direct bone from parent joint `joint`.
    JointConnect { joint: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttachPlan {
    pub attach: Attach,
    pub child_joint: usize,
    pub distance: f64,
    pub case: DistanceCase,
}

/// Best attachment of `child` onto `parent`: the (candidate child joint,
/// parent bone) pair of minimum attach distance, first pair on ties.
///
/// A perpendicular foot that coincides with a bone end connects to that
/// joint instead of splitting. Returns `None` only for an empty parent or a
/// child without joints.
pub fn plan_attach(parent: &Skeleton, child: &Skeleton) -> Option<AttachPlan> {
    let mut best: Option<AttachPlan> = None;
    for cj in candidate_joints(child) {
        let vk = child.position(cj);
        if parent.bones.is_empty() {
            for (pj, joint) in parent.joints.iter().enumerate() {
                let d = vk.dist(joint.position);
                if best.is_none_or(|b| d < b.distance) {
                    best = Some(AttachPlan {
                        attach: Attach::JointConnect { joint: pj },
                        child_joint: cj,
                        distance: d,
                        case: DistanceCase::Endpoint,
                    });
                }
            }
            continue;
        }
        for (bi, bone) in parent.bones.iter().enumerate() {
            let (vi, vj) = (parent.position(bone.from), parent.position(bone.to));
            let (d, case) = bone_joint_distance(vi, vj, vk);
            if best.is_some_and(|b| d >= b.distance) {
                continue;
            }
            let attach = match case {
                DistanceCase::Perpendicular => {
                    let foot = Segment::new(vi, vj).closest_point(vk);
                    if foot.dist(vi) <= EPS_GEOM {
                        Attach::JointConnect { joint: bone.from }
                    } else if foot.dist(vj) <= EPS_GEOM {
                        Attach::JointConnect { joint: bone.to }
                    } else {
                        Attach::BoneSplit { bone: bi, point: foot }
                    }
                }
                DistanceCase::Endpoint => {
                    let joint = if vk.dist(vi) <= vk.dist(vj) { bone.from } else { bone.to };
                    Attach::JointConnect { joint }
                }
            };
            best = Some(AttachPlan { attach, child_joint: cj, distance: d, case });
        }
    }
    best
}

/// Applies an attachment inside a combined skeleton. `parent_bone` maps the
/// plan's parent bone onto a bone of `skel`, `parent_joint` maps parent joint
/// ids and `child_joint` is the child's joint id in `skel`. Returns the id of
/// the parent-side joint of the new connecting bone.
pub fn apply_attach(skel: &mut Skeleton, attach: &Attach, parent_bone: Option<usize>, parent_joint: impl Fn(usize) -> usize, child_joint: usize) -> usize {
    let anchor = match *attach {
        Attach::BoneSplit { point, .. } => {
            let b = parent_bone.expect("bone split needs the parent bone");
            let bone = skel.bones[b];
            let part = skel.joints[bone.from].part;
            let id = skel.joints.len();
            skel.joints.push(Joint { position: point, radius: interpolated_radius(skel, bone, point), part });
            skel.bones[b] = Bone { from: bone.from, to: id };
            skel.bones.push(Bone { from: id, to: bone.to });
            id
        }
        Attach::JointConnect { joint } => parent_joint(joint),
    };
    skel.bones.push(Bone { from: anchor, to: child_joint });
    anchor
}

fn interpolated_radius(skel: &Skeleton, bone: Bone, p: Point) -> f64 {
    let (a, b) = (&skel.joints[bone.from], &skel.joints[bone.to]);
    let t = Segment::new(a.position, b.position).project_clamped(p);
    a.radius + (b.radius - a.radius) * t
}

/// Connects `child` to `parent` at the best attachment. The combined
/// skeleton holds the parent joints first, then the child joints, then the
/// split joint if one was created.
pub fn attach(parent: &Skeleton, child: &Skeleton) -> Option<(AttachPlan, Skeleton)> {
    let plan = plan_attach(parent, child)?;
    let mut combined = parent.clone();
    let off = combined.append(child);
    let bone = match plan.attach {
        Attach::BoneSplit { bone, .. } => Some(bone),
        Attach::JointConnect { .. } => None,
    };
    apply_attach(&mut combined, &plan.attach, bone, |j| j, plan.child_joint + off);
    Some((plan, combined))
}

/// One part in modeling order as seen by the hierarchy builder: world-frame
/// skeleton with radii filled.
#[derive(Debug, Clone)]
pub struct PartView<'a> {
    pub id: u32,
    pub skeleton: &'a Skeleton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentChoice {
    /// Index into the parts slice.
    pub parent: usize,
    pub plan: AttachPlan,
}

/// Parent for part `k` among parts `0..k`: every earlier part whose capsules
/// contain a candidate joint of part `k`, keeping the smallest attach
/// distance; ties go to the earlier part.
pub fn choose_parent(parts: &[PartView<'_>], k: usize) -> Option<ParentChoice> {
    let child = parts[k].skeleton;
    let mut best: Option<ParentChoice> = None;
    for (j, parent) in parts[..k].iter().enumerate() {
        let caps = CapsuleApprox::from_skeleton(parent.skeleton);
        if parts_intersect(&caps, child).is_none() {
            continue;
        }
        if let Some(plan) = plan_attach(parent.skeleton, child) {
            if best.is_none_or(|b| plan.distance < b.plan.distance) {
                best = Some(ParentChoice { parent: j, plan });
            }
        }
    }
    best
}

/// Parent choice for every part in modeling order; `None` marks a root.
pub fn assign_hierarchy(parts: &[PartView<'_>]) -> Vec<Option<ParentChoice>> {
    (0..parts.len()).map(|k| choose_parent(parts, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::min_distance_oracle;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn with_radii(s: Skeleton, radii: &[f64]) -> Skeleton {
        let mut s = s;
        for (j, &r) in s.joints.iter_mut().zip(radii) {
            j.radius = r;
        }
        s
    }

    #[test]
    fn distance_examples() {
        assert_eq!(bone_joint_distance(p(0., 0.), p(4., 0.), p(2., 3.)), (3.0, DistanceCase::Perpendicular));
        assert_eq!(bone_joint_distance(p(0., 0.), p(4., 0.), p(6., 0.)), (2.0, DistanceCase::Endpoint));
        assert_eq!(bone_joint_distance(p(0., 0.), p(4., 0.), p(0., 5.)), (5.0, DistanceCase::Perpendicular));
    }

    #[test]
    fn rectangle_joint_radius() {
        let poly = SimplePolygon::new(vec![p(0., 0.), p(8., 0.), p(8., 4.), p(0., 4.)]).unwrap();
        let s = Skeleton::from_points(&[p(2., 2.), p(6., 2.)], &[(0, 1)]).unwrap();
        let r = compute_joint_radii(&s, &poly).unwrap();
        assert!((r.joints[0].radius - 2.0).abs() < 1e-12);
        assert!((r.joints[1].radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wedge_joint_radius_is_half_width() {
        let wedge = SimplePolygon::new(vec![p(0., -10.), p(50., -2.), p(50., 2.), p(0., 10.)]).unwrap();
        let s = Skeleton::from_points(&[p(10., 0.), p(30., 0.)], &[(0, 1)]).unwrap();
        let r = compute_joint_radii(&s, &wedge).unwrap();
        for j in &r.joints {
            assert!((j.radius - (10.0 - 8.0 * j.position.x / 50.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn junction_radius_averages_bones() {
        // T-shaped polygon: bar [0,20]x[6,10], stem [8,12]x[0,6].
        let t = SimplePolygon::new(vec![p(8., 0.), p(12., 0.), p(12., 6.), p(20., 6.), p(20., 10.), p(0., 10.), p(0., 6.), p(8., 6.)]).unwrap();
        let s = Skeleton::from_points(&[p(10., 8.), p(2., 8.), p(18., 8.), p(10., 2.)], &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let r = compute_joint_radii(&s, &t).unwrap();
        // Horizontal bones slice vertically: hits at y=10 and y=0 -> (2 + 8) / 2 = 5.
        // Vertical bone slices horizontally: hits at x=0 and x=20 -> 10.
        assert!((r.joints[0].radius - (5.0 + 5.0 + 10.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lone_joint_radius_from_rays() {
        let sq = SimplePolygon::new(vec![p(0., 0.), p(4., 0.), p(4., 4.), p(0., 4.)]).unwrap();
        let s = Skeleton::from_points(&[p(2., 2.)], &[]).unwrap();
        let r = compute_joint_radii(&s, &sq).unwrap();
        let expected: f64 = (0..36)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 36.0;
                2.0 / a.cos().abs().max(a.sin().abs())
            })
            .sum::<f64>()
            / 36.0;
        assert!((r.joints[0].radius - expected).abs() < 1e-9);
    }

    #[test]
    fn joint_outside_polygon_misses() {
        let sq = SimplePolygon::new(vec![p(0., 0.), p(4., 0.), p(4., 4.), p(0., 4.)]).unwrap();
        let s = Skeleton::from_points(&[p(9., 2.)], &[]).unwrap();
        assert_eq!(compute_joint_radii(&s, &sq), Err(ConnectError::SliceMiss(0)));
    }

    #[test]
    fn capsule_examples() {
        let parent = with_radii(Skeleton::from_points(&[p(0., 0.), p(10., 0.)], &[(0, 1)]).unwrap(), &[2., 2.]);
        let caps = CapsuleApprox::from_skeleton(&parent);
        let near = Skeleton::from_points(&[p(5., 1.), p(5., 8.)], &[(0, 1)]).unwrap();
        assert_eq!(parts_intersect(&caps, &near), Some(0));
        let far = Skeleton::from_points(&[p(5., 5.)], &[]).unwrap();
        assert_eq!(parts_intersect(&caps, &far), None);
        let tapered = with_radii(parent, &[1., 3.]);
        assert!(CapsuleApprox::from_skeleton(&tapered).contains(p(5., 2.)));
        assert!(!CapsuleApprox::from_skeleton(&tapered).contains(p(5., 2.0 + 1e-9)));
    }

    #[test]
    fn bone_split_event() {
        let parent = Skeleton::from_points(&[p(0., 0.), p(10., 0.)], &[(0, 1)]).unwrap();
        let child = Skeleton::from_points(&[p(5., 3.), p(5., 9.)], &[(0, 1)]).unwrap();
        let (plan, s) = attach(&parent, &child).unwrap();
        assert_eq!(plan.attach, Attach::BoneSplit { bone: 0, point: p(5., 0.) });
        assert_eq!(plan.child_joint, 0);
        assert_eq!(s.joints.len(), 5);
        assert_eq!(s.bones.len(), 4);
        assert!(s.validate().is_ok());
        assert_eq!(s.topology().1, vec![(0, 4), (1, 4), (2, 3), (2, 4)]);
    }

    #[test]
    fn joint_connect_event() {
        let parent = Skeleton::from_points(&[p(0., 0.), p(10., 0.)], &[(0, 1)]).unwrap();
        let child = Skeleton::from_points(&[p(12., 1.), p(20., 1.)], &[(0, 1)]).unwrap();
        let (plan, s) = attach(&parent, &child).unwrap();
        assert_eq!(plan.attach, Attach::JointConnect { joint: 1 });
        assert_eq!(s.joints.len(), 4);
        assert_eq!(s.bones.len(), 3);
    }

    #[test]
    fn foot_on_bone_end_connects_to_joint() {
        let parent = Skeleton::from_points(&[p(0., 0.), p(4., 0.)], &[(0, 1)]).unwrap();
        let child = Skeleton::from_points(&[p(0., 5.)], &[]).unwrap();
        let (plan, _) = attach(&parent, &child).unwrap();
        assert_eq!(plan.attach, Attach::JointConnect { joint: 0 });
        assert_eq!(plan.case, DistanceCase::Perpendicular);
    }

    #[test]
    fn attach_serialises_with_type_tag() {
        let a = Attach::BoneSplit { bone: 2, point: p(1.5, 0.0) };
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"type":"BONE_SPLIT","bone":2,"point":[1.5,0.0]}"#);
        let b = Attach::JointConnect { joint: 4 };
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"type":"JOINT_CONNECT","joint":4}"#);
    }

    #[test]
    fn hierarchy_examples() {
        let torso = with_radii(Skeleton::from_points(&[p(0., 0.), p(100., 0.)], &[(0, 1)]).unwrap(), &[20., 20.]);
        let leg = Skeleton::from_points(&[p(30., 10.), p(30., -80.)], &[(0, 1)]).unwrap();
        let island = Skeleton::from_points(&[p(500., 500.), p(600., 500.)], &[(0, 1)]).unwrap();
        let parts = [
            PartView { id: 1, skeleton: &torso },
            PartView { id: 2, skeleton: &leg },
            PartView { id: 3, skeleton: &island },
        ];
        let h = assign_hierarchy(&parts);
        assert!(h[0].is_none());
        assert_eq!(h[1].unwrap().parent, 0);
        assert!(h[2].is_none());
    }

    #[test]
    fn closer_parent_wins() {
        let a = with_radii(Skeleton::from_points(&[p(0., 0.), p(100., 0.)], &[(0, 1)]).unwrap(), &[30., 30.]);
        let b = with_radii(Skeleton::from_points(&[p(0., 20.), p(100., 20.)], &[(0, 1)]).unwrap(), &[30., 30.]);
        let c = Skeleton::from_points(&[p(50., 15.), p(50., 200.)], &[(0, 1)]).unwrap();
        let parts = [PartView { id: 1, skeleton: &a }, PartView { id: 2, skeleton: &b }, PartView { id: 3, skeleton: &c }];
        assert_eq!(choose_parent(&parts, 2).unwrap().parent, 1);
        let c_mid = Skeleton::from_points(&[p(50., 10.), p(50., 200.)], &[(0, 1)]).unwrap();
        let parts = [PartView { id: 1, skeleton: &a }, PartView { id: 2, skeleton: &b }, PartView { id: 3, skeleton: &c_mid }];
        assert_eq!(choose_parent(&parts, 2).unwrap().parent, 0);
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #[test]
        fn distance_matches_sampling(vi in arb_point(), vj in arb_point(), vk in arb_point()) {
            prop_assume!(vi.dist(vj) > 1e-3);
            let (d, case) = bone_joint_distance(vi, vj, vk);
            let oracle = min_distance_oracle(vk, &Segment::new(vi, vj), 10_001);
            prop_assert!((d - oracle).abs() < 1e-6, "{} vs {}", d, oracle);
            let inside = (vj - vi).dot(vk - vi) >= 0.0 && (vi - vj).dot(vk - vj) >= 0.0;
            prop_assert_eq!(case == DistanceCase::Perpendicular, inside);
        }

        #[test]
        fn split_foot_lies_on_bone(vi in arb_point(), vj in arb_point(), vk in arb_point()) {
            prop_assume!(vi.dist(vj) > 1e-3);
            let parent = Skeleton::from_points(&[vi, vj], &[(0, 1)]).unwrap();
            let child = Skeleton::from_points(&[vk], &[]).unwrap();
            let (plan, s) = attach(&parent, &child).unwrap();
            prop_assert!(s.validate().is_ok());
            match plan.attach {
                Attach::BoneSplit { point, .. } => {
                    let seg = Segment::new(vi, vj);
                    let t = (point - vi).dot(seg.vector()) / seg.vector().norm_sq();
                    prop_assert!((0.0..=1.0).contains(&t));
                    prop_assert!(crate::geom::point_to_segment_distance(point, &seg) <= EPS_GEOM * 100.0);
                    prop_assert_eq!((s.joints.len(), s.bones.len()), (4, 3));
                }
                Attach::JointConnect { .. } => prop_assert_eq!((s.joints.len(), s.bones.len()), (3, 2)),
            }
        }
    }
}
