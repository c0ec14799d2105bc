//! Planar primitives and predicates shared by every stage of the pipeline.
//!
//! All predicates use a fixed absolute tolerance [`EPS_GEOM`]. Canvas
//! coordinates are on the order of 10^3, so the tolerance sits far below
//! anything a stylus can resolve.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for collinearity and coincidence tests, in canvas units.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("zero-length direction")]
    ZeroLength,
}

/// A point (or free vector) in the canvas plane.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Checked constructor; rejects NaN and infinities.
    pub fn try_new(x: f64, y: f64) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(GeomError::NonFinite(x, y))
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Result<Point, GeomError> {
        let n = self.norm();
        if n <= EPS_GEOM || !n.is_finite() {
            return Err(GeomError::ZeroLength);
        }
        Ok(self / n)
    }

    #[inline]
    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    #[inline]
    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Lexicographic total order on (x, y).
    pub fn lex_cmp(&self, o: &Point) -> std::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    #[inline]
    fn div(self, s: f64) -> Point {
        Point::new(self.x / s, self.y / s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    #[inline]
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    #[inline]
    pub fn vector(&self) -> Point {
        self.b - self.a
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.vector().norm()
    }

    /// Unit direction from `a` to `b`; fails on zero-length segments.
    pub fn direction(&self) -> Result<Point, GeomError> {
        self.vector().normalized()
    }

    #[inline]
    pub fn at(&self, t: f64) -> Point {
        self.a.lerp(self.b, t)
    }

    /// Parameter of the orthogonal projection of `p`, clamped to `[0, 1]`.
    pub fn project_clamped(&self, p: Point) -> f64 {
        let d = self.vector();
        let len_sq = d.norm_sq();
        if len_sq <= EPS_GEOM * EPS_GEOM {
            return 0.0;
        }
        ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0)
    }

    pub fn closest_point(&self, p: Point) -> Point {
        self.at(self.project_clamped(p))
    }
}

/// Half-line with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point,
    direction: Point,
}

impl Ray {
    /// Normalizes `direction`; zero vectors are rejected.
    pub fn new(origin: Point, direction: Point) -> Result<Self, GeomError> {
        Ok(Ray {
            origin,
            direction: direction.normalized()?,
        })
    }

    #[inline]
    pub fn direction(&self) -> Point {
        self.direction
    }

    #[inline]
    pub fn at(&self, t: f64) -> Point {
        self.origin + self.direction * t
    }

    /// Smallest `t >= 0` at which the ray meets `seg`, if any.
    pub fn cast(&self, seg: &Segment) -> Option<f64> {
        let e = seg.vector();
        let denom = self.direction.cross(e);
        if denom.abs() <= 1e-15 {
            return None;
        }
        let w = seg.a - self.origin;
        let t = w.cross(e) / denom;
        let u = w.cross(self.direction) / denom;
        let tol = 1e-12;
        if t >= -EPS_GEOM && (-tol..=1.0 + tol).contains(&u) {
            Some(t.max(0.0))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    Collinear,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::CounterClockwise => Orientation::Clockwise,
            Orientation::Clockwise => Orientation::CounterClockwise,
            Orientation::Collinear => Orientation::Collinear,
        }
    }
}

pub fn orientation(a: Point, b: Point, c: Point) -> Orientation {
    let area2 = (b - a).cross(c - a);
    if area2 > EPS_GEOM {
        Orientation::CounterClockwise
    } else if area2 < -EPS_GEOM {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

fn on_segment(p: Point, s: &Segment) -> bool {
    orientation(s.a, s.b, p) == Orientation::Collinear
        && p.x >= s.a.x.min(s.b.x) - EPS_GEOM
        && p.x <= s.a.x.max(s.b.x) + EPS_GEOM
        && p.y >= s.a.y.min(s.b.y) - EPS_GEOM
        && p.y <= s.a.y.max(s.b.y) + EPS_GEOM
}

/// Intersection point of two closed segments.
///
/// Touching endpoints count as an intersection. For collinear overlaps the
/// returned point is the overlapping endpoint with the smallest `(x, y)`.
pub fn segment_intersect(s1: &Segment, s2: &Segment) -> Option<Point> {
    let o1 = orientation(s1.a, s1.b, s2.a);
    let o2 = orientation(s1.a, s1.b, s2.b);
    let o3 = orientation(s2.a, s2.b, s1.a);
    let o4 = orientation(s2.a, s2.b, s1.b);

    let proper = o1 != o2
        && o3 != o4
        && o1 != Orientation::Collinear
        && o2 != Orientation::Collinear
        && o3 != Orientation::Collinear
        && o4 != Orientation::Collinear;
    if proper {
        let d1 = s1.vector();
        let d2 = s2.vector();
        let t = (s2.a - s1.a).cross(d2) / d1.cross(d2);
        return Some(s1.at(t));
    }

    let mut touching: Vec<Point> = Vec::with_capacity(4);
    for (p, s) in [(s2.a, s1), (s2.b, s1), (s1.a, s2), (s1.b, s2)] {
        if on_segment(p, s) {
            touching.push(p);
        }
    }
    if touching.is_empty() {
        // Near-collinear configurations where the tolerant orientation test
        // and the exact crossing disagree.
        if o1 != o2 && o3 != o4 {
            let d1 = s1.vector();
            let d2 = s2.vector();
            let den = d1.cross(d2);
            if den.abs() > 1e-300 {
                let t = ((s2.a - s1.a).cross(d2) / den).clamp(0.0, 1.0);
                return Some(s1.at(t));
            }
        }
        return None;
    }
    touching.sort_by(Point::lex_cmp);
    Some(touching[0])
}

pub fn point_to_segment_distance(p: Point, s: &Segment) -> f64 {
    p.dist(s.closest_point(p))
}

/// Unsigned distance from `p` to the infinite line through `a` and `b`.
/// Falls back to `|p - a|` when the line is degenerate.
pub fn point_to_line_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len = d.norm();
    if len <= EPS_GEOM {
        return p.dist(a);
    }
    (d.cross(p - a) / len).abs()
}

/// Twice the signed area; positive for counter-clockwise rings.
pub fn signed_area2(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| ring[i].cross(ring[(i + 1) % n]))
        .sum()
}

pub fn ring_perimeter(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].dist(ring[(i + 1) % n])).sum()
}

/// Distance from `p` to the closed ring's boundary.
pub fn distance_to_ring(p: Point, ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| point_to_segment_distance(p, &Segment::new(ring[i], ring[(i + 1) % n])))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd point-in-polygon test. Points on the boundary may go either way;
/// use [`point_in_ring_tol`] when the boundary must count as inside.
pub fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Inside, or within `tol` of the boundary.
pub fn point_in_ring_tol(p: Point, ring: &[Point], tol: f64) -> bool {
    point_in_ring(p, ring) || distance_to_ring(p, ring) <= tol
}

/// Axis-aligned bounding box `(min, max)`.
pub fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Largest pairwise distance between points.
pub fn diameter(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(points[i].dist(points[j]));
        }
    }
    best
}

/// True when no two non-adjacent edges of the closed ring touch.
pub fn ring_is_simple(ring: &[Point]) -> bool {
    first_self_intersection(ring).is_none()
}

/// First pair of non-adjacent ring edges `(i, j)`, `i < j`, that intersect.
/// Edge `i` runs from `ring[i]` to `ring[i + 1]`.
pub fn first_self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len();
    if n < 3 {
        return None;
    }
    let edge = |i: usize| Segment::new(ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        let ei = edge(i);
        let (lo_i, hi_i) = bounding_box(&[ei.a, ei.b]);
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let ej = edge(j);
            let (lo_j, hi_j) = bounding_box(&[ej.a, ej.b]);
            if lo_j.x > hi_i.x + EPS_GEOM
                || lo_i.x > hi_j.x + EPS_GEOM
                || lo_j.y > hi_i.y + EPS_GEOM
                || lo_i.y > hi_j.y + EPS_GEOM
            {
                continue;
            }
            if adjacent {
                // Adjacent edges may only share their common vertex; a fold
                // back onto the neighbour is a self-overlap.
                let shared = if j == i + 1 { ei.b } else { ei.a };
                let (other_i, other_j) = if j == i + 1 { (ei.a, ej.b) } else { (ei.b, ej.a) };
                if n > 3
                    && orientation(ei.a, ei.b, other_j) == Orientation::Collinear
                    && (other_j - shared).dot(other_i - shared) > 0.0
                {
                    return Some((i, j));
                }
                continue;
            }
            if segment_intersect(&ei, &ej).is_some() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Intersection of two infinite lines given as point + direction.
pub fn line_intersection(p: Point, d: Point, q: Point, e: Point) -> Option<Point> {
    let den = d.cross(e);
    if den.abs() <= 1e-15 {
        return None;
    }
    let t = (q - p).cross(e) / den;
    Some(p + d * t)
}

/// Distance from `p` along `dir` and `-dir` to the nearest crossing with the
/// polygon boundary.
pub fn nearest_ring_hits(p: Point, dir: Point, ring: &[Point]) -> (Option<f64>, Option<f64>) {
    let (mut fwd, mut back): (Option<f64>, Option<f64>) = (None, None);
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let e = b - a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            continue;
        }
        let w = a - p;
        let t = w.cross(e) / denom;
        let u = w.cross(dir) / denom;
        if !(-EPS_GEOM..=1.0 + EPS_GEOM).contains(&u) {
            continue;
        }
        if t > EPS_GEOM {
            fwd = Some(fwd.map_or(t, |f| f.min(t)));
        } else if t < -EPS_GEOM {
            back = Some(back.map_or(-t, |f| f.min(-t)));
        }
    }
    (fwd, back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(orientation(p(0., 0.), p(1., 0.), p(0., 1.)), Orientation::CounterClockwise);
        assert_eq!(orientation(p(0., 0.), p(1., 0.), p(2., 0.)), Orientation::Collinear);
        assert_eq!(orientation(p(0., 0.), p(0., 1.), p(1., 0.)), Orientation::Clockwise);
    }

    #[test]
    fn segment_intersect_examples() {
        let s = |a: (f64, f64), b: (f64, f64)| Segment::new(p(a.0, a.1), p(b.0, b.1));
        let hit = segment_intersect(&s((0., 0.), (2., 0.)), &s((1., -1.), (1., 1.))).unwrap();
        assert!(hit.dist(p(1., 0.)) < 1e-12);
        assert!(segment_intersect(&s((0., 0.), (1., 0.)), &s((2., 0.), (3., 0.))).is_none());
        let touch = segment_intersect(&s((0., 0.), (1., 1.)), &s((1., 1.), (2., 0.))).unwrap();
        assert!(touch.dist(p(1., 1.)) < 1e-12);
    }

    #[test]
    fn point_segment_distance_examples() {
        let s = Segment::new(p(0., 0.), p(4., 0.));
        assert!((point_to_segment_distance(p(2., 3.), &s) - 3.0).abs() < 1e-12);
        assert!((point_to_segment_distance(p(6., 0.), &s) - 2.0).abs() < 1e-12);
        assert!((point_to_segment_distance(p(-1., 1.), &s) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn try_new_rejects_non_finite() {
        assert!(Point::try_new(f64::NAN, 0.0).is_err());
        assert!(Point::try_new(0.0, f64::INFINITY).is_err());
        assert!(Point::try_new(1.0, 2.0).is_ok());
    }

    #[test]
    fn ray_is_unit_and_rejects_zero() {
        let r = Ray::new(p(0., 0.), p(3., 4.)).unwrap();
        assert!((r.direction().norm() - 1.0).abs() < 1e-12);
        assert!(Ray::new(p(0., 0.), p(0., 0.)).is_err());
    }

    #[test]
    fn simple_ring_detection() {
        let square = [p(0., 0.), p(4., 0.), p(4., 4.), p(0., 4.)];
        assert!(ring_is_simple(&square));
        let bowtie = [p(0., 0.), p(4., 4.), p(4., 0.), p(0., 4.)];
        assert!(!ring_is_simple(&bowtie));
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1000.0..1000.0f64
    }

    fn pt() -> impl Strategy<Value = Point> {
        (coord(), coord()).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #[test]
        fn json_round_trip_is_exact(x in any::<f64>().prop_filter("finite", |v| v.is_finite()), y in -1e6..1e6f64) {
            let q = p(x, y);
            let back: Point = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
            prop_assert_eq!(back.x.to_bits(), q.x.to_bits());
            prop_assert_eq!(back.y.to_bits(), q.y.to_bits());
        }

        #[test]
        fn orientation_antisymmetric(a in pt(), b in pt(), c in pt()) {
            let o = orientation(a, b, c);
            prop_assert_eq!(orientation(b, a, c), o.reversed());
            prop_assert_eq!(orientation(a, c, b), o.reversed());
            prop_assert_eq!(orientation(c, b, a), o.reversed());
        }

        #[test]
        fn intersect_symmetric(a in pt(), b in pt(), c in pt(), d in pt()) {
            let s1 = Segment::new(a, b);
            let s2 = Segment::new(c, d);
            let x = segment_intersect(&s1, &s2);
            let y = segment_intersect(&s2, &s1);
            prop_assert_eq!(x.is_some(), y.is_some());
            if let (Some(x), Some(y)) = (x, y) {
                prop_assert!(x.dist(y) < 1e-6);
            }
        }

        #[test]
        fn distance_matches_sampling(q in pt(), a in pt(), b in pt()) {
            let s = Segment::new(a, b);
            let brute = (0..=10_000)
                .map(|k| q.dist(s.at(k as f64 / 10_000.0)))
                .fold(f64::INFINITY, f64::min);
            let d = point_to_segment_distance(q, &s);
            // Sampling resolution bounds the oracle's own error.
            let resolution = s.length() / 10_000.0;
            prop_assert!(d <= brute + 1e-9);
            prop_assert!(brute - d <= resolution * resolution / (2.0 * d.max(1e-9)) + 1e-6);
        }
    }
}
