//! Freehand stroke to simple polygon: uniform resampling, Douglas-Peucker
//! reduction and orientation/simplicity repair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    first_self_intersection, point_to_segment_distance, ring_perimeter, signed_area2, Point,
    Segment, EPS_GEOM,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrokeError {
    #[error("stroke perimeter {perimeter} is too short for step {step}")]
    DegenerateStroke { perimeter: f64, step: f64 },
    #[error("stroke outline intersects itself")]
    SelfIntersecting,
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has repeated vertex at index {0}")]
    RepeatedVertex(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("open strokes are not supported")]
    OpenStroke,
}

/// Device samples of one pen stroke.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStroke {
    pub points: Vec<Point>,
    #[serde(default = "default_closed")]
    pub closed: bool,
}

fn default_closed() -> bool {
    true
}

impl RawStroke {
    pub fn closed(points: Vec<Point>) -> Self {
        RawStroke { points, closed: true }
    }
}

/// Counter-clockwise, hole-free, non-self-intersecting polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Point>", try_from = "Vec<Point>")]
pub struct SimplePolygon {
    vertices: Vec<Point>,
    perimeter: f64,
}

impl SimplePolygon {
    /// Validates `vertices` and reorients clockwise input to counter-clockwise.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, StrokeError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(StrokeError::NonFinite);
        }
        if vertices.len() < 3 {
            return Err(StrokeError::TooFewVertices(vertices.len()));
        }
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                if vertices[i].dist(vertices[j]) <= EPS_GEOM {
                    return Err(StrokeError::RepeatedVertex(j));
                }
            }
        }
        let area2 = signed_area2(&vertices);
        if area2.abs() <= EPS_GEOM {
            return Err(StrokeError::ZeroArea);
        }
        if first_self_intersection(&vertices).is_some() {
            return Err(StrokeError::SelfIntersecting);
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let perimeter = ring_perimeter(&vertices);
        Ok(SimplePolygon { vertices, perimeter })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.vertices)
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> Segment {
        let n = self.vertices.len();
        Segment::new(self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    pub fn contains(&self, p: Point) -> bool {
        crate::geom::point_in_ring(p, &self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        crate::geom::diameter(&self.vertices)
    }

    /// Applies `f` to every vertex. Orientation-preserving maps only.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> SimplePolygon {
        let vertices: Vec<Point> = self.vertices.iter().map(|&p| f(p)).collect();
        let perimeter = ring_perimeter(&vertices);
        SimplePolygon { vertices, perimeter }
    }
}

impl From<SimplePolygon> for Vec<Point> {
    fn from(p: SimplePolygon) -> Self {
        p.vertices
    }
}

impl TryFrom<Vec<Point>> for SimplePolygon {
    type Error = StrokeError;

    fn try_from(v: Vec<Point>) -> Result<Self, StrokeError> {
        SimplePolygon::new(v)
    }
}

/// Tunables of polygon acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeConfig {
    pub step: f64,
    pub eps_poly: f64,
}

impl Default for StrokeConfig {
    fn default() -> Self {
        StrokeConfig { step: 10.0, eps_poly: 3.0 }
    }
}

/// Loops shorter than this fraction of the stroke are treated as closure
/// scribbles and cut away; larger crossings are rejected.
const REPAIR_MAX_LOOP_FRACTION: f64 = 0.1;

/// Resamples a closed stroke at equal arclength.
///
/// Produces `floor(perimeter / step)` points starting at the first sample,
/// spread evenly over the closed loop (spacing `perimeter / count`, which is
/// within one `step / count` of `step`).
pub fn uniform_discretize(stroke: &RawStroke, step: f64) -> Result<Vec<Point>, StrokeError> {
    if !stroke.closed {
        return Err(StrokeError::OpenStroke);
    }
    if stroke.points.iter().any(|p| !p.is_finite()) || !step.is_finite() || step <= 0.0 {
        return Err(StrokeError::NonFinite);
    }
    let pts = &stroke.points;
    let perimeter = if pts.len() < 2 { 0.0 } else { ring_perimeter(pts) };
    if pts.len() < 3 || perimeter <= 2.0 * step {
        return Err(StrokeError::DegenerateStroke { perimeter, step });
    }
    let count = (perimeter / step).floor() as usize;
    let spacing = perimeter / count as f64;

    let n = pts.len();
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    let mut seg_start = 0.0; // arclength at pts[seg]
    for k in 0..count {
        let target = k as f64 * spacing;
        loop {
            let len = pts[seg].dist(pts[(seg + 1) % n]);
            if target <= seg_start + len || seg == n - 1 {
                let t = if len > 0.0 { ((target - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
                out.push(pts[seg].lerp(pts[(seg + 1) % n], t));
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    Ok(out)
}

/// Douglas-Peucker on an open polyline. Returns indices of retained points,
/// ascending, always including both endpoints.
pub fn dp_simplify_indices(points: &[Point], eps: f64) -> Vec<usize> {
    let n = points.len();
    if n <= 2 || eps <= 0.0 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let chord = Segment::new(points[lo], points[hi]);
        let (mut best, mut best_d) = (lo, 0.0);
        for (i, p) in points.iter().enumerate().take(hi).skip(lo + 1) {
            let d = point_to_segment_distance(*p, &chord);
            if d > best_d {
                best = i;
                best_d = d;
            }
        }
        if best_d > eps {
            keep[best] = true;
            stack.push((lo, best));
            stack.push((best, hi));
        }
    }
    keep.iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| i).collect()
}

/// Douglas-Peucker on an open polyline. `eps <= 0` returns the input as is.
pub fn dp_simplify(points: &[Point], eps: f64) -> Vec<Point> {
    dp_simplify_indices(points, eps).into_iter().map(|i| points[i]).collect()
}

/// Closed-loop Douglas-Peucker: the ring is cut at its two mutually farthest
/// points and each half is simplified with both cut points as anchors.
pub fn dp_simplify_closed_indices(ring: &[Point], eps: f64) -> Vec<usize> {
    let n = ring.len();
    if n <= 3 || eps <= 0.0 {
        return (0..n).collect();
    }
    let (mut a, mut b, mut best) = (0, 1, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = ring[i].dist(ring[j]);
            if d > best {
                best = d;
                a = i;
                b = j;
            }
        }
    }
    let first: Vec<Point> = ring[a..=b].to_vec();
    let second: Vec<Point> = ring[b..].iter().chain(ring[..=a].iter()).copied().collect();
    let mut out: Vec<usize> = dp_simplify_indices(&first, eps).into_iter().map(|i| a + i).collect();
    out.pop(); // b again at the start of the second half
    for i in dp_simplify_indices(&second, eps) {
        out.push((b + i) % n);
    }
    out.pop(); // a again
    out.sort_unstable();
    out
}

/// Cuts small loops formed where the stroke crosses itself (typically near
/// the closure point). Returns `None` if a crossing encloses a large loop.
fn repair_small_loops(mut ring: Vec<Point>) -> Option<Vec<Point>> {
    // Each pass removes at least one vertex, so this terminates.
    while let Some((i, j)) = first_self_intersection(&ring) {
        let n = ring.len();
        let inner = j - i; // vertices i+1..=j
        let outer = n - inner;
        let small = inner.min(outer);
        if small as f64 > REPAIR_MAX_LOOP_FRACTION * n as f64 || n - small < 3 {
            return None;
        }
        let ei = Segment::new(ring[i], ring[(i + 1) % n]);
        let ej = Segment::new(ring[j], ring[(j + 1) % n]);
        let x = crate::geom::segment_intersect(&ei, &ej)?;
        ring = if inner <= outer {
            let mut r: Vec<Point> = ring[..=i].to_vec();
            r.push(x);
            r.extend_from_slice(&ring[j + 1..]);
            r
        } else {
            let mut r = vec![x];
            r.extend_from_slice(&ring[i + 1..=j]);
            r
        };
        ring.dedup_by(|a, b| a.dist(*b) <= EPS_GEOM);
        while ring.len() > 1 && ring[0].dist(ring[ring.len() - 1]) <= EPS_GEOM {
            ring.pop();
        }
    }
    Some(ring)
}

/// Raw stroke to counter-clockwise simple polygon.
pub fn acquire_polygon(stroke: &RawStroke, config: &StrokeConfig) -> Result<SimplePolygon, StrokeError> {
    let samples = uniform_discretize(stroke, config.step)?;
    let ring = repair_small_loops(samples).ok_or(StrokeError::SelfIntersecting)?;
    if ring.len() < 3 {
        return Err(StrokeError::TooFewVertices(ring.len()));
    }
    let kept = dp_simplify_closed_indices(&ring, config.eps_poly);
    let simplified: Vec<Point> = kept.into_iter().map(|i| ring[i]).collect();
    match SimplePolygon::new(simplified) {
        Err(StrokeError::RepeatedVertex(_)) => Err(StrokeError::SelfIntersecting),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point as P;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_stroke(side: f64) -> RawStroke {
        RawStroke::closed(vec![P::new(0., 0.), P::new(side, 0.), P::new(side, side), P::new(0., side)])
    }

    #[test]
    fn discretize_square() {
        let pts = uniform_discretize(&square_stroke(10.0), 10.0).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts[1].dist(P::new(10., 0.)) < 1e-9);
    }

    #[test]
    fn discretize_rejects_short_strokes() {
        let err = uniform_discretize(&square_stroke(5.0), 10.0).unwrap_err();
        assert!(matches!(err, StrokeError::DegenerateStroke { .. }));
    }

    #[test]
    fn discretize_circle_stays_on_circle() {
        // Dense polygonal circle; sample error of the chord approximation is
        // far below the tolerance with 20k device points.
        let m = 20_000;
        let pts: Vec<P> = (0..m)
            .map(|k| {
                let a = k as f64 / m as f64 * std::f64::consts::TAU;
                P::new(100.0 * a.cos(), 100.0 * a.sin())
            })
            .collect();
        let out = uniform_discretize(&RawStroke::closed(pts), 10.0).unwrap();
        assert_eq!(out.len(), 62);
        for p in &out {
            assert!((p.norm() - 100.0).abs() < 1e-3, "{p:?}");
        }
    }

    #[test]
    fn dp_examples() {
        let pts = [P::new(0., 0.), P::new(1., 0.1), P::new(2., 0.), P::new(3., -0.1), P::new(4., 0.)];
        assert_eq!(dp_simplify(&pts, 0.5), vec![P::new(0., 0.), P::new(4., 0.)]);
        let tri = [P::new(0., 0.), P::new(2., 2.), P::new(4., 0.)];
        assert_eq!(dp_simplify(&tri, 1.0).len(), 3);
        assert_eq!(dp_simplify(&pts, 0.0), pts.to_vec());
    }

    #[test]
    fn acquire_reverses_clockwise_triangle() {
        let cw = RawStroke::closed(vec![P::new(0., 0.), P::new(0., 100.), P::new(100., 0.)]);
        let poly = acquire_polygon(&cw, &StrokeConfig::default()).unwrap();
        assert!(poly.area() > 0.0);
        assert_eq!(poly.len(), 3);
    }

    #[test]
    fn acquire_rejects_figure_eight() {
        let pts: Vec<P> = (0..400)
            .map(|k| {
                let t = k as f64 / 400.0 * std::f64::consts::TAU;
                P::new(200.0 * t.sin(), 100.0 * (2.0 * t).sin())
            })
            .collect();
        let err = acquire_polygon(&RawStroke::closed(pts), &StrokeConfig::default()).unwrap_err();
        assert_eq!(err, StrokeError::SelfIntersecting);
    }

    #[test]
    fn acquire_repairs_closure_overshoot() {
        // Rectangle whose end overshoots the start and hooks back across it.
        let mut pts = vec![P::new(0., 0.), P::new(400., 0.), P::new(400., 200.), P::new(0., 200.)];
        pts.push(P::new(0., -15.));
        pts.push(P::new(12., -15.));
        pts.push(P::new(12., 8.));
        let poly = acquire_polygon(&RawStroke::closed(pts), &StrokeConfig::default()).unwrap();
        assert!(poly.area() > 0.0);
    }

    /// Hausdorff distance between two closed rings, sampled densely.
    fn ring_hausdorff(a: &[P], b: &[P]) -> f64 {
        let dense = |r: &[P]| -> Vec<P> {
            let n = r.len();
            (0..n)
                .flat_map(|i| (0..20).map(move |k| (i, k)))
                .map(|(i, k)| r[i].lerp(r[(i + 1) % n], k as f64 / 20.0))
                .collect()
        };
        let one_sided = |x: &[P], y: &[P]| {
            dense(x)
                .iter()
                .map(|p| crate::geom::distance_to_ring(*p, y))
                .fold(0.0, f64::max)
        };
        one_sided(a, b).max(one_sided(b, a))
    }

    /// Rectangle traced with low-frequency hand tremor of amplitude <= 1
    /// normal to each side; corners are hit exactly.
    fn jittered_rectangle(seed: u64) -> RawStroke {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corners = [P::new(0., 0.), P::new(400., 0.), P::new(400., 200.), P::new(0., 200.)];
        let mut pts = Vec::new();
        for i in 0..4 {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            let len = a.dist(b);
            let normal = (b - a).perp() / len;
            let (w1, w2) = (rng.gen_range(150.0..250.0), rng.gen_range(300.0..400.0));
            let (f1, f2) = (rng.gen_range(0.0..6.28), rng.gen_range(0.0..6.28));
            let m = (len / 2.0) as usize;
            for k in 0..m {
                let s = k as f64 / m as f64 * len;
                // Vanishes at both corners.
                let envelope = (std::f64::consts::PI * s / len).sin();
                let tremor = 0.5 * envelope
                    * ((std::f64::consts::TAU * s / w1 + f1).sin() + (std::f64::consts::TAU * s / w2 + f2).sin());
                pts.push(a.lerp(b, s / len) + normal * tremor);
            }
        }
        RawStroke::closed(pts)
    }

    #[test]
    fn acquire_jittered_rectangle() {
        let stroke = jittered_rectangle(3);
        let poly = acquire_polygon(&stroke, &StrokeConfig::default()).unwrap();
        assert_eq!(poly.len(), 4, "{:?}", poly.vertices());
        let corners = [P::new(0., 0.), P::new(400., 0.), P::new(400., 200.), P::new(0., 200.)];
        for c in corners {
            let d = poly.vertices().iter().map(|v| v.dist(c)).fold(f64::INFINITY, f64::min);
            assert!(d <= 3.0, "corner {c:?} off by {d}");
        }
        let samples = uniform_discretize(&stroke, 10.0).unwrap();
        assert!(ring_hausdorff(&samples, poly.vertices()) <= 3.0 + 1e-9);
    }

    #[test]
    fn acquire_output_is_subset_of_samples() {
        let stroke = jittered_rectangle(11);
        let samples = uniform_discretize(&stroke, 10.0).unwrap();
        let poly = acquire_polygon(&stroke, &StrokeConfig::default()).unwrap();
        for v in poly.vertices() {
            assert!(samples.iter().any(|s| s == v));
        }
    }

    #[test]
    fn perimeter_anchor_count() {
        // Circle with perimeter exactly 1972.28.
        let r = 1972.28 / std::f64::consts::TAU;
        let m = 50_000;
        let pts: Vec<P> = (0..m)
            .map(|k| {
                let a = k as f64 / m as f64 * std::f64::consts::TAU;
                P::new(r * a.cos(), r * a.sin())
            })
            .collect();
        // Rescale so the polygonal perimeter is exactly the target.
        let scale = 1972.28 / ring_perimeter(&pts);
        let pts: Vec<P> = pts.into_iter().map(|p| p * scale).collect();
        assert_eq!(uniform_discretize(&RawStroke::closed(pts), 10.0).unwrap().len(), 197);
    }

    fn polyline() -> impl Strategy<Value = Vec<P>> {
        prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 2..40)
            .prop_map(|v| v.into_iter().map(|(x, y)| P::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn dp_monotone_in_eps(pts in polyline(), e1 in 0.01..50.0f64, e2 in 0.01..50.0f64) {
            let (hi, lo) = if e1 >= e2 { (e1, e2) } else { (e2, e1) };
            let coarse = dp_simplify_indices(&pts, hi);
            let fine = dp_simplify_indices(&pts, lo);
            for i in coarse {
                prop_assert!(fine.contains(&i));
            }
        }

        #[test]
        fn dp_discarded_within_eps(pts in polyline(), eps in 0.01..50.0f64) {
            let kept = dp_simplify_indices(&pts, eps);
            for w in kept.windows(2) {
                let seg = Segment::new(pts[w[0]], pts[w[1]]);
                for p in &pts[w[0]..=w[1]] {
                    prop_assert!(point_to_segment_distance(*p, &seg) <= eps + 1e-9);
                }
            }
        }
    }
}
