//! Shape-bounded simplification of skeleton branches.
//!
//! A branch polyline is interpolated by a centripetal Catmull-Rom spline and
//! resampled uniformly by arclength. At each sample the polygon is sliced
//! perpendicular to the axis; the nearest boundary hit on either side bounds
//! the local tube. The tube region is the left hit chain followed by the
//! reversed right chain. Point selection is Douglas-Peucker driven by the
//! error `E_i = d_perp + alpha_s * (d_plus + d_minus)`, where the shape term
//! compares each slice with the linear interpolation of the two end slices
//! after straightening the axis. The threshold shrinks by `alpha` until every
//! simplified edge stays inside the region.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{bounding_box, nearest_ring_hits, point_in_ring_tol, point_to_line_distance, Point, Segment, EPS_GEOM};
use crate::stroke::SimplePolygon;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundedDpError {
    #[error("slice at axis sample {0} has no boundary hit on one side")]
    DegenerateSlice(usize),
    #[error("containment not reached after {0} threshold reductions")]
    IterationLimit(usize),
    #[error("branch needs at least two distinct points")]
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedDpConfig {
    pub alpha_s: f64,
    /// Initial threshold as a fraction of the branch bounding-box diagonal.
    pub eps0_factor: f64,
    pub alpha: f64,
    pub max_iterations: usize,
}

impl Default for BoundedDpConfig {
    fn default() -> Self {
        BoundedDpConfig { alpha_s: 1.0, eps0_factor: 0.5, alpha: 0.8, max_iterations: 40 }
    }
}

/// Samples per spline span used for arclength tables.
const SPAN_RESOLUTION: usize = 64;
const MIN_SAMPLES: usize = 16;
const MAX_SAMPLES: usize = 1024;
/// Samples per simplified edge for the containment test.
pub const CONTAINMENT_SAMPLES: usize = 64;

/// Centripetal Catmull-Rom spline through a point sequence.
///
/// The end tangents come from reflected phantom points, so two points give
/// a straight segment.
#[derive(Debug, Clone)]
pub struct CatmullRom {
    ctrl: Vec<Point>,
    knots: Vec<f64>,
}

pub fn fit_branch_spline(points: &[Point]) -> Result<CatmullRom, BoundedDpError> {
    let mut pts: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if pts.last().is_none_or(|q: &Point| q.dist(p) > EPS_GEOM) {
            pts.push(p);
        }
    }
    if pts.len() < 2 {
        return Err(BoundedDpError::TooShort);
    }
    let n = pts.len();
    let mut ctrl = Vec::with_capacity(n + 2);
    ctrl.push(pts[0] * 2.0 - pts[1]);
    ctrl.extend_from_slice(&pts);
    ctrl.push(pts[n - 1] * 2.0 - pts[n - 2]);
    let mut knots = vec![0.0];
    for w in ctrl.windows(2) {
        let last = *knots.last().unwrap();
        knots.push(last + w[0].dist(w[1]).sqrt());
    }
    Ok(CatmullRom { ctrl, knots })
}

impl CatmullRom {
    pub fn spans(&self) -> usize {
        self.ctrl.len() - 3
    }

    /// Point on span `k` (between interpolated points `k` and `k + 1`) at
    /// local parameter `s` in `[0, 1]`.
    pub fn eval(&self, k: usize, s: f64) -> Point {
        let (p0, p1, p2, p3) = (self.ctrl[k], self.ctrl[k + 1], self.ctrl[k + 2], self.ctrl[k + 3]);
        let (t0, t1, t2, t3) = (self.knots[k], self.knots[k + 1], self.knots[k + 2], self.knots[k + 3]);
        let t = t1 + (t2 - t1) * s;
        let mix = |a: Point, b: Point, ta: f64, tb: f64| {
            if tb - ta <= 0.0 {
                a
            } else {
                a * ((tb - t) / (tb - ta)) + b * ((t - ta) / (tb - ta))
            }
        };
        let a1 = mix(p0, p1, t0, t1);
        let a2 = mix(p1, p2, t1, t2);
        let a3 = mix(p2, p3, t2, t3);
        let b1 = mix(a1, a2, t0, t2);
        let b2 = mix(a2, a3, t1, t3);
        mix(b1, b2, t1, t2)
    }

    /// Dense polyline approximation with `SPAN_RESOLUTION` pieces per span.
    fn dense(&self) -> Vec<(usize, f64, Point)> {
        let mut out = Vec::with_capacity(self.spans() * SPAN_RESOLUTION + 1);
        for k in 0..self.spans() {
            for j in 0..SPAN_RESOLUTION {
                let s = j as f64 / SPAN_RESOLUTION as f64;
                out.push((k, s, self.eval(k, s)));
            }
        }
        let last = self.spans() - 1;
        out.push((last, 1.0, self.eval(last, 1.0)));
        out
    }

    pub fn arclength(&self) -> f64 {
        self.dense().windows(2).map(|w| w[0].2.dist(w[1].2)).sum()
    }

    /// `n >= 2` samples uniformly spaced in arclength, with unit tangents.
    pub fn sample_uniform(&self, n: usize) -> AxisSamples {
        let dense = self.dense();
        let mut cum = vec![0.0];
        for w in dense.windows(2) {
            cum.push(cum.last().unwrap() + w[0].2.dist(w[1].2));
        }
        let total = *cum.last().unwrap();
        let mut points = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut seg = 0;
        for i in 0..n {
            let target = total * i as f64 / (n - 1) as f64;
            while seg + 2 < cum.len() && cum[seg + 1] < target {
                seg += 1;
            }
            let (a, b) = (&dense[seg], &dense[seg + 1]);
            let span_len = cum[seg + 1] - cum[seg];
            let f = if span_len > 0.0 { ((target - cum[seg]) / span_len).clamp(0.0, 1.0) } else { 0.0 };
            let (k, s) = if a.0 == b.0 { (a.0, a.1 + (b.1 - a.1) * f) } else { (a.0, a.1 + (1.0 - a.1) * f) };
            let p = if i == 0 {
                dense[0].2
            } else if i == n - 1 {
                dense[dense.len() - 1].2
            } else {
                self.eval(k, s)
            };
            points.push(p);
            tangents.push(self.tangent(k, s, b.2 - a.2));
        }
        AxisSamples { points, tangents, spacing: total / (n - 1) as f64 }
    }

    fn tangent(&self, k: usize, s: f64, fallback: Point) -> Point {
        let h = 1e-4;
        let (lo, hi) = ((s - h).max(0.0), (s + h).min(1.0));
        let d = self.eval(k, hi) - self.eval(k, lo);
        d.normalized().or_else(|_| fallback.normalized()).unwrap_or(Point::new(1.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSamples {
    pub points: Vec<Point>,
    /// Unit tangent at each sample.
    pub tangents: Vec<Point>,
    pub spacing: f64,
}

/// Perpendicular cross-section at one axis sample: `left` lies on the
/// left of the axis direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    pub left: Point,
    pub right: Point,
}

impl Slice {
    pub fn segment(&self) -> Segment {
        Segment::new(self.left, self.right)
    }

    pub fn length(&self) -> f64 {
        self.left.dist(self.right)
    }
}

#[derive(Debug, Clone)]
pub struct GeneralCylinder {
    pub axis: AxisSamples,
    pub slices: Vec<Slice>,
    /// Left hit chain followed by the reversed right chain.
    pub region: Vec<Point>,
}

impl GeneralCylinder {
    /// Half-widths (left, right) of each slice, i.e. the straightened view
    /// in which the axis is a horizontal line.
    pub fn half_widths(&self) -> Vec<(f64, f64)> {
        self.axis.points.iter().zip(&self.slices).map(|(p, s)| (p.dist(s.left), p.dist(s.right))).collect()
    }

    pub fn region_is_simple(&self) -> bool {
        SimplePolygon::new(self.region.clone()).is_ok()
    }
}

/// Slices the polygon at each axis sample and closes the tube region.
pub fn build_general_cylinder(axis: AxisSamples, poly: &SimplePolygon) -> Result<GeneralCylinder, BoundedDpError> {
    let ring = poly.vertices();
    let tol = EPS_GEOM * poly.diameter().max(1.0);
    let mut slices = Vec::with_capacity(axis.points.len());
    for (i, (&p, &t)) in axis.points.iter().zip(&axis.tangents).enumerate() {
        if !point_in_ring_tol(p, ring, tol) {
            return Err(BoundedDpError::DegenerateSlice(i));
        }
        let n = t.perp();
        match nearest_ring_hits(p, n, ring) {
            (Some(l), Some(r)) => slices.push(Slice { left: p + n * l, right: p - n * r }),
            _ => return Err(BoundedDpError::DegenerateSlice(i)),
        }
    }
    let mut region: Vec<Point> = Vec::with_capacity(2 * slices.len());
    for s in slices.iter().map(|s| s.left).chain(slices.iter().rev().map(|s| s.right)) {
        if region.last().is_none_or(|q| q.dist(s) > tol) {
            region.push(s);
        }
    }
    while region.len() > 1 && region[0].dist(*region.last().unwrap()) <= tol {
        region.pop();
    }
    Ok(GeneralCylinder { axis, slices, region })
}

/// `E_i` for sample `i` relative to the chord `(st, en)`.
pub fn point_selection_error(i: usize, st: usize, en: usize, points: &[Point], widths: &[(f64, f64)], alpha_s: f64) -> f64 {
    let (a, b) = (points[st], points[en]);
    let d_perp = if a.dist(b) > 0.0 { point_to_line_distance(points[i], a, b) } else { points[i].dist(a) };
    if alpha_s == 0.0 {
        return d_perp;
    }
    let f = (i - st) as f64 / (en - st) as f64;
    let lerp = |u: f64, v: f64| u + (v - u) * f;
    let d_plus = (widths[i].0 - lerp(widths[st].0, widths[en].0)).abs();
    let d_minus = (widths[i].1 - lerp(widths[st].1, widths[en].1)).abs();
    d_perp + alpha_s * (d_plus + d_minus)
}

/// Recursive max-error selection between `st` and `en` (inclusive).
///
/// The arg-max sample is retained and both halves recursed only when its
/// error exceeds `eps`. Endpoints are always retained. `widths` may be empty
/// when `alpha_s` is zero.
pub fn bounded_dp_select(points: &[Point], widths: &[(f64, f64)], st: usize, en: usize, eps: f64, alpha_s: f64) -> Vec<bool> {
    let mut keep = vec![false; points.len()];
    keep[st] = true;
    keep[en] = true;
    let mut stack = vec![(st, en)];
    while let Some((s, e)) = stack.pop() {
        if e <= s + 1 {
            continue;
        }
        let (mut imax, mut emax) = (s, 0.0);
        for i in s + 1..e {
            let err = point_selection_error(i, s, e, points, widths, alpha_s);
            if err > emax {
                imax = i;
                emax = err;
            }
        }
        if emax > eps {
            keep[imax] = true;
            stack.push((imax, e));
            stack.push((s, imax));
        }
    }
    keep
}

/// Every simplified edge sampled at `CONTAINMENT_SAMPLES` points lies in the
/// region ring (boundary tolerance `tol`).
pub fn polyline_inside(polyline: &[Point], region: &[Point], tol: f64) -> bool {
    polyline.windows(2).all(|w| {
        (0..=CONTAINMENT_SAMPLES).all(|k| point_in_ring_tol(w[0].lerp(w[1], k as f64 / CONTAINMENT_SAMPLES as f64), region, tol))
    })
}

/// Outcome of the threshold-tuning loop.
#[derive(Debug, Clone)]
pub struct BoundedDpResult {
    pub points: Vec<Point>,
    /// Final threshold used.
    pub eps: f64,
    /// Threshold reductions performed.
    pub reductions: usize,
    pub cylinder: GeneralCylinder,
    /// False when the sliced region was not simple and the whole polygon
    /// served as the bound instead.
    pub region_used: bool,
}

/// Threshold-tuning loop over precomputed axis samples and slices. `region`
/// of `None` means the whole plane.
pub fn tune_threshold(
    points: &[Point],
    widths: &[(f64, f64)],
    region: Option<&[Point]>,
    eps0: f64,
    config: &BoundedDpConfig,
    tol: f64,
) -> Result<(Vec<usize>, f64, usize), BoundedDpError> {
    let n = points.len();
    let mut eps = eps0;
    for reductions in 0..=config.max_iterations {
        let keep = bounded_dp_select(points, widths, 0, n - 1, eps, config.alpha_s);
        let idx: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        let line: Vec<Point> = idx.iter().map(|&i| points[i]).collect();
        if region.is_none_or(|r| polyline_inside(&line, r, tol)) {
            return Ok((idx, eps, reductions));
        }
        eps *= config.alpha;
    }
    Err(BoundedDpError::IterationLimit(config.max_iterations))
}

/// Default initial threshold for a branch: a fraction of its bounding-box
/// diagonal.
pub fn initial_threshold(points: &[Point], config: &BoundedDpConfig) -> f64 {
    let (lo, hi) = bounding_box(points);
    config.eps0_factor * lo.dist(hi)
}

/// Simplifies a branch polyline inside `poly`, starting at threshold `eps0`.
///
/// The returned polyline keeps both endpoints exactly; interior points are
/// axis samples of the interpolating spline.
pub fn bounded_dp(branch: &[Point], poly: &SimplePolygon, config: &BoundedDpConfig, eps0: f64) -> Result<BoundedDpResult, BoundedDpError> {
    let curve = fit_branch_spline(branch)?;
    let probe = build_general_cylinder(curve.sample_uniform(MIN_SAMPLES), poly)?;
    let mean_slice = probe.slices.iter().map(Slice::length).sum::<f64>() / probe.slices.len() as f64;
    let length = probe.axis.spacing * (MIN_SAMPLES - 1) as f64;
    let n = if mean_slice > 0.0 { (length / (0.5 * mean_slice)).ceil() as usize } else { MIN_SAMPLES };
    let n = n.clamp(MIN_SAMPLES, MAX_SAMPLES);
    let cylinder = if n == MIN_SAMPLES { probe } else { build_general_cylinder(curve.sample_uniform(n), poly)? };
    let widths = cylinder.half_widths();
    let tol = EPS_GEOM * poly.diameter().max(1.0);
    let region_used = cylinder.region_is_simple();
    let region: &[Point] = if region_used { &cylinder.region } else { poly.vertices() };
    let (idx, eps, reductions) = tune_threshold(&cylinder.axis.points, &widths, Some(region), eps0, config, tol)?;
    let mut points: Vec<Point> = idx.iter().map(|&i| cylinder.axis.points[i]).collect();
    points[0] = branch[0];
    *points.last_mut().unwrap() = *branch.last().unwrap();
    Ok(BoundedDpResult { points, eps, reductions, cylinder, region_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn rect(w: f64, h: f64) -> SimplePolygon {
        SimplePolygon::new(vec![p(0., 0.), p(w, 0.), p(w, h), p(0., h)]).unwrap()
    }

    #[test]
    fn two_points_give_a_segment() {
        let c = fit_branch_spline(&[p(0., 0.), p(10., 0.)]).unwrap();
        for k in 0..=10 {
            let q = c.eval(0, k as f64 / 10.0);
            assert!(q.y.abs() < 1e-12 && (-1e-12..=10.0 + 1e-12).contains(&q.x));
        }
        assert!((c.arclength() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_stay_on_line() {
        let pts = [p(0., 0.), p(1., 1.), p(3., 3.), p(7., 7.)];
        let c = fit_branch_spline(&pts).unwrap();
        for k in 0..c.spans() {
            for j in 0..=20 {
                let q = c.eval(k, j as f64 / 20.0);
                assert!(point_to_line_distance(q, pts[0], pts[3]) < 1e-9);
            }
        }
    }

    #[test]
    fn spline_interpolates_zigzag() {
        let pts = [p(0., 0.), p(3., 4.), p(6., 0.), p(9., 4.)];
        let c = fit_branch_spline(&pts).unwrap();
        for k in 0..c.spans() {
            assert!(c.eval(k, 0.0).dist(pts[k]) < 1e-12);
            assert!(c.eval(k, 1.0).dist(pts[k + 1]) < 1e-12);
        }
    }

    #[test]
    fn uniform_samples_are_evenly_spaced() {
        let c = fit_branch_spline(&[p(0., 0.), p(30., 20.), p(60., 0.), p(90., 25.)]).unwrap();
        let a = c.sample_uniform(50);
        let gaps: Vec<f64> = a.points.windows(2).map(|w| w[0].dist(w[1])).collect();
        for g in gaps {
            assert!((g - a.spacing).abs() <= 0.01 * a.spacing, "gap {g} vs {}", a.spacing);
        }
    }

    #[test]
    fn rectangle_cylinder() {
        let c = fit_branch_spline(&[p(0., 5.), p(40., 5.)]).unwrap();
        let g = build_general_cylinder(c.sample_uniform(5), &rect(40., 10.)).unwrap();
        for (s, a) in g.slices.iter().zip(&g.axis.points) {
            assert!((s.left.x - a.x).abs() < 1e-9 && (s.right.x - a.x).abs() < 1e-9);
            assert!((s.length() - 10.0).abs() < 1e-9);
        }
        let omega = SimplePolygon::new(g.region.clone()).unwrap();
        assert!((omega.area() - 400.0).abs() < 1e-6);
    }

    #[test]
    fn wedge_slices_shrink_monotonically() {
        let wedge = SimplePolygon::new(vec![p(0., -10.), p(50., -2.), p(50., 2.), p(0., 10.)]).unwrap();
        let c = fit_branch_spline(&[p(1., 0.), p(49., 0.)]).unwrap();
        let g = build_general_cylinder(c.sample_uniform(20), &wedge).unwrap();
        for (s, a) in g.slices.iter().zip(&g.axis.points) {
            let half = 10.0 - 8.0 * a.x / 50.0;
            assert!((s.length() - 2.0 * half).abs() < 1e-9);
        }
        for w in g.slices.windows(2) {
            assert!(w[1].length() < w[0].length());
        }
    }

    #[test]
    fn slice_outside_polygon_is_degenerate() {
        let c = fit_branch_spline(&[p(5., 5.), p(60., 5.)]).unwrap();
        assert!(matches!(build_general_cylinder(c.sample_uniform(16), &rect(40., 10.)), Err(BoundedDpError::DegenerateSlice(_))));
    }

    #[test]
    fn selection_error_examples() {
        let pts: Vec<Point> = (0..5).map(|i| p(i as f64, 0.0)).collect();
        let flat = vec![(2.0, 2.0); 5];
        for i in 1..4 {
            assert_eq!(point_selection_error(i, 0, 4, &pts, &flat, 1.0), 0.0);
        }
        let mut bulge = flat.clone();
        bulge[2] = (2.5, 2.5);
        assert!((point_selection_error(2, 0, 4, &pts, &bulge, 0.7) - 0.7 * 1.0).abs() < 1e-12);
        let bent = [p(0., 0.), p(1., 1.), p(2., 0.)];
        assert!((point_selection_error(1, 0, 2, &bent, &flat[..3], 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn select_examples() {
        let pts: Vec<Point> = (0..6).map(|i| p(i as f64, 0.0)).collect();
        let keep = bounded_dp_select(&pts, &[], 0, 5, 0.5, 0.0);
        assert_eq!(keep, vec![true, false, false, false, false, true]);
        let zig: Vec<Point> = (0..6).map(|i| p(i as f64, if i % 2 == 1 { 1.0 + i as f64 * 0.1 } else { 0.0 })).collect();
        assert!(bounded_dp_select(&zig, &[], 0, 5, 0.0, 0.0).iter().all(|&k| k));
    }

    #[test]
    fn straight_tube_reduces_to_two_points() {
        let r = bounded_dp(&[p(2., 5.), p(10., 5.), p(20., 5.), p(38., 5.)], &rect(40., 10.), &BoundedDpConfig::default(), 19.0).unwrap();
        assert_eq!(r.points, vec![p(2., 5.), p(38., 5.)]);
        assert_eq!(r.reductions, 0);
    }

    /// Replays the selection recursion literally, with errors from a table.
    fn replay(errors: &dyn Fn(usize, usize, usize) -> f64, st: usize, en: usize, eps: f64, keep: &mut Vec<bool>) {
        if en <= st + 1 {
            return;
        }
        let mut best = (st, 0.0);
        for i in st + 1..en {
            let e = errors(i, st, en);
            if e > best.1 {
                best = (i, e);
            }
        }
        if best.1 > eps {
            keep[best.0] = true;
            replay(errors, st, best.0, eps, keep);
            replay(errors, best.0, en, eps, keep);
        }
    }

    proptest! {
        #[test]
        fn select_matches_recursive_replay(
            ys in proptest::collection::vec(-5.0..5.0f64, 3..40),
            ws in proptest::collection::vec((0.5..4.0f64, 0.5..4.0f64), 40),
            eps in 0.0..3.0f64,
            alpha_s in 0.0..2.0f64,
        ) {
            let pts: Vec<Point> = ys.iter().enumerate().map(|(i, &y)| p(i as f64, y)).collect();
            let widths = &ws[..pts.len()];
            let n = pts.len();
            let mut keep = vec![false; n];
            keep[0] = true;
            keep[n - 1] = true;
            let err = |i, s, e| point_selection_error(i, s, e, &pts, widths, alpha_s);
            replay(&err, 0, n - 1, eps, &mut keep);
            prop_assert_eq!(bounded_dp_select(&pts, widths, 0, n - 1, eps, alpha_s), keep);
        }

        #[test]
        fn retained_set_monotone_in_eps(
            ys in proptest::collection::vec(-5.0..5.0f64, 3..40),
            ws in proptest::collection::vec((0.5..4.0f64, 0.5..4.0f64), 40),
            e1 in 0.0..3.0f64,
            de in 0.0..3.0f64,
        ) {
            let pts: Vec<Point> = ys.iter().enumerate().map(|(i, &y)| p(i as f64, y)).collect();
            let widths = &ws[..pts.len()];
            let n = pts.len();
            let fine = bounded_dp_select(&pts, widths, 0, n - 1, e1, 1.0);
            let coarse = bounded_dp_select(&pts, widths, 0, n - 1, e1 + de, 1.0);
            for i in 0..n {
                prop_assert!(!coarse[i] || fine[i]);
            }
        }
    }
}
