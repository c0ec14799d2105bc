//! Seeded test-corpus generators and brute-force oracles.
//!
//! The oracles here are deliberately independent of the production code
//! paths: they share only the primitives in [`crate::geom`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_in_ring_tol, point_to_line_distance, Point, Segment};
use crate::sskel::{EdgeKind, StraightSkeleton, VertexKind};
use crate::stroke::{RawStroke, SimplePolygon};

/// Star-shaped polygon around the origin with `n` vertices.
///
/// Vertex angles are evenly spaced with up to 30% angular jitter; radii are
/// `100 * (1 - radius_jitter * u)` for uniform `u` in `[0, 1)`.
pub fn gen_star_polygon(seed: u64, n: usize, radius_jitter: f64) -> SimplePolygon {
    assert!(n >= 3, "star polygon needs at least 3 vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sector = std::f64::consts::TAU / n as f64;
    let jitter = radius_jitter.clamp(0.0, 0.95);
    let pts: Vec<Point> = (0..n)
        .map(|k| {
            let a = sector * (k as f64 + rng.gen_range(-0.3..0.3));
            let r = 100.0 * (1.0 - jitter * rng.gen::<f64>());
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    SimplePolygon::new(pts).expect("star-shaped rings with increasing angles are simple")
}

/// Minimum distance from `p` to `seg` by uniform sampling.
///
/// `n_samples` uniform samples locate the nearest sample; the bracket around
/// it is then resampled uniformly (three rounds), which drives the sampling
/// error far below 1e-9 without ever projecting onto the segment.
pub fn min_distance_oracle(p: Point, seg: &Segment, n_samples: usize) -> f64 {
    assert!(n_samples >= 2);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = f64::INFINITY;
    for _ in 0..4 {
        let step = (hi - lo) / (n_samples - 1) as f64;
        let mut best_k = 0;
        for k in 0..n_samples {
            let d = p.dist(seg.at(lo + step * k as f64));
            if d < best {
                best = d;
                best_k = k;
            }
        }
        let centre = lo + step * best_k as f64;
        lo = (centre - step).max(0.0);
        hi = (centre + step).min(1.0);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("topology events closer than the time step; reduce dt")]
    OracleResolution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleNode {
    pub position: Point,
    pub time: f64,
    pub border: bool,
}

/// Straight skeleton traced by explicit time stepping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSkeleton {
    /// Border vertices first (polygon order), then interior nodes.
    pub nodes: Vec<OracleNode>,
    /// Peripheral and interior trace edges (no border edges).
    pub edges: Vec<(usize, usize)>,
    pub split_events: usize,
    pub collapse_events: usize,
}

#[derive(Debug, Clone, Copy)]
struct OLine {
    normal: Point,
    dir: Point,
    offset: f64,
}

#[derive(Debug, Clone, Copy)]
struct OVert {
    pos: Point,
    vel: Point,
    left: usize,
    right: usize,
    origin: usize,
}

fn velocity(lines: &[OLine], left: usize, right: usize) -> Point {
    let (a, b) = (lines[left].normal, lines[right].normal);
    let denom = 1.0 + a.dot(b);
    if denom <= 1e-12 {
        Point::default()
    } else {
        (a + b) / denom
    }
}

fn is_reflex(lines: &[OLine], v: &OVert) -> bool {
    lines[v.left].dir.cross(lines[v.right].dir) < -1e-12
}

struct Sim {
    lines: Vec<OLine>,
    loops: Vec<Vec<OVert>>,
    nodes: Vec<OracleNode>,
    edges: Vec<(usize, usize)>,
    time: f64,
    splits: usize,
    collapses: usize,
}

/// A split found by [`Sim::find_split`]: loop, reflex vertex, edge start.
type SplitHit = (usize, usize, usize);

impl Sim {
    fn advance(&mut self, h: f64) {
        for lp in &mut self.loops {
            for v in lp.iter_mut() {
                v.pos += v.vel * h;
            }
        }
        self.time += h;
    }

    /// Length of edge `i -> i+1` measured along its support line, `h` ahead.
    fn edge_len(&self, lp: &[OVert], i: usize, h: f64) -> f64 {
        let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
        let dir = self.lines[a.right].dir;
        ((b.pos + b.vel * h) - (a.pos + a.vel * h)).dot(dir)
    }

    /// First reflex vertex that crosses a non-adjacent wavefront edge
    /// within `(-lookback, h]`, with the crossing inside the edge's extent.
    fn find_split(&self, h: f64, lookback: f64, slack: f64) -> Option<SplitHit> {
        for (li, lp) in self.loops.iter().enumerate() {
            let m = lp.len();
            if m < 4 {
                continue;
            }
            for r in 0..m {
                if !is_reflex(&self.lines, &lp[r]) {
                    continue;
                }
                let rv = lp[r];
                for j in 0..m {
                    let jn = (j + 1) % m;
                    if j == r || jn == r {
                        continue;
                    }
                    let line = self.lines[lp[j].right];
                    let g0 = line.normal.dot(rv.pos) - line.offset - self.time;
                    let rate = line.normal.dot(rv.vel) - 1.0;
                    let g1 = g0 + rate * h;
                    if rate >= 0.0 || g0 < rate * lookback - slack || g1 > slack {
                        continue;
                    }
                    let f = g0 / -rate;
                    let (a, b) = (lp[j].pos + lp[j].vel * f, lp[jn].pos + lp[jn].vel * f);
                    let x = rv.pos + rv.vel * f;
                    let s = (x - a).dot(line.dir);
                    let len = (b - a).dot(line.dir);
                    if s >= -slack && s <= len + slack {
                        return Some((li, r, j));
                    }
                }
            }
        }
        None
    }

    fn any_event(&self, h: f64) -> bool {
        for lp in &self.loops {
            for i in 0..lp.len() {
                if self.edge_len(lp, i, h) <= 0.0 {
                    return true;
                }
            }
        }
        self.find_split(h, 0.0, 0.0).is_some()
    }

    fn new_node(&mut self, position: Point) -> usize {
        self.nodes.push(OracleNode { position, time: self.time, border: false });
        self.nodes.len() - 1
    }

    fn close_small_loops(&mut self) {
        let mut i = 0;
        while i < self.loops.len() {
            if self.loops[i].len() <= 2 {
                let lp = self.loops.remove(i);
                if lp.len() == 2 && lp[0].origin != lp[1].origin {
                    self.edges.push((lp[0].origin, lp[1].origin));
                }
            } else {
                i += 1;
            }
        }
    }

    /// Resolves every event due within `window` of the current time.
    fn resolve(&mut self, window: f64, slack: f64) -> Result<(), OracleError> {
        for _round in 0..10_000 {
            if let Some((li, r, j)) = self.find_split(window, window, slack) {
                self.split(li, r, j);
                self.close_small_loops();
                continue;
            }
            let mut changed = false;
            for li in 0..self.loops.len() {
                if self.collapse_loop(li, window) {
                    changed = true;
                    break;
                }
            }
            if !changed {
                return Ok(());
            }
            self.close_small_loops();
        }
        Err(OracleError::OracleResolution)
    }

    fn split(&mut self, li: usize, r: usize, j: usize) {
        let lp = self.loops.remove(li);
        let m = lp.len();
        let rv = lp[r];
        let k = lp[j].right;
        let node = self.new_node(rv.pos);
        self.edges.push((rv.origin, node));
        self.splits += 1;
        let jn = (j + 1) % m;
        let mk = |left, right, sim: &Sim| OVert {
            pos: rv.pos,
            vel: velocity(&sim.lines, left, right),
            left,
            right,
            origin: node,
        };
        // First loop: new vertex, then jn .. r-1.
        let mut a = vec![mk(rv.left, k, self)];
        let mut i = jn;
        while i != r {
            a.push(lp[i]);
            i = (i + 1) % m;
        }
        // Second loop: new vertex, then r+1 .. j.
        let mut b = vec![mk(k, rv.right, self)];
        let mut i = (r + 1) % m;
        loop {
            b.push(lp[i]);
            if i == j {
                break;
            }
            i = (i + 1) % m;
        }
        self.loops.push(a);
        self.loops.push(b);
    }

    /// Merges runs of edges that reach zero length within `window`.
    fn collapse_loop(&mut self, li: usize, window: f64) -> bool {
        let lp = &self.loops[li];
        let m = lp.len();
        let collapsing: Vec<bool> = (0..m).map(|i| self.edge_len(lp, i, window) <= 0.0).collect();
        if !collapsing.iter().any(|&c| c) {
            return false;
        }
        let lp = self.loops.remove(li);
        self.collapses += 1;
        if collapsing.iter().all(|&c| c) {
            let centre = lp.iter().fold(Point::default(), |s, v| s + v.pos) / m as f64;
            let node = self.new_node(centre);
            for v in &lp {
                self.edges.push((v.origin, node));
            }
            return true;
        }
        // Rotate so index 0 starts a run boundary (edge m-1 not collapsing).
        let start = (0..m).find(|&i| !collapsing[(i + m - 1) % m]).unwrap();
        let mut out: Vec<OVert> = Vec::with_capacity(m);
        let mut i = 0;
        while i < m {
            let idx = (start + i) % m;
            if !collapsing[idx] {
                out.push(lp[idx]);
                i += 1;
                continue;
            }
            // Run of collapsing edges idx, idx+1, ... merges their vertices.
            let mut run = vec![lp[idx]];
            let mut k = i;
            while k < m && collapsing[(start + k) % m] {
                run.push(lp[(start + k + 1) % m]);
                k += 1;
            }
            let centre = run.iter().fold(Point::default(), |s, v| s + v.pos) / run.len() as f64;
            let node = self.new_node(centre);
            for v in &run {
                self.edges.push((v.origin, node));
            }
            let (left, right) = (run[0].left, run[run.len() - 1].right);
            out.push(OVert { pos: centre, vel: velocity(&self.lines, left, right), left, right, origin: node });
            // The run's last vertex is consumed; skip it on the next pass.
            i = k + 1;
            if k == m {
                // Run wrapped onto the first output vertex.
                out.remove(0);
            }
        }
        self.loops.insert(li, out);
        true
    }
}

/// Straight skeleton by explicit offsetting in small time steps.
///
/// Coarse steps of `diameter / 1000` advance the wavefront; when a step
/// contains a topology change, the step is bisected down to `dt` and every
/// change due within `3 dt` is resolved at once. Positions are accurate to
/// a small multiple of `dt` times the local vertex speed.
pub fn wavefront_oracle(poly: &SimplePolygon, dt: f64) -> Result<OracleSkeleton, OracleError> {
    let verts = poly.vertices();
    let n = verts.len();
    let diam = poly.diameter();
    let lines: Vec<OLine> = poly
        .edges()
        .map(|e| {
            let dir = e.vector() / e.length();
            let normal = dir.perp();
            OLine { normal, dir, offset: normal.dot(e.a) }
        })
        .collect();
    let start: Vec<OVert> = (0..n)
        .map(|i| {
            let left = (i + n - 1) % n;
            OVert { pos: verts[i], vel: velocity(&lines, left, i), left, right: i, origin: i }
        })
        .collect();
    let nodes = verts.iter().map(|&p| OracleNode { position: p, time: 0.0, border: true }).collect();
    let mut sim = Sim { lines, loops: vec![start], nodes, edges: Vec::new(), time: 0.0, splits: 0, collapses: 0 };

    let coarse = (diam / 1000.0).max(dt);
    let window = 3.0 * dt;
    let slack = 1e-9 * diam;
    let mut steps = 0usize;
    while !sim.loops.is_empty() {
        steps += 1;
        if steps > 10_000_000 || sim.time > diam {
            return Err(OracleError::OracleResolution);
        }
        if !sim.any_event(coarse) {
            sim.advance(coarse);
            continue;
        }
        let (mut lo, mut hi) = (0.0, coarse);
        while hi - lo > dt {
            let mid = 0.5 * (lo + hi);
            if sim.any_event(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        sim.advance(hi);
        sim.resolve(window, slack)?;
    }

    Ok(contract_short_edges(sim, 20.0 * dt))
}

/// Merges interior nodes joined by edges shorter than the oracle's own
/// resolution; simultaneous changes resolved in successive rounds otherwise
/// show up as separate nodes a few `dt` apart.
fn contract_short_edges(sim: Sim, tol: f64) -> OracleSkeleton {
    let m = sim.nodes.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in &sim.edges {
        let (na, nb) = (&sim.nodes[a], &sim.nodes[b]);
        if !na.border && !nb.border && na.position.dist(nb.position) <= tol {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut index = vec![usize::MAX; m];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        let r = root(&mut parent, i);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        index[i] = index[r];
        groups[index[r]].push(i);
    }
    let nodes = groups
        .iter()
        .map(|g| {
            let k = g.len() as f64;
            OracleNode {
                position: g.iter().fold(Point::default(), |s, &i| s + sim.nodes[i].position) / k,
                time: g.iter().map(|&i| sim.nodes[i].time).sum::<f64>() / k,
                border: sim.nodes[g[0]].border,
            }
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = sim
        .edges
        .iter()
        .map(|&(a, b)| (index[a].min(index[b]), index[a].max(index[b])))
        .filter(|(a, b)| a != b)
        .collect();
    edges.sort_unstable();
    edges.dedup();
    OracleSkeleton { nodes, edges, split_events: sim.splits, collapse_events: sim.collapses }
}

/// Checks that a straight skeleton has the same trace graph as an oracle
/// skeleton: interior nodes matched one-to-one within `tol`, and identical
/// edge sets under that matching (border vertices match by index).
pub fn compare_with_oracle(
    ss: &crate::sskel::StraightSkeleton,
    oracle: &OracleSkeleton,
    tol: f64,
) -> Result<(), String> {
    use crate::sskel::{EdgeKind, VertexKind};
    let n = ss.source.len();
    let impl_nodes: Vec<usize> = (0..ss.vertices.len()).filter(|&i| ss.vertices[i].kind == VertexKind::Skeleton).collect();
    let oracle_nodes: Vec<usize> = (0..oracle.nodes.len()).filter(|&i| !oracle.nodes[i].border).collect();
    if impl_nodes.len() != oracle_nodes.len() {
        return Err(format!("node count {} vs oracle {}", impl_nodes.len(), oracle_nodes.len()));
    }
    let mut map = vec![usize::MAX; ss.vertices.len()];
    for i in 0..n {
        map[i] = i;
    }
    let mut taken = vec![false; oracle.nodes.len()];
    for &i in &impl_nodes {
        let p = ss.vertices[i].position;
        let best = oracle_nodes
            .iter()
            .copied()
            .filter(|&j| !taken[j])
            .min_by(|&a, &b| p.dist(oracle.nodes[a].position).total_cmp(&p.dist(oracle.nodes[b].position)))
            .ok_or("oracle ran out of nodes")?;
        let d = p.dist(oracle.nodes[best].position);
        if d > tol {
            return Err(format!("node {p:?} has no oracle match within {tol} (nearest {d})"));
        }
        taken[best] = true;
        map[i] = best;
    }
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut mine: Vec<(usize, usize)> = ss
        .edges
        .iter()
        .filter(|e| e.kind != EdgeKind::Border)
        .map(|e| norm(map[e.from], map[e.to]))
        .collect();
    let mut theirs: Vec<(usize, usize)> = oracle.edges.iter().map(|&(a, b)| norm(a, b)).collect();
    mine.sort_unstable();
    theirs.sort_unstable();
    if mine != theirs {
        return Err(format!("edge sets differ:\n  impl   {mine:?}\n  oracle {theirs:?}"));
    }
    Ok(())
}


/// A bent tube polygon around a known axis.
#[derive(Debug, Clone)]
pub struct TubeFixture {
    pub polygon: SimplePolygon,
    /// Branch joints along the axis, well inside both caps.
    pub branch: Vec<Point>,
    /// Mean tube width.
    pub width: f64,
}

/// Tube around the sine axis `y = amp * sin(2 pi x / wavelength + phase)`
/// for `x` in `[0, length]`, with half-width `half * (1 + bulge * sin(3 x / length * pi))`.
pub fn tube_polygon(length: f64, amp: f64, wavelength: f64, phase: f64, half: f64, bulge: f64, joints: usize) -> TubeFixture {
    let k = std::f64::consts::TAU / wavelength;
    let axis = |x: f64| Point::new(x, amp * (k * x + phase).sin());
    let normal = |x: f64| Point::new(-amp * k * (k * x + phase).cos(), 1.0).normalized().unwrap();
    let width = |x: f64| half * (1.0 + bulge * (3.0 * std::f64::consts::PI * x / length).sin());
    let m = 120;
    let xs: Vec<f64> = (0..=m).map(|i| length * i as f64 / m as f64).collect();
    let mut ring: Vec<Point> = xs.iter().map(|&x| axis(x) - normal(x) * width(x)).collect();
    ring.extend(xs.iter().rev().map(|&x| axis(x) + normal(x) * width(x)));
    let polygon = SimplePolygon::new(ring).expect("tube offsets stay inside the radius of curvature");
    let branch = (0..joints).map(|i| axis(length * (0.05 + 0.9 * i as f64 / (joints - 1) as f64))).collect();
    TubeFixture { polygon, branch, width: 2.0 * half }
}

/// Seeded bent tube whose half-width stays below half the axis radius of
/// curvature, so offsets never fold. The branch samples the axis at least
/// eight times per wavelength.
pub fn gen_tube(seed: u64) -> TubeFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = 400.0;
    let wavelength = rng.gen_range(150.0..320.0);
    let half = rng.gen_range(8.0..20.0);
    let bulge = rng.gen_range(0.0..0.3);
    let k = std::f64::consts::TAU / wavelength;
    let amp_max = 0.5 / (half * (1.0 + bulge) * k * k);
    let amp = rng.gen_range(0.0..amp_max.min(60.0));
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let joints = (8.0 * length / wavelength).ceil() as usize + rng.gen_range(0..6);
    tube_polygon(length, amp, wavelength, phase, half, bulge, joints)
}

/// Closed elliptic stroke.
pub fn ellipse_stroke(centre: Point, a: f64, b: f64, rot: f64, samples: usize) -> RawStroke {
    let pts = (0..samples)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / samples as f64;
            centre + Point::new(a * t.cos(), b * t.sin()).rotated(rot)
        })
        .collect();
    RawStroke::closed(pts)
}

/// Seeded creature-like stroke sequence: an elongated body drawn first,
/// then two to five limbs whose inner end lies inside the body, and
/// sometimes a detached part.
pub fn gen_scene_strokes(seed: u64) -> Vec<RawStroke> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let body_a = rng.gen_range(120.0..200.0);
    let body_b = rng.gen_range(40.0..70.0);
    let body_rot = rng.gen_range(-0.3..0.3);
    let mut strokes = vec![ellipse_stroke(Point::new(0.0, 0.0), body_a, body_b, body_rot, 160)];
    let limbs = rng.gen_range(2..=5);
    for _ in 0..limbs {
        let along = rng.gen_range(-0.8..0.8) * body_a;
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let angle = body_rot + side * std::f64::consts::FRAC_PI_2 + rng.gen_range(-0.5..0.5);
        let len = rng.gen_range(60.0..140.0);
        let thick = rng.gen_range(12.0..25.0);
        let root = Point::new(along, side * 0.3 * body_b).rotated(body_rot);
        let dir = Point::new(angle.cos(), angle.sin());
        // The inner tip reaches past the body axis so the limb's end joint
        // lands inside the body.
        let overlap = 0.8 * body_b;
        strokes.push(ellipse_stroke(root + dir * (len - overlap), len, thick, angle, 100));
    }
    if rng.gen_bool(0.3) {
        strokes.push(ellipse_stroke(Point::new(600.0, 400.0), 80.0, 30.0, 0.4, 100));
    }
    strokes
}

/// Counts faces of the planar straight-line graph by walking half-edges in
/// angular order (includes the outer face).
pub fn count_faces(ss: &StraightSkeleton) -> usize {
    let nv = ss.vertices.len();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in &ss.edges {
        out[e.from].push(e.to);
        out[e.to].push(e.from);
    }
    for (v, nbrs) in out.iter_mut().enumerate() {
        let p = ss.vertices[v].position;
        nbrs.sort_by(|&a, &b| {
            let da = ss.vertices[a].position - p;
            let db = ss.vertices[b].position - p;
            da.y.atan2(da.x).total_cmp(&db.y.atan2(db.x))
        });
    }
    let mut used = std::collections::HashSet::new();
    let mut faces = 0;
    for u in 0..nv {
        for &v in &out[u] {
            if used.contains(&(u, v)) {
                continue;
            }
            faces += 1;
            let (mut a, mut b) = (u, v);
            while used.insert((a, b)) {
                // Next half-edge: at b, turn to the neighbour just clockwise of a.
                let nb = &out[b];
                let idx = nb.iter().position(|&x| x == a).unwrap();
                let next = nb[(idx + nb.len() - 1) % nb.len()];
                a = b;
                b = next;
            }
        }
    }
    faces
}

/// Checks equidistance, containment, edge-kind consistency and Euler
/// characteristic of a straight skeleton.
pub fn check_skeleton_invariants(ss: &StraightSkeleton) -> Result<(), String> {
    let poly = &ss.source;
    let ring = poly.vertices();
    let diam = poly.diameter();
    for (i, v) in ss.skeleton_vertices() {
        let lines = &ss.defining_edges[i];
        if lines.len() < 3 {
            return Err(format!("vertex {i} has only {} defining edges", lines.len()));
        }
        for &e in lines {
            let seg = poly.edge(e);
            let d = point_to_line_distance(v.position, seg.a, seg.b);
            if (d - v.time).abs() > 1e-6 * diam {
                return Err(format!("vertex {i} at {:?}: distance {d} to edge {e} vs time {}", v.position, v.time));
            }
        }
        if !poly.contains(v.position) {
            return Err(format!("vertex {i} outside polygon"));
        }
        if v.time <= 0.0 {
            return Err(format!("vertex {i} has non-positive time"));
        }
    }
    for e in &ss.edges {
        if e.kind == EdgeKind::Border {
            continue;
        }
        let seg = ss.edge_segment(e);
        for k in 1..8 {
            let p = seg.at(k as f64 / 8.0);
            if !point_in_ring_tol(p, ring, 1e-9 * diam) {
                return Err(format!("edge {e:?} leaves the polygon at {p:?}"));
            }
        }
        let kinds = (ss.vertices[e.from].kind, ss.vertices[e.to].kind);
        let ok = match e.kind {
            EdgeKind::Peripheral => kinds.0 != kinds.1,
            EdgeKind::Skeleton => kinds == (VertexKind::Skeleton, VertexKind::Skeleton),
            EdgeKind::Border => true,
        };
        if !ok {
            return Err(format!("edge {e:?} kind does not match endpoints"));
        }
    }
    let v = ss.vertices.len() as i64;
    let e = ss.edges.len() as i64;
    let f = count_faces(ss) as i64;
    if v - e + f != 2 {
        return Err(format!("Euler: V={v} E={e} F={f}"));
    }
    if f - 1 != poly.len() as i64 {
        return Err(format!("{} interior faces for {} border edges", f - 1, poly.len()));
    }
    Ok(())
}
