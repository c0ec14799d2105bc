//! Straight skeleton of a simple polygon by inward wavefront propagation.
//!
//! The wavefront is kept as one or more circular lists of active vertices
//! (one list per wavefront component). Each active vertex moves along the
//! bisector of its two incident wavefront edges; every wavefront edge lies on
//! the offset of one original polygon edge. Edge events (an edge shrinks to
//! zero) and split events (a reflex vertex runs into an opposite edge) are
//! processed in order of offset time from a binary heap. Events are validated
//! when popped and discarded if any participant is no longer active.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geom::{Point, Ray, Segment, EPS_GEOM};
use crate::stroke::SimplePolygon;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SskelError {
    #[error("adjacent edges are anti-parallel; bisector undefined")]
    DegenerateAngle,
    #[error("wavefront propagation stalled: {0}")]
    NumericalCollapse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Border,
    Skeleton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsVertex {
    pub position: Point,
    /// Offset distance at which the wavefront reached this vertex.
    pub time: f64,
    pub kind: VertexKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Border,
    Peripheral,
    Skeleton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SsEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Edge,
    Split,
}

/// A processed topology change. `participants` are indices into the
/// skeleton's vertex list: the traces that ended at `point`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontEvent {
    pub kind: EventKind,
    pub time: f64,
    pub point: Point,
    pub participants: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StraightSkeleton {
    /// Border vertices first, in polygon order, then skeleton vertices.
    pub vertices: Vec<SsVertex>,
    pub edges: Vec<SsEdge>,
    pub source: SimplePolygon,
    /// For each vertex, the polygon edges whose offset lines meet there.
    pub defining_edges: Vec<Vec<usize>>,
    pub events: Vec<WavefrontEvent>,
}

impl StraightSkeleton {
    pub fn skeleton_vertices(&self) -> impl Iterator<Item = (usize, &SsVertex)> {
        self.vertices.iter().enumerate().filter(|(_, v)| v.kind == VertexKind::Skeleton)
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &SsEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn count_events(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn edge_segment(&self, e: &SsEdge) -> Segment {
        Segment::new(self.vertices[e.from].position, self.vertices[e.to].position)
    }
}

/// Inward unit normal of a polygon edge (counter-clockwise polygons have the
/// interior on the left).
fn inward_normal(seg: &Segment) -> Point {
    let d = seg.vector();
    let n = d.norm();
    d.perp() / n
}

/// Ray along the interior angle bisector at the shared vertex `at`.
///
/// For a straight-through vertex the ray is the inward edge normal; for a
/// reflex vertex it points into the reflex wedge.
pub fn bisector(prev_edge: &Segment, next_edge: &Segment, at: Point) -> Result<Ray, SskelError> {
    let d1 = prev_edge.direction().map_err(|_| SskelError::DegenerateAngle)?;
    let d2 = next_edge.direction().map_err(|_| SskelError::DegenerateAngle)?;
    if d1.dot(d2) < -1.0 + EPS_GEOM {
        return Err(SskelError::DegenerateAngle);
    }
    let sum = d1.perp() + d2.perp();
    Ray::new(at, sum).map_err(|_| SskelError::DegenerateAngle)
}

/// Offset support line `normal . p = offset + t` of one polygon edge.
#[derive(Debug, Clone, Copy)]
struct Line {
    normal: Point,
    dir: Point,
    offset: f64,
}

impl Line {
    fn of(seg: &Segment) -> Line {
        let normal = inward_normal(seg);
        Line { normal, dir: seg.direction().unwrap_or(Point::new(1.0, 0.0)), offset: normal.dot(seg.a) }
    }

    /// Signed distance from the original edge line; positive inside.
    fn signed_dist(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Point and time at which the offsets of three lines meet.
fn three_line_meet(l1: &Line, l2: &Line, l3: &Line) -> Option<(Point, f64)> {
    // [nx ny -1] [x y t]^T = offset, one row per line.
    let rows = [l1, l2, l3];
    let m = |r: usize, c: usize| -> f64 {
        match c {
            0 => rows[r].normal.x,
            1 => rows[r].normal.y,
            _ => -1.0,
        }
    };
    let det3 = |col: Option<usize>| -> f64 {
        let v = |r: usize, c: usize| if Some(c) == col { rows[r].offset } else { m(r, c) };
        v(0, 0) * (v(1, 1) * v(2, 2) - v(1, 2) * v(2, 1)) - v(0, 1) * (v(1, 0) * v(2, 2) - v(1, 2) * v(2, 0))
            + v(0, 2) * (v(1, 0) * v(2, 1) - v(1, 1) * v(2, 0))
    };
    let det = det3(None);
    if det.abs() < 1e-12 {
        return None;
    }
    let x = det3(Some(0)) / det;
    let y = det3(Some(1)) / det;
    let t = det3(Some(2)) / det;
    Some((Point::new(x, y), t))
}

/// Velocity of a wavefront vertex between two lines moving at unit speed.
fn vertex_velocity(left: &Line, right: &Line) -> Point {
    let (a, b) = (left.normal, right.normal);
    let det = a.cross(b);
    if det.abs() > 1e-12 {
        Point::new((b.y - a.y) / det, (a.x - b.x) / det)
    } else if a.dot(b) > 0.0 {
        a
    } else {
        // Opposing lines: only meet a vertex at the instant they coincide.
        Point::default()
    }
}

#[derive(Debug, Clone)]
struct LavVertex {
    pos: Point,
    time: f64,
    vel: Point,
    left: usize,
    right: usize,
    prev: usize,
    next: usize,
    node: usize,
    active: bool,
    reflex: bool,
}

impl LavVertex {
    fn at(&self, t: f64) -> Point {
        self.pos + self.vel * (t - self.time)
    }
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Edge { a: usize, b: usize },
    Split { v: usize, line: usize },
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    time: f64,
    kind: EventKind,
    point: Point,
    seq: u64,
    ev: Pending,
}

/// Exact time ties go to split events: a reflex vertex arriving at the point
/// where an edge collapses is recorded as the split it is, and the collapse
/// follows from the resulting zero-length wavefront edge.
fn kind_rank(kind: EventKind) -> u8 {
    match kind {
        EventKind::Split => 0,
        EventKind::Edge => 1,
    }
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    // Reversed so the std max-heap pops the earliest event.
    fn cmp(&self, o: &Self) -> Ordering {
        o.time
            .total_cmp(&self.time)
            .then(kind_rank(o.kind).cmp(&kind_rank(self.kind)))
            .then(o.point.lex_cmp(&self.point))
            .then(o.seq.cmp(&self.seq))
    }
}

struct Node {
    position: Point,
    time: f64,
    lines: Vec<usize>,
}

struct Propagation {
    lines: Vec<Line>,
    lav: Vec<LavVertex>,
    nodes: Vec<Node>,
    arcs: Vec<(usize, usize)>,
    heap: BinaryHeap<Queued>,
    seq: u64,
    events: Vec<WavefrontEvent>,
    time_tol: f64,
    extent_tol: f64,
}

impl Propagation {
    fn push(&mut self, time: f64, kind: EventKind, point: Point, ev: Pending) {
        self.seq += 1;
        self.heap.push(Queued { time, kind, point, seq: self.seq, ev });
    }

    fn new_vertex(&mut self, pos: Point, time: f64, left: usize, right: usize, node: usize) -> usize {
        let (l, r) = (self.lines[left], self.lines[right]);
        let vel = vertex_velocity(&l, &r);
        let reflex = l.dir.cross(r.dir) < -1e-12;
        self.lav.push(LavVertex { pos, time, vel, left, right, prev: usize::MAX, next: usize::MAX, node, active: true, reflex });
        self.lav.len() - 1
    }

    fn add_node(&mut self, position: Point, time: f64, lines: &[usize]) -> usize {
        let mut lines = lines.to_vec();
        lines.sort_unstable();
        lines.dedup();
        self.nodes.push(Node { position, time, lines });
        self.nodes.len() - 1
    }

    fn queue_edge_event(&mut self, a: usize, now: f64) {
        let b = self.lav[a].next;
        let (la, lab, lb) = (self.lav[a].left, self.lav[a].right, self.lav[b].right);
        if la == lb {
            return;
        }
        if let Some((p, t)) = three_line_meet(&self.lines[la], &self.lines[lab], &self.lines[lb]) {
            if t >= now - self.time_tol && t.is_finite() {
                self.push(t.max(now), EventKind::Edge, p, Pending::Edge { a, b });
            }
        }
    }

    fn queue_split_events(&mut self, v: usize, now: f64) {
        if !self.lav[v].reflex {
            return;
        }
        let (pos, t0, vel) = (self.lav[v].pos, self.lav[v].time, self.lav[v].vel);
        let mut seen: Vec<usize> = Vec::new();
        let mut u = self.lav[v].next;
        while u != v {
            let w = self.lav[u].next;
            let k = self.lav[u].right;
            if w != v && !seen.contains(&k) {
                seen.push(k);
                let line = self.lines[k];
                let gap = line.signed_dist(pos) - t0;
                let rate = 1.0 - line.normal.dot(vel);
                if gap >= -self.time_tol && rate > 1e-12 {
                    let s = gap.max(0.0) / rate;
                    let t = t0 + s;
                    if t >= now - self.time_tol && t.is_finite() {
                        self.push(t.max(now), EventKind::Split, pos + vel * s, Pending::Split { v, line: k });
                    }
                }
            }
            u = w;
        }
    }

    fn queue_vertex_events(&mut self, v: usize, now: f64) {
        let p = self.lav[v].prev;
        self.queue_edge_event(p, now);
        self.queue_edge_event(v, now);
        self.queue_split_events(v, now);
    }

    fn link(&mut self, a: usize, b: usize) {
        self.lav[a].next = b;
        self.lav[b].prev = a;
    }

    fn deactivate(&mut self, v: usize, node: usize) {
        self.lav[v].active = false;
        let from = self.lav[v].node;
        self.arcs.push((from, node));
    }

    /// Closes a two-vertex wavefront component: both traces end in each other.
    fn close_if_degenerate(&mut self, v: usize) -> bool {
        let n = self.lav[v].next;
        if self.lav[n].next == v && n != v {
            let (a, b) = (self.lav[v].node, self.lav[n].node);
            self.lav[v].active = false;
            self.lav[n].active = false;
            if a != b {
                self.arcs.push((a, b));
            }
            return true;
        }
        false
    }

    fn handle_edge(&mut self, a: usize, b: usize, time: f64, point: Point) {
        let c = self.lav[b].next;
        let lines = [self.lav[a].left, self.lav[a].right, self.lav[b].right];
        let node = self.add_node(point, time, &lines);
        let mut participants = vec![self.lav[a].node, self.lav[b].node];
        if self.lav[a].prev == c {
            // Last triangle of this component collapses to one point.
            participants.push(self.lav[c].node);
            self.deactivate(a, node);
            self.deactivate(b, node);
            self.deactivate(c, node);
        } else {
            let (prev, next) = (self.lav[a].prev, c);
            let (left, right) = (self.lav[a].left, self.lav[b].right);
            self.deactivate(a, node);
            self.deactivate(b, node);
            let v = self.new_vertex(point, time, left, right, node);
            self.link(prev, v);
            self.link(v, next);
            if !self.close_if_degenerate(v) {
                self.queue_vertex_events(v, time);
            }
        }
        self.events.push(WavefrontEvent { kind: EventKind::Edge, time, point, participants });
    }

    /// Wavefront segment on `line` in `v`'s component that contains `point`
    /// at `time`; returns its start vertex.
    fn find_opposite(&self, v: usize, line: usize, time: f64, point: Point) -> Option<usize> {
        let dir = self.lines[line].dir;
        let mut u = self.lav[v].next;
        let mut best: Option<(usize, f64)> = None;
        while u != v {
            let w = self.lav[u].next;
            if self.lav[u].right == line && w != v {
                let (pu, pw) = (self.lav[u].at(time), self.lav[w].at(time));
                let s = (point - pu).dot(dir);
                let len = (pw - pu).dot(dir);
                if s >= -self.extent_tol && s <= len + self.extent_tol {
                    // Prefer the segment with the point deepest inside.
                    let slack = s.min(len - s);
                    if best.is_none_or(|(_, b)| slack > b) {
                        best = Some((u, slack));
                    }
                }
            }
            u = w;
        }
        best.map(|(u, _)| u)
    }

    fn handle_split(&mut self, v: usize, line: usize, time: f64, point: Point) -> bool {
        let Some(u) = self.find_opposite(v, line, time, point) else {
            return false;
        };
        let w = self.lav[u].next;
        let lines = [self.lav[v].left, self.lav[v].right, line];
        let node = self.add_node(point, time, &lines);
        let (prev, next) = (self.lav[v].prev, self.lav[v].next);
        let (left, right) = (self.lav[v].left, self.lav[v].right);
        self.events.push(WavefrontEvent {
            kind: EventKind::Split,
            time,
            point,
            participants: vec![self.lav[v].node],
        });
        self.deactivate(v, node);

        let v1 = self.new_vertex(point, time, left, line, node);
        let v2 = self.new_vertex(point, time, line, right, node);
        self.link(prev, v1);
        self.link(v1, w);
        self.link(u, v2);
        self.link(v2, next);
        for x in [v1, v2] {
            if !self.close_if_degenerate(x) {
                self.queue_vertex_events(x, time);
            }
        }
        true
    }
}

/// Straight skeleton of `poly`.
pub fn extract_straight_skeleton(poly: &SimplePolygon) -> Result<StraightSkeleton, SskelError> {
    let verts = poly.vertices();
    let n = verts.len();
    let diam = poly.diameter().max(1e-12);
    let lines: Vec<Line> = poly.edges().map(|e| Line::of(&e)).collect();

    let mut prop = Propagation {
        lines,
        lav: Vec::with_capacity(4 * n),
        nodes: Vec::with_capacity(2 * n),
        arcs: Vec::with_capacity(3 * n),
        heap: BinaryHeap::new(),
        seq: 0,
        events: Vec::new(),
        time_tol: 1e-9 * diam,
        extent_tol: 1e-9 * diam,
    };

    for (i, &p) in verts.iter().enumerate() {
        let left = (i + n - 1) % n;
        prop.add_node(p, 0.0, &[left, i]);
        prop.new_vertex(p, 0.0, left, i, i);
    }
    for i in 0..n {
        prop.link(i, (i + 1) % n);
    }
    for i in 0..n {
        prop.queue_edge_event(i, 0.0);
        prop.queue_split_events(i, 0.0);
    }

    let budget = 64 * n * n + 1024;
    let mut popped = 0usize;
    while let Some(q) = prop.heap.pop() {
        popped += 1;
        if popped > budget {
            return Err(SskelError::NumericalCollapse("event budget exhausted".into()));
        }
        match q.ev {
            Pending::Edge { a, b } => {
                if prop.lav[a].active && prop.lav[b].active && prop.lav[a].next == b {
                    prop.handle_edge(a, b, q.time, q.point);
                }
            }
            Pending::Split { v, line } => {
                if prop.lav[v].active {
                    prop.handle_split(v, line, q.time, q.point);
                }
            }
        }
    }

    // Components left with two vertices are closed eagerly; anything else
    // still active means an event was lost to round-off.
    let leftovers: Vec<usize> = (0..prop.lav.len()).filter(|&i| prop.lav[i].active).collect();
    for v in leftovers {
        if prop.lav[v].active && !prop.close_if_degenerate(v) {
            return Err(SskelError::NumericalCollapse(format!(
                "wavefront vertex {v} never collapsed"
            )));
        }
    }

    Ok(assemble(poly, prop, diam))
}

/// Merges coincident skeleton nodes and builds the final vertex/edge lists.
fn assemble(poly: &SimplePolygon, prop: Propagation, diam: f64) -> StraightSkeleton {
    let n = poly.len();
    let m = prop.nodes.len();
    let merge_tol = (1e-9 * diam).max(1e-12);

    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in &prop.arcs {
        if a >= n && b >= n && prop.nodes[a].position.dist(prop.nodes[b].position) <= merge_tol {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                let (lo, hi) = (ra.min(rb), ra.max(rb));
                parent[hi] = lo;
            }
        }
    }

    let mut index = vec![usize::MAX; m];
    let mut vertices = Vec::with_capacity(m);
    let mut defining: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        if index[r] == usize::MAX {
            index[r] = vertices.len();
            vertices.push(SsVertex {
                position: prop.nodes[r].position,
                time: prop.nodes[r].time,
                kind: if r < n { VertexKind::Border } else { VertexKind::Skeleton },
            });
            defining.push(Vec::new());
            members.push(Vec::new());
        }
        index[i] = index[r];
        members[index[r]].push(i);
    }
    for (vi, group) in members.iter().enumerate() {
        if group.len() > 1 {
            let k = group.len() as f64;
            let pos = group.iter().fold(Point::default(), |acc, &g| acc + prop.nodes[g].position) / k;
            let time = group.iter().map(|&g| prop.nodes[g].time).sum::<f64>() / k;
            vertices[vi].position = pos;
            vertices[vi].time = time;
        }
        let mut lines: Vec<usize> = group.iter().flat_map(|&g| prop.nodes[g].lines.iter().copied()).collect();
        lines.sort_unstable();
        lines.dedup();
        defining[vi] = lines;
    }

    let mut edges: Vec<SsEdge> = (0..n).map(|i| SsEdge { from: i, to: (i + 1) % n, kind: EdgeKind::Border }).collect();
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in &prop.arcs {
        let (ia, ib) = (index[a], index[b]);
        if ia == ib {
            continue;
        }
        let key = (ia.min(ib), ia.max(ib));
        if !seen.insert(key) {
            continue;
        }
        let kind = if ia < n || ib < n { EdgeKind::Peripheral } else { EdgeKind::Skeleton };
        edges.push(SsEdge { from: ia, to: ib, kind });
    }

    let events = prop
        .events
        .into_iter()
        .map(|mut e| {
            for p in &mut e.participants {
                *p = index[*p];
            }
            e
        })
        .collect();

    StraightSkeleton { vertices, edges, source: poly.clone(), defining_edges: defining, events }
}
