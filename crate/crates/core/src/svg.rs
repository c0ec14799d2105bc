//! Minimal SVG rendering of polygons, straight skeletons and skeletons.

use std::fmt::Write;

use crate::boundeddp::GeneralCylinder;
use crate::geom::{bounding_box, Point};
use crate::skel::Skeleton;
use crate::sskel::{EdgeKind, StraightSkeleton};
use crate::stroke::SimplePolygon;

#[derive(Debug, Default)]
pub struct SvgScene<'a> {
    pub polygons: Vec<&'a SimplePolygon>,
    pub straight_skeletons: Vec<&'a StraightSkeleton>,
    pub skeletons: Vec<&'a Skeleton>,
    pub cylinders: Vec<&'a GeneralCylinder>,
    pub show_radii: bool,
}

fn points_attr(pts: &[Point]) -> String {
    pts.iter().map(|p| format!("{:.3},{:.3}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

fn line(out: &mut String, a: Point, b: Point, stroke: &str, width: f64) {
    let _ = writeln!(
        out,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="{width}"/>"#,
        a.x, a.y, b.x, b.y
    );
}

impl SvgScene<'_> {
    pub fn render(&self) -> String {
        let mut all: Vec<Point> = Vec::new();
        for p in &self.polygons {
            all.extend_from_slice(p.vertices());
        }
        for s in &self.skeletons {
            all.extend(s.joints.iter().map(|j| j.position));
        }
        for c in &self.cylinders {
            all.extend_from_slice(&c.region);
        }
        if all.is_empty() {
            all.push(Point::default());
        }
        let (lo, hi) = bounding_box(&all);
        let pad = 0.05 * lo.dist(hi) + 1.0;
        let (w, h) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
        let stroke_w = (w.max(h) / 400.0).max(0.1);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
            lo.x - pad,
            lo.y - pad,
            w,
            h
        );
        // Canvas y grows downward; flip so the picture matches math axes.
        let _ = writeln!(out, r#"<g transform="translate(0 {:.3}) scale(1 -1)">"#, lo.y + hi.y);
        for c in &self.cylinders {
            let _ = writeln!(out, r##"<polygon points="{}" fill="#cfe3ff" stroke="none"/>"##, points_attr(&c.region));
            for s in &c.slices {
                line(&mut out, s.left, s.right, "steelblue", stroke_w * 0.5);
            }
        }
        for p in &self.polygons {
            let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="{stroke_w}"/>"#, points_attr(p.vertices()));
        }
        for ss in &self.straight_skeletons {
            for e in ss.edges.iter().filter(|e| e.kind != EdgeKind::Border) {
                let seg = ss.edge_segment(e);
                line(&mut out, seg.a, seg.b, "green", stroke_w * 0.5);
            }
        }
        for s in &self.skeletons {
            if self.show_radii {
                for j in &s.joints {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="gray" stroke-width="{}"/>"#,
                        j.position.x,
                        j.position.y,
                        j.radius,
                        stroke_w * 0.4
                    );
                }
            }
            for b in 0..s.bones.len() {
                let seg = s.bone_segment(b);
                line(&mut out, seg.a, seg.b, "red", stroke_w * 1.5);
            }
            for j in &s.joints {
                let _ = writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="red"/>"#, j.position.x, j.position.y, stroke_w * 2.5);
            }
        }
        out.push_str("</g>\n</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polygon_and_bones() {
        let poly = SimplePolygon::new(vec![Point::new(0., 0.), Point::new(8., 0.), Point::new(8., 4.), Point::new(0., 4.)]).unwrap();
        let skel = Skeleton::from_points(&[Point::new(2., 2.), Point::new(6., 2.)], &[(0, 1)]).unwrap();
        let svg = SvgScene { polygons: vec![&poly], skeletons: vec![&skel], ..Default::default() }.render();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<line").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }
}
