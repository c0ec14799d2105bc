//! Batch skeletonization of polygon files and scene documents, with
//! per-stage timing, plus fixture corpus generation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use skelforge_core::boundeddp::{bounded_dp, BoundedDpConfig};
use skelforge_core::fixtures::{gen_scene_strokes, gen_star_polygon, gen_tube, wavefront_oracle};
use skelforge_core::geom::Point;
use skelforge_core::scene::{skeletonize_polygon, Scene, SceneConfig, SceneError, StageTimings, Transform};
use skelforge_core::skel::Skeleton;
use skelforge_core::stroke::{uniform_discretize, RawStroke, SimplePolygon};
use skelforge_core::svg::SvgScene;

use crate::protocol::ConfigPatch;

pub const CSV_HEADER: [&str; 9] = ["name", "n_vertices", "t_polygon", "t_sskel", "t_clean", "t_boundeddp", "t_connect", "t_refine", "t_total_ms"];

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{0}: {1}")]
    Io(PathBuf, io::Error),
    #[error("{0}: not a polygon or scene document: {1}")]
    Parse(PathBuf, String),
    #[error("{0}: {1}")]
    Scene(PathBuf, SceneError),
}

pub enum Input {
    Polygon(Vec<Point>),
    Scene(Box<Scene>),
}

/// A JSON array is a polygon; an object is a scene document.
pub fn read_input(path: &Path) -> Result<Input, BatchError> {
    let bytes = fs::read(path).map_err(|e| BatchError::Io(path.to_path_buf(), e))?;
    let parse = |m: String| BatchError::Parse(path.to_path_buf(), m);
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| parse(e.to_string()))?;
    match value {
        serde_json::Value::Array(_) => serde_json::from_value(value).map(Input::Polygon).map_err(|e| parse(e.to_string())),
        serde_json::Value::Object(_) => {
            Scene::load(&bytes).map(|s| Input::Scene(Box::new(s))).map_err(|e| BatchError::Scene(path.to_path_buf(), e))
        }
        _ => Err(parse("expected an array or an object".into())),
    }
}

/// Every `.json` file of the given files and directories (one level deep,
/// sorted by name).
pub fn expand_inputs(paths: &[PathBuf]) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub n_vertices: usize,
    /// Median per stage, microseconds.
    pub stages: StageTimings,
    /// Median wall-clock total, microseconds.
    pub total: f64,
    pub polygons: Vec<SimplePolygon>,
    pub skeleton: Skeleton,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Run {
    stages: StageTimings,
    total: f64,
    polygons: Vec<SimplePolygon>,
    skeleton: Skeleton,
}

fn run_polygon(points: &[Point], config: &SceneConfig) -> Result<Run, SceneError> {
    let start = Instant::now();
    let mut stages = StageTimings::default();
    let t = Instant::now();
    let polygon = SimplePolygon::new(points.to_vec())?;
    stages.polygon += t.elapsed().as_secs_f64() * 1e6;
    let skel = skeletonize_polygon(&polygon, config, &mut stages)?;
    let mut scene = Scene::new(*config);
    let t = Instant::now();
    scene.insert_part(polygon.clone(), skel, Transform::IDENTITY);
    stages.connect += t.elapsed().as_secs_f64() * 1e6;
    let t = Instant::now();
    let skeleton = scene.assemble_global_skeleton();
    stages.refine += t.elapsed().as_secs_f64() * 1e6;
    Ok(Run { stages, total: start.elapsed().as_secs_f64() * 1e6, polygons: vec![polygon], skeleton })
}

fn run_scene(scene: &Scene) -> Run {
    let start = Instant::now();
    let mut stages = StageTimings::default();
    let skeleton = scene.assemble_global_skeleton();
    stages.refine = start.elapsed().as_secs_f64() * 1e6;
    let polygons = scene.world_polygons().into_values().collect();
    Run { stages, total: start.elapsed().as_secs_f64() * 1e6, polygons, skeleton }
}

/// Runs the pipeline `repeats` times (at least once) and reports medians.
pub fn process(input: &Input, patch: &ConfigPatch, repeats: usize) -> Result<Outcome, SceneError> {
    let mut runs = Vec::new();
    for _ in 0..repeats.max(1) {
        runs.push(match input {
            Input::Polygon(points) => run_polygon(points, &patch.apply(&SceneConfig::default()))?,
            Input::Scene(scene) => {
                let mut scene = (**scene).clone();
                scene.set_config(patch.apply(&scene.config));
                run_scene(&scene)
            }
        });
    }
    let stage = |f: fn(&StageTimings) -> f64| median(runs.iter().map(|r| f(&r.stages)).collect());
    let stages = StageTimings {
        polygon: stage(|s| s.polygon),
        sskel: stage(|s| s.sskel),
        clean: stage(|s| s.clean),
        boundeddp: stage(|s| s.boundeddp),
        connect: stage(|s| s.connect),
        refine: stage(|s| s.refine),
    };
    let total = median(runs.iter().map(|r| r.total).collect());
    let n_vertices = match input {
        Input::Polygon(points) => points.len(),
        Input::Scene(scene) => scene.parts().iter().map(|p| p.polygon.len()).sum(),
    };
    let last = runs.pop().expect("at least one run");
    Ok(Outcome { n_vertices, stages, total, polygons: last.polygons, skeleton: last.skeleton })
}

/// CSV row; stage columns in milliseconds.
pub fn csv_row(name: &str, o: &Outcome) -> [String; 9] {
    let ms = |us: f64| format!("{:.4}", us / 1000.0);
    [
        name.to_string(),
        o.n_vertices.to_string(),
        ms(o.stages.polygon),
        ms(o.stages.sskel),
        ms(o.stages.clean),
        ms(o.stages.boundeddp),
        ms(o.stages.connect),
        ms(o.stages.refine),
        ms(o.total),
    ]
}

pub fn render_svg(o: &Outcome) -> String {
    SvgScene { polygons: o.polygons.iter().collect(), skeletons: vec![&o.skeleton], show_radii: true, ..Default::default() }.render()
}

/// One value of an expected-results file with where it came from.
#[derive(Debug, Serialize)]
pub struct ExpectedValue {
    pub key: String,
    pub value: serde_json::Value,
    pub provenance: String,
}

#[derive(Debug, Serialize)]
pub struct Expected {
    pub name: String,
    pub values: Vec<ExpectedValue>,
}

fn expected(key: &str, value: impl Serialize, provenance: &str) -> ExpectedValue {
    ExpectedValue { key: key.into(), value: serde_json::to_value(value).expect("plain data"), provenance: provenance.into() }
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    bytes.push(b'\n');
    fs::write(path, bytes)
}

fn pts(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

/// Closed circular stroke whose polyline perimeter is exactly `perimeter`.
pub fn circle_stroke_with_perimeter(perimeter: f64, samples: usize) -> RawStroke {
    let r = perimeter / (2.0 * samples as f64 * (std::f64::consts::PI / samples as f64).sin());
    let points = (0..samples)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / samples as f64;
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    RawStroke::closed(points)
}

/// Writes `polygons/`, `strokes/`, `scenes/` and `expected/` under `out`.
/// Returns the number of files written.
pub fn generate_corpus(seed: u64, out: &Path) -> io::Result<usize> {
    let dirs = ["polygons", "strokes", "scenes", "expected"].map(|d| out.join(d));
    for d in &dirs {
        fs::create_dir_all(d)?;
    }
    let [polys, strokes, scenes, exp] = dirs;
    let mut written = 0;

    let rect = pts(&[(0., 0.), (8., 0.), (8., 4.), (0., 4.)]);
    let square = pts(&[(0., 0.), (4., 0.), (4., 4.), (0., 4.)]);
    write_json(&polys.join("rectangle.json"), &rect)?;
    write_json(&polys.join("square.json"), &square)?;
    let analytic = "analytic: interior bisectors of an axis-aligned rectangle meet at distance half the short side";
    write_json(
        &exp.join("rectangle.json"),
        &Expected {
            name: "rectangle".into(),
            values: vec![
                expected("skeleton_vertices", [[2.0, 2.0], [6.0, 2.0]], analytic),
                expected("offset_time", 2.0, analytic),
                expected("interior_edge_length", 4.0, analytic),
            ],
        },
    )?;
    write_json(
        &exp.join("square.json"),
        &Expected {
            name: "square".into(),
            values: vec![expected("skeleton_vertices", [[2.0, 2.0]], "analytic: the four corner bisectors of a square meet at its centre")],
        },
    )?;
    written += 4;

    for k in 0..10u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(k);
        let n = 3 + (k as usize * 7) % 14;
        let poly = gen_star_polygon(s, n, 0.6);
        let name = format!("star_{s}");
        write_json(&polys.join(format!("{name}.json")), &poly.vertices())?;
        let dt = poly.diameter() / 1e5;
        if let Ok(oracle) = wavefront_oracle(&poly, dt) {
            let nodes: Vec<Point> = oracle.nodes.iter().filter(|n| !n.border).map(|n| n.position).collect();
            let prov = format!("wavefront time-stepping oracle, step {dt:.3e}, positions good to 1e-3 of the diameter");
            write_json(
                &exp.join(format!("{name}.json")),
                &Expected {
                    name: name.clone(),
                    values: vec![expected("interior_nodes", &nodes, &prov), expected("split_events", oracle.split_events, &prov)],
                },
            )?;
            written += 1;
        }
        written += 1;
    }

    let big = gen_star_polygon(seed.wrapping_add(250), 250, 0.3);
    write_json(&polys.join("star_250.json"), &big.vertices())?;
    written += 1;

    let tube = gen_tube(seed);
    write_json(&polys.join("tube.json"), &tube.polygon.vertices())?;
    if let Ok(r) = bounded_dp(&tube.branch, &tube.polygon, &BoundedDpConfig::default(), 10.0 * tube.width) {
        write_json(
            &exp.join("tube.json"),
            &Expected {
                name: "tube".into(),
                values: vec![
                    expected("branch", &tube.branch, "generator: samples of the tube's sine axis"),
                    expected("simplified_inside_region", true, "property: every simplified edge lies inside the bounding region"),
                    expected("simplified_joints", r.points.len(), "regression snapshot of the bounded simplification at ten times the tube width"),
                ],
            },
        )?;
        written += 1;
    }
    written += 1;

    let stroke = circle_stroke_with_perimeter(1972.28, 720);
    let count = uniform_discretize(&stroke, 10.0).map(|p| p.len()).unwrap_or(0);
    write_json(&strokes.join("perimeter_stroke.json"), &stroke)?;
    write_json(
        &exp.join("perimeter_stroke.json"),
        &Expected {
            name: "perimeter_stroke".into(),
            values: vec![expected("discretized_points", count, "reference value: a stroke of perimeter 1972.28 sampled at step 10 gives 197 points")],
        },
    )?;
    written += 2;

    let mut scene = Scene::new(SceneConfig::default());
    let mut t = StageTimings::default();
    for s in gen_scene_strokes(seed) {
        scene.add_part(&s, &mut t).map_err(io::Error::other)?;
    }
    fs::write(scenes.join(format!("creature_{seed}.json")), scene.save())?;
    let g = scene.assemble_global_skeleton();
    write_json(
        &exp.join(format!("creature_{seed}.json")),
        &Expected {
            name: format!("creature_{seed}"),
            values: vec![
                expected("parts", scene.parts().len(), "generator: body plus limbs plus an optional detached part"),
                expected("hierarchy_edges", scene.hierarchy().len(), "regression snapshot: limbs overlapping the body attach to it"),
                expected("global_joints", g.joints.len(), "regression snapshot of the refined global skeleton at default thresholds"),
            ],
        },
    )?;
    written += 2;
    Ok(written)
}
