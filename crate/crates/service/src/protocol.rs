//! "skelforge-proto/1": newline-delimited JSON requests and replies, and the
//! per-connection session that answers them.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use skelforge_core::refine::Scope;
use skelforge_core::scene::{HierarchyEdge, Scene, SceneConfig, SceneError, StageTimings, Subpart, Transform};
use skelforge_core::skel::Skeleton;
use skelforge_core::stroke::RawStroke;

use crate::store::{SceneStore, StoreError};

pub const PROTOCOL_VERSION: &str = "skelforge-proto/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Command {
    CreatePart { stroke: RawStroke },
    MovePart { part: u32, transform: Transform },
    SetConfig { config: ConfigPatch },
    SetScope { scope: Option<Scope> },
    GetScene,
    SaveScene { scene_id: String },
    LoadScene { scene_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proto: Option<String>,
    pub id: u64,
    #[serde(flatten)]
    pub command: Command,
}

/// Fields left out keep their current value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_poly: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_c: Option<f64>,
}

impl ConfigPatch {
    pub fn apply(&self, base: &SceneConfig) -> SceneConfig {
        SceneConfig {
            step: self.step.unwrap_or(base.step),
            eps_poly: self.eps_poly.unwrap_or(base.eps_poly),
            alpha_s: self.alpha_s.unwrap_or(base.alpha_s),
            eps0_factor: self.eps0_factor.unwrap_or(base.eps0_factor),
            alpha: self.alpha.unwrap_or(base.alpha),
            eps_s: self.eps_s.unwrap_or(base.eps_s),
            eps_m: self.eps_m.unwrap_or(base.eps_m),
            eps_t: self.eps_t.unwrap_or(base.eps_t),
            eps_c: self.eps_c.unwrap_or(base.eps_c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Changed parts plus everything needed to redraw the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDelta {
    pub parts: Vec<Subpart>,
    /// Ids of every part now in the scene, in modeling order.
    pub part_ids: Vec<u32>,
    pub hierarchy: Vec<HierarchyEdge>,
    pub global_skeleton: Skeleton,
    pub config: SceneConfig,
    pub scope: Option<Scope>,
}

/// Microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    #[serde(flatten)]
    pub stages: StageTimings,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub proto: String,
    pub id: Option<u64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<SceneDelta>,
    pub timing: Timing,
}

impl Reply {
    fn error(id: Option<u64>, code: &str, message: String, timing: Timing) -> Self {
        Reply {
            proto: PROTOCOL_VERSION.to_string(),
            id,
            status: Status::Error,
            error: Some(ErrorBody { code: code.to_string(), message }),
            delta: None,
            timing,
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        Failure { code: e.code(), message: e.to_string() }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure { code: e.code(), message: e.to_string() }
    }
}

/// Which parts a successful command reports in its delta.
enum Changed {
    Nothing,
    One(u32),
    All,
}

/// One scene driven by one ordered message stream.
pub struct Session {
    scene: Scene,
    store: SceneStore,
    seen: HashSet<u64>,
}

impl Session {
    pub fn new(store: SceneStore) -> Self {
        Session { scene: Scene::new(SceneConfig::default()), store, seen: HashSet::new() }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Answers one request line. Unparseable lines still get an ERROR reply,
    /// carrying the request id when one can be read.
    pub fn handle_line(&mut self, line: &str) -> Reply {
        let start = Instant::now();
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(line).ok().and_then(|v| v.get("id")?.as_u64());
                let timing = Timing { total: start.elapsed().as_secs_f64() * 1e6, ..Timing::default() };
                Reply::error(id, "MalformedRequest", e.to_string(), timing)
            }
        }
    }

    pub fn handle(&mut self, req: Request) -> Reply {
        let start = Instant::now();
        let mut stages = StageTimings::default();
        let result = if req.proto.as_deref().is_some_and(|p| p != PROTOCOL_VERSION) {
            Err(Failure { code: "ProtocolVersionMismatch", message: format!("expected {PROTOCOL_VERSION:?}") })
        } else if !self.seen.insert(req.id) {
            Err(Failure { code: "DuplicateRequestId", message: format!("request id {} already used", req.id) })
        } else {
            self.execute(&req.command, &mut stages)
        };
        let delta = match result {
            Ok(Changed::Nothing) if matches!(req.command, Command::SaveScene { .. }) => None,
            Ok(changed) => {
                let t = Instant::now();
                let global_skeleton = self.scene.global_skeleton().clone();
                stages.refine += t.elapsed().as_secs_f64() * 1e6;
                Some(self.delta(changed, global_skeleton))
            }
            Err(f) => {
                let timing = Timing { stages, total: start.elapsed().as_secs_f64() * 1e6 };
                return Reply::error(Some(req.id), f.code, f.message, timing);
            }
        };
        Reply {
            proto: PROTOCOL_VERSION.to_string(),
            id: Some(req.id),
            status: Status::Ok,
            error: None,
            delta,
            timing: Timing { stages, total: start.elapsed().as_secs_f64() * 1e6 },
        }
    }

    fn execute(&mut self, command: &Command, stages: &mut StageTimings) -> Result<Changed, Failure> {
        match command {
            Command::CreatePart { stroke } => Ok(Changed::One(self.scene.add_part(stroke, stages)?)),
            Command::MovePart { part, transform } => {
                let t = Instant::now();
                self.scene.move_part(*part, *transform)?;
                stages.connect += t.elapsed().as_secs_f64() * 1e6;
                Ok(Changed::One(*part))
            }
            Command::SetConfig { config } => {
                let next = config.apply(&self.scene.config);
                if !next.is_valid() {
                    return Err(Failure { code: "InvalidConfig", message: format!("rejected configuration {next:?}") });
                }
                self.scene.set_config(next);
                Ok(Changed::Nothing)
            }
            Command::SetScope { scope } => {
                if let Some(Scope::Subpart(id)) = scope {
                    if self.scene.part(*id).is_none() {
                        return Err(SceneError::UnknownPart(*id).into());
                    }
                }
                self.scene.set_scope(*scope);
                Ok(Changed::Nothing)
            }
            Command::GetScene => Ok(Changed::All),
            Command::SaveScene { scene_id } => {
                self.store.save(scene_id, &self.scene)?;
                Ok(Changed::Nothing)
            }
            Command::LoadScene { scene_id } => {
                self.scene = self.store.load(scene_id)?;
                Ok(Changed::All)
            }
        }
    }

    fn delta(&self, changed: Changed, global_skeleton: Skeleton) -> SceneDelta {
        let parts = match changed {
            Changed::Nothing => Vec::new(),
            Changed::One(id) => self.scene.part(id).into_iter().cloned().collect(),
            Changed::All => self.scene.parts().to_vec(),
        };
        SceneDelta {
            parts,
            part_ids: self.scene.parts().iter().map(|p| p.id).collect(),
            hierarchy: self.scene.hierarchy().to_vec(),
            global_skeleton,
            config: self.scene.config,
            scope: self.scene.scope,
        }
    }
}
