//! Scene documents on disk, one file per scene id.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use skelforge_core::scene::{Scene, SceneError};

pub const DATA_DIR_ENV: &str = "SKELFORGE_DATA_DIR";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("scene id {0:?} must be 1-64 characters of [A-Za-z0-9_-]")]
    InvalidSceneId(String),
    #[error("scene {0:?} not found")]
    NotFound(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("storage error: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::InvalidSceneId(_) => "InvalidSceneId",
            StoreError::NotFound(_) => "SceneNotFound",
            StoreError::Scene(e) => e.code(),
            StoreError::Io(_) => "StorageError",
        }
    }
}

/// Ids double as file names, so anything that could escape the directory
/// is rejected.
pub fn valid_scene_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

#[derive(Debug, Clone)]
pub struct SceneStore {
    dir: PathBuf,
}

impl SceneStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SceneStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_scene_id(id) {
            return Err(StoreError::InvalidSceneId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Raw document bytes.
    pub fn read(&self, id: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.path(id)?;
        fs::read(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound(id.to_string()),
            _ => StoreError::Io(e),
        })
    }

    pub fn load(&self, id: &str) -> Result<Scene, StoreError> {
        Ok(Scene::load(&self.read(id)?)?)
    }

    /// Writes through a temporary file so readers never see a partial
    /// document.
    pub fn write(&self, id: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let path = self.path(id)?;
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{id}.json.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn save(&self, id: &str, scene: &Scene) -> Result<(), StoreError> {
        self.write(id, &scene.save())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skelforge_core::scene::SceneConfig;

    #[test]
    fn scene_ids_cannot_escape_the_directory() {
        for bad in ["", "..", "../x", "a/b", "a.json", "a b", &"x".repeat(65)] {
            assert!(!valid_scene_id(bad), "{bad:?}");
        }
        for good in ["a", "scene_1", "A-b-9"] {
            assert!(valid_scene_id(good));
        }
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let store = SceneStore::new(dir.path().join("nested"));
        let scene = Scene::new(SceneConfig::default());
        store.save("s1", &scene).unwrap();
        assert_eq!(store.load("s1").unwrap(), scene);
        assert!(matches!(store.load("s2"), Err(StoreError::NotFound(_))));
        assert!(matches!(store.load("../s1"), Err(StoreError::InvalidSceneId(_))));
    }
}
