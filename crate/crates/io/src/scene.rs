//! Scene configuration file (TOML): board geometry, thresholds, protocol,
//! instrument placement and teleoperation tunables.

use std::path::Path;

use dextrain_core::task::SceneConfig;

use crate::IoError;

pub fn scene_from_toml(text: &str) -> Result<SceneConfig, IoError> {
    let scene: SceneConfig = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    scene.validate().map_err(IoError::Invalid)?;
    Ok(scene)
}

pub fn scene_to_toml(scene: &SceneConfig) -> String {
    toml::to_string(scene).expect("scene serializes")
}

pub fn load_scene(path: &Path) -> Result<SceneConfig, IoError> {
    scene_from_toml(&crate::read_text(path)?).map_err(|e| e.at(path))
}

pub fn save_scene(scene: &SceneConfig, path: &Path) -> Result<(), IoError> {
    crate::write_text(path, &scene_to_toml(scene))
}
