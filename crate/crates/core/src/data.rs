//! Bundled data assets: name pools, sentence templates, prompt texts and
//! dataset presets.
//!
//! Every asset is compiled in. When `REASONFORGE_DATA_DIR` is set, a file at
//! the same relative path under that directory replaces the bundled copy.

use std::path::{Path, PathBuf};

use crate::error::DataError;

pub const DATA_DIR_ENV: &str = "REASONFORGE_DATA_DIR";

pub const NAMES: &str = "names.json";
pub const KINSHIP_TEMPLATES: &str = "templates/kinship.json";
pub const SPATIAL_TEMPLATES: &str = "templates/spatial.json";

const BUNDLED: &[(&str, &str)] = &[
    (NAMES, include_str!("../../../data/names.json")),
    (KINSHIP_TEMPLATES, include_str!("../../../data/templates/kinship.json")),
    (SPATIAL_TEMPLATES, include_str!("../../../data/templates/spatial.json")),
    ("prompts/clutrr_std-p.txt", include_str!("../../../data/prompts/clutrr_std-p.txt")),
    ("prompts/clutrr_eta-p.txt", include_str!("../../../data/prompts/clutrr_eta-p.txt")),
    ("prompts/stepgame_std-p.txt", include_str!("../../../data/prompts/stepgame_std-p.txt")),
    ("prompts/stepgame_eta-p.txt", include_str!("../../../data/prompts/stepgame_eta-p.txt")),
    ("presets/clutrr.toml", include_str!("../../../data/presets/clutrr.toml")),
    ("presets/stepgame.toml", include_str!("../../../data/presets/stepgame.toml")),
];

/// Where assets are read from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataSource {
    dir: Option<PathBuf>,
}

impl DataSource {
    /// Bundled assets only.
    pub fn bundled() -> Self {
        DataSource { dir: None }
    }

    /// Files under `dir` take precedence over bundled assets.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        DataSource { dir: Some(dir.into()) }
    }

    /// Honour `REASONFORGE_DATA_DIR` when it is set and nonempty.
    pub fn from_env() -> Self {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => DataSource::with_dir(dir),
            _ => DataSource::bundled(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Text of the asset at `rel`.
    pub fn read(&self, rel: &str) -> Result<String, DataError> {
        if let Some(dir) = &self.dir {
            let path = dir.join(rel);
            if path.is_file() {
                return std::fs::read_to_string(&path).map_err(|source| DataError::Io {
                    path: path.display().to_string(),
                    source,
                });
            }
        }
        bundled(rel).map(str::to_string).ok_or_else(|| DataError::Io {
            path: rel.to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such asset"),
        })
    }
}

/// The compiled-in copy of an asset.
pub fn bundled(rel: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(name, _)| *name == rel).map(|(_, text)| *text)
}

pub fn prompt_path(task: &str, style: &str) -> String {
    format!("prompts/{task}_{style}.txt")
}

pub fn preset_path(task: &str) -> String {
    format!("presets/{task}.toml")
}
