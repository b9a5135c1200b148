//! Optional overrides read from a JSON file named by `LILGYM_CONFIG`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionMode, ConfigError, EnvConfig};
use crate::render::{Palette, PaletteError};
use crate::scene::{Layout, SizeTable};

pub const CONFIG_ENV_VAR: &str = "LILGYM_CONFIG";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub horizon: Option<u32>,
    pub verbosity_penalty: Option<f64>,
    pub snap_threshold: Option<i32>,
    pub nearly_touching_max: Option<i32>,
    pub sizes: Option<SizeTable>,
    pub action_mode: Option<ActionMode>,
    pub palette: Option<Palette>,
}

#[derive(Debug, Error)]
pub enum SettingsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid settings in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Palette(#[from] PaletteError),
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, SettingsError> {
        let text = std::fs::read_to_string(path).map_err(|source| SettingsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let s: Settings = serde_json::from_str(&text).map_err(|source| SettingsError::Json {
            path: path.display().to_string(),
            source,
        })?;
        if let Some(p) = &s.palette {
            p.validate()?;
        }
        Ok(s)
    }

    /// Settings from `LILGYM_CONFIG`, or defaults when it is unset.
    pub fn from_env() -> Result<Self, SettingsError> {
        match std::env::var_os(CONFIG_ENV_VAR) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Settings::default()),
        }
    }

    pub fn layout(&self, base: Layout) -> Layout {
        Layout {
            sizes: self.sizes.unwrap_or(base.sizes),
            ..base
        }
    }

    pub fn palette(&self) -> Palette {
        self.palette.unwrap_or_default()
    }

    /// Applies the overrides and validates the result.
    pub fn apply(&self, mut config: EnvConfig) -> Result<EnvConfig, ConfigError> {
        if let Some(h) = self.horizon {
            config.horizon = h;
        }
        if let Some(d) = self.verbosity_penalty {
            config.verbosity_penalty = d;
        }
        if let Some(t) = self.snap_threshold {
            config.snap_threshold = t;
        }
        if let Some(n) = self.nearly_touching_max {
            config.eval.nearly_touching_max = n;
        }
        if let Some(m) = self.action_mode {
            config.action_mode = m;
        }
        config.layout = self.layout(config.layout);
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Condition;
    use crate::scene::Variant;

    #[test]
    fn overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"verbosity_penalty": 0.05, "horizon": 20, "action_mode": {"mode": "pixel"},
                "sizes": {"small": 8, "medium": 20, "large": 32}}"#,
        )
        .unwrap();
        let s = Settings::load(&path).unwrap();
        let c = s.apply(EnvConfig::new(Variant::Scatter, Condition::Scratch)).unwrap();
        assert_eq!(c.verbosity_penalty, 0.05);
        assert_eq!(c.horizon, 20);
        assert_eq!(c.action_mode, ActionMode::Pixel);
        assert_eq!(c.layout.sizes.large, 32);
        assert_eq!(c.snap_threshold, 4);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"delta": 0.1}"#).unwrap();
        assert!(matches!(Settings::load(&path), Err(SettingsError::Json { .. })));
        let s = Settings {
            verbosity_penalty: Some(2.0),
            ..Settings::default()
        };
        assert!(s.apply(EnvConfig::new(Variant::Tower, Condition::Scratch)).is_err());
    }
}
