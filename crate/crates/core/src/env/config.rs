use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::EvalOptions;
use crate::scene::{Layout, LayoutError, Variant};

/// Starting condition: build from an empty canvas, or flip the truth value of
/// a populated one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Scratch,
    #[serde(rename = "flipit")]
    FlipIt,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Scratch => "scratch",
            Condition::FlipIt => "flipit",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ActionMode {
    Pixel,
    Grid { cols: u32, rows: u32 },
}

impl Default for ActionMode {
    fn default() -> Self {
        ActionMode::Grid { cols: 19, rows: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("verbosity penalty must lie in [0, 1), got {0}")]
    Penalty(f64),
    #[error("grid {cols}x{rows} does not divide the {width}x{height} canvas evenly")]
    Grid {
        cols: u32,
        rows: u32,
        width: i32,
        height: i32,
    },
    #[error("snap threshold must be non-negative, got {0}")]
    Snap(i32),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Configuration of one environment instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub variant: Variant,
    pub condition: Condition,
    pub horizon: u32,
    pub verbosity_penalty: f64,
    /// Ignored for tower environments.
    pub action_mode: ActionMode,
    pub snap_threshold: i32,
    pub layout: Layout,
    pub eval: EvalOptions,
}

pub const DEFAULT_HORIZON: u32 = 12;
pub const DEFAULT_VERBOSITY_PENALTY: f64 = 0.02;
pub const DEFAULT_SNAP_THRESHOLD: i32 = 4;

impl EnvConfig {
    pub fn new(variant: Variant, condition: Condition) -> Self {
        EnvConfig {
            variant,
            condition,
            horizon: DEFAULT_HORIZON,
            verbosity_penalty: DEFAULT_VERBOSITY_PENALTY,
            action_mode: ActionMode::default(),
            snap_threshold: DEFAULT_SNAP_THRESHOLD,
            layout: Layout::default(),
            eval: EvalOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.layout.validate()?;
        if self.horizon < 1 {
            return Err(ConfigError::Horizon);
        }
        if !(0.0..1.0).contains(&self.verbosity_penalty) {
            return Err(ConfigError::Penalty(self.verbosity_penalty));
        }
        if self.snap_threshold < 0 {
            return Err(ConfigError::Snap(self.snap_threshold));
        }
        if let ActionMode::Grid { cols, rows } = self.action_mode {
            let (w, h) = (self.layout.canvas_width, self.layout.canvas_height);
            if cols == 0 || rows == 0 || w % cols as i32 != 0 || h % rows as i32 != 0 {
                return Err(ConfigError::Grid {
                    cols,
                    rows,
                    width: w,
                    height: h,
                });
            }
        }
        Ok(())
    }

    /// Pixel dimensions of one grid cell, if the grid simplification is active.
    pub fn cell_size(&self) -> Option<(i32, i32)> {
        match self.action_mode {
            ActionMode::Grid { cols, rows } => Some((
                self.layout.canvas_width / cols as i32,
                self.layout.canvas_height / rows as i32,
            )),
            ActionMode::Pixel => None,
        }
    }

    pub fn grid_dims(&self) -> Option<(u32, u32)> {
        match self.action_mode {
            ActionMode::Grid { cols, rows } => Some((cols, rows)),
            ActionMode::Pixel => None,
        }
    }

    /// Lower bound on the return of any episode.
    pub fn min_return(&self) -> f64 {
        -1.0 - (self.horizon as f64 - 1.0) * self.verbosity_penalty
    }
}
