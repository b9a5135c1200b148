use serde::{Deserialize, Serialize};

use super::config::{ActionMode, EnvConfig};
use crate::scene::{Color, ObjectSpec, Shape, Size, Variant, BOX_COUNT};

/// One agent action. The JSON form carries a snake_case `type` tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Stop,
    TowerAdd {
        #[serde(rename = "box")]
        box_index: usize,
        color: Color,
    },
    TowerRemove {
        #[serde(rename = "box")]
        box_index: usize,
    },
    ScatterAdd {
        x: i32,
        y: i32,
        shape: Shape,
        color: Color,
        size: Size,
    },
    ScatterRemove {
        x: i32,
        y: i32,
    },
    GridAdd {
        col: u32,
        row: u32,
        shape: Shape,
        color: Color,
        size: Size,
    },
    GridRemove {
        col: u32,
        row: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Stop,
    Add,
    Remove,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Stop => ActionKind::Stop,
            Action::TowerAdd { .. } | Action::ScatterAdd { .. } | Action::GridAdd { .. } => ActionKind::Add,
            Action::TowerRemove { .. } | Action::ScatterRemove { .. } | Action::GridRemove { .. } => {
                ActionKind::Remove
            }
        }
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, Action::Stop)
    }

    pub fn scatter_add(x: i32, y: i32, spec: ObjectSpec) -> Action {
        Action::ScatterAdd {
            x,
            y,
            shape: spec.shape,
            color: spec.color,
            size: spec.size,
        }
    }

    pub fn grid_add(col: u32, row: u32, spec: ObjectSpec) -> Action {
        Action::GridAdd {
            col,
            row,
            shape: spec.shape,
            color: spec.color,
            size: spec.size,
        }
    }

    /// Whether the action belongs to the action set of `config`.
    pub fn compatible_with(&self, config: &EnvConfig) -> bool {
        matches!(
            (self, config.variant, config.action_mode),
            (Action::Stop, _, _)
                | (Action::TowerAdd { .. } | Action::TowerRemove { .. }, Variant::Tower, _)
                | (Action::ScatterAdd { .. } | Action::ScatterRemove { .. }, Variant::Scatter, ActionMode::Pixel)
                | (Action::GridAdd { .. } | Action::GridRemove { .. }, Variant::Scatter, ActionMode::Grid { .. })
        )
    }
}

/// Exact number of actions available under `config`, including STOP.
pub fn action_space_size(config: &EnvConfig) -> u64 {
    let attrs = (Shape::ALL.len() * Color::ALL.len() * Size::ALL.len()) as u64;
    match (config.variant, config.action_mode) {
        (Variant::Tower, _) => 1 + (Color::ALL.len() as u64 + 1) * BOX_COUNT as u64,
        (Variant::Scatter, ActionMode::Pixel) => {
            let pixels = config.layout.canvas_width as u64 * config.layout.canvas_height as u64;
            1 + pixels * (attrs + 1)
        }
        (Variant::Scatter, ActionMode::Grid { cols, rows }) => 1 + cols as u64 * rows as u64 * (attrs + 1),
    }
}

/// All tower actions in enumeration order: STOP, then ADD by box and color,
/// then REMOVE by box.
pub fn tower_actions() -> Vec<Action> {
    let mut v = vec![Action::Stop];
    for box_index in 0..BOX_COUNT {
        for color in Color::ALL {
            v.push(Action::TowerAdd { box_index, color });
        }
    }
    for box_index in 0..BOX_COUNT {
        v.push(Action::TowerRemove { box_index });
    }
    v
}

/// Every attribute combination, ordered by shape, color, size.
pub fn all_object_specs() -> Vec<ObjectSpec> {
    let mut v = Vec::with_capacity(27);
    for shape in Shape::ALL {
        for color in Color::ALL {
            for size in Size::ALL {
                v.push(ObjectSpec { shape, color, size });
            }
        }
    }
    v
}

/// Action mask. Either every action is selectable, or only STOP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMask {
    pub stop_only: bool,
    pub space_size: u64,
}

impl ActionMask {
    pub fn all(space_size: u64) -> Self {
        ActionMask {
            stop_only: false,
            space_size,
        }
    }

    pub fn stop_only(space_size: u64) -> Self {
        ActionMask {
            stop_only: true,
            space_size,
        }
    }

    pub fn permits(&self, action: &Action) -> bool {
        !self.stop_only || action.is_stop()
    }

    pub fn cardinality(&self) -> u64 {
        if self.stop_only {
            1
        } else {
            self.space_size
        }
    }
}
