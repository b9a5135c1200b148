//! The environment: action validity, transitions, rewards, initial states and
//! the stop-forcing mask.
//!
//! Every function here is pure. [`Episode`] wraps them into a small state
//! machine for callers that prefer `reset`/`step` on a mutable handle.

mod action;
mod config;
pub mod grid;

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{action_space_size, all_object_specs, tower_actions, Action, ActionKind, ActionMask};
pub use config::{
    ActionMode, Condition, ConfigError, EnvConfig, DEFAULT_HORIZON, DEFAULT_SNAP_THRESHOLD,
    DEFAULT_VERBOSITY_PENALTY,
};
pub use grid::{grid_place, grid_remove_target, Cell, GridPlacement};

use crate::dataio::MdpSpec;
use crate::dsl::Program;
use crate::scene::{Color, Fingerprint, ObjectSpec, Scene, Shape, Size, Variant, BOX_COUNT, MAX_TOWER_HEIGHT};

/// What an MDP is conditioned on: a statement, its meaning program, and the
/// truth value the agent must bring about.
#[derive(Clone, Debug)]
pub struct Context {
    pub statement: String,
    pub program: Arc<Program>,
    pub target: bool,
}

impl Context {
    pub fn new(statement: impl Into<String>, program: Program, target: bool) -> Self {
        Context {
            statement: statement.into(),
            program: Arc::new(program),
            target,
        }
    }

    pub fn is_satisfied(&self, scene: &Scene, config: &EnvConfig) -> bool {
        self.program.evaluate_with(scene, config.eval) == self.target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    TowerAddFull,
    TowerRemoveEmpty,
    ScatterOverlap,
    ScatterOutOfBounds,
    ScatterRemoveEmpty,
    GridAddNoFit,
    GridRemoveEmpty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    None,
    Stopped { success: bool },
    InvalidAction { reason: InvalidReason },
    Horizon,
}

impl Termination {
    /// Flat label used on the wire.
    pub fn label(&self) -> &'static str {
        match self {
            Termination::None => "none",
            Termination::Stopped { success: true } => "stopped_success",
            Termination::Stopped { success: false } => "stopped_failure",
            Termination::InvalidAction { .. } => "invalid_action",
            Termination::Horizon => "horizon",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "validity", rename_all = "snake_case")]
pub enum Validity {
    Valid,
    Invalid { reason: InvalidReason },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("action {action:?} is not part of the {variant} action space in this configuration")]
    VariantMismatch { action: Action, variant: Variant },
    #[error("action {0:?} has arguments outside the canvas or grid")]
    ActionOutOfRange(Action),
    #[error("episode is already done")]
    EpisodeDone,
    #[error("mdp {0} has no initial scenes")]
    NoInitialScenes(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeState {
    pub scene: Scene,
    /// Number of actions taken so far.
    pub t: u32,
    pub done: bool,
    pub termination: Termination,
}

impl EpisodeState {
    pub fn new(scene: Scene) -> Self {
        EpisodeState {
            scene,
            t: 0,
            done: false,
            termination: Termination::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Transition {
    Add { spec: ObjectSpec, x: i32, y: i32 },
    Remove { id: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Resolved {
    Stop,
    Invalid(InvalidReason),
    Apply(Transition),
}

fn check_range(ok: bool, action: &Action) -> Result<(), EnvError> {
    if ok {
        Ok(())
    } else {
        Err(EnvError::ActionOutOfRange(*action))
    }
}

fn resolve(scene: &Scene, action: &Action, config: &EnvConfig) -> Result<Resolved, EnvError> {
    if !action.compatible_with(config) {
        return Err(EnvError::VariantMismatch {
            action: *action,
            variant: config.variant,
        });
    }
    let layout = &scene.layout;
    let in_canvas = |x: i32, y: i32| layout.canvas().contains_point(x, y);
    Ok(match *action {
        Action::Stop => Resolved::Stop,
        Action::TowerAdd { box_index, color } => {
            check_range(box_index < BOX_COUNT, action)?;
            let height = scene.tower_stack(box_index).len();
            if height >= MAX_TOWER_HEIGHT {
                Resolved::Invalid(InvalidReason::TowerAddFull)
            } else {
                Resolved::Apply(Transition::Add {
                    spec: ObjectSpec {
                        shape: Shape::Square,
                        color,
                        size: Size::Medium,
                    },
                    x: layout.tower_x(box_index),
                    y: layout.tower_y(height),
                })
            }
        }
        Action::TowerRemove { box_index } => {
            check_range(box_index < BOX_COUNT, action)?;
            match scene.tower_stack(box_index).last() {
                Some(top) => Resolved::Apply(Transition::Remove { id: top.id }),
                None => Resolved::Invalid(InvalidReason::TowerRemoveEmpty),
            }
        }
        Action::ScatterAdd {
            x,
            y,
            shape,
            color,
            size,
        } => {
            check_range(in_canvas(x, y), action)?;
            let rect = layout.rect_at(x, y, size);
            if layout.containing_box(&rect).is_none() {
                Resolved::Invalid(InvalidReason::ScatterOutOfBounds)
            } else if scene.objects().iter().any(|o| scene.bounding_box(o).overlaps(&rect)) {
                Resolved::Invalid(InvalidReason::ScatterOverlap)
            } else {
                Resolved::Apply(Transition::Add {
                    spec: ObjectSpec { shape, color, size },
                    x,
                    y,
                })
            }
        }
        Action::ScatterRemove { x, y } => {
            check_range(in_canvas(x, y), action)?;
            match scene.object_at(x, y) {
                Some(o) => Resolved::Apply(Transition::Remove { id: o.id }),
                None => Resolved::Invalid(InvalidReason::ScatterRemoveEmpty),
            }
        }
        Action::GridAdd {
            col,
            row,
            shape,
            color,
            size,
        } => {
            let cell = Cell { col, row };
            check_range(grid::cell_rect(config, cell).is_some(), action)?;
            let spec = ObjectSpec { shape, color, size };
            match grid_place(scene, cell, spec, config) {
                Some(p) => Resolved::Apply(Transition::Add { spec, x: p.x, y: p.y }),
                None => Resolved::Invalid(InvalidReason::GridAddNoFit),
            }
        }
        Action::GridRemove { col, row } => {
            let cell = Cell { col, row };
            check_range(grid::cell_rect(config, cell).is_some(), action)?;
            match grid_remove_target(scene, cell, config) {
                Some(id) => Resolved::Apply(Transition::Remove { id }),
                None => Resolved::Invalid(InvalidReason::GridRemoveEmpty),
            }
        }
    })
}

/// Checks whether `action` is valid in `state`. STOP is always valid.
pub fn validate(state: &EpisodeState, action: &Action, config: &EnvConfig) -> Result<Validity, EnvError> {
    Ok(match resolve(&state.scene, action, config)? {
        Resolved::Invalid(reason) => Validity::Invalid { reason },
        Resolved::Stop | Resolved::Apply(_) => Validity::Valid,
    })
}

/// Scene produced by a valid non-stop action; `None` for STOP or invalid actions.
pub fn transition(scene: &Scene, action: &Action, config: &EnvConfig) -> Result<Option<Scene>, EnvError> {
    Ok(match resolve(scene, action, config)? {
        Resolved::Apply(t) => Some(apply(scene, t)),
        Resolved::Stop | Resolved::Invalid(_) => None,
    })
}

fn apply(scene: &Scene, t: Transition) -> Scene {
    let mut next = scene.clone();
    match t {
        Transition::Add { spec, x, y } => {
            next.insert(spec, x, y);
        }
        Transition::Remove { id } => {
            next.remove(id);
        }
    }
    next
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub t: u32,
    pub validity: Validity,
    /// Truth value of the program, computed only on STOP.
    pub evaluation: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: EpisodeState,
    pub reward: f64,
    pub info: StepInfo,
}

fn step_judged(
    state: &EpisodeState,
    action: &Action,
    config: &EnvConfig,
    judge: impl FnOnce(&Scene) -> (bool, Option<bool>),
) -> Result<StepOutcome, EnvError> {
    if state.done {
        return Err(EnvError::EpisodeDone);
    }
    let t = state.t + 1;
    let (scene, reward, termination, validity, evaluation) = match resolve(&state.scene, action, config)? {
        Resolved::Stop => {
            let (success, evaluation) = judge(&state.scene);
            let reward = if success { 1.0 } else { -1.0 };
            (
                state.scene.clone(),
                reward,
                Termination::Stopped { success },
                Validity::Valid,
                evaluation,
            )
        }
        Resolved::Invalid(reason) => (
            state.scene.clone(),
            -1.0,
            Termination::InvalidAction { reason },
            Validity::Invalid { reason },
            None,
        ),
        Resolved::Apply(tr) => {
            let next = apply(&state.scene, tr);
            if t >= config.horizon {
                (next, -1.0, Termination::Horizon, Validity::Valid, None)
            } else {
                (next, -config.verbosity_penalty, Termination::None, Validity::Valid, None)
            }
        }
    };
    Ok(StepOutcome {
        state: EpisodeState {
            scene,
            t,
            done: termination != Termination::None,
            termination,
        },
        reward,
        info: StepInfo {
            t,
            validity,
            evaluation,
        },
    })
}

/// Advances an episode by one action.
///
/// Rewards: +1 for STOP when the program's value equals the target, -1 for
/// STOP otherwise, -1 for an invalid action or a valid action that exhausts the
/// horizon, and `-verbosity_penalty` for any other action.
pub fn step(state: &EpisodeState, action: &Action, context: &Context, config: &EnvConfig) -> Result<StepOutcome, EnvError> {
    step_judged(state, action, config, |scene| {
        let value = context.program.evaluate_with(scene, config.eval);
        (value == context.target, Some(value))
    })
}

/// Like [`step`], but STOP succeeds only when the scene's fingerprint is one of
/// the goal fingerprints.
pub fn step_with_goals(
    state: &EpisodeState,
    action: &Action,
    goals: &HashSet<Fingerprint>,
    config: &EnvConfig,
) -> Result<StepOutcome, EnvError> {
    step_judged(state, action, config, |scene| (goals.contains(&scene.fingerprint()), None))
}

/// Reward of the image-equality alternative to program evaluation.
pub fn goal_set_reward(
    state: &EpisodeState,
    action: &Action,
    goals: &HashSet<Fingerprint>,
    config: &EnvConfig,
) -> Result<f64, EnvError> {
    step_with_goals(state, action, goals, config).map(|o| o.reward)
}

/// Draws an initial state: the empty scene for scratch, a uniform seeded draw
/// from the MDP's initial scenes for flip-it.
pub fn reset(mdp: &MdpSpec, seed: u64) -> Result<EpisodeState, EnvError> {
    match mdp.condition {
        Condition::Scratch => Ok(EpisodeState::new(Scene::empty(mdp.variant, mdp.layout))),
        Condition::FlipIt => {
            let k = mdp.initial_scenes.len();
            if k == 0 {
                return Err(EnvError::NoInitialScenes(mdp.id.clone()));
            }
            let i = initial_index(k, seed);
            Ok(EpisodeState::new(mdp.initial_scenes[i].clone()))
        }
    }
}

/// Index of the initial scene chosen for `seed` among `k` candidates.
pub fn initial_index(k: usize, seed: u64) -> usize {
    ChaCha8Rng::seed_from_u64(seed).random_range(0..k)
}

/// Flip-it target: the opposite of the program's value on the initial scene.
pub fn assign_flipit_target(initial: &Scene, program: &Program) -> bool {
    !program.evaluate(initial)
}

/// Stop-only when stopping now would be rewarded; otherwise everything,
/// including invalid actions, stays selectable.
pub fn stop_forcing_mask(state: &EpisodeState, context: &Context, config: &EnvConfig) -> ActionMask {
    let size = action_space_size(config);
    if context.is_satisfied(&state.scene, config) {
        ActionMask::stop_only(size)
    } else {
        ActionMask::all(size)
    }
}

/// Stateful episode over one MDP.
#[derive(Clone, Debug)]
pub struct Episode<'m> {
    mdp: &'m MdpSpec,
    config: EnvConfig,
    state: EpisodeState,
}

impl<'m> Episode<'m> {
    pub fn reset(mdp: &'m MdpSpec, config: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        config.validate()?;
        let state = reset(mdp, seed)?;
        Ok(Episode { mdp, config, state })
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome, EnvError> {
        let outcome = step(&self.state, action, &self.mdp.context, &self.config)?;
        self.state = outcome.state.clone();
        Ok(outcome)
    }

    pub fn mask(&self) -> ActionMask {
        stop_forcing_mask(&self.state, &self.mdp.context, &self.config)
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn mdp(&self) -> &'m MdpSpec {
        self.mdp
    }
}

/// Every color, used by tower policies and solvers.
pub const TOWER_COLORS: [Color; 3] = Color::ALL;
