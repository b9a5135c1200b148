//! Breadth-first planners used as verification oracles.
//!
//! Tower search enumerates every valid action. Scatter search restricts the
//! vocabulary: removals of existing objects, and additions of attribute
//! combinations drawn from the program's literals at the first free position
//! of each box.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::MdpSpec;
use crate::dsl::Program;
use crate::env::{self, grid, tower_actions, Action, ActionMode, Context, EnvConfig, EpisodeState, Validity};
use crate::scene::{Color, ObjectSpec, Scene, Shape, Size, Variant, BOX_COUNT};

pub const DEFAULT_MAX_DEPTH: usize = 8;
pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Maximum number of non-stop actions.
    pub max_depth: usize,
    /// Maximum number of scenes evaluated.
    pub node_budget: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_depth: DEFAULT_MAX_DEPTH,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl SolveOptions {
    pub fn with_depth(max_depth: usize) -> Self {
        SolveOptions {
            max_depth,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("no plan within {max_depth} actions")]
    NotFound { max_depth: usize },
    #[error("search budget of {budget} scenes exhausted")]
    BudgetExhausted { budget: usize },
    #[error("tower search called on a {0} scene")]
    NotTower(Variant),
}

/// Action sequence ending with STOP.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<Action>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Return of the plan when replayed: +1 for the final STOP, -δ for the rest.
    pub fn expected_return(&self, config: &EnvConfig) -> f64 {
        1.0 - (self.len() as f64 - 1.0) * config.verbosity_penalty
    }
}

fn search(
    start: &Scene,
    context: &Context,
    config: &EnvConfig,
    options: SolveOptions,
    successors: impl Fn(&Scene) -> Vec<(Action, Scene)>,
) -> Result<Plan, SolveError> {
    // a plan with d non-stop actions needs d < horizon
    let max_depth = options.max_depth.min(config.horizon.saturating_sub(1) as usize);
    if context.is_satisfied(start, config) {
        return Ok(Plan { actions: vec![Action::Stop] });
    }
    let mut parents: Vec<(usize, Action)> = vec![(usize::MAX, Action::Stop)];
    let mut seen = HashSet::from([start.fingerprint()]);
    let mut queue = VecDeque::from([(0usize, start.clone(), 0usize)]);
    let mut evaluated = 1usize;
    let unwind = |parents: &[(usize, Action)], mut node: usize| {
        let mut actions = vec![Action::Stop];
        while node != 0 {
            let (p, a) = parents[node];
            actions.push(a);
            node = p;
        }
        actions.reverse();
        Plan { actions }
    };
    while let Some((node, scene, depth)) = queue.pop_front() {
        if depth >= max_depth {
            continue;
        }
        for (action, next) in successors(&scene) {
            if !seen.insert(next.fingerprint()) {
                continue;
            }
            parents.push((node, action));
            let child = parents.len() - 1;
            evaluated += 1;
            if context.is_satisfied(&next, config) {
                return Ok(unwind(&parents, child));
            }
            if evaluated >= options.node_budget {
                return Err(SolveError::BudgetExhausted {
                    budget: options.node_budget,
                });
            }
            queue.push_back((child, next, depth + 1));
        }
    }
    Err(SolveError::NotFound { max_depth })
}

fn tower_successors(scene: &Scene, config: &EnvConfig) -> Vec<(Action, Scene)> {
    tower_actions()
        .into_iter()
        .filter(|a| !a.is_stop())
        .filter_map(|a| env::transition(scene, &a, config).ok().flatten().map(|s| (a, s)))
        .collect()
}

/// Shortest plan from `start`; ties follow the action enumeration order.
pub fn solve_tower_from(start: &Scene, context: &Context, config: &EnvConfig, options: SolveOptions) -> Result<Plan, SolveError> {
    if start.variant != Variant::Tower {
        return Err(SolveError::NotTower(start.variant));
    }
    search(start, context, config, options, |s| tower_successors(s, config))
}

/// Plan from the MDP's first initial state.
pub fn solve_tower(mdp: &MdpSpec, max_depth: usize) -> Result<Plan, SolveError> {
    let start = mdp.start_scenes().into_iter().next().ok_or(SolveError::NotFound { max_depth })?;
    solve_tower_from(&start, &mdp.context, &mdp.env_config(), SolveOptions::with_depth(max_depth))
}

fn with_one_more<T: Copy + PartialEq>(mentioned: &[T], all: &[T], fallback: T) -> Vec<T> {
    if mentioned.is_empty() {
        return vec![fallback];
    }
    let mut v = mentioned.to_vec();
    if let Some(extra) = all.iter().find(|x| !mentioned.contains(x)) {
        v.push(*extra);
    }
    v
}

/// Attribute combinations the scatter search may add.
pub fn scatter_vocabulary(program: &Program) -> Vec<ObjectSpec> {
    let m = program.mentioned_attributes();
    let shapes = with_one_more(&m.shapes, &Shape::ALL, Shape::Square);
    let sizes = with_one_more(&m.sizes, &Size::ALL, Size::Small);
    let mut v = Vec::new();
    for &shape in &shapes {
        for color in Color::ALL {
            for &size in &sizes {
                v.push(ObjectSpec { shape, color, size });
            }
        }
    }
    v
}

/// First placement in box `b`: a grid add in grid mode, a pixel add otherwise.
fn first_add_in_box(scene: &Scene, b: usize, spec: ObjectSpec, config: &EnvConfig) -> Option<Action> {
    let rect = scene.layout.box_rect(b);
    match config.action_mode {
        ActionMode::Grid { cols, rows } => {
            let (cw, _) = config.cell_size()?;
            let c0 = (rect.x0 / cw) as u32;
            let c1 = ((rect.x1 + cw - 1) / cw) as u32;
            (0..rows)
                .flat_map(|row| (c0..c1.min(cols)).map(move |col| grid::Cell { col, row }))
                .find(|&cell| {
                    grid::grid_place(scene, cell, spec, config)
                        .is_some_and(|p| scene.layout.containing_box(&scene.layout.rect_at(p.x, p.y, spec.size)) == Some(b))
                })
                .map(|cell| Action::grid_add(cell.col, cell.row, spec))
        }
        ActionMode::Pixel => (rect.y0..rect.y1)
            .flat_map(|y| (rect.x0..rect.x1).map(move |x| (x, y)))
            .find(|&(x, y)| scene.fits(x, y, spec.size))
            .map(|(x, y)| Action::scatter_add(x, y, spec)),
    }
}

fn remove_action(scene: &Scene, id: u32, config: &EnvConfig) -> Option<Action> {
    let o = scene.get(id)?;
    match config.action_mode {
        ActionMode::Grid { .. } => grid::removal_cell(scene, id, config).map(|c| Action::GridRemove { col: c.col, row: c.row }),
        ActionMode::Pixel => Some(Action::ScatterRemove { x: o.x, y: o.y }),
    }
}

fn scatter_successors(scene: &Scene, vocab: &[ObjectSpec], config: &EnvConfig) -> Vec<(Action, Scene)> {
    let mut actions = Vec::new();
    for o in scene.objects() {
        actions.extend(remove_action(scene, o.id, config));
    }
    for &spec in vocab {
        for b in 0..BOX_COUNT {
            actions.extend(first_add_in_box(scene, b, spec, config));
        }
    }
    actions
        .into_iter()
        .filter_map(|a| env::transition(scene, &a, config).ok().flatten().map(|s| (a, s)))
        .collect()
}

pub fn solve_scatter_from(start: &Scene, context: &Context, config: &EnvConfig, options: SolveOptions) -> Result<Plan, SolveError> {
    let vocab = scatter_vocabulary(&context.program);
    search(start, context, config, options, |s| scatter_successors(s, &vocab, config))
}

/// Plan from `start` with the planner for the scene's variant.
pub fn solve_from(start: &Scene, context: &Context, config: &EnvConfig, options: SolveOptions) -> Result<Plan, SolveError> {
    match start.variant {
        Variant::Tower => solve_tower_from(start, context, config, options),
        Variant::Scatter => solve_scatter_from(start, context, config, options),
    }
}

/// Replays `plan` from `start`; returns the final state and the rewards.
pub fn replay(start: &Scene, plan: &Plan, context: &Context, config: &EnvConfig) -> Result<(EpisodeState, Vec<f64>), env::EnvError> {
    let mut state = EpisodeState::new(start.clone());
    let mut rewards = Vec::new();
    for a in &plan.actions {
        let out = env::step(&state, a, context, config)?;
        rewards.push(out.reward);
        state = out.state;
        if state.done {
            break;
        }
    }
    Ok((state, rewards))
}

/// Whether each action of `plan` is valid when replayed from `start`.
pub fn plan_is_valid(start: &Scene, plan: &Plan, config: &EnvConfig) -> bool {
    let mut state = EpisodeState::new(start.clone());
    for a in plan.actions.iter().filter(|a| !a.is_stop()) {
        if env::validate(&state, a, config) != Ok(Validity::Valid) {
            return false;
        }
        match env::transition(&state.scene, a, config) {
            Ok(Some(s)) => state.scene = s,
            _ => return false,
        }
    }
    true
}
