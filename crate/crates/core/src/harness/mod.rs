//! Rollouts, baseline policies, planners and metrics.

pub mod solve;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use solve::{
    plan_is_valid, replay, scatter_vocabulary, solve_from, solve_scatter_from, solve_tower, solve_tower_from, Plan,
    SolveError, SolveOptions, DEFAULT_MAX_DEPTH, DEFAULT_NODE_BUDGET,
};

use crate::dataio::{MdpSpec, Split};
use crate::env::{self, Action, ActionKind, ActionMask, ActionMode, Context, EnvConfig, EnvError, EpisodeState, Termination};
use crate::par::Execution;
use crate::scene::{Color, Fingerprint, Shape, Size, Variant, BOX_COUNT};

/// Maps observations to actions.
pub trait Policy {
    /// Called once after reset.
    fn begin(&mut self, _mdp: &MdpSpec, _state: &EpisodeState, _config: &EnvConfig) {}

    fn act(&mut self, state: &EpisodeState, context: &Context, mask: Option<&ActionMask>, config: &EnvConfig) -> Action;
}

/// Always stops.
#[derive(Clone, Copy, Debug, Default)]
pub struct StopPolicy;

impl Policy for StopPolicy {
    fn act(&mut self, _: &EpisodeState, _: &Context, _: Option<&ActionMask>, _: &EnvConfig) -> Action {
        Action::Stop
    }
}

/// Samples an action type uniformly, then each argument uniformly.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[self.rng.random_range(0..xs.len())]
    }

    pub fn sample(&mut self, config: &EnvConfig, mask: Option<&ActionMask>) -> Action {
        // a stop-only mask leaves one type with nonzero mass
        if mask.is_some_and(|m| m.stop_only) {
            return Action::Stop;
        }
        let kind = self.pick(&[ActionKind::Stop, ActionKind::Add, ActionKind::Remove]);
        let l = &config.layout;
        match (kind, config.variant, config.action_mode) {
            (ActionKind::Stop, _, _) => Action::Stop,
            (ActionKind::Add, Variant::Tower, _) => Action::TowerAdd {
                box_index: self.rng.random_range(0..BOX_COUNT),
                color: self.pick(&Color::ALL),
            },
            (ActionKind::Remove, Variant::Tower, _) => Action::TowerRemove {
                box_index: self.rng.random_range(0..BOX_COUNT),
            },
            (ActionKind::Add, Variant::Scatter, ActionMode::Pixel) => Action::ScatterAdd {
                x: self.rng.random_range(0..l.canvas_width),
                y: self.rng.random_range(0..l.canvas_height),
                shape: self.pick(&Shape::ALL),
                color: self.pick(&Color::ALL),
                size: self.pick(&Size::ALL),
            },
            (ActionKind::Remove, Variant::Scatter, ActionMode::Pixel) => Action::ScatterRemove {
                x: self.rng.random_range(0..l.canvas_width),
                y: self.rng.random_range(0..l.canvas_height),
            },
            (ActionKind::Add, Variant::Scatter, ActionMode::Grid { cols, rows }) => Action::GridAdd {
                col: self.rng.random_range(0..cols),
                row: self.rng.random_range(0..rows),
                shape: self.pick(&Shape::ALL),
                color: self.pick(&Color::ALL),
                size: self.pick(&Size::ALL),
            },
            (ActionKind::Remove, Variant::Scatter, ActionMode::Grid { cols, rows }) => Action::GridRemove {
                col: self.rng.random_range(0..cols),
                row: self.rng.random_range(0..rows),
            },
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &EpisodeState, _: &Context, mask: Option<&ActionMask>, config: &EnvConfig) -> Action {
        self.sample(config, mask)
    }
}

/// Replays a fixed action list, then stops.
#[derive(Clone, Debug, Default)]
pub struct PlanPolicy {
    actions: Vec<Action>,
    next: usize,
}

impl PlanPolicy {
    pub fn new(plan: Plan) -> Self {
        PlanPolicy {
            actions: plan.actions,
            next: 0,
        }
    }
}

impl Policy for PlanPolicy {
    fn act(&mut self, _: &EpisodeState, _: &Context, _: Option<&ActionMask>, _: &EnvConfig) -> Action {
        let a = self.actions.get(self.next).copied().unwrap_or(Action::Stop);
        self.next += 1;
        a
    }
}

/// Plans from the initial state at the start of each episode and replays the
/// plan. Stops at once when no plan is found.
#[derive(Clone, Debug, Default)]
pub struct OraclePolicy {
    pub options: SolveOptions,
    inner: PlanPolicy,
}

impl OraclePolicy {
    pub fn new(options: SolveOptions) -> Self {
        OraclePolicy {
            options,
            inner: PlanPolicy::default(),
        }
    }
}

impl Policy for OraclePolicy {
    fn begin(&mut self, mdp: &MdpSpec, state: &EpisodeState, config: &EnvConfig) {
        let plan = solve_from(&state.scene, &mdp.context, config, self.options).unwrap_or(Plan {
            actions: vec![Action::Stop],
        });
        self.inner = PlanPolicy::new(plan);
    }

    fn act(&mut self, state: &EpisodeState, context: &Context, mask: Option<&ActionMask>, config: &EnvConfig) -> Action {
        self.inner.act(state, context, mask, config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Random,
    Oracle,
    Stop,
}

impl PolicyKind {
    pub fn build(self, seed: u64) -> Box<dyn Policy> {
        match self {
            PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
            PolicyKind::Oracle => Box::new(OraclePolicy::default()),
            PolicyKind::Stop => Box::new(StopPolicy),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Scene the action was taken in.
    pub fingerprint: Fingerprint,
    pub action: Action,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mdp_id: String,
    pub cmdp: String,
    pub split: Split,
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
    pub termination: Termination,
    pub success: bool,
    pub length: usize,
    pub total_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RolloutError {
    #[error("policy produced {action:?} at step {t} of {mdp_id}: {source}")]
    Policy {
        mdp_id: String,
        t: u32,
        action: Action,
        #[source]
        source: EnvError,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutOptions {
    /// Offer the stop-forcing mask to the policy.
    pub mask: bool,
}

/// Runs one episode to termination. `seed` selects the initial state.
pub fn rollout(
    policy: &mut dyn Policy,
    mdp: &MdpSpec,
    seed: u64,
    config: &EnvConfig,
    options: RolloutOptions,
) -> Result<Trajectory, RolloutError> {
    config.validate().map_err(EnvError::from)?;
    let mut state = env::reset(mdp, seed)?;
    policy.begin(mdp, &state, config);
    let mut steps = Vec::new();
    while !state.done {
        let mask = options.mask.then(|| env::stop_forcing_mask(&state, &mdp.context, config));
        let action = policy.act(&state, &mdp.context, mask.as_ref(), config);
        let out = env::step(&state, &action, &mdp.context, config).map_err(|source| RolloutError::Policy {
            mdp_id: mdp.id.clone(),
            t: state.t,
            action,
            source,
        })?;
        steps.push(TrajectoryStep {
            fingerprint: state.scene.fingerprint(),
            action,
            reward: out.reward,
        });
        state = out.state;
    }
    let total_reward = steps.iter().map(|s| s.reward).sum();
    Ok(Trajectory {
        mdp_id: mdp.id.clone(),
        cmdp: mdp.cmdp(),
        split: mdp.split,
        seed,
        length: steps.len(),
        steps,
        termination: state.termination,
        success: state.termination == Termination::Stopped { success: true },
        total_reward,
    })
}

/// SplitMix64 step; used to derive independent per-rollout seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One unit of batch work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub mdp: usize,
    pub seed: u64,
}

/// Jobs for `episodes` rollouts of each MDP, ordered by MDP id then episode.
pub fn plan_jobs(mdps: &[MdpSpec], episodes: usize, base_seed: u64) -> Vec<Job> {
    let mut order: Vec<usize> = (0..mdps.len()).collect();
    order.sort_by(|&a, &b| mdps[a].id.cmp(&mdps[b].id));
    order
        .into_iter()
        .flat_map(|m| (0..episodes).map(move |e| (m, e)))
        .enumerate()
        .map(|(i, (mdp, _))| Job {
            mdp,
            seed: derive_seed(base_seed, i as u64),
        })
        .collect()
}

/// Runs every job; results keep the job order whatever the execution mode.
/// The policy seed of each job is derived from its reset seed.
pub fn rollout_batch(
    mdps: &[MdpSpec],
    jobs: &[Job],
    policy: PolicyKind,
    configure: &(dyn Fn(&MdpSpec) -> EnvConfig + Sync),
    options: RolloutOptions,
    execution: Execution,
) -> Vec<Result<Trajectory, RolloutError>> {
    execution.map(jobs, |job| {
        let mdp = &mdps[job.mdp];
        let mut p = policy.build(derive_seed(job.seed, 0));
        rollout(p.as_mut(), mdp, job.seed, &configure(mdp), options)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rollouts: usize,
    pub task_completion_accuracy: f64,
    pub mean_reward: f64,
    pub pct_no_stop: f64,
    pub pct_invalid_action: f64,
    pub mean_actions_per_rollout: f64,
    /// ADD count over REMOVE count; `None` when no REMOVE was taken.
    pub add_remove_ratio: Option<f64>,
    pub add_actions: usize,
    pub remove_actions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Keyed by `cmdp/split`.
    pub groups: BTreeMap<String, Metrics>,
    pub overall: Metrics,
    pub notes: Vec<String>,
}

fn metrics<'a>(ts: impl IntoIterator<Item = &'a Trajectory>) -> Metrics {
    let mut n = 0usize;
    let (mut success, mut no_stop, mut invalid, mut actions, mut adds, mut removes) = (0, 0, 0, 0, 0, 0);
    let mut reward = 0.0;
    for t in ts {
        n += 1;
        success += t.success as usize;
        no_stop += !matches!(t.termination, Termination::Stopped { .. }) as usize;
        invalid += matches!(t.termination, Termination::InvalidAction { .. }) as usize;
        actions += t.length;
        reward += t.total_reward;
        for s in &t.steps {
            match s.action.kind() {
                ActionKind::Add => adds += 1,
                ActionKind::Remove => removes += 1,
                ActionKind::Stop => {}
            }
        }
    }
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    Metrics {
        rollouts: n,
        task_completion_accuracy: pct(success),
        mean_reward: reward / n as f64,
        pct_no_stop: pct(no_stop),
        pct_invalid_action: pct(invalid),
        mean_actions_per_rollout: actions as f64 / n as f64,
        add_remove_ratio: (removes > 0).then(|| adds as f64 / removes as f64),
        add_actions: adds,
        remove_actions: removes,
    }
}

/// Metrics per CMDP and split, and over everything.
///
/// # Panics
/// If `trajectories` is empty.
pub fn aggregate(trajectories: &[Trajectory]) -> MetricsReport {
    assert!(!trajectories.is_empty(), "aggregate needs at least one trajectory");
    let mut by_group: BTreeMap<String, Vec<&Trajectory>> = BTreeMap::new();
    for t in trajectories {
        by_group.entry(format!("{}/{}", t.cmdp, t.split)).or_default().push(t);
    }
    MetricsReport {
        groups: by_group.into_iter().map(|(k, v)| (k, metrics(v))).collect(),
        overall: metrics(trajectories),
        notes: vec![
            "rollouts ending in an invalid action count toward mean_actions_per_rollout and pct_no_stop".into(),
            "mean_reward is the mean episode return and depends on verbosity_penalty".into(),
        ],
    }
}

/// The clipped importance ratio `min(ratio, m)`.
///
/// # Panics
/// If `m` is not positive.
pub fn ratio_clip(ratio: f64, m: f64) -> f64 {
    assert!(m > 0.0, "clip threshold must be positive");
    ratio.min(m)
}
