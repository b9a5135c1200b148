use lilgym_core::dataio::{random_scatter_scene, random_tower_scene};
use lilgym_core::dsl::Program;
use lilgym_core::env::{self, Action, ActionMode, Condition, Context, EnvConfig, EpisodeState, Termination, Validity};
use lilgym_core::harness::RandomPolicy;
use lilgym_core::scene::{Layout, Variant};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PROGRAMS: &[&str] = &[
    "exist(all_items)",
    "count(all_items) >= 3",
    "exist(filter_obj(all_items, is_blue))",
    "exist(filter_obj(all_boxes, lambda b: b.is_tower()))",
    "not exist(filter_obj(all_items, lambda x: is_touching_wall(x, Side.TOP)))",
];

fn config(variant: Variant, pixel: bool) -> EnvConfig {
    let mut c = EnvConfig::new(variant, Condition::FlipIt);
    if pixel {
        c.action_mode = ActionMode::Pixel;
    }
    c
}

fn start(variant: Variant, seed: u64) -> EpisodeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = match variant {
        Variant::Tower => random_tower_scene(&mut rng, Layout::default()),
        Variant::Scatter => random_scatter_scene(&mut rng, Layout::default(), 8),
    };
    EpisodeState::new(scene)
}

fn variant_strategy() -> impl Strategy<Value = (Variant, bool)> {
    prop_oneof![Just((Variant::Tower, false)), Just((Variant::Scatter, false)), Just((Variant::Scatter, true))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn episodes_respect_reward_set_and_return_bound(
        (variant, pixel) in variant_strategy(),
        seed in any::<u64>(),
        program in 0..PROGRAMS.len(),
        target in any::<bool>(),
    ) {
        let cfg = config(variant, pixel);
        let ctx = Context::new("p", Program::compile(PROGRAMS[program]).unwrap(), target);
        let mut policy = RandomPolicy::new(seed);
        let mut state = start(variant, seed);
        let mut total = 0.0;
        while !state.done {
            let a = policy.sample(&cfg, None);
            let validity = env::validate(&state, &a, &cfg).unwrap();
            let out = env::step(&state, &a, &ctx, &cfg).unwrap();
            prop_assert!([1.0, -1.0, -cfg.verbosity_penalty].contains(&out.reward));
            prop_assert_eq!(out.state.t, state.t + 1);
            prop_assert!(out.state.t <= cfg.horizon);
            prop_assert_eq!(out.state.done, out.state.termination != Termination::None);
            if let Validity::Invalid { .. } = validity {
                prop_assert_eq!(&out.state.scene, &state.scene);
            }
            out.state.scene.validate().unwrap();
            // same inputs give the same outputs
            prop_assert_eq!(env::step(&state, &a, &ctx, &cfg).unwrap(), out.clone());
            total += out.reward;
            state = out.state;
        }
        prop_assert!(total >= cfg.min_return() - 1e-9);
    }

    #[test]
    fn grid_adds_are_reachable_in_pixel_mode(seed in any::<u64>(), tries in 1usize..20) {
        let grid = config(Variant::Scatter, false);
        let pixel = config(Variant::Scatter, true);
        let mut policy = RandomPolicy::new(seed);
        let state = start(Variant::Scatter, seed);
        for _ in 0..tries {
            let a = policy.sample(&grid, None);
            let Action::GridAdd { shape, color, size, .. } = a else { continue };
            let Some(next) = env::transition(&state.scene, &a, &grid).unwrap() else { continue };
            let added = next.objects().iter().find(|o| state.scene.get(o.id).is_none()).unwrap();
            let direct = Action::ScatterAdd { x: added.x, y: added.y, shape, color, size };
            prop_assert_eq!(env::transition(&state.scene, &direct, &pixel).unwrap(), Some(next));
        }
    }
}
