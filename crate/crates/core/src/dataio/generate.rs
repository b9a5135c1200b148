//! Synthetic fixture generator: template statements with hand-written
//! programs, random scenes, and a solvability check on every emitted MDP.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DatasetHeader, MdpSpec, Split};
use crate::dsl::{Program, SCATTER_EXAMPLE, TOWER_EXAMPLE};
use crate::env::{Condition, Context, EnvConfig};
use crate::harness::{derive_seed, replay, solve_from, SolveOptions};
use crate::scene::{Color, Layout, ObjectSpec, Scene, Shape, Size, Variant, BOX_COUNT, MAX_TOWER_HEIGHT};

const FIXTURE_FILE: &str = "fixtures.jsonl";

pub fn fixture_file_name() -> &'static str {
    FIXTURE_FILE
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixtureOptions {
    pub seed: u64,
    pub count_per_cmdp: usize,
    /// Upper bound on initial scenes per flip-it MDP.
    pub max_initial_scenes: usize,
    /// Upper bound on extra goal scenes per scratch MDP.
    pub max_extra_goals: usize,
    /// Search limits of the solvability check.
    pub solve: SolveOptions,
}

impl FixtureOptions {
    pub fn new(seed: u64, count_per_cmdp: usize) -> Self {
        FixtureOptions {
            seed,
            count_per_cmdp,
            max_initial_scenes: 3,
            max_extra_goals: 2,
            solve: SolveOptions {
                max_depth: 8,
                node_budget: 20_000,
            },
        }
    }
}

type Template = fn(&mut ChaCha8Rng) -> (String, String);

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

fn counted(n: u32, noun: &str) -> String {
    if n == 1 {
        format!("{n} {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

const TOWER_TEMPLATES: &[Template] = &[
    |rng| {
        let c = pick(rng, &Color::ALL);
        (
            format!("There is a {} block.", c.name()),
            format!("exist(filter_obj(all_items, is_{}))", c.name()),
        )
    },
    |rng| {
        let c = pick(rng, &Color::ALL);
        let n = rng.random_range(1..=3);
        (
            format!("There are exactly {}.", counted(n, &format!("{} block", c.name()))),
            format!("count(filter_obj(all_items, is_{})) == {n}", c.name()),
        )
    },
    |rng| {
        let n = rng.random_range(2..=4);
        (format!("There are at least {n} blocks."), format!("count(all_items) >= {n}"))
    },
    |rng| {
        let c = pick(rng, &Color::ALL);
        (
            format!("There is a tower with a {} block on top.", c.name()),
            format!("exist(filter_obj(all_items, lambda x: is_top(x) and is_{}(x)))", c.name()),
        )
    },
    |rng| {
        let n = rng.random_range(1..=4);
        (
            format!("There is a tower with exactly {}.", counted(n, "block")),
            format!("exist(filter_obj(all_boxes, lambda b: b.is_tower() and count(b.all_items_in_box()) == {n}))"),
        )
    },
    |rng| {
        let c = pick(rng, &Color::ALL);
        (
            format!("No tower has a {} base.", c.name()),
            format!("not exist(filter_obj(all_items, lambda x: is_bottom(x) and is_{}(x)))", c.name()),
        )
    },
    |rng| {
        let a = pick(rng, &Color::ALL);
        let b = pick(rng, &Color::ALL);
        (
            format!("There is a {} block above a {} block.", a.name(), b.name()),
            format!(
                "exist(filter_obj(all_items, lambda x: is_{}(x) and exist(filter_obj(all_items, lambda y: is_{}(y) and above(x, y)))))",
                a.name(),
                b.name()
            ),
        )
    },
    |_| {
        (
            "There are two towers with the same height but their base is not the same in color.".into(),
            TOWER_EXAMPLE.into(),
        )
    },
    |rng| {
        let c = pick(rng, &Color::ALL);
        (
            format!("All blocks are {}.", c.name()),
            format!("exist(all_items) and count(filter_obj(all_items, is_{})) == count(all_items)", c.name()),
        )
    },
];

const SCATTER_TEMPLATES: &[Template] = &[
    |rng| {
        let (c, s, z) = (pick(rng, &Color::ALL), pick(rng, &Shape::ALL), pick(rng, &Size::ALL));
        (
            format!("There is a {} {} {}.", z.name(), c.name(), s.name()),
            format!(
                "exist(filter_obj(all_items, lambda x: is_{}(x) and is_{}(x) and is_{}(x)))",
                c.name(),
                s.name(),
                z.name()
            ),
        )
    },
    |rng| {
        let s = pick(rng, &Shape::ALL);
        let n = rng.random_range(1..=2);
        (
            format!("There are exactly {}.", counted(n, s.name())),
            format!("count(filter_obj(all_items, is_{})) == {n}", s.name()),
        )
    },
    |rng| {
        let c = pick(rng, &Color::ALL);
        let (word, side) = pick(rng, &[("top", "TOP"), ("left", "LEFT")]);
        (
            format!("There is a {} object touching the {word} wall.", c.name()),
            format!(
                "exist(filter_obj(all_items, lambda x: is_{}(x) and is_touching_wall(x, Side.{side})))",
                c.name()
            ),
        )
    },
    |_| {
        (
            "There are two touching objects.".into(),
            "exist(filter_obj(all_items, lambda x: exist(filter_obj(all_items, lambda y: is_touching(x, y)))))".into(),
        )
    },
    |_| {
        (
            "There is a box with items of all three colors.".into(),
            "exist(filter_obj(all_boxes, lambda b: count(get_set_colors(b.all_items_in_box())) == 3))".into(),
        )
    },
    |rng| {
        let (c, s) = (pick(rng, &Color::ALL), pick(rng, &Shape::ALL));
        (
            format!("There is no {} {}.", c.name(), s.name()),
            format!("not exist(filter_obj(all_items, lambda x: is_{}(x) and is_{}(x)))", c.name(), s.name()),
        )
    },
    |rng| {
        let n = rng.random_range(2..=3);
        (format!("There are at least {n} objects."), format!("count(all_items) >= {n}"))
    },
    |_| {
        (
            "There is a box with all 3 different colors and a black triangle touching the wall with its top.".into(),
            SCATTER_EXAMPLE.into(),
        )
    },
    |rng| {
        let c = pick(rng, &Color::ALL);
        (
            format!("There is exactly one {} object.", c.name()),
            format!("unique(filter_obj(all_items, is_{}))", c.name()),
        )
    },
];

/// A tower scene with random stack heights and colors and at least one block.
pub fn random_tower_scene(rng: &mut impl Rng, layout: Layout) -> Scene {
    loop {
        let mut objs = Vec::new();
        for b in 0..BOX_COUNT {
            let h = rng.random_range(0..=MAX_TOWER_HEIGHT);
            for level in 0..h {
                let color = Color::ALL[rng.random_range(0..3)];
                objs.push((
                    ObjectSpec {
                        shape: Shape::Square,
                        color,
                        size: Size::Medium,
                    },
                    layout.tower_x(b),
                    layout.tower_y(level),
                ));
            }
        }
        if !objs.is_empty() {
            return Scene::from_objects(Variant::Tower, layout, objs);
        }
    }
}

/// A scatter scene with between 1 and `max_objects` objects at random pixel
/// positions. Placements that collide are retried a bounded number of times.
pub fn random_scatter_scene(rng: &mut impl Rng, layout: Layout, max_objects: usize) -> Scene {
    let n = rng.random_range(1..=max_objects.max(1));
    let mut scene = Scene::empty(Variant::Scatter, layout);
    let mut tries = 0;
    while scene.len() < n && tries < 50 * n {
        tries += 1;
        let spec = ObjectSpec {
            shape: Shape::ALL[rng.random_range(0..3)],
            color: Color::ALL[rng.random_range(0..3)],
            size: Size::ALL[rng.random_range(0..3)],
        };
        let s = layout.size_px(spec.size);
        let r = layout.box_rect(rng.random_range(0..BOX_COUNT));
        let x = rng.random_range(r.x0..=r.x1 - s);
        let y = rng.random_range(r.y0..=r.y1 - s);
        if scene.fits(x, y, spec.size) {
            scene.insert(spec, x, y);
        }
    }
    scene
}

fn random_scene(rng: &mut ChaCha8Rng, variant: Variant, layout: Layout) -> Scene {
    match variant {
        Variant::Tower => random_tower_scene(rng, layout),
        Variant::Scatter => random_scatter_scene(rng, layout, 6),
    }
}

fn split_for(i: usize) -> Split {
    match i % 10 {
        8 => Split::Dev,
        9 => Split::Test,
        _ => Split::Train,
    }
}

/// Final scene of an oracle plan from `start`, if the plan earns +1.
fn solved_scene(start: &Scene, context: &Context, config: &EnvConfig, options: SolveOptions) -> Option<Scene> {
    let plan = solve_from(start, context, config, options).ok()?;
    let (state, rewards) = replay(start, &plan, context, config).ok()?;
    (rewards.last() == Some(&1.0)).then_some(state.scene)
}

fn try_make(
    rng: &mut ChaCha8Rng,
    template: Template,
    variant: Variant,
    condition: Condition,
    layout: Layout,
    options: &FixtureOptions,
) -> Option<(Context, Vec<Scene>, Vec<Scene>)> {
    let (statement, source) = template(rng);
    let program = Program::compile(&source).expect("template programs compile");
    let config = EnvConfig {
        layout,
        ..EnvConfig::new(variant, condition)
    };
    let empty = Scene::empty(variant, layout);
    match condition {
        Condition::Scratch => {
            if program.evaluate(&empty) {
                return None;
            }
            let context = Context::new(statement, program, true);
            let goal = solved_scene(&empty, &context, &config, options.solve)?;
            let mut goals = vec![goal];
            for _ in 0..20 {
                if goals.len() > options.max_extra_goals {
                    break;
                }
                let s = random_scene(rng, variant, layout);
                if context.program.evaluate(&s) && !goals.contains(&s) {
                    goals.push(s);
                }
            }
            Some((context, vec![], goals))
        }
        Condition::FlipIt => {
            let first = random_scene(rng, variant, layout);
            let value = program.evaluate(&first);
            let context = Context::new(statement, program, !value);
            let wanted = rng.random_range(1..=options.max_initial_scenes.max(1));
            let mut initial = vec![first];
            for _ in 0..20 {
                if initial.len() >= wanted {
                    break;
                }
                let s = random_scene(rng, variant, layout);
                if context.program.evaluate(&s) == value && !initial.contains(&s) {
                    initial.push(s);
                }
            }
            let mut goals = Vec::new();
            for s in &initial {
                let g = solved_scene(s, &context, &config, options.solve)?;
                if !goals.contains(&g) {
                    goals.push(g);
                }
            }
            Some((context, initial, goals))
        }
    }
}

fn generate_cmdp(variant: Variant, condition: Condition, layout: Layout, options: &FixtureOptions, stream: u64) -> Vec<MdpSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(options.seed, stream));
    let templates = match variant {
        Variant::Tower => TOWER_TEMPLATES,
        Variant::Scatter => SCATTER_TEMPLATES,
    };
    let mut out = Vec::with_capacity(options.count_per_cmdp);
    let mut t = 0usize;
    while out.len() < options.count_per_cmdp {
        let template = templates[t % templates.len()];
        t += 1;
        let made = (0..50).find_map(|_| try_make(&mut rng, template, variant, condition, layout, options));
        let Some((context, initial_scenes, goal_scenes)) = made else {
            continue;
        };
        let i = out.len();
        out.push(MdpSpec {
            id: format!("{variant}-{condition}-{i:03}"),
            variant,
            condition,
            split: split_for(i),
            layout,
            context,
            initial_scenes,
            goal_scenes,
        });
    }
    out
}

/// `count_per_cmdp` MDPs for each of the four CMDPs, deterministic in the seed.
pub fn generate_fixtures(options: &FixtureOptions) -> Dataset {
    let header = DatasetHeader::default();
    let mut mdps = Vec::new();
    let cmdps = [
        (Variant::Tower, Condition::Scratch),
        (Variant::Tower, Condition::FlipIt),
        (Variant::Scatter, Condition::Scratch),
        (Variant::Scatter, Condition::FlipIt),
    ];
    for (k, (variant, condition)) in cmdps.into_iter().enumerate() {
        mdps.extend(generate_cmdp(variant, condition, header.layout, options, k as u64));
    }
    Dataset { header, mdps }
}

/// Writes the generated dataset to `dir/fixtures.jsonl`.
pub fn write_fixtures(dir: &Path, options: &FixtureOptions) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(FIXTURE_FILE);
    generate_fixtures(options).write(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::parse_dataset;

    #[test]
    fn random_scenes_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            random_tower_scene(&mut rng, Layout::default()).validate().unwrap();
            let s = random_scatter_scene(&mut rng, Layout::default(), 8);
            s.validate().unwrap();
            assert!((1..=8).contains(&s.len()));
        }
    }

    #[test]
    fn templates_compile() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in TOWER_TEMPLATES.iter().chain(SCATTER_TEMPLATES) {
            for _ in 0..10 {
                let (_, src) = t(&mut rng);
                Program::compile(&src).unwrap_or_else(|e| panic!("{src}: {e}"));
            }
        }
    }

    #[test]
    fn small_fixture_set_loads() {
        let ds = generate_fixtures(&FixtureOptions::new(3, 4));
        assert_eq!(ds.mdps.len(), 16);
        let text = ds.to_jsonl();
        let back = parse_dataset(&text).unwrap();
        assert_eq!(back.to_jsonl(), text);
        for m in &ds.mdps {
            if m.condition == Condition::Scratch {
                assert!(m.context.target);
                assert!(m.initial_scenes.is_empty());
            } else {
                assert!(!m.initial_scenes.is_empty());
            }
            assert!(!m.goal_scenes.is_empty());
        }
    }
}
