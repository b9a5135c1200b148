//! Acceptance checks. Each criterion prints one PASS or FAIL line and the test
//! fails if any criterion fails. Oracles here are written against raw object
//! coordinates and do not call the library's geometry or DSL code.

use std::collections::{HashMap, HashSet};

use lilgym_core::dataio::{generate_fixtures, random_scatter_scene, random_tower_scene, write_fixtures, Dataset, FixtureOptions, MdpSpec};
use lilgym_core::dsl::{Program, SCATTER_EXAMPLE, TOWER_EXAMPLE};
use lilgym_core::env::{
    self, action_space_size, grid_place, grid_remove_target, Action, ActionMode, Cell, Condition, Context, EnvConfig,
    EpisodeState, Termination,
};
use lilgym_core::harness::{self, PolicyKind, RolloutOptions, SolveOptions};
use lilgym_core::par::Execution;
use lilgym_core::render::{self, Palette};
use lilgym_core::scene::{Color, Layout, ObjectSpec, Scene, Shape, Size, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REWARD_TOL: f64 = 1e-12;
const SAMPLES: usize = 10_000;
const MASK_STATES: usize = 1_000;
const RANDOM_ROLLOUTS: usize = 1_000;
const MAX_DSL_OBJECTS: usize = 8;
const FIXTURE_SEED: u64 = 7;
const FIXTURE_COUNT: usize = 10;

const W: i32 = 380;
const H: i32 = 100;
const BOXES: [(i32, i32); 3] = [(0, 120), (130, 250), (260, 380)];
const HORIZON: u32 = 12;
const PENALTY: f64 = 0.02;
const SNAP: i32 = 4;
const CELL: i32 = 20;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let line = format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn px(size: Size) -> i32 {
    match size {
        Size::Small => 10,
        Size::Medium => 20,
        Size::Large => 30,
    }
}

#[derive(Clone, Copy, Debug)]
struct O {
    id: u32,
    shape: Shape,
    color: Color,
    size: Size,
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl O {
    fn box_index(&self) -> Option<usize> {
        BOXES
            .iter()
            .position(|&(a, b)| self.x0 >= a && self.x1 <= b && self.y0 >= 0 && self.y1 <= H)
    }
}

fn raw(scene: &Scene) -> Vec<O> {
    scene
        .objects()
        .iter()
        .map(|o| O {
            id: o.id,
            shape: o.shape,
            color: o.color,
            size: o.size,
            x0: o.x,
            y0: o.y,
            x1: o.x + px(o.size),
            y1: o.y + px(o.size),
        })
        .collect()
}

fn rect(x: i32, y: i32, s: i32) -> (i32, i32, i32, i32) {
    (x, y, x + s, y + s)
}

fn gap(a: (i32, i32, i32, i32), b: (i32, i32, i32, i32)) -> i32 {
    let dx = if b.0 >= a.2 {
        b.0 - a.2
    } else if a.0 >= b.2 {
        a.0 - b.2
    } else {
        -1
    };
    let dy = if b.1 >= a.3 {
        b.1 - a.3
    } else if a.1 >= b.3 {
        a.1 - b.3
    } else {
        -1
    };
    if dx < 0 && dy < 0 {
        -1
    } else {
        dx.max(dy)
    }
}

fn ob(o: &O) -> (i32, i32, i32, i32) {
    (o.x0, o.y0, o.x1, o.y1)
}

/// Pixel occupancy grid of every object's bounding box.
fn occupancy(objs: &[O]) -> Vec<Option<u32>> {
    let mut grid = vec![None; (W * H) as usize];
    for o in objs {
        for y in o.y0..o.y1 {
            for x in o.x0..o.x1 {
                grid[(y * W + x) as usize] = Some(o.id);
            }
        }
    }
    grid
}

fn in_one_box(r: (i32, i32, i32, i32)) -> bool {
    r.1 >= 0 && r.3 <= H && BOXES.iter().any(|&(a, b)| r.0 >= a && r.2 <= b)
}

fn free(occ: &[Option<u32>], r: (i32, i32, i32, i32)) -> bool {
    in_one_box(r) && (r.1..r.3).all(|y| (r.0..r.2).all(|x| occ[(y * W + x) as usize].is_none()))
}

fn spec(shape: Shape, color: Color, size: Size) -> ObjectSpec {
    ObjectSpec { shape, color, size }
}

fn random_spec(rng: &mut ChaCha8Rng) -> ObjectSpec {
    spec(
        Shape::ALL[rng.random_range(0..3)],
        Color::ALL[rng.random_range(0..3)],
        Size::ALL[rng.random_range(0..3)],
    )
}

/// Scatter scene whose objects often touch, nearly touch, or sit on walls.
fn clustered_scene(rng: &mut ChaCha8Rng, max_objects: usize) -> Scene {
    let layout = Layout::default();
    let n = rng.random_range(0..=max_objects);
    let mut scene = Scene::empty(Variant::Scatter, layout);
    let mut tries = 0;
    while scene.len() < n && tries < 400 {
        tries += 1;
        let sp = random_spec(rng);
        let s = px(sp.size);
        let (x, y) = if !scene.is_empty() && rng.random_bool(0.6) {
            let o = scene.objects()[rng.random_range(0..scene.len())];
            let os = px(o.size);
            let d = rng.random_range(0..=6);
            match rng.random_range(0..4) {
                0 => (o.x + os + d, o.y + rng.random_range(-s..=os)),
                1 => (o.x - s - d, o.y + rng.random_range(-s..=os)),
                2 => (o.x + rng.random_range(-s..=os), o.y + os + d),
                _ => (o.x + rng.random_range(-s..=os), o.y - s - d),
            }
        } else {
            let (a, b) = BOXES[rng.random_range(0..3)];
            let mut x = rng.random_range(a..=b - s);
            let mut y = rng.random_range(0..=H - s);
            match rng.random_range(0..6) {
                0 => y = 0,
                1 => y = H - s,
                2 => x = a,
                3 => x = b - s,
                _ => {}
            }
            (x, y)
        };
        if free(&occupancy(&raw(&scene)), rect(x, y, s)) {
            scene.insert(sp, x, y);
        }
    }
    scene
}

fn cardinalities(r: &mut Report) {
    let tower = EnvConfig::new(Variant::Tower, Condition::Scratch);
    let mut pixel = EnvConfig::new(Variant::Scatter, Condition::Scratch);
    pixel.action_mode = ActionMode::Pixel;
    let grid = EnvConfig::new(Variant::Scatter, Condition::Scratch);
    let got = [action_space_size(&tower), action_space_size(&pixel), action_space_size(&grid)];
    let tower_enum = env::tower_actions().len() as u64;
    let expected = [13, 1_064_001, 2_661];
    r.check(
        "action-space-cardinality",
        got == expected && tower_enum == 13,
        format!("tower={} pixel={} grid={} (expected 13/1064001/2661)", got[0], got[1], got[2]),
    );
}

/// Final position, pre-snap candidate, snapped-to id.
type Placement = ((i32, i32), (i32, i32), Option<u32>);

/// Grid placement computed from pixel occupancy: row-major scan, snap to the
/// nearest same-box object within [1, SNAP], continue if the snap collides.
fn oracle_grid_place(objs: &[O], col: u32, row: u32, s: i32) -> Option<Placement> {
    let occ = occupancy(objs);
    let (cx, cy) = (col as i32 * CELL, row as i32 * CELL);
    for y in cy..cy + CELL {
        for x in cx..cx + CELL {
            let r = rect(x, y, s);
            if !free(&occ, r) {
                continue;
            }
            let b = BOXES.iter().position(|&(a, b)| r.0 >= a && r.2 <= b).unwrap();
            let nearest = objs
                .iter()
                .filter(|o| o.box_index() == Some(b))
                .map(|o| (gap(r, ob(o)), o.id, *o))
                .filter(|(g, _, _)| (1..=SNAP).contains(g))
                .min_by_key(|(g, id, _)| (*g, *id));
            let Some((_, id, t)) = nearest else {
                return Some(((x, y), (x, y), None));
            };
            let sx = if t.x0 > r.2 {
                x + t.x0 - r.2
            } else if r.0 > t.x1 {
                x - (r.0 - t.x1)
            } else {
                x
            };
            let sy = if t.y0 > r.3 {
                y + t.y0 - r.3
            } else if r.1 > t.y1 {
                y - (r.1 - t.y1)
            } else {
                y
            };
            if free(&occ, rect(sx, sy, s)) {
                return Some(((sx, sy), (x, y), Some(id)));
            }
        }
    }
    None
}

fn oracle_remove_target(objs: &[O], col: u32, row: u32) -> Option<u32> {
    let (cx, cy) = (col as i32 * CELL, row as i32 * CELL);
    let mut best: Option<(usize, u32)> = None;
    for o in objs {
        let area = (cy..cy + CELL)
            .flat_map(|y| (cx..cx + CELL).map(move |x| (x, y)))
            .filter(|&(x, y)| x >= o.x0 && x < o.x1 && y >= o.y0 && y < o.y1)
            .count();
        if area == 0 {
            continue;
        }
        best = match best {
            Some((a, id)) if a > area || (a == area && id < o.id) => Some((a, id)),
            _ => Some((area, o.id)),
        };
    }
    best.map(|(_, id)| id)
}

/// Expected `(reward, valid, done)` of one step, computed without the library's
/// transition code.
fn oracle_step(objs: &[O], t: u32, action: &Action, satisfied: bool) -> (f64, bool, bool) {
    let tower_height = |b: usize| objs.iter().filter(|o| o.box_index() == Some(b)).count();
    let occ = occupancy(objs);
    let valid = match *action {
        Action::Stop => return (if satisfied { 1.0 } else { -1.0 }, true, true),
        Action::TowerAdd { box_index, .. } => tower_height(box_index) < 4,
        Action::TowerRemove { box_index } => tower_height(box_index) > 0,
        Action::ScatterAdd { x, y, size, .. } => free(&occ, rect(x, y, px(size))),
        Action::ScatterRemove { x, y } => occ[(y * W + x) as usize].is_some(),
        Action::GridAdd { col, row, size, .. } => oracle_grid_place(objs, col, row, px(size)).is_some(),
        Action::GridRemove { col, row } => oracle_remove_target(objs, col, row).is_some(),
    };
    if !valid {
        (-1.0, false, true)
    } else if t + 1 >= HORIZON {
        (-1.0, true, true)
    } else {
        (-PENALTY, true, false)
    }
}

fn random_action(rng: &mut ChaCha8Rng, scene: &Scene, cfg: &EnvConfig) -> Action {
    if rng.random_ratio(1, 8) {
        return Action::Stop;
    }
    let add = rng.random_bool(0.5);
    match (cfg.variant, cfg.action_mode) {
        (Variant::Tower, _) => {
            let box_index = rng.random_range(0..3);
            if add {
                Action::TowerAdd {
                    box_index,
                    color: Color::ALL[rng.random_range(0..3)],
                }
            } else {
                Action::TowerRemove { box_index }
            }
        }
        (Variant::Scatter, ActionMode::Pixel) => {
            let (mut x, mut y) = (rng.random_range(0..W), rng.random_range(0..H));
            if add {
                Action::scatter_add(x, y, random_spec(rng))
            } else {
                if !scene.is_empty() && rng.random_bool(0.5) {
                    let o = scene.objects()[rng.random_range(0..scene.len())];
                    x = o.x + rng.random_range(0..px(o.size));
                    y = o.y + rng.random_range(0..px(o.size));
                }
                Action::ScatterRemove { x, y }
            }
        }
        (Variant::Scatter, ActionMode::Grid { cols, rows }) => {
            let (col, row) = (rng.random_range(0..cols), rng.random_range(0..rows));
            if add {
                Action::grid_add(col, row, random_spec(rng))
            } else {
                Action::GridRemove { col, row }
            }
        }
    }
}

fn reward_truth_table(r: &mut Report, ds: &Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = Vec::new();
    let mut seen = HashSet::new();
    for i in 0..SAMPLES {
        let mdp = &ds.mdps[rng.random_range(0..ds.mdps.len())];
        let mut cfg = mdp.env_config();
        if mdp.variant == Variant::Scatter && rng.random_bool(0.5) {
            cfg.action_mode = ActionMode::Pixel;
        }
        let target = rng.random_bool(0.5);
        let ctx = Context {
            target,
            ..mdp.context.clone()
        };
        let scene = match mdp.variant {
            Variant::Tower if rng.random_ratio(1, 6) => Scene::empty(Variant::Tower, cfg.layout),
            Variant::Tower => random_tower_scene(&mut rng, cfg.layout),
            Variant::Scatter => clustered_scene(&mut rng, 8),
        };
        let t = if rng.random_ratio(1, 4) { HORIZON - 1 } else { rng.random_range(0..HORIZON) };
        let state = EpisodeState {
            t,
            ..EpisodeState::new(scene.clone())
        };
        let action = random_action(&mut rng, &scene, &cfg);
        let satisfied = mdp.context.program.evaluate(&scene) == target;
        let (want, valid, done) = oracle_step(&raw(&scene), t, &action, satisfied);
        let out = env::step(&state, &action, &ctx, &cfg).unwrap();
        let unchanged_ok = valid || out.state.scene == scene;
        let ok = (out.reward - want).abs() <= REWARD_TOL
            && out.state.t == t + 1
            && out.state.done == done
            && unchanged_ok
            && (action.is_stop() || !valid || out.state.scene != scene);
        seen.insert((format!("{:?}", action.kind()), valid, done, want.to_bits()));
        if !ok && mismatches.len() < 3 {
            mismatches.push(format!("sample {i}: {action:?} t={t} want {want} got {}", out.reward));
        }
    }
    r.check(
        "reward-truth-table",
        mismatches.is_empty() && seen.len() >= 7,
        format!(
            "{SAMPLES} triples, {} outcome classes, tol {REWARD_TOL:e}{}",
            seen.len(),
            if mismatches.is_empty() { String::new() } else { format!("; {}", mismatches.join("; ")) }
        ),
    );
}

/// Naive meaning of the builtins over raw objects.
struct Naive {
    objs: Vec<O>,
}

impl Naive {
    fn members(&self, b: usize) -> Vec<&O> {
        self.objs.iter().filter(|o| o.box_index() == Some(b)).collect()
    }

    fn count(&self, f: impl Fn(&O) -> bool) -> usize {
        self.objs.iter().filter(|o| f(o)).count()
    }

    fn boxes(&self, f: impl Fn(usize) -> bool) -> usize {
        (0..3).filter(|&b| f(b)).count()
    }

    fn is_tower(&self, b: usize) -> bool {
        let mut m = self.members(b);
        if m.is_empty() {
            return false;
        }
        m.sort_by_key(|o| o.y0);
        let aligned = m.iter().all(|o| o.x0 == m[0].x0 && o.x1 - o.x0 == m[0].x1 - m[0].x0);
        aligned && m.windows(2).all(|w| w[0].y1 == w[1].y0)
    }

    fn is_top(&self, o: &O) -> bool {
        o.box_index()
            .is_some_and(|b| self.members(b).iter().all(|m| m.y0 >= o.y0))
    }

    fn is_bottom(&self, o: &O) -> bool {
        o.box_index()
            .is_some_and(|b| self.members(b).iter().all(|m| m.y1 <= o.y1))
    }

    fn wall(&self, o: &O, side: usize) -> bool {
        let Some(b) = o.box_index() else { return false };
        let (a, e) = BOXES[b];
        match side {
            0 => o.y0 == 0,
            1 => o.y1 == H,
            2 => o.x0 == a,
            _ => o.x1 == e,
        }
    }

    fn above(a: &O, b: &O) -> bool {
        a.id != b.id
            && a.box_index().is_some()
            && a.box_index() == b.box_index()
            && a.x1.min(b.x1) > a.x0.max(b.x0)
            && a.y1 <= b.y0
    }

    fn pair_count(&self, f: impl Fn(&O, &O) -> bool) -> usize {
        self.count(|a| self.objs.iter().any(|b| f(a, b)))
    }
}

const SIDES: [&str; 4] = ["TOP", "BOTTOM", "LEFT", "RIGHT"];

/// `(program source, expected value)` pairs covering every builtin.
fn dsl_cases(n: &Naive) -> Vec<(String, bool)> {
    let mut v: Vec<(String, usize)> = Vec::new();
    v.push(("count(all_items)".into(), n.objs.len()));
    v.push(("count(all_boxes)".into(), 3));
    for k in 0..=4 {
        v.push((
            format!("count(filter_obj(all_boxes, lambda b: count(all_items_in_box(b)) == {k}))"),
            n.boxes(|b| n.members(b).len() == k),
        ));
    }
    for c in Color::ALL {
        v.push((format!("count(filter_obj(all_items, is_{}))", c.name()), n.count(|o| o.color == c)));
        v.push((
            format!("count(filter_obj(all_items, lambda x: get_color(x) == Color.{}))", c.name().to_uppercase()),
            n.count(|o| o.color == c),
        ));
    }
    for s in Shape::ALL {
        v.push((format!("count(filter_obj(all_items, is_{}))", s.name()), n.count(|o| o.shape == s)));
        v.push((
            format!("count(filter_obj(all_items, lambda x: x.get_shape() == Shape.{}))", s.name().to_uppercase()),
            n.count(|o| o.shape == s),
        ));
    }
    for z in Size::ALL {
        v.push((format!("count(filter_obj(all_items, is_{}))", z.name()), n.count(|o| o.size == z)));
        v.push((
            format!("count(filter_obj(all_items, lambda x: get_size(x) == Size.{}))", z.name().to_uppercase()),
            n.count(|o| o.size == z),
        ));
    }
    let distinct = |f: &dyn Fn(&O) -> u8, objs: &[&O]| objs.iter().map(|o| f(o)).collect::<HashSet<_>>().len();
    let all: Vec<&O> = n.objs.iter().collect();
    v.push(("count(get_set_colors(all_items))".into(), distinct(&|o| o.color as u8, &all)));
    v.push(("count(get_set_shapes(all_items))".into(), distinct(&|o| o.shape as u8, &all)));
    for k in 1..=3 {
        v.push((
            format!("count(filter_obj(all_boxes, lambda b: count(get_set_colors(b.all_items_in_box())) == {k}))"),
            n.boxes(|b| distinct(&|o| o.color as u8, &n.members(b)) == k),
        ));
        v.push((
            format!("count(filter_obj(all_boxes, lambda b: count(get_set_shapes(b.all_items_in_box())) == {k}))"),
            n.boxes(|b| distinct(&|o| o.shape as u8, &n.members(b)) == k),
        ));
    }
    v.push(("count(filter_obj(all_boxes, is_tower))".into(), n.boxes(|b| n.is_tower(b))));
    v.push(("count(filter_obj(all_items, is_top))".into(), n.count(|o| n.is_top(o))));
    v.push(("count(filter_obj(all_items, is_bottom))".into(), n.count(|o| n.is_bottom(o))));
    for (i, side) in SIDES.iter().enumerate() {
        v.push((
            format!("count(filter_obj(all_items, lambda x: is_touching_wall(x, Side.{side})))"),
            n.count(|o| n.wall(o, i)),
        ));
    }
    v.push((
        "count(filter_obj(all_items, is_touching_any_wall))".into(),
        n.count(|o| (0..4).any(|s| n.wall(o, s))),
    ));
    v.push((
        "count(filter_obj(all_items, lambda x: exist(filter_obj(all_items, lambda y: is_touching(x, y)))))".into(),
        n.pair_count(|a, b| a.id != b.id && gap(ob(a), ob(b)) == 0),
    ));
    v.push((
        "count(filter_obj(all_items, lambda x: exist(filter_obj(all_items, lambda y: x.is_nearly_touching(y)))))"
            .into(),
        n.pair_count(|a, b| a.id != b.id && (1..=4).contains(&gap(ob(a), ob(b)))),
    ));
    v.push((
        "count(filter_obj(all_items, lambda x: exist(filter_obj(all_items, lambda y: above(x, y)))))".into(),
        n.pair_count(Naive::above),
    ));
    v.push((
        "count(filter_obj(all_items, lambda x: exist(filter_obj(all_items, lambda y: below(x, y)))))".into(),
        n.pair_count(|a, b| Naive::above(b, a)),
    ));
    let mut cases = Vec::new();
    for (expr, k) in v {
        cases.push((format!("{expr} == {k}"), true));
        cases.push((format!("{expr} == {}", k + 1), false));
    }
    for c in Color::ALL {
        let m = n.count(|o| o.color == c);
        cases.push((format!("exist(filter_obj(all_items, is_{}))", c.name()), m > 0));
        cases.push((format!("unique(filter_obj(all_items, is_{}))", c.name()), m == 1));
    }
    cases
}

fn dsl_oracle(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut cache: HashMap<String, Program> = HashMap::new();
    let mut mismatches = Vec::new();
    let mut evaluations = 0usize;
    let mut builtins_seen = HashSet::new();
    for i in 0..SAMPLES {
        let scene = if rng.random_ratio(1, 4) {
            random_tower_scene(&mut rng, Layout::default())
        } else {
            clustered_scene(&mut rng, MAX_DSL_OBJECTS)
        };
        let naive = Naive { objs: raw(&scene) };
        for (src, want) in dsl_cases(&naive) {
            let p = cache
                .entry(src.clone())
                .or_insert_with(|| Program::compile(&src).unwrap_or_else(|e| panic!("{src}: {e}")));
            evaluations += 1;
            if p.evaluate(&scene) != want && mismatches.len() < 3 {
                mismatches.push(format!("scene {i}: `{src}` expected {want}"));
            }
        }
    }
    for src in cache.keys() {
        for name in lilgym_core::dsl::standard_catalogue().names() {
            if src.contains(name) {
                builtins_seen.insert(name);
            }
        }
    }
    let catalogue = lilgym_core::dsl::standard_catalogue().len();
    r.check(
        "dsl-oracle-equivalence",
        mismatches.is_empty() && builtins_seen.len() == catalogue,
        format!(
            "{SAMPLES} scenes, {evaluations} evaluations, {}/{catalogue} builtins covered{}",
            builtins_seen.len(),
            if mismatches.is_empty() { String::new() } else { format!("; {}", mismatches.join("; ")) }
        ),
    );

    let layout = Layout::default();
    let tower = |stacks: [&[Color]; 3]| {
        let mut objs = Vec::new();
        for (b, stack) in stacks.iter().enumerate() {
            for (lvl, &c) in stack.iter().enumerate() {
                objs.push((spec(Shape::Square, c, Size::Medium), layout.tower_x(b), layout.tower_y(lvl)));
            }
        }
        Scene::from_objects(Variant::Tower, layout, objs)
    };
    use Color::*;
    let tp = Program::compile(TOWER_EXAMPLE).unwrap();
    let t_true = tp.evaluate(&tower([&[Blue, Black], &[Yellow, Yellow], &[]]));
    let t_false = !tp.evaluate(&tower([&[Blue, Black], &[Yellow], &[]]));
    let scatter = |ty: i32| {
        Scene::from_objects(
            Variant::Scatter,
            layout,
            [
                (spec(Shape::Triangle, Black, Size::Small), 40, ty),
                (spec(Shape::Circle, Blue, Size::Medium), 10, 50),
                (spec(Shape::Square, Yellow, Size::Large), 70, 60),
            ],
        )
    };
    let sp = Program::compile(SCATTER_EXAMPLE).unwrap();
    let s_true = sp.evaluate(&scatter(0));
    let s_false = !sp.evaluate(&scatter(5));
    r.check(
        "figure-programs",
        t_true && t_false && s_true && s_false,
        format!(
            "tower true={t_true} perturbed false={t_false}; scatter true={s_true} perturbed false={s_false}"
        ),
    );
}

fn grid_checks(r: &mut Report) {
    let cfg = EnvConfig::new(Variant::Scatter, Condition::Scratch);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut placed, mut snapped, mut removals) = (0, 0, 0);
    let mut failures = Vec::new();
    for i in 0..SAMPLES {
        let scene = clustered_scene(&mut rng, 10);
        let objs = raw(&scene);
        let (col, row) = (rng.random_range(0..19u32), rng.random_range(0..5u32));
        let sp = random_spec(&mut rng);
        let s = px(sp.size);
        let got = grid_place(&scene, Cell { col, row }, sp, &cfg);
        let want = oracle_grid_place(&objs, col, row, s);
        let mut ok = got.map(|p| ((p.x, p.y), p.candidate, p.snapped_to)) == want;
        if let Some(p) = got {
            placed += 1;
            let fr = rect(p.x, p.y, s);
            ok &= free(&occupancy(&objs), fr);
            if let Some(id) = p.snapped_to {
                snapped += 1;
                let t = objs.iter().find(|o| o.id == id).unwrap();
                let pre = gap(rect(p.candidate.0, p.candidate.1, s), ob(t));
                ok &= (1..=SNAP).contains(&pre) && gap(fr, ob(t)) == 0;
            }
        }
        let rc = (rng.random_range(0..19u32), rng.random_range(0..5u32));
        let removal = grid_remove_target(&scene, Cell { col: rc.0, row: rc.1 }, &cfg);
        removals += usize::from(removal.is_some());
        ok &= removal == oracle_remove_target(&objs, rc.0, rc.1);
        if !ok && failures.len() < 3 {
            failures.push(format!("sample {i}: cell ({col},{row}) {sp:?} got {got:?} want {want:?}"));
        }
    }
    r.check(
        "grid-placement",
        failures.is_empty() && snapped > 0 && placed > snapped,
        format!(
            "{SAMPLES} adds ({placed} placed, {snapped} snapped, 0 overlaps required), {removals} removals vs exhaustive max-intersection{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    );
}

fn solvability(r: &mut Report, ds: &Dataset) {
    let mut starts = 0;
    let mut failures = Vec::new();
    for mdp in &ds.mdps {
        let cfg = mdp.env_config();
        for (k, start) in mdp.start_scenes().iter().enumerate() {
            starts += 1;
            let solved = harness::solve_from(start, &mdp.context, &cfg, SolveOptions::default())
                .map_err(|e| e.to_string())
                .and_then(|plan| harness::replay(start, &plan, &mdp.context, &cfg).map_err(|e| e.to_string()));
            match solved {
                Ok((end, rewards)) if rewards.last() == Some(&1.0) && end.termination == Termination::Stopped { success: true } => {}
                other => failures.push(format!("{} start {k}: {other:?}", mdp.id)),
            }
        }
    }
    let total = ds.mdps.len();
    r.check(
        "oracle-solvability",
        failures.is_empty() && total == 4 * FIXTURE_COUNT,
        format!(
            "{}/{starts} start states solved across {total} MDPs{}",
            starts - failures.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures[..failures.len().min(3)].join("; ")) }
        ),
    );

    let jobs = harness::plan_jobs(&ds.mdps, RANDOM_ROLLOUTS / ds.mdps.len(), 404);
    let results = harness::rollout_batch(
        &ds.mdps,
        &jobs,
        PolicyKind::Random,
        &|m: &MdpSpec| m.env_config(),
        RolloutOptions::default(),
        Execution::Parallel,
    );
    let rewards: Vec<f64> = results.into_iter().map(|t| t.unwrap().total_reward).collect();
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    r.check(
        "random-policy-baseline",
        rewards.len() == RANDOM_ROLLOUTS && mean < 0.0,
        format!("{} rollouts, mean reward {mean:.4} (< 0 required)", rewards.len()),
    );
}

fn batch_json(ds: &Dataset, kind: PolicyKind, execution: Execution) -> String {
    let jobs = harness::plan_jobs(&ds.mdps, 3, 505);
    harness::rollout_batch(&ds.mdps, &jobs, kind, &|m: &MdpSpec| m.env_config(), RolloutOptions::default(), execution)
        .into_iter()
        .map(|t| serde_json::to_string(&t.unwrap()).unwrap())
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism(r: &mut Report, ds: &Dataset) {
    let mut same_traj = true;
    for kind in [PolicyKind::Random, PolicyKind::Oracle] {
        let a = batch_json(ds, kind, Execution::Sequential);
        let b = batch_json(ds, kind, Execution::Sequential);
        let c = batch_json(ds, kind, Execution::Parallel);
        same_traj &= a == b && a == c;
    }
    let palette = Palette::default();
    let same_render = ds.mdps.iter().all(|m| {
        m.goal_scenes
            .iter()
            .all(|g| render::encode_png(&render::render(g, &palette)) == render::encode_png(&render::render(g, &palette)))
    });
    let opts = FixtureOptions::new(FIXTURE_SEED, FIXTURE_COUNT);
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let f1 = std::fs::read(write_fixtures(d1.path(), &opts).unwrap()).unwrap();
    let f2 = std::fs::read(write_fixtures(d2.path(), &opts).unwrap()).unwrap();
    let same_fixture = f1 == f2 && !f1.is_empty();
    r.check(
        "determinism",
        same_traj && same_render && same_fixture,
        format!("trajectories={same_traj} renders={same_render} fixtures={same_fixture} ({} bytes)", f1.len()),
    );
}

fn mask_soundness(r: &mut Report, ds: &Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut forced, mut bad) = (0, 0);
    for _ in 0..MASK_STATES {
        let mdp = &ds.mdps[rng.random_range(0..ds.mdps.len())];
        let cfg = mdp.env_config();
        let scene = match (mdp.variant, rng.random_ratio(1, 3)) {
            (_, true) => mdp.goal_scenes[rng.random_range(0..mdp.goal_scenes.len())].clone(),
            (Variant::Tower, false) => random_tower_scene(&mut rng, cfg.layout),
            (Variant::Scatter, false) => random_scatter_scene(&mut rng, cfg.layout, 8),
        };
        let state = EpisodeState::new(scene);
        let mask = env::stop_forcing_mask(&state, &mdp.context, &cfg);
        let stop = env::step(&state, &Action::Stop, &mdp.context, &cfg).unwrap().reward;
        if mask.stop_only {
            forced += 1;
            let cheap = random_action(&mut rng, &state.scene, &cfg);
            bad += usize::from(stop != 1.0 || mask.cardinality() != 1 || (!cheap.is_stop() && mask.permits(&cheap)));
        } else {
            bad += usize::from(stop != -1.0 || mask.cardinality() != action_space_size(&cfg));
        }
    }
    r.check(
        "mask-soundness",
        bad == 0 && forced > 0 && forced < MASK_STATES,
        format!("{MASK_STATES} states, {forced} stop-only, {bad} unsound"),
    );
}

fn goal_set_ablation(r: &mut Report, ds: &Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut goal_checks, mut implication_failures, mut divergent) = (0, 0, 0);
    for mdp in &ds.mdps {
        let cfg = mdp.env_config();
        let goals = mdp.goal_fingerprints();
        for g in &mdp.goal_scenes {
            let s = EpisodeState::new(g.clone());
            goal_checks += 1;
            let by_goal = env::goal_set_reward(&s, &Action::Stop, &goals, &cfg).unwrap();
            let by_program = env::step(&s, &Action::Stop, &mdp.context, &cfg).unwrap().reward;
            implication_failures += usize::from(by_goal == 1.0 && by_program != 1.0);
        }
        for _ in 0..200 {
            let scene = match mdp.variant {
                Variant::Tower => random_tower_scene(&mut rng, cfg.layout),
                Variant::Scatter => random_scatter_scene(&mut rng, cfg.layout, 6),
            };
            if goals.contains(&scene.fingerprint()) || !mdp.context.is_satisfied(&scene, &cfg) {
                continue;
            }
            let s = EpisodeState::new(scene);
            let by_goal = env::goal_set_reward(&s, &Action::Stop, &goals, &cfg).unwrap();
            let by_program = env::step(&s, &Action::Stop, &mdp.context, &cfg).unwrap().reward;
            if by_goal == -1.0 && by_program == 1.0 {
                divergent += 1;
                break;
            }
        }
    }
    r.check(
        "goal-set-ablation",
        implication_failures == 0 && divergent >= 1,
        format!(
            "{goal_checks} goal scenes, {implication_failures} goal-success without program-success, {divergent} MDPs with a satisfying non-goal scene scored -1 vs +1"
        ),
    );
}

fn main() {
    let layout = Layout::default();
    assert_eq!((layout.canvas_width, layout.canvas_height), (W, H));
    assert_eq!(layout.box_rects().map(|b| (b.x0, b.x1)), BOXES);
    let ds = generate_fixtures(&FixtureOptions::new(FIXTURE_SEED, FIXTURE_COUNT));
    let mut r = Report { lines: Vec::new() };
    cardinalities(&mut r);
    reward_truth_table(&mut r, &ds);
    dsl_oracle(&mut r);
    grid_checks(&mut r);
    solvability(&mut r, &ds);
    determinism(&mut r, &ds);
    mask_soundness(&mut r, &ds);
    goal_set_ablation(&mut r, &ds);
    let failed: Vec<_> = r.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l.as_str()).collect();
    println!("{} criteria, {} failed", r.lines.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
