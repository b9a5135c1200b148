//! `lilgym` command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (false evaluation, invalid
//! dataset, no plan), 2 usage or I/O error.

mod protocol;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lilgym_core::dataio::{self, Dataset, FixtureOptions};
use lilgym_core::dsl::Program;
use lilgym_core::harness::{self, Job, PolicyKind, RolloutOptions, SolveOptions, Trajectory};
use lilgym_core::par::{self, Execution};
use lilgym_core::render;
use lilgym_core::scene::{Layout, Scene, SceneJson};
use lilgym_core::settings::Settings;
use serde_json::json;

use protocol::{ImageMode, Session};

#[derive(Parser)]
#[command(name = "lilgym", version, about = "Language-conditioned visual reasoning environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program on a scene; prints true or false.
    Eval {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        scene: PathBuf,
    },
    /// Serve the JSON-lines step protocol on stdin/stdout.
    Step {
        #[arg(long)]
        mdp: PathBuf,
        /// Reset this MDP before reading requests.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "none")]
        image: ImageMode,
        /// Write a PNG per response and report its path as image_ref.
        #[arg(long)]
        image_dir: Option<PathBuf>,
    },
    /// Run policies on every MDP of a dataset; writes one trajectory per line.
    Rollout {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Episodes per MDP.
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 1 runs sequentially, 0 uses every core.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Give the policy the stop-forcing mask.
        #[arg(long)]
        mask: bool,
    },
    /// Render a scene to PNG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find a shortest plan for one MDP.
    Solve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = harness::DEFAULT_MAX_DEPTH)]
        max_depth: usize,
        /// Initial scene index for flip-it MDPs.
        #[arg(long, default_value_t = 0)]
        initial: usize,
    },
    /// Validate a dataset and print its summary.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Generate the synthetic fixture dataset into DIR/fixtures.jsonl.
    Generate {
        #[arg(long)]
        seed: u64,
        /// MDPs per CMDP.
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate trajectories into a metrics report.
    Report {
        #[arg(long)]
        trajectories: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolicyArg {
    Random,
    Oracle,
    Stop,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Random => PolicyKind::Random,
            PolicyArg::Oracle => PolicyKind::Oracle,
            PolicyArg::Stop => PolicyKind::Stop,
        }
    }
}

enum Failure {
    /// Exit 1; the message goes to stderr.
    Domain(String),
    /// Exit 2.
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_scene(path: &Path, layout: Layout) -> Result<Scene, Failure> {
    let json: SceneJson =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let scene = Scene::from_json(&json, layout);
    scene.validate().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(scene)
}

fn load_dataset(path: &Path, settings: &Settings) -> Result<Dataset, Failure> {
    dataio::load_dataset_with(path, settings.sizes).map_err(|e| match e {
        dataio::LoadError::Io { .. } => usage(e),
        dataio::LoadError::Invalid(_) => Failure::Usage(format!("{}: {e}", path.display())),
    })
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string(v).expect("output serializes"));
}

fn run(cli: Cli) -> Outcome {
    let settings = Settings::from_env().map_err(usage)?;
    match cli.command {
        Command::Eval { program, scene } => {
            let src = read(&program)?;
            let p = Program::compile(src.trim()).map_err(usage)?;
            let s = load_scene(&scene, settings.layout(Layout::default()))?;
            let mut opts = lilgym_core::dsl::EvalOptions::default();
            if let Some(n) = settings.nearly_touching_max {
                opts.nearly_touching_max = n;
            }
            let value = p.try_evaluate_with(&s, opts).map_err(usage)?;
            println!("{value}");
            if value {
                Ok(())
            } else {
                Err(Failure::Domain(String::new()))
            }
        }
        Command::Step {
            mdp,
            id,
            seed,
            image,
            image_dir,
        } => {
            let ds = load_dataset(&mdp, &settings)?;
            if let Some(dir) = &image_dir {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            }
            let mut session = Session::new(&ds, settings, image, image_dir);
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            if let Some(id) = id {
                session
                    .write_reset(&id, seed, &mut out)
                    .map_err(|(_, m)| Failure::Usage(m))?;
            }
            let stdin = std::io::stdin();
            session.serve(stdin.lock(), out).map_err(usage)
        }
        Command::Rollout {
            dataset,
            policy,
            seed,
            episodes,
            out,
            jobs,
            mask,
        } => {
            let ds = load_dataset(&dataset, &settings)?;
            let work: Vec<Job> = harness::plan_jobs(&ds.mdps, episodes, seed);
            let configure = |m: &dataio::MdpSpec| settings.apply(m.env_config()).expect("validated settings");
            for m in &ds.mdps {
                settings.apply(m.env_config()).map_err(usage)?;
            }
            let execution = if jobs == 1 { Execution::Sequential } else { Execution::Parallel };
            let results = par::with_threads(jobs, || {
                harness::rollout_batch(&ds.mdps, &work, policy.into(), &configure, RolloutOptions { mask }, execution)
            });
            let trajectories = results.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| Failure::Domain(e.to_string()))?;
            let write = |w: &mut dyn Write| -> std::io::Result<()> {
                for t in &trajectories {
                    writeln!(w, "{}", serde_json::to_string(t).expect("trajectory serializes"))?;
                }
                w.flush()
            };
            match out {
                Some(path) => {
                    let f = std::fs::File::create(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    write(&mut BufWriter::new(f)).map_err(usage)?;
                    print_json(&harness::aggregate(&trajectories));
                }
                None => write(&mut std::io::stdout().lock()).map_err(usage)?,
            }
            Ok(())
        }
        Command::Render { scene, out } => {
            let s = load_scene(&scene, settings.layout(Layout::default()))?;
            let img = render::render(&s, &settings.palette());
            render::export_png(&img, &out).map_err(usage)
        }
        Command::Solve {
            dataset,
            id,
            max_depth,
            initial,
        } => {
            let ds = load_dataset(&dataset, &settings)?;
            let mdp = ds.get(&id).ok_or_else(|| Failure::Usage(format!("no MDP with id {id}")))?;
            let config = settings.apply(mdp.env_config()).map_err(usage)?;
            let start = mdp
                .start_scenes()
                .into_iter()
                .nth(initial)
                .ok_or_else(|| Failure::Usage(format!("{id} has no initial scene {initial}")))?;
            match harness::solve_from(&start, &mdp.context, &config, SolveOptions::with_depth(max_depth)) {
                Ok(plan) => {
                    print_json(&json!({
                        "mdp_id": id,
                        "length": plan.len(),
                        "expected_return": plan.expected_return(&config),
                        "actions": plan.actions,
                    }));
                    Ok(())
                }
                Err(e) => {
                    print_json(&json!({"mdp_id": id, "error": e.to_string()}));
                    Err(Failure::Domain(e.to_string()))
                }
            }
        }
        Command::Validate { dataset } => match dataio::load_dataset_with(&dataset, settings.sizes) {
            Ok(ds) => {
                print_json(&json!({"valid": true, "summary": ds.summary()}));
                eprintln!("{}", ds.summary());
                Ok(())
            }
            Err(dataio::LoadError::Invalid(errors)) => {
                print_json(&json!({"valid": false, "errors": errors}));
                Err(Failure::Domain(format!("{} invalid record(s)", errors.len())))
            }
            Err(e) => Err(usage(e)),
        },
        Command::Generate { seed, count, out } => {
            let path = dataio::write_fixtures(&out, &FixtureOptions::new(seed, count))
                .map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
            let ds = dataio::load_dataset(&path).map_err(|e| Failure::Domain(e.to_string()))?;
            print_json(&json!({"path": path.display().to_string(), "summary": ds.summary()}));
            Ok(())
        }
        Command::Report { trajectories } => {
            let text = read(&trajectories)?;
            let ts = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str::<Trajectory>(l)
                        .map_err(|e| Failure::Usage(format!("{} line {}: {e}", trajectories.display(), i + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if ts.is_empty() {
                return Err(Failure::Usage("no trajectories".into()));
            }
            print_json(&harness::aggregate(&ts));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(m)) => {
            if !m.is_empty() {
                eprintln!("{m}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
