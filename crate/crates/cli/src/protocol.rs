//! Line-delimited JSON step protocol.
//!
//! Requests, one per line:
//! `{"cmd":"reset","mdp_id":"...","seed":0}`, `{"cmd":"step","action":{...}}`,
//! or a bare action object, which is shorthand for a step. Each request gets
//! one response line; failures produce `{"error":{"kind":...,"message":...}}`
//! and leave the session usable.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use base64::Engine;
use lilgym_core::dataio::Dataset;
use lilgym_core::env::{self, Action, EnvConfig, EpisodeState, StepInfo};
use lilgym_core::render::{self, Palette};
use lilgym_core::settings::Settings;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ImageMode {
    None,
    Raw,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase", deny_unknown_fields)]
enum Request {
    Reset {
        mdp_id: Option<String>,
        #[serde(default)]
        seed: u64,
    },
    Step {
        action: Action,
    },
}

#[derive(Debug, Serialize)]
pub struct RawImage {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub encoding: &'static str,
    pub data: String,
}

#[derive(Debug, Serialize)]
pub struct Response {
    pub mdp_id: String,
    pub statement: String,
    pub target: bool,
    pub scene: lilgym_core::scene::SceneJson,
    pub image_ref: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<RawImage>,
    pub reward: f64,
    pub done: bool,
    pub termination: &'static str,
    pub t: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub info: Option<StepInfo>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

#[derive(Debug, Serialize)]
struct ErrorResponse {
    error: ErrorBody,
}

pub struct Session<'d> {
    dataset: &'d Dataset,
    settings: Settings,
    palette: Palette,
    image: ImageMode,
    image_dir: Option<PathBuf>,
    current: Option<(usize, EnvConfig, EpisodeState)>,
    frames: u64,
}

type Failure = (&'static str, String);

impl<'d> Session<'d> {
    pub fn new(dataset: &'d Dataset, settings: Settings, image: ImageMode, image_dir: Option<PathBuf>) -> Self {
        let palette = settings.palette();
        Session {
            dataset,
            settings,
            palette,
            image,
            image_dir,
            current: None,
            frames: 0,
        }
    }

    pub fn reset(&mut self, mdp_id: &str, seed: u64) -> Result<Response, Failure> {
        let index = self
            .dataset
            .mdps
            .iter()
            .position(|m| m.id == mdp_id)
            .ok_or(("unknown_mdp", format!("no MDP with id {mdp_id}")))?;
        let mdp = &self.dataset.mdps[index];
        let config = self.settings.apply(mdp.env_config()).map_err(|e| ("config", e.to_string()))?;
        let state = env::reset(mdp, seed).map_err(|e| ("env", e.to_string()))?;
        self.current = Some((index, config, state));
        self.respond(0.0, None)
    }

    pub fn step(&mut self, action: &Action) -> Result<Response, Failure> {
        let Some((index, config, state)) = &self.current else {
            return Err(("no_episode", "send a reset request first".into()));
        };
        let mdp = &self.dataset.mdps[*index];
        let out = env::step(state, action, &mdp.context, config).map_err(|e| {
            let kind = match e {
                env::EnvError::VariantMismatch { .. } => "variant_mismatch",
                env::EnvError::ActionOutOfRange(_) => "action_out_of_range",
                env::EnvError::EpisodeDone => "episode_done",
                _ => "env",
            };
            (kind, e.to_string())
        })?;
        if let Some((_, _, s)) = &mut self.current {
            *s = out.state;
        }
        self.respond(out.reward, Some(out.info))
    }

    fn respond(&mut self, reward: f64, info: Option<StepInfo>) -> Result<Response, Failure> {
        let (index, _, state) = self.current.as_ref().expect("respond follows reset");
        let mdp = &self.dataset.mdps[*index];
        let needs_pixels = self.image == ImageMode::Raw || self.image_dir.is_some();
        let pixels = needs_pixels.then(|| render::render(&state.scene, &self.palette));
        let mut image_ref = None;
        if let (Some(dir), Some(img)) = (&self.image_dir, &pixels) {
            let path = dir.join(format!("frame-{:06}.png", self.frames));
            render::export_png(img, &path).map_err(|e| ("io", e.to_string()))?;
            image_ref = Some(path.display().to_string());
        }
        self.frames += 1;
        let image = match (self.image, pixels) {
            (ImageMode::Raw, Some(img)) => Some(RawImage {
                width: img.width,
                height: img.height,
                channels: 3,
                encoding: "base64",
                data: base64::engine::general_purpose::STANDARD.encode(&img.data),
            }),
            _ => None,
        };
        Ok(Response {
            mdp_id: mdp.id.clone(),
            statement: mdp.context.statement.clone(),
            target: mdp.context.target,
            scene: state.scene.to_json(),
            image_ref,
            image,
            reward,
            done: state.done,
            termination: state.termination.label(),
            t: state.t,
            info,
        })
    }

    fn handle_line(&mut self, line: &str) -> Result<Response, Failure> {
        let value: Value = serde_json::from_str(line).map_err(|e| ("bad_request", e.to_string()))?;
        if value.get("cmd").is_none() {
            let action: Action = serde_json::from_value(value).map_err(|e| ("bad_action", e.to_string()))?;
            return self.step(&action);
        }
        match serde_json::from_value::<Request>(value).map_err(|e| ("bad_request", e.to_string()))? {
            Request::Reset { mdp_id, seed } => {
                let id = match mdp_id {
                    Some(id) => id,
                    None => match &self.current {
                        Some((i, _, _)) => self.dataset.mdps[*i].id.clone(),
                        None => return Err(("bad_request", "reset needs an mdp_id".into())),
                    },
                };
                self.reset(&id, seed)
            }
            Request::Step { action } => self.step(&action),
        }
    }

    /// Serves requests until end of input.
    pub fn serve(&mut self, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let text = match self.handle_line(&line) {
                Ok(r) => serde_json::to_string(&r),
                Err((kind, message)) => serde_json::to_string(&ErrorResponse {
                    error: ErrorBody { kind, message },
                }),
            }
            .expect("responses serialize");
            writeln!(output, "{text}")?;
            output.flush()?;
        }
        Ok(())
    }

    /// Writes the response to an initial reset.
    pub fn write_reset(&mut self, mdp_id: &str, seed: u64, mut output: impl Write) -> Result<(), Failure> {
        let r = self.reset(mdp_id, seed)?;
        writeln!(output, "{}", serde_json::to_string(&r).expect("responses serialize")).map_err(|e| ("io", e.to_string()))
    }
}
