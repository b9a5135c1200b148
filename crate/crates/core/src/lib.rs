//! Engine for language-conditioned visual reasoning environments.
//!
//! A [`scene::Scene`] is edited through add/remove actions ([`env`]); rewards
//! come from evaluating a boolean meaning program ([`dsl`]) against the scene
//! and comparing it with a target value. [`harness`] runs rollouts and computes
//! metrics, [`dataio`] loads and generates datasets, and [`render`] rasterizes
//! scenes into RGB observations.

pub mod dataio;
pub mod dsl;
pub mod env;
pub mod harness;
pub mod par;
pub mod render;
pub mod scene;
pub mod settings;
