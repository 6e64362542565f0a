//! Control-based reinforcement learning agents playing the Battle of the Exes.
//!
//! The crate is layered bottom-up: [`sim`] (arena, kinematics, sensors),
//! [`reactive`] and [`adaptive`] (the two control layers), [`agent`] (their
//! composition), [`game`] (rounds and dyads), [`metrics`] and [`stats`]
//! (scoring), and [`experiments`] (batched studies and reports). The
//! [`cli`], [`output`] and [`plot`] modules back the `exes-lab` binary.

pub mod adaptive;
pub mod agent;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod game;
pub mod metrics;
pub mod output;
pub mod plot;
pub mod reactive;
pub mod sim;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
