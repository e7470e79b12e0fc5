//! Multi-agent control of a community-shared battery and building HVAC loads.
//!
//! The crate is organised bottom-up:
//!
//! * [`timeseries`] loads or synthesises hourly price/temperature data and
//!   samples episode windows.
//! * [`env`] simulates the coupled RC building models and the shared storage,
//!   and produces per-agent observations and rewards.
//! * [`nn`] is a small dense-network engine with exact backpropagation.
//! * [`maddpg`] trains decentralised actors with centralised critics.
//! * [`baselines`] holds the rule heuristic and the user-only / centralised
//!   learning schemes.
//! * [`eval`] computes ATD/TEC/CP, monetary costs, comparison reports and an
//!   exhaustive search oracle for tiny instances.
//! * [`config`] is the run configuration tree shared with the CLI.
//!
//! Batch workloads (evaluation fan-out, oracle search, fuzzing) go through
//! [`exec`], which uses rayon when the `parallel` feature is enabled.

pub mod baselines;
pub mod config;
pub mod env;
pub mod error;
pub mod eval;
pub mod exec;
pub mod maddpg;
pub mod nn;
pub mod timeseries;
pub mod trace;

pub use error::{Error, Result};
