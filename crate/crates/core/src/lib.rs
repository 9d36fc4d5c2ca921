//! Learning Lindblad master-equation models of Markovian open quantum
//! systems from photon-counting data.
//!
//! The crate simulates lifetime and second-order correlation traces from
//! candidate master equations, scores them against measured data with a
//! weighted Gaussian likelihood and structure priors, explores the model
//! space with reversible-jump MCMC over a restricted operator library, and
//! post-processes the chains into ranked, clustered model classes.
//!
//! Chains are independent and run data-parallel via rayon when the default
//! `parallel` feature is enabled; `run_chains_sequential` is the
//! feature-independent fallback with identical output.

pub mod analysis;
pub mod error;
pub mod forward;
pub mod library;
pub mod model;
pub mod quantum;
pub mod sampler;

pub use error::{Error, Result};
