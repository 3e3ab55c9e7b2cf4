//! Common-random-number (CRN) seeding for simulation-based planning.
//!
//! The crate provides a finite-horizon tabular MDP representation with exact
//! dynamic-programming evaluation, deterministic string-keyed seed derivation
//! for three sampling regimes (independent, dependent, depth-dependent),
//! value-difference estimators built on those regimes, a depth-limited UCT
//! planner, and three benchmark environments: a random synthetic MDP, a
//! fixed-term variable annuity fund, and a two-player Ludo rules engine.

pub mod env;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod mdp;
pub mod planner;
pub mod rng;
pub mod seeding;

pub use error::{Error, Result};
