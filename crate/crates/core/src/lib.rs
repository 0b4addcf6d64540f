//! Sequential detection of a local change in a stream of Erdős–Rényi graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: snapshots, scenario description and seeded samplers.
//! - [`snapshot_io`]: the plain-text snapshot sequence format.
//! - [`likelihood`]: log-likelihood-ratio weights, prefix edge counts and
//!   Bernoulli KL constants.
//! - [`scan`]: candidate subgraphs and densest-subgraph search (exact and greedy).
//! - [`detectors`]: CUSUM with a known community, window-limited GLR scan with
//!   known or estimated post-change probability, and localization.
//! - [`evaluation`]: Monte Carlo ARL / EDD estimation, threshold calibration and
//!   false-alarm bound checks.
//! - [`cli`]: the `graph-cpd` command-line front end.

pub mod cli;
pub mod detectors;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod likelihood;
pub mod scan;
pub mod snapshot_io;

pub use error::{Error, Result};
