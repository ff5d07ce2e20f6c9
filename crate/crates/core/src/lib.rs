//! Perturbation theory for Markovian open quantum systems.

pub mod amp_pt;
pub mod cli;
pub mod dm_pt;
pub mod error;
pub mod linalg;
pub mod liouville;
pub mod models;
pub mod oracle;
pub mod random;
pub mod verify;

pub use error::{Error, Result};
