//! Experiment harness: runs maintenance scenarios against exact oracles and
//! emits JSON-lines reports.

pub mod config;
pub mod report;
pub mod run;

use formulads_core::dyndet::DetError;
use formulads_core::maintain::MaintainError;
use formulads_core::matching::MatchingError;
use formulads_core::oracle::OracleError;
use formulads_core::rank::RankError;
use formulads_core::scalar::ScalarError;

pub use config::{RingChoice, Scenario, ScenarioConfig};
pub use report::{Record, Report, Summary};
pub use run::{bits_sweep, run_scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Maintain(#[from] MaintainError),
    #[error(transparent)]
    Determinant(#[from] DetError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
