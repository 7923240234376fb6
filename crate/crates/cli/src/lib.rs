//! Command-line harness for the PRESENT-80 fault attack: run configuration,
//! campaign files, difference-table dumps, attack transcripts and the
//! built-in self test.

pub mod config;
pub mod error;
pub mod selftest;
pub mod tables;
pub mod transcript;

pub use config::{parse_campaign, parse_mask, CampaignFile, Mode, RunConfig};
pub use error::CliError;
pub use selftest::{run_selftest, SelftestReport};
pub use transcript::Transcript;
