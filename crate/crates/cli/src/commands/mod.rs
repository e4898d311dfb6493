//! Subcommand implementations. Each returns a machine-readable run summary
//! that `main` prints as one JSON object on stdout.

pub mod codebook;
pub mod evaluate;
pub mod featurize;
pub mod ingest;
pub mod recommend;
pub mod report;
pub mod retrieve;
pub mod train;
