//! Library surface of the command-line runner: configuration-file ingestion
//! and result emission, shared by the binary and its integration tests.

pub mod config;
pub mod output;
