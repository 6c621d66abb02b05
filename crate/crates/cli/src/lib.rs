//! Library surface of the tabstack CLI, exposed so integration tests can
//! drive commands in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod results;
