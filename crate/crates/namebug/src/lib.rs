//! File formats, corpus loading and the `namebug` command line.
//!
//! The algorithms live in `namebug-core`; this crate adds everything that
//! touches the file system: the text forms of each pipeline stage, the
//! ESTree-style JSON reader and the CLI.

pub mod cli;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod estree;
pub mod formats;
pub mod text;

pub use error::{Error, ErrorKind, Result};
