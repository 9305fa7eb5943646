//! Learned name-based bug detection.
//!
//! The pipeline extracts likely-correct code snippets from a corpus,
//! synthesizes likely-incorrect variants with small AST mutations, learns
//! CBOW embeddings for identifiers and literals, and trains one feedforward
//! classifier per bug pattern. Trained detectors rank suspicious sites in
//! unseen code.
//!
//! This crate is `no_std` (it needs `alloc`) and performs no IO. File
//! formats, the external-AST reader and the command line live in the
//! `namebug` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod detector;
pub mod embeddings;
pub mod frontend;
pub mod hash;
pub mod naming;
pub mod neuralnet;
pub mod patterns;
pub mod synthcorpus;

pub use detector::{DetectorModel, EvalReport, Pattern, Warning};
pub use embeddings::{CbowConfig, EmbeddingMatrix};
pub use frontend::{parse, tokenize, Node, Token};
pub use naming::{ExtractedName, Vocabulary};
pub use neuralnet::{FitConfig, Mlp};
pub use patterns::{BinOpExample, CallSiteExample, EncodingTables};

/// A parsed source file.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFile {
    pub id: alloc::string::String,
    pub program: Node,
}
