//! Building blocks for sense-annotated corpora of polysemous words:
//! target-word search, embedding files, clustering and projection,
//! annotation state, selection-efficiency metrics, and Word-in-Context
//! dataset construction and evaluation.

pub mod annotate;
pub mod corpus;
pub mod embedstore;
pub mod jsonl;
pub mod lift;
pub mod meta;
pub mod numerics;
pub mod seed;
pub mod wicbuilder;
pub mod wiceval;
