//! Building blocks for extractive clinical reading-comprehension datasets.
//!
//! The crate covers the whole life cycle of a template-generated clinical QA corpus:
//!
//! - [`dataset`]: notes, QA pairs, the JSON interchange format, validation,
//!   document-level splits and corpus statistics.
//! - [`generation`]: template instantiation from entity annotations with
//!   line-level evidence answers.
//! - [`segmentation`]: header detection and answer-bearing section contexts.
//! - [`sampling`]: seeded per-document subsampling of QA pairs.
//! - [`augmentation`]: dictionary entity linking and synonym substitution.
//! - [`knowledge`]: TransE training and word/entity vector fusion.
//! - [`evaluation`]: SQuAD-style EM/F1 and easy/hard template partitioning.
//! - [`reader`]: a deterministic line-ranking baseline reader.

pub mod augmentation;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod generation;
pub mod knowledge;
pub mod reader;
pub mod sampling;
pub mod seed;
pub mod segmentation;
pub mod text;

pub use error::{Error, Result};
