//! Event-argument extraction as extractive question answering.
//!
//! The crate converts RAMS-style annotations into QA instances, augments
//! them toward inter-sentential arguments, plans blended training sets,
//! builds LLM prompts, brokers answers from external or mock backends and
//! scores predictions by exact match.

pub mod augmentation;
pub mod backend;
pub mod blending;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod prompting;
pub mod question_gen;
pub mod seed;

pub use error::{Error, Result};
