//! Multilingual claim verification: claim extraction, query generation,
//! monolingual and cross-lingual evidence retrieval, LLM verification, and
//! benchmark scoring with cost accounting.

pub mod backend;
pub mod cost;
pub mod curation;
pub mod datasets;
pub mod evaluation;
pub mod llm;
pub mod pipeline;
pub mod prompt;
pub mod retry;
pub mod search;
pub mod translation;

pub use datasets::BinaryLabel;
