//! Classroom engagement analytics: head-up rate dynamics from detector
//! output, transcript alignment, LLM-backed teaching reports and detector
//! evaluation.

pub mod analytics;
pub mod canon;
pub mod corpus;
pub mod ingest;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod store;
pub mod synth;
