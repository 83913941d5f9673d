//! Field-normalized research quality and productivity indicators, and the
//! analyses that relate them: a log-log power-law regression, a comparison of
//! top scientists against their colleagues, and a rank-sum distance criterion
//! on each researcher's best publication.
//!
//! The usual entry point is [`pipeline::analyze_dir`], which loads a corpus,
//! applies the field-of-observation filters and returns an
//! [`pipeline::AnalysisRun`] ready for [`pipeline::write_report_bundle`].

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod indicators;
pub mod pipeline;
pub mod ranking;
pub mod stats;
pub mod synth;

pub use config::{EngineConfig, ProductivityIndicator, QualityIndicator};
pub use corpus::{load_corpus, Corpus};
pub use error::{Error, Result};
