//! Configuration, CSV ingestion, pipeline orchestration and artifact
//! emission (CSV, JSON, SVG).

pub mod config;
pub mod format;
pub mod ingest;
pub mod pipeline;
pub mod plot;

pub use config::{BenchmarkConfig, ChainConfig, EngineConfig, MarketConfig, OverlapMode, RegressionConfig};
pub use ingest::{ingest, Ingested, Schema};
pub use pipeline::{load_inputs, run_pipeline, RunManifest, RunOptions, RunSummary, Stage};
